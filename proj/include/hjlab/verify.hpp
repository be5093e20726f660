#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace hjlab {

struct CriterionResult {
    int id = 0;
    std::string suite;
    std::string title;
    bool pass = false;
    std::string summary;
    nlohmann::json detail;
    double seconds = 0.0;
};

struct VerifyOptions {
    std::uint64_t seed = 20240611;
    int trials = 1000;                 // randomized scheme trials
    std::ostream* progress = nullptr;  // one line per finished criterion
};

/// algebra, closedform, scheme, phenomena.
const std::vector<std::string>& suite_names();

/// Criterion ids of a suite; "all" selects every criterion. Throws Config otherwise.
std::vector<int> suite_criteria(std::string_view suite);

/// Runs acceptance criteria, caching simulations shared between them.
class Verifier {
public:
    explicit Verifier(VerifyOptions options = {});
    ~Verifier();
    Verifier(const Verifier&) = delete;
    Verifier& operator=(const Verifier&) = delete;

    CriterionResult run(int id);
    std::vector<CriterionResult> run_suite(std::string_view suite);

private:
    struct Cache;
    VerifyOptions options_;
    std::unique_ptr<Cache> cache_;
};

nlohmann::json to_json(const CriterionResult& result);

/// {"criteria": [...], "passed": n, "failed": n, "pass": bool}.
nlohmann::json suite_report(const std::vector<CriterionResult>& results);

/// "PASS  5  title: summary" per criterion.
void print_results(std::ostream& os, const std::vector<CriterionResult>& results);

}  // namespace hjlab
