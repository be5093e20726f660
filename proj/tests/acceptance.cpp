// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Optional arguments select criterion ids; --json PATH writes the full report.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "hjlab/verify.hpp"

int main(int argc, char** argv) {
    std::vector<int> ids;
    std::string json_path;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--json" && i + 1 < argc) {
            json_path = argv[++i];
        } else {
            ids.push_back(std::stoi(arg));
        }
    }
    if (ids.empty()) ids = hjlab::suite_criteria("all");

    hjlab::VerifyOptions options;
    options.progress = &std::cout;
    hjlab::Verifier verifier(options);
    std::vector<hjlab::CriterionResult> results;
    for (int id : ids) results.push_back(verifier.run(id));

    const nlohmann::json report = hjlab::suite_report(results);
    if (!json_path.empty()) std::ofstream(json_path) << report.dump(2) << '\n';
    std::cout << report["passed"].get<int>() << " passed, " << report["failed"].get<int>() << " failed\n";
    return report["pass"].get<bool>() ? EXIT_SUCCESS : EXIT_FAILURE;
}
