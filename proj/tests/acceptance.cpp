// SPDX-License-Identifier: Apache-2.0
// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
// Optional arguments restrict the run to the listed criterion numbers.
#include <cstdio>
#include <cstdlib>
#include <set>

#include "slipns/checks.hpp"

int main(int argc, char** argv) {
    using namespace slipns;
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    const CheckOptions opt;
    int failed = 0;
    for (const auto& spec : check_registry()) {
        if (!only.empty() && !only.count(spec.id)) continue;
        const CheckResult r = run_check(spec, opt);
        std::printf("%s criterion %d %s (%.1fs)\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds);
        for (const auto& m : r.measurements) {
            std::printf("    %-40s %-13.6g %s", m.name.c_str(), m.value, m.relation.c_str());
            if (m.relation == "in") std::printf(" [%g, %g]", m.lo, m.hi);
            else if (m.relation != "info") std::printf(" %g", m.hi);
            std::printf("\n");
        }
        if (!r.passed) {
            std::printf("    detail: %s\n", r.detail.c_str());
            ++failed;
        }
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
