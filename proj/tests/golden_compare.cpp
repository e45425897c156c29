// SPDX-License-Identifier: Apache-2.0
// Compares a run report against a golden report: structure, strings and flags exactly,
// numbers to |a - b| <= rtol max(|a|, |b|) + atol. Check statuses are strings, so pass/fail must agree.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <string>

namespace {

int mismatches = 0;

void report(const std::string& path, const std::string& what) {
    std::printf("mismatch at %s: %s\n", path.c_str(), what.c_str());
    ++mismatches;
}

void compare(const nlohmann::json& a, const nlohmann::json& b, const std::string& path, double rtol, double atol) {
    if (a.is_number() && b.is_number()) {
        const double x = a.get<double>(), y = b.get<double>();
        if (!(std::abs(x - y) <= rtol * std::max(std::abs(x), std::abs(y)) + atol)) report(path, std::to_string(x) + " vs " + std::to_string(y));
        return;
    }
    if (a.type() != b.type()) return report(path, "type differs");
    if (a.is_object()) {
        if (a.size() != b.size()) report(path, "key count differs");
        for (auto it = b.begin(); it != b.end(); ++it) {
            if (!a.contains(it.key())) {
                report(path + "." + it.key(), "missing");
                continue;
            }
            compare(a.at(it.key()), it.value(), path + "." + it.key(), rtol, atol);
        }
    } else if (a.is_array()) {
        if (a.size() != b.size()) return report(path, "length differs");
        for (std::size_t i = 0; i < a.size(); ++i) compare(a[i], b[i], path + "[" + std::to_string(i) + "]", rtol, atol);
    } else if (a != b) {
        report(path, a.dump() + " vs " + b.dump());
    }
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: golden_compare <report.json> <golden.json> [rtol] [atol]\n");
        return 2;
    }
    const double rtol = argc > 3 ? std::stod(argv[3]) : 1e-6, atol = argc > 4 ? std::stod(argv[4]) : 1e-9;
    std::ifstream fa(argv[1]), fb(argv[2]);
    if (!fa || !fb) {
        std::fprintf(stderr, "cannot open inputs\n");
        return 2;
    }
    compare(nlohmann::json::parse(fa), nlohmann::json::parse(fb), "$", rtol, atol);
    std::printf("%d mismatches\n", mismatches);
    return mismatches ? 1 : 0;
}
