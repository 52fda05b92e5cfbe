#pragma once

#include <wolffkit/common.hpp>

#include <map>
#include <string>

namespace wolffkit {

enum class Verdict { Pass, Fail, Inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

/// Empirical constants extracted from a verification sweep.
struct FitReport {
    std::string experiment;
    std::vector<std::string> fingerprints;
    std::map<std::string, double> constants;
    std::size_t samples = 0;
    double ratio_min = 0.0;
    double ratio_max = 0.0;
    double ratio_median = 0.0;
    bool pass = false;
    std::vector<std::string> notes;
    /// Per-experiment table, e.g. (lambda, eps, lhs, rhs) or (delta, average).
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    double constant(const std::string& key) const {
        auto it = constants.find(key);
        if (it == constants.end()) throw std::out_of_range("no constant " + key);
        return it->second;
    }
};

/// Outcome of one good-measure criterion.
struct CriterionReport {
    std::string name;
    std::map<std::string, double> inputs;
    ExtReal threshold;
    ExtReal measured;
    Verdict verdict = Verdict::Inconclusive;
    std::vector<std::string> notes;
};

/// Fills ratio_min/max/median and samples from a list of ratios.
inline void summarize_ratios(FitReport& rep, std::vector<double> ratios) {
    rep.samples = ratios.size();
    if (ratios.empty()) return;
    std::sort(ratios.begin(), ratios.end());
    rep.ratio_min = ratios.front();
    rep.ratio_max = ratios.back();
    const std::size_t m = ratios.size() / 2;
    rep.ratio_median = ratios.size() % 2 ? ratios[m] : 0.5 * (ratios[m - 1] + ratios[m]);
}

}  // namespace wolffkit
