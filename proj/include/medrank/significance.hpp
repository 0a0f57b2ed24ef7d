#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/special_functions/beta.hpp>

#include "medrank/error.hpp"
#include "medrank/eval.hpp"

namespace medrank {

struct TTestResult {
    double t = 0.0;
    double df = 0.0;
    double p_value = 1.0;
};

/// Two-sided p-value of Student's t with `df` degrees of freedom:
/// P(|T| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2).
inline double student_t_two_sided(double t, double df)
{
    if (std::isinf(t)) return 0.0;
    return boost::math::ibeta(df / 2.0, 0.5, df / (df + t * t));
}

/// Paired t-test over per-topic values. Both sides must cover the same topics.
/// All-zero differences give p = 1; zero variance with a nonzero mean gives p = 0.
inline TTestResult paired_t_test(const TopicValues& a, const TopicValues& b)
{
    std::string missing;
    for (const auto& [topic, _] : a)
        if (!b.count(topic)) missing += " " + topic + "(only first)";
    for (const auto& [topic, _] : b)
        if (!a.count(topic)) missing += " " + topic + "(only second)";
    if (!missing.empty()) throw ContractError("paired t-test needs identical topic sets; differing:" + missing);
    if (a.size() < 2) throw ContractError("paired t-test needs at least 2 topics");

    const double n = static_cast<double>(a.size());
    double sum = 0.0;
    std::vector<double> diffs;
    diffs.reserve(a.size());
    for (const auto& [topic, va] : a) {
        diffs.push_back(va - b.at(topic));
        sum += diffs.back();
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (double d : diffs) ss += (d - mean) * (d - mean);
    const double sd = std::sqrt(ss / (n - 1.0));

    TTestResult r;
    r.df = n - 1.0;
    if (std::all_of(diffs.begin(), diffs.end(), [](double d) { return d == 0.0; })) return r;
    if (sd == 0.0) {
        r.t = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        r.p_value = 0.0;
        return r;
    }
    r.t = mean / (sd / std::sqrt(n));
    r.p_value = student_t_two_sided(r.t, r.df);
    return r;
}

inline double bonferroni(double p, int m)
{
    if (m < 1) throw ContractError("Bonferroni correction needs m >= 1");
    return std::min(1.0, p * m);
}

}  // namespace medrank
