#pragma once

#include <cmath>
#include <vector>

#include "disent/errors.hpp"

namespace disent {

namespace detail {

inline int max_label(const std::vector<int>& v) {
    int m = 0;
    for (int x : v) {
        if (x < 0) throw argument_error("labels must be non-negative integers");
        m = std::max(m, x);
    }
    return m;
}

} // namespace detail

// Plug-in Shannon entropy in nats from empirical frequencies.
inline double entropy(const std::vector<int>& labels) {
    if (labels.empty()) throw argument_error("entropy: empty input");
    std::vector<double> count(detail::max_label(labels) + 1, 0.0);
    for (int x : labels) count[x] += 1.0;
    const double n = static_cast<double>(labels.size());
    double h = 0.0;
    for (double c : count) {
        if (c > 0.0) h -= (c / n) * std::log(c / n);
    }
    return h;
}

// Plug-in mutual information in nats between two integer columns. Exact on
// full enumerations: I(a,a) = H(a), I of independent columns = 0.
inline double mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.empty() || a.size() != b.size()) {
        throw argument_error("mutual_information: columns must be non-empty and equal length");
    }
    const int ma = detail::max_label(a) + 1;
    const int mb = detail::max_label(b) + 1;
    std::vector<double> joint(static_cast<std::size_t>(ma) * mb, 0.0);
    std::vector<double> ca(ma, 0.0), cb(mb, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[static_cast<std::size_t>(a[i]) * mb + b[i]] += 1.0;
        ca[a[i]] += 1.0;
        cb[b[i]] += 1.0;
    }
    const double n = static_cast<double>(a.size());
    double mi = 0.0;
    for (int i = 0; i < ma; ++i) {
        for (int j = 0; j < mb; ++j) {
            double c = joint[static_cast<std::size_t>(i) * mb + j];
            if (c > 0.0) mi += (c / n) * std::log(c * n / (ca[i] * cb[j]));
        }
    }
    // Plug-in MI is non-negative; clip the tiny negative rounding residue.
    return mi < 0.0 ? 0.0 : mi;
}

} // namespace disent
