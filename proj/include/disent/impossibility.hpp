#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "disent/errors.hpp"
#include "disent/matrix.hpp"
#include "disent/normal.hpp"
#include "disent/rng.hpp"

namespace disent {

enum class Marginal { uniform01, standard_normal };

inline const char* marginal_name(Marginal m) {
    return m == Marginal::uniform01 ? "uniform01" : "standard_normal";
}

// Householder reflection I - 2 v v^T with v_1 = sqrt(alpha) and the remaining
// mass spread evenly. Orthogonal, and every entry is nonzero for
// alpha strictly inside (0, 0.5).
inline Matrix householder_matrix(int d, double alpha) {
    if (d < 2) throw argument_error("householder_matrix: d must be >= 2");
    if (!(alpha > 0.0 && alpha < 0.5)) {
        throw argument_error("householder_matrix: alpha must lie strictly inside (0, 0.5)");
    }
    std::vector<double> v(d);
    v[0] = std::sqrt(alpha);
    double rest = std::sqrt((1.0 - alpha) / (d - 1));
    for (int i = 1; i < d; ++i) v[i] = rest;
    Matrix a = Matrix::identity(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) -= 2.0 * v[i] * v[j];
    return a;
}

// Marginal-preserving entangling map. With z_i distributed per `marginal`,
// f(z) has the same per-dimension marginals while every output coordinate
// depends on every input coordinate (all entries of A are nonzero).
struct Entangler {
    int d = 0;
    double alpha = 0.0; // 0 when constructed from an explicit matrix
    Matrix a;
    Marginal marginal = Marginal::uniform01;
};

namespace detail {

inline void validate_mixing_matrix(const Matrix& a) {
    if (a.rows() != a.cols() || a.rows() < 2) {
        throw argument_error("Entangler: mixing matrix must be square with d >= 2");
    }
    if (orthogonality_defect(a) >= 1e-10) {
        throw argument_error("Entangler: mixing matrix is not orthogonal");
    }
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            if (a(i, j) == 0.0) {
                throw argument_error("Entangler: mixing matrix has a zero entry at (" +
                                     std::to_string(i) + "," + std::to_string(j) + ")");
            }
}

} // namespace detail

inline Entangler make_entangler(int d, double alpha, Marginal marginal) {
    Entangler e{d, alpha, householder_matrix(d, alpha), marginal};
    detail::validate_mixing_matrix(e.a);
    return e;
}

// Explicit-matrix construction for tests and round-trip checks.
inline Entangler make_entangler(Matrix a, Marginal marginal) {
    detail::validate_mixing_matrix(a);
    Entangler e{a.rows(), 0.0, std::move(a), marginal};
    return e;
}

// Inverse transform. A Householder reflection is an involution, but the
// construction stays generic: the inverse of an orthogonal mix is A^T.
inline Entangler inverse(const Entangler& e) {
    return Entangler{e.d, e.alpha, e.a.transposed(), e.marginal};
}

// f(u) = g^-1(h^-1(A h(g(u)))) where g maps to the marginal CDF scale and h
// is the standard normal quantile. For standard normal marginals g and h
// compose to the identity and f collapses algebraically to A u.
inline std::vector<double> entangle(const Entangler& e, const std::vector<double>& u) {
    if (static_cast<int>(u.size()) != e.d) throw argument_error("entangle: dimension mismatch");
    if (e.marginal == Marginal::standard_normal) {
        for (double x : u)
            if (!std::isfinite(x)) throw domain_error("entangle: non-finite coordinate");
        return e.a.matvec(u);
    }
    std::vector<double> y(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!(u[i] > 0.0 && u[i] < 1.0)) {
            throw domain_error("entangle: coordinate outside the open support (0,1)");
        }
        y[i] = normal_quantile(u[i]);
    }
    std::vector<double> w = e.a.matvec(y);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = normal_cdf(w[i]);
    return w;
}

// Two-sided Kolmogorov-Smirnov statistic of a sample against an analytic CDF.
template <typename Cdf>
inline double ks_statistic(std::vector<double> sample, Cdf&& cdf) {
    if (sample.size() < 2) throw argument_error("ks_statistic: need at least 2 samples");
    for (double x : sample)
        if (!std::isfinite(x)) throw data_error("ks_statistic: non-finite sample value");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double f = cdf(sample[i]);
        d = std::max(d, std::max((static_cast<double>(i) + 1.0) / n - f,
                                 f - static_cast<double>(i) / n));
    }
    return d;
}

struct MarginalCheck {
    std::vector<double> ks; // per output dimension
    double critical = 0.0;  // 1.63 / sqrt(n), the 1% asymptotic KS band
    bool pass = false;
};

// Samples n latent points from the marginal, pushes them through f, and
// tests each output dimension against the analytic marginal CDF.
inline MarginalCheck verify_marginals(const Entangler& e, int n, Rng& rng) {
    if (n < 10) throw argument_error("verify_marginals: n must be >= 10");
    std::vector<std::vector<double>> out(e.d, std::vector<double>(n));
    std::vector<double> z(e.d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < e.d; ++j) {
            z[j] = e.marginal == Marginal::uniform01 ? rng.uniform() : rng.normal();
        }
        std::vector<double> f = entangle(e, z);
        for (int j = 0; j < e.d; ++j) out[j][i] = f[j];
    }
    MarginalCheck chk;
    chk.critical = 1.63 / std::sqrt(static_cast<double>(n));
    chk.ks.resize(e.d);
    auto cdf_uniform = [](double x) { return std::clamp(x, 0.0, 1.0); };
    for (int j = 0; j < e.d; ++j) {
        chk.ks[j] = e.marginal == Marginal::uniform01
                        ? ks_statistic(std::move(out[j]), cdf_uniform)
                        : ks_statistic(std::move(out[j]), [](double x) { return normal_cdf(x); });
    }
    chk.pass = std::all_of(chk.ks.begin(), chk.ks.end(),
                           [&](double d) { return d < chk.critical; });
    return chk;
}

struct JacobianCheck {
    double min_abs = HUGE_VAL; // smallest |J_ij| over all points and entries
    bool pass = false;
    int points = 0;
};

// Central-difference Jacobian at each point; every entry must clear the
// threshold, certifying that no output coordinate locally ignores an input.
inline JacobianCheck jacobian_nonvanishing(const Entangler& e,
                                           const std::vector<std::vector<double>>& points,
                                           double h, double threshold = 1e-6) {
    if (!(h > 0.0)) throw argument_error("jacobian_nonvanishing: h must be positive");
    if (points.empty()) throw argument_error("jacobian_nonvanishing: no points supplied");
    JacobianCheck chk;
    chk.points = static_cast<int>(points.size());
    std::vector<double> lo(e.d), hi(e.d);
    for (const auto& p : points) {
        if (static_cast<int>(p.size()) != e.d) {
            throw argument_error("jacobian_nonvanishing: point dimension mismatch");
        }
        for (int j = 0; j < e.d; ++j) {
            std::vector<double> plus = p, minus = p;
            plus[j] += h;
            minus[j] -= h;
            if (e.marginal == Marginal::uniform01 &&
                !(minus[j] > 0.0 && plus[j] < 1.0)) {
                throw domain_error("jacobian_nonvanishing: step exits the support");
            }
            std::vector<double> fp = entangle(e, plus);
            std::vector<double> fm = entangle(e, minus);
            for (int i = 0; i < e.d; ++i) {
                double dij = std::fabs((fp[i] - fm[i]) / (2.0 * h));
                chk.min_abs = std::min(chk.min_abs, dij);
            }
        }
    }
    chk.pass = chk.min_abs > threshold;
    return chk;
}

} // namespace disent
