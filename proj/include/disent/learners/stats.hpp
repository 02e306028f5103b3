#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "disent/errors.hpp"
#include "disent/matrix.hpp"

namespace disent {

// Fractional ranks: ties receive the mean of the ranks they span.
inline std::vector<double> fractional_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        double rank = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t t = i; t <= j; ++t) r[idx[t]] = rank;
        i = j + 1;
    }
    return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw degenerate_error("pearson: a constant input has no defined correlation");
    }
    return sxy / std::sqrt(sxx * syy);
}

// Spearman rank correlation with mean-rank tie handling.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw argument_error("spearman: need two equal-length vectors with >= 2 entries");
    }
    for (double v : x)
        if (!std::isfinite(v)) throw data_error("spearman: non-finite value");
    for (double v : y)
        if (!std::isfinite(v)) throw data_error("spearman: non-finite value");
    return pearson(fractional_ranks(x), fractional_ranks(y));
}

// R^2 of ordinary least squares on the one-hot cartesian product of the
// categorical predictor columns plus an intercept. The fitted values of that
// (possibly rank-deficient) design are the per-group means, so R^2 reduces to
// one minus the within-group sum of squares over the total sum of squares;
// the minimum-norm coefficient choice does not affect it.
inline double ols_r2_categorical(const std::vector<double>& y,
                                 const std::vector<std::vector<int>>& predictors) {
    const std::size_t n = y.size();
    if (n < 2) throw argument_error("ols_r2_categorical: need at least 2 observations");
    if (predictors.empty()) throw argument_error("ols_r2_categorical: need at least one predictor");
    for (const auto& p : predictors) {
        if (p.size() != n) throw argument_error("ols_r2_categorical: predictor length mismatch");
    }
    for (double v : y)
        if (!std::isfinite(v)) throw data_error("ols_r2_categorical: non-finite response");

    std::map<std::vector<int>, std::pair<double, double>> groups; // key -> (sum, count)
    std::vector<int> key(predictors.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < predictors.size(); ++p) key[p] = predictors[p][i];
        auto& g = groups[key];
        g.first += y[i];
        g.second += 1.0;
    }
    if (groups.size() >= n) {
        throw argument_error("ols_r2_categorical: as many dummy columns as observations");
    }

    double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double ss_tot = 0.0;
    for (double v : y) ss_tot += (v - mean) * (v - mean);
    if (ss_tot == 0.0) {
        throw degenerate_error("ols_r2_categorical: constant response");
    }
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < predictors.size(); ++p) key[p] = predictors[p][i];
        const auto& g = groups.at(key);
        double fitted = g.first / g.second;
        ss_res += (y[i] - fitted) * (y[i] - fitted);
    }
    return 1.0 - ss_res / ss_tot;
}

struct GaussianFit {
    std::vector<double> mean;
    Matrix cov; // biased (1/N) covariance
};

inline GaussianFit fit_gaussian(const Matrix& x) {
    const int n = x.rows(), d = x.cols();
    if (n < 2) throw argument_error("fit_gaussian: need at least 2 samples");
    if (d < 1) throw argument_error("fit_gaussian: need at least 1 dimension");
    GaussianFit g;
    g.mean.assign(d, 0.0);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c) g.mean[c] += x(i, c);
    for (int c = 0; c < d; ++c) g.mean[c] /= n;
    g.cov = Matrix(d, d);
    for (int i = 0; i < n; ++i) {
        for (int a = 0; a < d; ++a) {
            double da = x(i, a) - g.mean[a];
            for (int b = a; b < d; ++b) g.cov(a, b) += da * (x(i, b) - g.mean[b]);
        }
    }
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
            g.cov(a, b) /= n;
            g.cov(b, a) = g.cov(a, b);
        }
    return g;
}

namespace detail {

// In-place Cholesky; returns false if the matrix is not positive definite.
inline bool cholesky(Matrix& m) {
    const int d = m.rows();
    for (int j = 0; j < d; ++j) {
        double diag = m(j, j);
        for (int k = 0; k < j; ++k) diag -= m(j, k) * m(j, k);
        if (!(diag > 0.0)) return false;
        diag = std::sqrt(diag);
        m(j, j) = diag;
        for (int i = j + 1; i < d; ++i) {
            double s = m(i, j);
            for (int k = 0; k < j; ++k) s -= m(i, k) * m(j, k);
            m(i, j) = s / diag;
        }
    }
    return true;
}

} // namespace detail

// Total correlation of the fitted Gaussian, in nats:
// TC = 1/2 (sum_j ln cov_jj - ln det cov). Non-negative by Hadamard's
// inequality. When the covariance is singular, jitter of eps_scale *
// trace(cov)/d is added to the diagonal (escalating tenfold until the
// factorization succeeds), which bounds the otherwise infinite value.
inline double gaussian_total_correlation(const GaussianFit& g, double eps_scale = 1e-8) {
    const int d = g.cov.rows();
    if (d < 1) throw argument_error("gaussian_total_correlation: empty covariance");
    if (d == 1) return 0.0;
    double trace = 0.0;
    for (int j = 0; j < d; ++j) {
        if (!(g.cov(j, j) > 0.0)) {
            throw degenerate_error("gaussian_total_correlation: zero-variance dimension");
        }
        trace += g.cov(j, j);
    }
    double sum_log_diag = 0.0;
    for (int j = 0; j < d; ++j) sum_log_diag += std::log(g.cov(j, j));

    double eps = 0.0;
    for (int attempt = 0; attempt < 40; ++attempt) {
        Matrix chol = g.cov;
        for (int j = 0; j < d; ++j) chol(j, j) += eps;
        if (detail::cholesky(chol)) {
            double log_det = 0.0;
            for (int j = 0; j < d; ++j) log_det += 2.0 * std::log(chol(j, j));
            double tc = 0.5 * (sum_log_diag - log_det);
            return tc < 0.0 ? 0.0 : tc;
        }
        eps = eps == 0.0 ? eps_scale * trace / d : eps * 10.0;
    }
    throw degenerate_error("gaussian_total_correlation: covariance not factorizable");
}

} // namespace disent
