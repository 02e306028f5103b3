#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "disent/errors.hpp"
#include "disent/learners/logistic.hpp"
#include "disent/matrix.hpp"
#include "disent/rng.hpp"

namespace disent {

struct SvmConfig {
    double c = 0.01;      // loss cost before balancing; the dual has no box
    double tol = 1e-4;    // projected-gradient gap stopping tolerance
    int max_epochs = 5000;
};

// One-vs-rest linear SVM on the squared hinge loss with balanced class
// weights (each side of every binary problem carries equal total weight),
// trained by dual coordinate descent with an augmented (regularized) bias
// feature. Plain hinge parks middle-class models at the flat all-negative
// optimum on ordinal 1-D inputs; the squared hinge keeps smooth pressure on
// every violated point, which orders the per-class slopes and lets the argmax
// realize multi-valued factors from a single dimension. Epoch order is
// shuffled by an internal fixed-seed stream, so fits are deterministic given
// identical data order.
class SvmModel {
  public:
    SvmModel() = default;
    SvmModel(Matrix w, std::vector<int> classes)
        : w_(std::move(w)), classes_(std::move(classes)) {}

    int predict(const double* x, int d) const {
        if (d + 1 != w_.cols()) throw argument_error("SvmModel: feature width mismatch");
        int best = 0;
        double best_s = -HUGE_VAL;
        for (int c = 0; c < w_.rows(); ++c) {
            const double* wc = w_.row(c);
            double s = wc[d];
            for (int j = 0; j < d; ++j) s += wc[j] * x[j];
            if (s > best_s) {
                best_s = s;
                best = c;
            }
        }
        return classes_[best];
    }

    double accuracy(const Matrix& x, const std::vector<int>& y) const {
        if (x.rows() != static_cast<int>(y.size()) || x.rows() == 0) {
            throw argument_error("SvmModel::accuracy: size mismatch");
        }
        double hits = 0.0;
        for (int i = 0; i < x.rows(); ++i) {
            if (predict(x.row(i), x.cols()) == y[i]) hits += 1.0;
        }
        return hits / x.rows();
    }

    const Matrix& weights() const { return w_; }

  private:
    Matrix w_; // n_classes x (d+1), last slot is the bias
    std::vector<int> classes_;
};

namespace detail {

// Dual coordinate descent for one binary squared-hinge problem with
// per-point costs c_i; returns w (d+1 with bias). The dual is box-free
// (alpha >= 0 only) with a diagonal shift of 1/(2 c_i).
inline std::vector<double> svm_binary_dual_cd(const Matrix& x, const std::vector<double>& ysign,
                                              const std::vector<double>& cost,
                                              const SvmConfig& cfg, Rng& rng) {
    const int n = x.rows(), d = x.cols();
    std::vector<double> w(d + 1, 0.0), alpha(n, 0.0), qii(n), shift(n);
    for (int i = 0; i < n; ++i) {
        const double* xi = x.row(i);
        double q = 1.0; // bias feature
        for (int j = 0; j < d; ++j) q += xi[j] * xi[j];
        shift[i] = 0.5 / cost[i];
        qii[i] = q + shift[i];
    }
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        double pg_max = -HUGE_VAL, pg_min = HUGE_VAL;
        for (int idx : order) {
            const double* xi = x.row(idx);
            double g = w[d];
            for (int j = 0; j < d; ++j) g += w[j] * xi[j];
            g = g * ysign[idx] - 1.0 + alpha[idx] * shift[idx];

            double pg = g;
            if (alpha[idx] <= 0.0) pg = std::min(g, 0.0);
            pg_max = std::max(pg_max, pg);
            pg_min = std::min(pg_min, pg);

            if (std::fabs(pg) > 1e-14) {
                double a_old = alpha[idx];
                double a_new = std::max(0.0, a_old - g / qii[idx]);
                if (a_new != a_old) {
                    double delta = (a_new - a_old) * ysign[idx];
                    for (int j = 0; j < d; ++j) w[j] += delta * xi[j];
                    w[d] += delta;
                    alpha[idx] = a_new;
                }
            }
        }
        if (pg_max - pg_min < cfg.tol) break;
    }
    return w;
}

} // namespace detail

inline SvmModel fit_linear_svm(const Matrix& x, const std::vector<int>& y,
                               const SvmConfig& cfg = {}) {
    const int n = x.rows(), d = x.cols();
    if (n == 0 || n != static_cast<int>(y.size())) {
        throw argument_error("fit_linear_svm: rows of x must match labels");
    }
    if (!(cfg.c > 0.0) || !(cfg.tol > 0.0) || cfg.max_epochs < 1) {
        throw argument_error("fit_linear_svm: invalid config");
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
            if (!std::isfinite(x(i, j))) throw data_error("fit_linear_svm: non-finite feature");

    const std::vector<int> cls = detail::sorted_classes(y);
    const std::vector<int> yy = detail::remap_labels(y, cls);
    const int k = static_cast<int>(cls.size());

    std::vector<int> class_count(k, 0);
    for (int yi : yy) ++class_count[yi];

    Matrix w(k, d + 1);
    std::vector<double> ysign(n), cost(n);
    for (int c = 0; c < k; ++c) {
        const double n_pos = class_count[c], n_neg = n - class_count[c];
        for (int i = 0; i < n; ++i) {
            ysign[i] = yy[i] == c ? 1.0 : -1.0;
            cost[i] = cfg.c * n / (2.0 * (yy[i] == c ? n_pos : n_neg));
        }
        Rng rng(0x5b7a2f11c0ffee00ull + static_cast<std::uint64_t>(c));
        std::vector<double> wc = detail::svm_binary_dual_cd(x, ysign, cost, cfg, rng);
        for (int j = 0; j <= d; ++j) w(c, j) = wc[j];
    }
    return SvmModel(std::move(w), cls);
}

} // namespace disent
