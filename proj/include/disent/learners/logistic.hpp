#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "disent/errors.hpp"
#include "disent/matrix.hpp"
#include "disent/rng.hpp"

namespace disent {

struct LogisticConfig {
    double l2 = 1e-4;   // L2 strength on the mean-loss scale; intercept unpenalized
    int max_iter = 300;
    double tol = 1e-6;  // stop when the gradient inf-norm drops below this
};

namespace detail {

inline std::vector<int> sorted_classes(const std::vector<int>& y) {
    std::vector<int> cls(y);
    std::sort(cls.begin(), cls.end());
    cls.erase(std::unique(cls.begin(), cls.end()), cls.end());
    if (cls.size() < 2) throw degenerate_error("labels contain a single class");
    if (cls.front() < 0) throw argument_error("labels must be non-negative");
    return cls;
}

inline std::vector<int> remap_labels(const std::vector<int>& y, const std::vector<int>& cls) {
    std::vector<int> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        auto it = std::lower_bound(cls.begin(), cls.end(), y[i]);
        out[i] = static_cast<int>(it - cls.begin());
    }
    return out;
}

// Largest eigenvalue of X^T X (intercept column included) by power iteration.
inline double gram_spectral_bound(const Matrix& x) {
    const int n = x.rows(), d = x.cols();
    Matrix g(d + 1, d + 1);
    for (int i = 0; i < n; ++i) {
        const double* r = x.row(i);
        for (int a = 0; a <= d; ++a) {
            double va = a < d ? r[a] : 1.0;
            for (int b = a; b <= d; ++b) {
                double vb = b < d ? r[b] : 1.0;
                g(a, b) += va * vb;
            }
        }
    }
    for (int a = 0; a <= d; ++a)
        for (int b = 0; b < a; ++b) g(a, b) = g(b, a);
    std::vector<double> v(d + 1, 1.0);
    double lambda = 1.0;
    for (int it = 0; it < 50; ++it) {
        std::vector<double> w = g.matvec(v);
        double norm = 0.0;
        for (double t : w) norm += t * t;
        norm = std::sqrt(norm);
        if (norm == 0.0) return 1.0;
        for (double& t : w) t /= norm;
        lambda = norm;
        v = std::move(w);
    }
    return lambda;
}

} // namespace detail

// Multinomial logistic regression. Weights are (d+1) per class with the last
// slot holding the unpenalized intercept. Prediction is the softmax argmax,
// first class on exact ties.
class LogisticModel {
  public:
    LogisticModel() = default;
    LogisticModel(Matrix w, std::vector<int> classes)
        : w_(std::move(w)), classes_(std::move(classes)) {}

    const std::vector<int>& classes() const { return classes_; }

    int predict(const double* x, int d) const {
        if (d + 1 != w_.cols()) throw argument_error("LogisticModel: feature width mismatch");
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
            throw argument_error("LogisticModel::accuracy: size mismatch");
        }
        double hits = 0.0;
        for (int i = 0; i < x.rows(); ++i) {
            if (predict(x.row(i), x.cols()) == y[i]) hits += 1.0;
        }
        return hits / x.rows();
    }

    const Matrix& weights() const { return w_; }

  private:
    Matrix w_; // n_classes x (d+1)
    std::vector<int> classes_;
};

// Full-batch Nesterov-accelerated gradient descent with a Lipschitz step and
// function-value restarts. Deterministic given identical data order.
inline LogisticModel fit_logistic(const Matrix& x, const std::vector<int>& y,
                                  const LogisticConfig& cfg = {}) {
    const int n = x.rows(), d = x.cols();
    if (n == 0 || n != static_cast<int>(y.size())) {
        throw argument_error("fit_logistic: rows of x must match labels");
    }
    if (!(cfg.l2 >= 0.0) || cfg.max_iter < 1 || !(cfg.tol > 0.0)) {
        throw argument_error("fit_logistic: invalid config");
    }
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c)
            if (!std::isfinite(x(i, c))) throw data_error("fit_logistic: non-finite feature");

    const std::vector<int> cls = detail::sorted_classes(y);
    const std::vector<int> yy = detail::remap_labels(y, cls);
    const int k = static_cast<int>(cls.size());

    // Softmax Hessian is bounded by 1/2 I, so L = lambda_max(X~^T X~)/(2n) + l2.
    const double lip = 0.5 * detail::gram_spectral_bound(x) / n + cfg.l2;
    const double step = 1.0 / lip;

    Matrix w(k, d + 1), w_prev(k, d + 1), grad(k, d + 1);
    double prev_loss = HUGE_VAL;
    double momentum_t = 1.0;
    std::vector<double> s(k), p(k);

    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        double mom = (momentum_t - 1.0) / (momentum_t + 2.0);
        Matrix v(k, d + 1);
        for (int c = 0; c < k; ++c)
            for (int j = 0; j <= d; ++j) v(c, j) = w(c, j) + mom * (w(c, j) - w_prev(c, j));

        // Forward pass: loss and gradient at the lookahead point.
        grad = Matrix(k, d + 1);
        double loss = 0.0;
        for (int i = 0; i < n; ++i) {
            const double* xi = x.row(i);
            double smax = -HUGE_VAL;
            for (int c = 0; c < k; ++c) {
                const double* vc = v.row(c);
                double t = vc[d];
                for (int j = 0; j < d; ++j) t += vc[j] * xi[j];
                s[c] = t;
                smax = std::max(smax, t);
            }
            double z = 0.0;
            for (int c = 0; c < k; ++c) {
                p[c] = std::exp(s[c] - smax);
                z += p[c];
            }
            loss -= s[yy[i]] - smax - std::log(z);
            for (int c = 0; c < k; ++c) {
                double g = p[c] / z - (c == yy[i] ? 1.0 : 0.0);
                double* gc = grad.row(c);
                for (int j = 0; j < d; ++j) gc[j] += g * xi[j];
                gc[d] += g;
            }
        }
        loss /= n;
        double ginf = 0.0;
        for (int c = 0; c < k; ++c) {
            double* gc = grad.row(c);
            const double* vc = v.row(c);
            for (int j = 0; j <= d; ++j) {
                gc[j] /= n;
                if (j < d && cfg.l2 > 0.0) gc[j] += cfg.l2 * vc[j];
                ginf = std::max(ginf, std::fabs(gc[j]));
            }
        }
        if (cfg.l2 > 0.0) {
            double pen = 0.0;
            for (int c = 0; c < k; ++c) {
                const double* vc = v.row(c);
                for (int j = 0; j < d; ++j) pen += vc[j] * vc[j];
            }
            loss += 0.5 * cfg.l2 * pen;
        }

        if (loss > prev_loss) momentum_t = 1.0; // adaptive restart
        prev_loss = loss;

        w_prev = w;
        for (int c = 0; c < k; ++c)
            for (int j = 0; j <= d; ++j) w(c, j) = v(c, j) - step * grad(c, j);
        momentum_t += 1.0;

        if (ginf <= cfg.tol) break;
    }
    return LogisticModel(std::move(w), cls);
}

struct LogisticCvConfig {
    int folds = 5;
    int n_strengths = 10;
    double c_lo = 1e-4; // inverse-regularization grid endpoints
    double c_hi = 1e4;
    LogisticConfig base;
};

// Fold assignment: stratified when every class holds at least `folds`
// members; otherwise folds shrink to the smallest class count (minimum 2);
// if some class has a single member the split is unstratified.
inline std::vector<int> cv_fold_assignment(const std::vector<int>& y, int folds, Rng& rng) {
    const int n = static_cast<int>(y.size());
    std::vector<int> cls = detail::sorted_classes(y);
    std::vector<int> yy = detail::remap_labels(y, cls);
    std::vector<std::vector<int>> per_class(cls.size());
    for (int i = 0; i < n; ++i) per_class[yy[i]].push_back(i);
    int min_count = n;
    for (const auto& v : per_class) min_count = std::min(min_count, static_cast<int>(v.size()));

    std::vector<int> fold(n, 0);
    if (min_count >= 2) {
        int f = std::min(folds, min_count);
        for (auto& v : per_class) {
            rng.shuffle(v);
            for (std::size_t j = 0; j < v.size(); ++j) fold[v[j]] = static_cast<int>(j) % f;
        }
    } else {
        std::vector<int> idx(n);
        for (int i = 0; i < n; ++i) idx[i] = i;
        rng.shuffle(idx);
        int f = std::min(folds, n);
        for (int j = 0; j < n; ++j) fold[idx[j]] = j % f;
    }
    return fold;
}

// Cross-validated logistic regression over a log-spaced grid of inverse
// regularization strengths; refits on the full data at the best grid point
// (first on ties, by validation accuracy).
inline LogisticModel fit_logistic_cv(const Matrix& x, const std::vector<int>& y, Rng& rng,
                                     const LogisticCvConfig& cfg = {}) {
    const int n = x.rows();
    if (n < 4) throw argument_error("fit_logistic_cv: need at least 4 samples");
    if (cfg.folds < 2 || cfg.n_strengths < 1 || !(cfg.c_lo > 0.0) || !(cfg.c_hi >= cfg.c_lo)) {
        throw argument_error("fit_logistic_cv: invalid config");
    }
    std::vector<int> fold = cv_fold_assignment(y, cfg.folds, rng);
    int n_folds = 1 + *std::max_element(fold.begin(), fold.end());

    std::vector<double> strengths(cfg.n_strengths);
    for (int j = 0; j < cfg.n_strengths; ++j) {
        double t = cfg.n_strengths == 1 ? 0.0 : static_cast<double>(j) / (cfg.n_strengths - 1);
        strengths[j] = std::exp(std::log(cfg.c_lo) + t * (std::log(cfg.c_hi) - std::log(cfg.c_lo)));
    }

    double best_acc = -1.0;
    double best_l2 = cfg.base.l2;
    for (double c : strengths) {
        LogisticConfig run = cfg.base;
        run.l2 = 1.0 / c;
        double acc_sum = 0.0;
        int acc_n = 0;
        for (int f = 0; f < n_folds; ++f) {
            int n_val = static_cast<int>(std::count(fold.begin(), fold.end(), f));
            if (n_val == 0 || n_val == n) continue;
            Matrix xt(n - n_val, x.cols()), xv(n_val, x.cols());
            std::vector<int> yt, yv;
            yt.reserve(n - n_val);
            yv.reserve(n_val);
            int it = 0, iv = 0;
            for (int i = 0; i < n; ++i) {
                if (fold[i] == f) {
                    for (int cc = 0; cc < x.cols(); ++cc) xv(iv, cc) = x(i, cc);
                    yv.push_back(y[i]);
                    ++iv;
                } else {
                    for (int cc = 0; cc < x.cols(); ++cc) xt(it, cc) = x(i, cc);
                    yt.push_back(y[i]);
                    ++it;
                }
            }
            try {
                LogisticModel m = fit_logistic(xt, yt, run);
                acc_sum += m.accuracy(xv, yv);
                ++acc_n;
            } catch (const degenerate_error&) {
                // fold left a single class in training; skip it
            }
        }
        if (acc_n == 0) continue;
        double acc = acc_sum / acc_n;
        if (acc > best_acc) {
            best_acc = acc;
            best_l2 = 1.0 / c;
        }
    }
    LogisticConfig fin = cfg.base;
    fin.l2 = best_l2;
    return fit_logistic(x, y, fin);
}

} // namespace disent
