#pragma once

#include <string>
#include <vector>

#include "disent/errors.hpp"
#include "disent/factor_model.hpp"
#include "disent/learners.hpp"
#include "disent/matrix.hpp"

namespace disent {

enum class MatrixTag { mi, gbt, svm };

inline const char* matrix_tag_name(MatrixTag t) {
    switch (t) {
    case MatrixTag::mi: return "mi";
    case MatrixTag::gbt: return "gbt";
    default: return "svm";
    }
}

// Factor-by-code relevance matrix: rows are factors, columns code dimensions.
// gbt rows carry the per-factor test accuracy of the model that produced them
// (consumed by the informativeness aggregation).
struct FactorCodeMatrix {
    MatrixTag tag = MatrixTag::mi;
    Matrix values;                         // K x d
    std::vector<std::string> factor_names; // length K
    std::vector<double> row_accuracy;      // gbt only; empty otherwise
};

// Mutual information (nats) between every factor and every code dimension
// after equal-width binning of the codes.
inline FactorCodeMatrix mi_matrix(const FactorBatch& factors, const Matrix& codes, int bins,
                                  std::vector<std::string> factor_names = {}) {
    if (factors.rows() != codes.rows() || factors.rows() < 2) {
        throw argument_error("mi_matrix: factors and codes must share >= 2 rows");
    }
    DiscretizedBatch disc = discretize(codes, bins);
    FactorCodeMatrix out;
    out.tag = MatrixTag::mi;
    out.values = Matrix(factors.cols(), codes.cols());
    for (int k = 0; k < factors.cols(); ++k) {
        std::vector<int> fk = factors.col(k);
        for (int i = 0; i < codes.cols(); ++i) {
            out.values(k, i) = mutual_information(fk, disc.bins.col(i));
        }
    }
    out.factor_names = std::move(factor_names);
    if (out.factor_names.empty()) {
        for (int k = 0; k < factors.cols(); ++k) {
            out.factor_names.push_back("factor_" + std::to_string(k));
        }
    }
    return out;
}

// Boosted-tree feature importances per factor. The first n_train rows train,
// the next n_test rows score; the per-factor test accuracy is cached on the row.
inline FactorCodeMatrix gbt_matrix(const FactorBatch& factors, const Matrix& codes, int n_train,
                                   int n_test, const GbtConfig& cfg = {},
                                   std::vector<std::string> factor_names = {}) {
    if (n_train < 2 || n_test < 1) throw argument_error("gbt_matrix: invalid split sizes");
    if (factors.rows() != codes.rows() || factors.rows() < n_train + n_test) {
        throw argument_error("gbt_matrix: need at least n_train + n_test matching rows");
    }
    Matrix xt(n_train, codes.cols()), xv(n_test, codes.cols());
    for (int i = 0; i < n_train; ++i)
        for (int c = 0; c < codes.cols(); ++c) xt(i, c) = codes(i, c);
    for (int i = 0; i < n_test; ++i)
        for (int c = 0; c < codes.cols(); ++c) xv(i, c) = codes(n_train + i, c);

    FactorCodeMatrix out;
    out.tag = MatrixTag::gbt;
    out.values = Matrix(factors.cols(), codes.cols());
    out.row_accuracy.resize(factors.cols());
    for (int k = 0; k < factors.cols(); ++k) {
        std::vector<int> yt(n_train), yv(n_test);
        for (int i = 0; i < n_train; ++i) yt[i] = factors(i, k);
        for (int i = 0; i < n_test; ++i) yv[i] = factors(n_train + i, k);
        GbtModel m = fit_gbt(xt, yt, cfg);
        const std::vector<double>& imp = m.feature_importance();
        for (int c = 0; c < codes.cols(); ++c) out.values(k, c) = imp[c];
        out.row_accuracy[k] = m.accuracy(xv, yv);
    }
    out.factor_names = std::move(factor_names);
    if (out.factor_names.empty()) {
        for (int k = 0; k < factors.cols(); ++k) {
            out.factor_names.push_back("factor_" + std::to_string(k));
        }
    }
    return out;
}

// Test accuracy of a one-dimensional linear SVM predicting each factor from
// each code dimension alone.
inline FactorCodeMatrix svm_matrix(const FactorBatch& factors, const Matrix& codes, int n_train,
                                   int n_test, const SvmConfig& cfg = {},
                                   std::vector<std::string> factor_names = {}) {
    if (n_train < 2 || n_test < 1) throw argument_error("svm_matrix: invalid split sizes");
    if (factors.rows() != codes.rows() || factors.rows() < n_train + n_test) {
        throw argument_error("svm_matrix: need at least n_train + n_test matching rows");
    }
    FactorCodeMatrix out;
    out.tag = MatrixTag::svm;
    out.values = Matrix(factors.cols(), codes.cols());
    Matrix xt(n_train, 1), xv(n_test, 1);
    for (int i = 0; i < codes.cols(); ++i) {
        for (int r = 0; r < n_train; ++r) xt(r, 0) = codes(r, i);
        for (int r = 0; r < n_test; ++r) xv(r, 0) = codes(n_train + r, i);
        for (int k = 0; k < factors.cols(); ++k) {
            std::vector<int> yt(n_train), yv(n_test);
            for (int r = 0; r < n_train; ++r) yt[r] = factors(r, k);
            for (int r = 0; r < n_test; ++r) yv[r] = factors(n_train + r, k);
            SvmModel m = fit_linear_svm(xt, yt, cfg);
            out.values(k, i) = m.accuracy(xv, yv);
        }
    }
    out.factor_names = std::move(factor_names);
    if (out.factor_names.empty()) {
        for (int k = 0; k < factors.cols(); ++k) {
            out.factor_names.push_back("factor_" + std::to_string(k));
        }
    }
    return out;
}

struct UnsupervisedScores {
    double tc_mean = 0.0;      // total correlation of a Gaussian fit, mean codes
    double tc_sampled = 0.0;   // same on sampled codes
    double avg_mi_mean = 0.0;  // mean pairwise MI between binned code dims
    double avg_mi_sampled = 0.0;
};

// Ground-truth-free scores computed from codes alone, in both modes.
inline UnsupervisedScores unsupervised_scores(const FactorSpace& space, const OracleEncoder& enc,
                                              int n, int bins, Rng& rng) {
    if (n < 2) throw argument_error("unsupervised_scores: n must be >= 2");
    FactorBatch f = sample_factors(space, n, rng);
    Rng rng_mean(rng.next()), rng_sampled(rng.next());
    CodeBatch mean = encode(enc, f, CodeMode::mean, rng_mean);
    CodeBatch sampled = encode(enc, f, CodeMode::sampled, rng_sampled);

    auto avg_mi = [bins](const Matrix& codes) {
        if (codes.cols() < 2) return 0.0;
        DiscretizedBatch disc = discretize(codes, bins);
        double sum = 0.0;
        int pairs = 0;
        for (int i = 0; i < codes.cols(); ++i) {
            for (int j = i + 1; j < codes.cols(); ++j) {
                sum += mutual_information(disc.bins.col(i), disc.bins.col(j));
                ++pairs;
            }
        }
        return sum / pairs;
    };

    UnsupervisedScores out;
    out.tc_mean = gaussian_total_correlation(fit_gaussian(mean));
    out.tc_sampled = gaussian_total_correlation(fit_gaussian(sampled));
    out.avg_mi_mean = avg_mi(mean);
    out.avg_mi_sampled = avg_mi(sampled);
    return out;
}

} // namespace disent
