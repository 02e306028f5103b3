#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "disent/errors.hpp"
#include "disent/impossibility.hpp"
#include "disent/matrix.hpp"
#include "disent/rng.hpp"

namespace disent {

struct Factor {
    std::string name;
    int cardinality = 0;
};

// Ground-truth generative factor space: independent uniform categorical
// factors, each with cardinality >= 2.
class FactorSpace {
  public:
    explicit FactorSpace(std::vector<Factor> factors) : factors_(std::move(factors)) {
        if (factors_.size() < 2) throw argument_error("FactorSpace: need at least 2 factors");
        std::set<std::string> names;
        for (const auto& f : factors_) {
            if (f.cardinality < 2) {
                throw argument_error("FactorSpace: cardinality of '" + f.name + "' must be >= 2");
            }
            if (f.name.empty() || !names.insert(f.name).second) {
                throw argument_error("FactorSpace: factor names must be unique and non-empty");
            }
        }
    }

    static FactorSpace from_cardinalities(const std::vector<int>& cards) {
        std::vector<Factor> fs;
        for (std::size_t k = 0; k < cards.size(); ++k) {
            fs.push_back({"factor_" + std::to_string(k), cards[k]});
        }
        return FactorSpace(std::move(fs));
    }

    int size() const { return static_cast<int>(factors_.size()); }
    const Factor& factor(int k) const { return factors_[k]; }
    const std::vector<Factor>& factors() const { return factors_; }

    std::vector<int> cardinalities() const {
        std::vector<int> c(factors_.size());
        for (std::size_t k = 0; k < factors_.size(); ++k) c[k] = factors_[k].cardinality;
        return c;
    }

    long long combinations() const {
        long long n = 1;
        for (const auto& f : factors_) n *= f.cardinality;
        return n;
    }

  private:
    std::vector<Factor> factors_;
};

using FactorBatch = IntMatrix; // N x K integer factor values
using CodeBatch = Matrix;      // N x d real codes

inline FactorBatch sample_factors(const FactorSpace& space, int n, Rng& rng) {
    if (n < 1) throw argument_error("sample_factors: n must be positive");
    FactorBatch b(n, space.size());
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < space.size(); ++k)
            b(i, k) = rng.uniform_index(space.factor(k).cardinality);
    return b;
}

// Uniform over all factors except `fixed_index`, which is pinned to `fixed_value`.
inline FactorBatch sample_factors_fixed(const FactorSpace& space, int n, int fixed_index,
                                        int fixed_value, Rng& rng) {
    if (n < 1) throw argument_error("sample_factors_fixed: n must be positive");
    if (fixed_index < 0 || fixed_index >= space.size()) {
        throw argument_error("sample_factors_fixed: factor index out of range");
    }
    if (fixed_value < 0 || fixed_value >= space.factor(fixed_index).cardinality) {
        throw argument_error("sample_factors_fixed: fixed value outside cardinality");
    }
    FactorBatch b(n, space.size());
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < space.size(); ++k)
            b(i, k) = k == fixed_index ? fixed_value
                                       : rng.uniform_index(space.factor(k).cardinality);
    return b;
}

// Full cartesian enumeration of the factor space, row-major in factor order.
inline FactorBatch enumerate_factors(const FactorSpace& space) {
    long long n = space.combinations();
    if (n > 2'000'000) throw argument_error("enumerate_factors: space too large to enumerate");
    FactorBatch b(static_cast<int>(n), space.size());
    std::vector<int> v(space.size(), 0);
    for (int i = 0; i < static_cast<int>(n); ++i) {
        for (int k = 0; k < space.size(); ++k) b(i, k) = v[k];
        for (int k = space.size() - 1; k >= 0; --k) {
            if (++v[k] < space.factor(k).cardinality) break;
            v[k] = 0;
        }
    }
    return b;
}

// Centers discrete value v of a cardinality-c factor inside its bin of [0,1].
inline double dequantize(int v, int c) { return (v + 0.5) / c; }

enum class EncoderKind {
    identity,
    permute_scale,
    merge,
    duplicate,
    noise_channels,
    collapsed,
    rotation,
};

enum class CodeMode { mean, sampled };

// Deterministic-by-seed map from factor values to codes. The mean map is the
// noiseless representation; sampled mode adds homoscedastic Gaussian noise
// with the per-dimension sigma on top of it.
struct OracleEncoder {
    std::string id;
    EncoderKind kind = EncoderKind::identity;
    std::vector<int> cards;      // factor cardinalities the encoder was built for
    std::vector<double> sigma;   // per output dimension

    std::vector<int> perm;                // permute_scale: code i reads factor perm[i]
    std::vector<double> scale;            // permute_scale: per-dimension gain
    std::vector<std::vector<int>> groups; // merge: factor index groups, mixed-radix packed
    std::vector<int> unmerged;            // merge: remaining factors in index order
    std::vector<int> copies;              // duplicate: source factor per extra dim
    int extra_noise = 0;                  // noise_channels: appended pure-noise dims
    double noise_sd = 1.0;
    int constant_dims = 0;                // collapsed: appended constant dims
    bool keep_factors = true;             // collapsed: false drops the factor dims entirely
    double constant_value = 0.5;
    std::optional<Entangler> entangler;   // rotation

    int dim() const { return static_cast<int>(sigma.size()); }
};

namespace detail {

inline std::vector<double> broadcast_sigma(double s, int d) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
        throw argument_error("encoder: sigma must be finite and >= 0");
    }
    return std::vector<double>(static_cast<std::size_t>(d), s);
}

} // namespace detail

inline OracleEncoder identity_encoder(const FactorSpace& space, double sigma = 0.0) {
    OracleEncoder e;
    e.id = "identity";
    e.kind = EncoderKind::identity;
    e.cards = space.cardinalities();
    e.sigma = detail::broadcast_sigma(sigma, space.size());
    return e;
}

inline OracleEncoder permute_scale_encoder(const FactorSpace& space, std::vector<int> perm,
                                           std::vector<double> scale, double sigma = 0.0) {
    const int k = space.size();
    if (static_cast<int>(perm.size()) != k || static_cast<int>(scale.size()) != k) {
        throw argument_error("permute_scale_encoder: perm and scale must have one entry per factor");
    }
    std::vector<int> seen(k, 0);
    for (int p : perm) {
        if (p < 0 || p >= k || seen[p]++) {
            throw argument_error("permute_scale_encoder: perm is not a permutation");
        }
    }
    for (double s : scale) {
        if (s == 0.0 || !std::isfinite(s)) {
            throw argument_error("permute_scale_encoder: scales must be nonzero and finite");
        }
    }
    OracleEncoder e;
    e.id = "permute_scale";
    e.kind = EncoderKind::permute_scale;
    e.cards = space.cardinalities();
    e.sigma = detail::broadcast_sigma(sigma, k);
    e.perm = std::move(perm);
    e.scale = std::move(scale);
    return e;
}

// Packs each group of factors injectively into one dimension via mixed-radix
// encoding, then centers the packed value in [0,1]. Remaining factors keep
// their own dims after the merged ones.
inline OracleEncoder merge_encoder(const FactorSpace& space,
                                   std::vector<std::vector<int>> groups, double sigma = 0.0) {
    const int k = space.size();
    if (groups.empty()) throw argument_error("merge_encoder: need at least one group");
    std::vector<int> used(k, 0);
    for (const auto& g : groups) {
        if (g.size() < 2) throw argument_error("merge_encoder: groups must have >= 2 factors");
        long long packed = 1;
        for (int idx : g) {
            if (idx < 0 || idx >= k || used[idx]++) {
                throw argument_error("merge_encoder: groups must be disjoint valid factor indices");
            }
            packed *= space.factor(idx).cardinality;
            if (packed > 1'000'000) throw argument_error("merge_encoder: packed cardinality too large");
        }
    }
    OracleEncoder e;
    e.id = "merge";
    e.kind = EncoderKind::merge;
    e.cards = space.cardinalities();
    for (int idx = 0; idx < k; ++idx)
        if (!used[idx]) e.unmerged.push_back(idx);
    e.groups = std::move(groups);
    e.sigma = detail::broadcast_sigma(
        sigma, static_cast<int>(e.groups.size() + e.unmerged.size()));
    return e;
}

// Identity map plus extra dims copying the listed source factors.
inline OracleEncoder duplicate_encoder(const FactorSpace& space, std::vector<int> copies,
                                       double sigma = 0.0) {
    if (copies.empty()) throw argument_error("duplicate_encoder: need at least one copy");
    for (int src : copies) {
        if (src < 0 || src >= space.size()) {
            throw argument_error("duplicate_encoder: source factor out of range");
        }
    }
    OracleEncoder e;
    e.id = "duplicate";
    e.kind = EncoderKind::duplicate;
    e.cards = space.cardinalities();
    e.copies = std::move(copies);
    e.sigma = detail::broadcast_sigma(sigma, space.size() + static_cast<int>(e.copies.size()));
    return e;
}

// Identity map plus appended pure-noise dimensions. The noise is part of the
// mean map and is drawn from the stream in both modes.
inline OracleEncoder noise_channels_encoder(const FactorSpace& space, int n_extra,
                                            double noise_sd = 1.0, double sigma = 0.0) {
    if (n_extra < 1) throw argument_error("noise_channels_encoder: n_extra must be >= 1");
    if (!(noise_sd > 0.0) || !std::isfinite(noise_sd)) {
        throw argument_error("noise_channels_encoder: noise_sd must be positive and finite");
    }
    OracleEncoder e;
    e.id = "noise_channels";
    e.kind = EncoderKind::noise_channels;
    e.cards = space.cardinalities();
    e.extra_noise = n_extra;
    e.noise_sd = noise_sd;
    e.sigma = detail::broadcast_sigma(sigma, space.size() + n_extra);
    return e;
}

// Appends constant dimensions; with keep_factors=false the code is constant
// everywhere (fully collapsed representation).
inline OracleEncoder collapsed_encoder(const FactorSpace& space, int n_constant,
                                       bool keep_factors = true, double constant_value = 0.5,
                                       double sigma = 0.0) {
    if (n_constant < 1) throw argument_error("collapsed_encoder: n_constant must be >= 1");
    if (!std::isfinite(constant_value)) {
        throw argument_error("collapsed_encoder: constant value must be finite");
    }
    OracleEncoder e;
    e.id = "collapsed";
    e.kind = EncoderKind::collapsed;
    e.cards = space.cardinalities();
    e.constant_dims = n_constant;
    e.keep_factors = keep_factors;
    e.constant_value = constant_value;
    e.sigma = detail::broadcast_sigma(sigma, (keep_factors ? space.size() : 0) + n_constant);
    return e;
}

// Jitter-dequantizes the factor vector to uniform (0,1) marginals and applies
// the marginal-preserving entangling map; every output dim mixes every factor.
inline OracleEncoder rotation_encoder(const FactorSpace& space, double alpha,
                                      Marginal marginal = Marginal::uniform01,
                                      double sigma = 0.0) {
    if (marginal != Marginal::uniform01) {
        throw argument_error("rotation_encoder: only uniform01 marginals match dequantized factors");
    }
    OracleEncoder e;
    e.id = "rotation";
    e.kind = EncoderKind::rotation;
    e.cards = space.cardinalities();
    e.sigma = detail::broadcast_sigma(sigma, space.size());
    e.entangler = make_entangler(space.size(), alpha, marginal);
    return e;
}

// Maps a factor batch to codes. The mean map consumes the stream only for
// encoder-internal randomness (noise channels, rotation jitter); sampled mode
// then adds sigma-scaled Gaussian noise per dimension. With all sigma zero,
// sampled output equals mean output bit-exactly under the same seed.
inline CodeBatch encode(const OracleEncoder& enc, const FactorBatch& factors, CodeMode mode,
                        Rng& rng) {
    const int n = factors.rows();
    const int k = static_cast<int>(enc.cards.size());
    if (factors.cols() != k) throw argument_error("encode: factor batch has wrong width");
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < k; ++c)
            if (factors(i, c) < 0 || factors(i, c) >= enc.cards[c]) {
                throw data_error("encode: factor value outside cardinality at row " +
                                 std::to_string(i));
            }

    const int d = enc.dim();
    CodeBatch codes(n, d);
    std::vector<double> u(k), f;
    for (int i = 0; i < n; ++i) {
        double* out = codes.row(i);
        switch (enc.kind) {
        case EncoderKind::identity:
            for (int c = 0; c < k; ++c) out[c] = dequantize(factors(i, c), enc.cards[c]);
            break;
        case EncoderKind::permute_scale:
            for (int c = 0; c < k; ++c) {
                int src = enc.perm[c];
                out[c] = enc.scale[c] * dequantize(factors(i, src), enc.cards[src]);
            }
            break;
        case EncoderKind::merge: {
            int j = 0;
            for (const auto& g : enc.groups) {
                long long packed = 0, radix = 1;
                for (int idx : g) {
                    packed = packed * enc.cards[idx] + factors(i, idx);
                    radix *= enc.cards[idx];
                }
                out[j++] = (static_cast<double>(packed) + 0.5) / static_cast<double>(radix);
            }
            for (int idx : enc.unmerged) out[j++] = dequantize(factors(i, idx), enc.cards[idx]);
            break;
        }
        case EncoderKind::duplicate:
            for (int c = 0; c < k; ++c) out[c] = dequantize(factors(i, c), enc.cards[c]);
            for (std::size_t j = 0; j < enc.copies.size(); ++j) {
                int src = enc.copies[j];
                out[k + j] = dequantize(factors(i, src), enc.cards[src]);
            }
            break;
        case EncoderKind::noise_channels:
            for (int c = 0; c < k; ++c) out[c] = dequantize(factors(i, c), enc.cards[c]);
            for (int j = 0; j < enc.extra_noise; ++j) out[k + j] = enc.noise_sd * rng.normal();
            break;
        case EncoderKind::collapsed: {
            int j = 0;
            if (enc.keep_factors)
                for (int c = 0; c < k; ++c) out[j++] = dequantize(factors(i, c), enc.cards[c]);
            for (int c = 0; c < enc.constant_dims; ++c) out[j++] = enc.constant_value;
            break;
        }
        case EncoderKind::rotation:
            for (int c = 0; c < k; ++c) {
                u[c] = (factors(i, c) + rng.uniform()) / enc.cards[c];
            }
            f = entangle(*enc.entangler, u);
            for (int c = 0; c < d; ++c) out[c] = f[c];
            break;
        }
        if (mode == CodeMode::sampled) {
            for (int c = 0; c < d; ++c)
                if (enc.sigma[c] > 0.0) out[c] += enc.sigma[c] * rng.normal();
        }
    }
    return codes;
}

} // namespace disent
