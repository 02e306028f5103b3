#pragma once

#include <cmath>
#include <string>

#include "disent/errors.hpp"
#include "disent/matrix.hpp"

namespace disent {

struct DiscretizedBatch {
    IntMatrix bins;          // N x d bin indices in [0, n_bins)
    int n_bins = 0;
    std::vector<double> lo;  // per-dimension observed min
    std::vector<double> hi;  // per-dimension observed max
};

// Equal-width binning per dimension over the observed [min, max]. A constant
// column maps everything to bin 0. Values exactly at max land in the top bin.
inline DiscretizedBatch discretize(const Matrix& x, int n_bins) {
    if (n_bins < 2) throw argument_error("discretize: n_bins must be >= 2");
    if (x.rows() < 2) throw argument_error("discretize: need at least 2 rows");
    DiscretizedBatch out;
    out.n_bins = n_bins;
    out.bins = IntMatrix(x.rows(), x.cols());
    out.lo.resize(x.cols());
    out.hi.resize(x.cols());
    for (int c = 0; c < x.cols(); ++c) {
        double lo = HUGE_VAL, hi = -HUGE_VAL;
        for (int r = 0; r < x.rows(); ++r) {
            double v = x(r, c);
            if (!std::isfinite(v)) {
                throw data_error("discretize: non-finite value in column " + std::to_string(c));
            }
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        out.lo[c] = lo;
        out.hi[c] = hi;
        double width = hi - lo;
        for (int r = 0; r < x.rows(); ++r) {
            int b = 0;
            if (width > 0.0) {
                b = static_cast<int>((x(r, c) - lo) / width * n_bins);
                if (b >= n_bins) b = n_bins - 1;
                if (b < 0) b = 0;
            }
            out.bins(r, c) = b;
        }
    }
    return out;
}

} // namespace disent
