#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "disent/learners.hpp"
#include "disent/rng.hpp"

using namespace disent;

TEST_CASE("discretize assigns equal-width bins over the observed span") {
    Matrix x(4, 2);
    // column 0 spans [0,3]; column 1 is constant
    double vals[4][2] = {{0.0, 5.0}, {1.0, 5.0}, {2.0, 5.0}, {3.0, 5.0}};
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 2; ++c) x(r, c) = vals[r][c];
    DiscretizedBatch d = discretize(x, 2);
    CHECK(d.bins(0, 0) == 0);
    CHECK(d.bins(1, 0) == 0); // 1/3 of the span -> lower half
    CHECK(d.bins(2, 0) == 1);
    CHECK(d.bins(3, 0) == 1); // exactly at max -> top bin
    for (int r = 0; r < 4; ++r) CHECK(d.bins(r, 1) == 0);
    CHECK(d.lo[0] == 0.0);
    CHECK(d.hi[0] == 3.0);
}

TEST_CASE("discretize is injective when bins cover every distinct level") {
    // 16 evenly spaced levels, 20 bins: bin width is below the level spacing,
    // so distinct levels never share a bin.
    Matrix x(16, 1);
    for (int r = 0; r < 16; ++r) x(r, 0) = (r + 0.5) / 16.0;
    DiscretizedBatch d = discretize(x, 20);
    std::vector<int> seen;
    for (int r = 0; r < 16; ++r) seen.push_back(d.bins(r, 0));
    for (int r = 1; r < 16; ++r) CHECK(seen[r] > seen[r - 1]);
}

TEST_CASE("discretize input validation") {
    Matrix x(4, 1);
    CHECK_THROWS_AS(discretize(x, 1), argument_error);
    CHECK_THROWS_AS(discretize(Matrix(1, 1), 2), argument_error);
    x(2, 0) = HUGE_VAL;
    CHECK_THROWS_AS(discretize(x, 4), data_error);
}

TEST_CASE("entropy of simple label vectors") {
    CHECK(entropy({0, 0, 0, 0}) == 0.0);
    CHECK(entropy({0, 0, 1, 1}) == Catch::Approx(std::log(2.0)).margin(1e-15));
    CHECK(entropy({0, 1, 2, 3}) == Catch::Approx(std::log(4.0)).margin(1e-15));
    CHECK_THROWS_AS(entropy({0, -1}), argument_error);
}

TEST_CASE("mutual information matches the closed-form joint table value") {
    std::vector<int> x = {0, 0, 1, 1};
    // identical variables: MI = H = ln 2
    CHECK(mutual_information(x, x) == Catch::Approx(std::log(2.0)).margin(1e-12));
    // independent uniform pair: MI = 0
    CHECK(mutual_information(x, {0, 1, 0, 1}) == Catch::Approx(0.0).margin(1e-12));
    // joint p = {(0,0):1/2, (1,0):1/4, (1,1):1/4}:
    // MI = 1/2 ln(4/3) + 1/4 ln(2/3) + 1/4 ln 2 = 0.21576155433883564
    CHECK(mutual_information(x, {0, 0, 0, 1}) ==
          Catch::Approx(0.21576155433883564).margin(1e-12));
}

TEST_CASE("mutual information is symmetric and bounded by the marginal entropies") {
    Rng rng(11);
    std::vector<int> a(500), b(500);
    for (int i = 0; i < 500; ++i) {
        a[i] = static_cast<int>(rng.uniform_int(5));
        b[i] = (a[i] + static_cast<int>(rng.uniform_int(2))) % 5;
    }
    double mab = mutual_information(a, b);
    CHECK(mab == Catch::Approx(mutual_information(b, a)).margin(1e-14));
    CHECK(mab >= 0.0);
    CHECK(mab <= std::min(entropy(a), entropy(b)) + 1e-12);
}

TEST_CASE("fractional ranks average over ties") {
    std::vector<double> r = fractional_ranks({10.0, 20.0, 20.0, 30.0});
    CHECK(r == std::vector<double>{1.0, 2.5, 2.5, 4.0});
    CHECK(fractional_ranks({3.0, 1.0, 2.0}) == std::vector<double>{3.0, 1.0, 2.0});
}

TEST_CASE("pearson and spearman on exact configurations") {
    CHECK(pearson({1, 2, 3}, {2, 4, 6}) == Catch::Approx(1.0).margin(1e-15));
    CHECK(pearson({1, 2, 3}, {6, 4, 2}) == Catch::Approx(-1.0).margin(1e-15));
    CHECK_THROWS_AS(pearson({1, 1, 1}, {1, 2, 3}), degenerate_error);

    CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == Catch::Approx(1.0).margin(1e-15));
    CHECK(spearman({1, 2, 3, 4}, {40, 30, 20, 10}) == Catch::Approx(-1.0).margin(1e-15));
    // tied pair in x: ranks (1.5, 1.5, 3) vs (1, 2, 3) -> sqrt(3)/2
    CHECK(spearman({1, 1, 2}, {1, 2, 3}) ==
          Catch::Approx(0.8660254037844387).margin(1e-12));
    CHECK(spearman({5, 1, 4, 2}, {50, 10, 40, 20}) == Catch::Approx(1.0).margin(1e-15));
    CHECK_THROWS_AS(spearman({1.0}, {2.0}), argument_error);
}

TEST_CASE("spearman ignores any strictly monotone rescaling") {
    Rng rng(3);
    std::vector<double> x(60), y(60), fx(60), gy(60);
    for (int i = 0; i < 60; ++i) {
        x[i] = rng.normal();
        y[i] = x[i] + 0.8 * rng.normal();
        fx[i] = std::exp(2.0 * x[i]);
        gy[i] = std::atan(y[i]) * 7.0 - 3.0;
    }
    CHECK(spearman(x, y) == Catch::Approx(spearman(fx, gy)).margin(1e-12));
}

TEST_CASE("categorical R^2 equals the group-mean decomposition") {
    // groups AABB on y = 1,2,3,4: fitted (1.5, 1.5, 3.5, 3.5),
    // ss_res = 4 * 0.25 = 1, ss_tot = 5, R^2 = 0.8
    CHECK(ols_r2_categorical({1, 2, 3, 4}, {{0, 0, 1, 1}}) ==
          Catch::Approx(0.8).margin(1e-15));
    // predictor fully determines y -> R^2 = 1
    CHECK(ols_r2_categorical({1, 1, 2, 2, 3, 3}, {{0, 0, 1, 1, 2, 2}}) ==
          Catch::Approx(1.0).margin(1e-15));
    // one observation per group is a saturated design
    CHECK_THROWS_AS(ols_r2_categorical({1, 2}, {{0, 1}}), argument_error);
    CHECK_THROWS_AS(ols_r2_categorical({2, 2, 2, 2}, {{0, 0, 1, 1}}), degenerate_error);
}

TEST_CASE("product design never explains less than either marginal design") {
    Rng rng(17);
    std::vector<double> y(240);
    std::vector<int> a(240), b(240);
    for (int i = 0; i < 240; ++i) {
        a[i] = static_cast<int>(rng.uniform_int(4));
        b[i] = static_cast<int>(rng.uniform_int(3));
        y[i] = 0.3 * a[i] - 0.9 * b[i] + 0.5 * a[i] * b[i] + rng.normal();
    }
    double ra = ols_r2_categorical(y, {a});
    double rab = ols_r2_categorical(y, {a, b});
    CHECK(rab >= ra - 1e-9);
}

TEST_CASE("gaussian fit recovers the biased sample moments") {
    Matrix x(4, 2);
    double vals[4][2] = {{1, 1}, {-1, -1}, {2, -2}, {-2, 2}};
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 2; ++c) x(r, c) = vals[r][c];
    GaussianFit g = fit_gaussian(x);
    CHECK(g.mean[0] == 0.0);
    CHECK(g.mean[1] == 0.0);
    CHECK(g.cov(0, 0) == Catch::Approx(2.5).margin(1e-15));
    CHECK(g.cov(1, 1) == Catch::Approx(2.5).margin(1e-15));
    CHECK(g.cov(0, 1) == Catch::Approx(-1.5).margin(1e-15));
    // TC = 1/2 (ln 2.5 + ln 2.5 - ln 4) = 1/2 ln 1.5625
    CHECK(gaussian_total_correlation(g) ==
          Catch::Approx(0.22314355131420976).margin(1e-12));
}

TEST_CASE("total correlation of a correlated pair approaches the closed form") {
    // z2 = rho z1 + sqrt(1-rho^2) e with rho = 0.5: TC = -1/2 ln(1 - rho^2)
    const double rho = 0.5;
    Rng rng(42);
    Matrix x(100000, 2);
    for (int i = 0; i < x.rows(); ++i) {
        double z1 = rng.normal();
        x(i, 0) = z1;
        x(i, 1) = rho * z1 + std::sqrt(1.0 - rho * rho) * rng.normal();
    }
    double tc = gaussian_total_correlation(fit_gaussian(x));
    CHECK(tc == Catch::Approx(0.14384103622589045).margin(0.02));
}

TEST_CASE("total correlation edge cases") {
    Matrix one(3, 1);
    one(0, 0) = 1.0;
    one(1, 0) = 2.0;
    one(2, 0) = 5.0;
    CHECK(gaussian_total_correlation(fit_gaussian(one)) == 0.0);

    Matrix flat(3, 2);
    flat(0, 0) = 1.0;
    flat(1, 0) = 2.0;
    flat(2, 0) = 3.0; // second column all zero
    CHECK_THROWS_AS(gaussian_total_correlation(fit_gaussian(flat)), degenerate_error);

    // perfectly duplicated column: singular covariance, jitter keeps TC finite
    Matrix dup(64, 2);
    Rng rng(9);
    for (int i = 0; i < 64; ++i) {
        dup(i, 0) = rng.normal();
        dup(i, 1) = dup(i, 0);
    }
    double tc = gaussian_total_correlation(fit_gaussian(dup));
    CHECK(std::isfinite(tc));
    CHECK(tc > 1.0);
}

TEST_CASE("majority vote lookup, ties and fallback") {
    MajorityVoteModel m = fit_majority_vote({0, 0, 1, 1, 2}, {5, 5, 7, 7, 9});
    CHECK(m.predict(0) == 5);
    CHECK(m.predict(1) == 7);
    CHECK(m.predict(2) == 9);
    // unseen feature -> global majority; 5 and 7 tie at two -> smaller label
    CHECK(m.predict(3) == 5);
    CHECK(m.accuracy({0, 1, 2}, {5, 7, 9}) == 1.0);
    CHECK(m.accuracy({0, 1}, {7, 7}) == 0.5);

    // per-cell tie also resolves to the smaller label
    MajorityVoteModel t = fit_majority_vote({0, 0}, {2, 1});
    CHECK(t.predict(0) == 1);

    CHECK_THROWS_AS(fit_majority_vote({}, {}), argument_error);
    CHECK_THROWS_AS(fit_majority_vote({0, 1}, {0, -2}), argument_error);
}
