#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "disent/learners.hpp"
#include "disent/rng.hpp"

using namespace disent;

namespace {

// Three well-separated clusters in the plane, labels 0/1/2.
void make_clusters(int per_class, Matrix& x, std::vector<int>& y, Rng& rng) {
    const double cx[3] = {0.0, 4.0, 0.0};
    const double cy[3] = {0.0, 0.0, 4.0};
    x = Matrix(3 * per_class, 2);
    y.assign(3 * per_class, 0);
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < per_class; ++i) {
            int r = c * per_class + i;
            x(r, 0) = cx[c] + 0.5 * rng.normal();
            x(r, 1) = cy[c] + 0.5 * rng.normal();
            y[r] = c;
        }
    }
}

bool same_weights(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            if (a(i, j) != b(i, j)) return false;
    return true;
}

} // namespace

TEST_CASE("logistic regression separates 1-d two-class data") {
    Matrix x(4, 1);
    x(0, 0) = -2.0;
    x(1, 0) = -1.0;
    x(2, 0) = 1.0;
    x(3, 0) = 2.0;
    std::vector<int> y = {0, 0, 1, 1};
    LogisticModel m = fit_logistic(x, y);
    CHECK(m.accuracy(x, y) == 1.0);
    // class-1 weight on the feature must exceed class-0's
    CHECK(m.weights()(1, 0) > m.weights()(0, 0));
}

TEST_CASE("logistic regression reaches full accuracy on separated clusters") {
    Matrix x;
    std::vector<int> y;
    Rng rng(7);
    make_clusters(40, x, y, rng);
    LogisticModel m = fit_logistic(x, y);
    CHECK(m.accuracy(x, y) >= 0.99);
    CHECK(m.classes() == std::vector<int>{0, 1, 2});
}

TEST_CASE("logistic fit is a pure function of its inputs") {
    Matrix x;
    std::vector<int> y;
    Rng rng(21);
    make_clusters(25, x, y, rng);
    LogisticModel a = fit_logistic(x, y);
    LogisticModel b = fit_logistic(x, y);
    CHECK(same_weights(a.weights(), b.weights()));
}

TEST_CASE("logistic regression rejects degenerate input") {
    Matrix x(4, 1);
    CHECK_THROWS_AS(fit_logistic(x, {1, 1, 1, 1}), degenerate_error);
    CHECK_THROWS_AS(fit_logistic(x, {0, 1}), argument_error);
    x(1, 0) = HUGE_VAL;
    CHECK_THROWS_AS(fit_logistic(x, {0, 0, 1, 1}), data_error);
}

TEST_CASE("labels are preserved through the class remapping") {
    Matrix x(6, 1);
    for (int i = 0; i < 6; ++i) x(i, 0) = i < 3 ? -1.0 : 1.0;
    std::vector<int> y = {7, 7, 7, 3, 3, 3}; // unordered, non-contiguous labels
    LogisticModel m = fit_logistic(x, y);
    CHECK(m.classes() == std::vector<int>{3, 7});
    CHECK(m.accuracy(x, y) == 1.0);
}

TEST_CASE("cross-validated logistic matches the plain fit on easy data") {
    Matrix x;
    std::vector<int> y;
    Rng rng(13);
    make_clusters(30, x, y, rng);
    Rng cv_rng(99);
    LogisticModel m = fit_logistic_cv(x, y, cv_rng);
    CHECK(m.accuracy(x, y) >= 0.99);
}

TEST_CASE("cross-validated logistic is deterministic given the rng seed") {
    Matrix x;
    std::vector<int> y;
    Rng rng(31);
    make_clusters(20, x, y, rng);
    Rng r1(5), r2(5);
    LogisticModel a = fit_logistic_cv(x, y, r1);
    LogisticModel b = fit_logistic_cv(x, y, r2);
    CHECK(same_weights(a.weights(), b.weights()));
}

TEST_CASE("cv fold assignment is stratified when every class allows it") {
    std::vector<int> y = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    Rng rng(2);
    std::vector<int> folds = cv_fold_assignment(y, 5, rng);
    REQUIRE(folds.size() == y.size());
    // each fold must hold exactly one member of each class
    for (int f = 0; f < 5; ++f) {
        int c0 = 0, c1 = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (folds[i] != f) continue;
            (y[i] == 0 ? c0 : c1) += 1;
        }
        CHECK(c0 == 1);
        CHECK(c1 == 1);
    }
}

TEST_CASE("linear svm separates clusters and is deterministic") {
    Matrix x;
    std::vector<int> y;
    Rng rng(19);
    make_clusters(40, x, y, rng);
    SvmModel a = fit_linear_svm(x, y);
    CHECK(a.accuracy(x, y) >= 0.95);
    SvmModel b = fit_linear_svm(x, y);
    CHECK(same_weights(a.weights(), b.weights()));
}

TEST_CASE("linear svm on a single separating feature") {
    Matrix x(40, 1);
    std::vector<int> y(40);
    Rng rng(3);
    for (int i = 0; i < 40; ++i) {
        y[i] = i % 2;
        x(i, 0) = (y[i] == 0 ? -2.0 : 2.0) + 0.3 * rng.normal();
    }
    SvmModel m = fit_linear_svm(x, y);
    CHECK(m.accuracy(x, y) == 1.0);
    CHECK_THROWS_AS(fit_linear_svm(x, std::vector<int>(40, 1)), degenerate_error);
}

TEST_CASE("gbt learns an axis-aligned threshold and concentrates importance") {
    Matrix x(200, 2);
    std::vector<int> y(200);
    Rng rng(23);
    for (int i = 0; i < 200; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal(); // pure noise feature
        y[i] = x(i, 0) < 0.0 ? 0 : 1;
    }
    GbtModel m = fit_gbt(x, y);
    CHECK(m.accuracy(x, y) >= 0.99);
    const std::vector<double>& imp = m.feature_importance();
    REQUIRE(imp.size() == 2);
    CHECK(imp[0] + imp[1] == Catch::Approx(1.0).margin(1e-12));
    CHECK(imp[0] > 0.95);
}

TEST_CASE("gbt importance lands on the first of two identical columns") {
    // equal-gain splits resolve to the lowest feature index, so a perfect
    // duplicate contributes nothing
    Matrix x(100, 2);
    std::vector<int> y(100);
    Rng rng(29);
    for (int i = 0; i < 100; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = x(i, 0);
        y[i] = x(i, 0) < 0.2 ? 0 : 1;
    }
    GbtModel m = fit_gbt(x, y);
    const std::vector<double>& imp = m.feature_importance();
    CHECK(imp[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(imp[1] == 0.0);
}

TEST_CASE("gbt generalizes across a train/test split of three clusters") {
    Matrix xtr, xte;
    std::vector<int> ytr, yte;
    Rng rng(41);
    make_clusters(60, xtr, ytr, rng);
    make_clusters(30, xte, yte, rng);
    GbtModel m = fit_gbt(xtr, ytr);
    CHECK(m.accuracy(xte, yte) >= 0.95);
}

TEST_CASE("gbt fit is deterministic and handles constant features") {
    Matrix x(80, 2);
    std::vector<int> y(80);
    Rng rng(55);
    for (int i = 0; i < 80; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = 3.25; // constant: never splittable
        y[i] = x(i, 0) < -0.1 ? 0 : 1;
    }
    GbtModel a = fit_gbt(x, y);
    GbtModel b = fit_gbt(x, y);
    CHECK(a.feature_importance()[1] == 0.0);
    CHECK(a.feature_importance() == b.feature_importance());
    for (int i = 0; i < 80; ++i) {
        CHECK(a.predict(x.row(i), 2) == b.predict(x.row(i), 2));
    }
    CHECK_THROWS_AS(fit_gbt(x, std::vector<int>(80, 0)), degenerate_error);
}

TEST_CASE("gbt with shallow budget still beats chance on xor-free data") {
    GbtConfig small;
    small.n_trees = 10;
    small.max_depth = 2;
    Matrix x(150, 1);
    std::vector<int> y(150);
    Rng rng(61);
    for (int i = 0; i < 150; ++i) {
        x(i, 0) = rng.uniform();
        y[i] = x(i, 0) < 0.33 ? 0 : (x(i, 0) < 0.66 ? 1 : 2);
    }
    GbtModel m = fit_gbt(x, y, small);
    CHECK(m.accuracy(x, y) >= 0.9);
}
