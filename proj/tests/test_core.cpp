#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "disent/matrix.hpp"
#include "disent/normal.hpp"
#include "disent/rng.hpp"

using namespace disent;

TEST_CASE("task_seed is stable and sensitive to both inputs") {
    CHECK(task_seed(1234, "a|b") == task_seed(1234, "a|b"));
    CHECK(task_seed(1234, "a|b") != task_seed(1235, "a|b"));
    CHECK(task_seed(1234, "a|b") != task_seed(1234, "a|c"));
}

TEST_CASE("Rng streams are reproducible under the same seed") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next() == b.next());
}

TEST_CASE("uniform stays inside the open unit interval") {
    Rng rng(7);
    for (int i = 0; i < 100000; ++i) {
        double u = rng.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("uniform_int is bounded and roughly uniform") {
    Rng rng(11);
    std::vector<int> count(5, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        auto v = rng.uniform_int(5);
        REQUIRE(v < 5);
        ++count[v];
    }
    for (int c : count) CHECK(std::fabs(c / double(n) - 0.2) < 0.01);
    CHECK_THROWS_AS(rng.uniform_int(0), argument_error);
}

TEST_CASE("normal_quantile hits reference values to 1e-9") {
    CHECK(std::fabs(normal_quantile(0.5)) < 1e-12);
    CHECK(normal_quantile(0.975) == Catch::Approx(1.959963984540054).margin(1e-9));
    CHECK(normal_quantile(0.01) == Catch::Approx(-2.3263478740408408).margin(1e-9));
    CHECK(normal_quantile(0.99) == Catch::Approx(2.3263478740408408).margin(1e-9));
    CHECK(normal_quantile(1e-10) == Catch::Approx(-6.361340902404056).margin(1e-8));
}

TEST_CASE("normal_quantile inverts normal_cdf across the working range") {
    for (double x = -6.0; x <= 6.0; x += 0.05) {
        double p = normal_cdf(x);
        CHECK(normal_quantile(p) == Catch::Approx(x).margin(1e-9));
    }
}

TEST_CASE("normal_quantile rejects out-of-domain probabilities") {
    CHECK_THROWS_AS(normal_quantile(0.0), domain_error);
    CHECK_THROWS_AS(normal_quantile(1.0), domain_error);
    CHECK_THROWS_AS(normal_quantile(-0.1), domain_error);
    CHECK_THROWS_AS(normal_quantile(std::nan("")), domain_error);
}

TEST_CASE("rng normals have standard moments") {
    Rng rng(3);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = rng.normal();
        s += z;
        s2 += z * z;
    }
    CHECK(s / n == Catch::Approx(0.0).margin(0.01));
    CHECK(s2 / n == Catch::Approx(1.0).margin(0.02));
}

TEST_CASE("matrix multiply, transpose and orthogonality defect") {
    Matrix a(2, 2);
    a(0, 0) = 0.6;
    a(0, 1) = -0.8;
    a(1, 0) = 0.8;
    a(1, 1) = 0.6;
    CHECK(orthogonality_defect(a) < 1e-15);
    Matrix i2 = Matrix::identity(2);
    Matrix prod = a.matmul(a.transposed());
    CHECK(prod(0, 0) == Catch::Approx(1.0));
    CHECK(prod(0, 1) == Catch::Approx(0.0).margin(1e-15));
    CHECK(i2.max_abs() == 1.0);
    std::vector<double> v{1.0, 2.0};
    auto y = a.matvec(v);
    CHECK(y[0] == Catch::Approx(0.6 - 1.6));
    CHECK(y[1] == Catch::Approx(0.8 + 1.2));
}

TEST_CASE("shuffle permutes deterministically per seed") {
    std::vector<int> v1{0, 1, 2, 3, 4, 5, 6, 7};
    auto v2 = v1;
    Rng a(9), b(9);
    a.shuffle(v1);
    b.shuffle(v2);
    CHECK(v1 == v2);
    std::sort(v1.begin(), v1.end());
    CHECK(v1 == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}
