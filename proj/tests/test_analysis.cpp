#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "disent/analysis.hpp"

using namespace disent;

namespace {

ScoreRow row(const std::string& enc, const std::string& ds, const std::string& method,
             const std::string& hyper, std::uint64_t seed, const std::string& metric,
             double value, int n = 1000) {
    return ScoreRow{enc, ds, method, hyper, seed, metric, n, value};
}

FactorCodeMatrix unit_matrix(int k, int d, std::initializer_list<double> vals) {
    FactorCodeMatrix m;
    m.tag = MatrixTag::gbt;
    m.values = Matrix(k, d);
    auto it = vals.begin();
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < d; ++c) m.values(r, c) = *it++;
    for (int r = 0; r < k; ++r) m.factor_names.push_back("factor_" + std::to_string(r));
    return m;
}

} // namespace

TEST_CASE("score table validates values and uniqueness") {
    ScoreTable t;
    t.add(row("e0", "d0", "id", "h0", 0, "mig", 0.5));
    CHECK_THROWS_AS(t.add(row("e1", "d0", "id", "h0", 0, "mig",
                              std::numeric_limits<double>::quiet_NaN())),
                    data_error);
    CHECK_THROWS_AS(t.add(row("e1", "d0", "id", "h0", 0, "mig", 1.0, -1)), argument_error);

    t.add(row("e0", "d0", "id", "h0", 1, "mig", 0.6));
    t.add(row("e0", "d1", "id", "h0", 0, "mig", 0.7)); // other dataset, same key otherwise
    CHECK_NOTHROW(t.validate_unique());
    t.add(row("e0", "d0", "id", "h0", 1, "mig", 0.9));
    CHECK_THROWS_AS(t.validate_unique(), data_error);
}

TEST_CASE("score table sorts rows deterministically") {
    ScoreTable t;
    t.add(row("b", "d0", "m", "h", 0, "mig", 0.1));
    t.add(row("a", "d0", "m", "h", 1, "sap", 0.2));
    t.add(row("a", "d0", "m", "h", 0, "mig", 0.3));
    t.sort_rows();
    CHECK(t.rows()[0].encoder_id == "a");
    CHECK(t.rows()[0].metric_name == "mig");
    CHECK(t.rows()[1].metric_name == "sap");
    CHECK(t.rows()[2].encoder_id == "b");
}

TEST_CASE("downstream identity accuracy saturates with sample size") {
    FactorSpace space = FactorSpace::from_cardinalities({3, 4});
    OracleEncoder enc = identity_encoder(space);
    Rng rng(11);
    DownstreamResult r =
        downstream(space, enc, {10, 100, 1000}, DownstreamLearner::logistic_cv, 1500, rng);

    REQUIRE(r.mean_accuracy.size() == 3);
    CHECK(r.mean_accuracy[2] >= 0.99);
    for (std::size_t i = 1; i < r.mean_accuracy.size(); ++i) {
        CHECK(r.mean_accuracy[i] >= r.mean_accuracy[i - 1] - 0.03);
    }
}

TEST_CASE("downstream on constant codes stays near chance") {
    FactorSpace space = FactorSpace::from_cardinalities({4, 4});
    OracleEncoder enc = collapsed_encoder(space, 2, /*keep_factors=*/false);
    Rng rng(5);
    DownstreamResult r =
        downstream(space, enc, {200}, DownstreamLearner::logistic_cv, 2000, rng);
    CHECK(std::abs(r.mean_accuracy[0] - 0.25) <= 0.05);
}

TEST_CASE("downstream records majority fallback at degenerate sizes") {
    FactorSpace space = FactorSpace::from_cardinalities({3, 4});
    OracleEncoder enc = identity_encoder(space);
    Rng rng(3);
    DownstreamResult r = downstream(space, enc, {1, 50}, DownstreamLearner::gbt, 400, rng);
    CHECK(r.fallback[0][0]);
    CHECK(r.fallback[0][1]);
    CHECK_FALSE(r.fallback[1][0]);
    CHECK(r.mean_accuracy[0] < r.mean_accuracy[1]);
    CHECK(r.mean_accuracy[1] >= 0.9);
}

TEST_CASE("downstream validates arguments") {
    FactorSpace space = FactorSpace::from_cardinalities({3, 4});
    OracleEncoder enc = identity_encoder(space);
    Rng rng(1);
    CHECK_THROWS_AS(downstream(space, enc, {}, DownstreamLearner::gbt, 100, rng), argument_error);
    CHECK_THROWS_AS(downstream(space, enc, {0}, DownstreamLearner::gbt, 100, rng), argument_error);
    CHECK_THROWS_AS(downstream(space, enc, {10}, DownstreamLearner::gbt, 0, rng), argument_error);
}

TEST_CASE("statistical efficiency is the 100 over 10000 accuracy ratio") {
    DownstreamResult r;
    r.sizes = {100, 10000};
    r.mean_accuracy = {0.4, 0.8};
    CHECK(statistical_efficiency(r) == Catch::Approx(0.5).margin(1e-15));

    r.mean_accuracy = {0.4, 0.0};
    CHECK_THROWS_AS(statistical_efficiency(r), degenerate_error);

    r.sizes = {100, 1000};
    r.mean_accuracy = {0.4, 0.8};
    CHECK_THROWS_AS(statistical_efficiency(r), argument_error);
}

TEST_CASE("rank correlation recovers duplicated and negated columns") {
    ScoreTable t;
    Rng rng(77);
    for (int e = 0; e < 10; ++e) {
        for (std::uint64_t s = 0; s < 3; ++s) {
            double v = rng.uniform();
            std::string id = "m" + std::to_string(e);
            t.add(row(id, "d0", "method", "h", s, "a", v));
            t.add(row(id, "d0", "method", "h", s, "b", v));
            t.add(row(id, "d0", "method", "h", s, "c", -v));
        }
    }
    CorrelationTable c = rank_corr_table(t, CorrAxis::metric_vs_metric);
    REQUIRE(c.row_names == std::vector<std::string>{"a", "b", "c"});
    CHECK(c.rho(0, 1) == Catch::Approx(1.0).margin(1e-12));
    CHECK(c.rho(0, 2) == Catch::Approx(-1.0).margin(1e-12));
    CHECK(c.rho(1, 2) == Catch::Approx(-1.0).margin(1e-12));
    CHECK(c.rho(0, 0) == Catch::Approx(1.0).margin(1e-12));
    for (auto& mrow : c.missing)
        for (bool m : mrow) CHECK_FALSE(m);
}

TEST_CASE("rank correlation of independent scores is near zero") {
    ScoreTable t;
    Rng rng(123);
    for (int e = 0; e < 200; ++e) {
        std::string id = "m" + std::to_string(e);
        t.add(row(id, "d0", "method", "h", 0, "a", rng.uniform()));
        t.add(row(id, "d0", "method", "h", 0, "b", rng.uniform()));
    }
    CorrelationTable c = rank_corr_table(t, CorrAxis::metric_vs_metric);
    CHECK(std::abs(c.rho(0, 1)) < 0.2);
}

TEST_CASE("rank correlation marks sparse cells missing") {
    ScoreTable t;
    t.add(row("m0", "d0", "method", "h", 0, "a", 0.1));
    t.add(row("m1", "d0", "method", "h", 0, "a", 0.2));
    t.add(row("m0", "d0", "method", "h", 0, "b", 0.3)); // only one shared model with "a"
    CorrelationTable c = rank_corr_table(t, CorrAxis::metric_vs_metric);
    CHECK(c.missing[0][1]);
    CHECK(std::isnan(c.rho(0, 1)));
    CHECK_FALSE(c.missing[0][0]);
}

TEST_CASE("rank correlation dataset axis matches a metric across datasets") {
    ScoreTable t;
    Rng rng(9);
    for (int e = 0; e < 12; ++e) {
        double v = rng.uniform();
        std::string id = "m" + std::to_string(e);
        t.add(row(id, "d0", "method", "h", 0, "mig", v));
        t.add(row(id, "d1", "method", "h", 0, "mig", v * 0.5 + 0.1)); // same ranking
        t.add(row(id, "d0", "method", "h", 0, "sap", 1.0 - v));
        t.add(row(id, "d1", "method", "h", 0, "sap", rng.uniform()));
    }
    CorrelationTable c = rank_corr_table(t, CorrAxis::metric_vs_dataset);
    REQUIRE(c.col_names == std::vector<std::string>{"d0|d1"});
    REQUIRE(c.row_names == std::vector<std::string>{"mig", "sap"});
    CHECK(c.rho(0, 0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(std::abs(c.rho(1, 0)) < 1.0);

    ScoreTable single;
    single.add(row("m0", "d0", "method", "h", 0, "a", 0.5));
    CHECK_THROWS_AS(rank_corr_table(single, CorrAxis::metric_vs_dataset), argument_error);
}

TEST_CASE("rank correlation splits unsupervised and downstream axes") {
    ScoreTable t;
    Rng rng(31);
    for (int e = 0; e < 8; ++e) {
        double v = rng.uniform();
        std::string id = "m" + std::to_string(e);
        t.add(row(id, "d0", "method", "h", 0, "tc_mean", v));
        t.add(row(id, "d0", "method", "h", 0, "mig", 1.0 - v));
        t.add(row(id, "d0", "method", "h", 0, "downstream_gbt_100", v));
    }
    CorrelationTable u = rank_corr_table(t, CorrAxis::unsupervised_vs_metric);
    REQUIRE(u.row_names == std::vector<std::string>{"tc_mean"});
    REQUIRE(u.col_names.size() == 2); // mig and the downstream column
    CHECK(u.rho(0, 1) == Catch::Approx(-1.0).margin(1e-12));

    CorrelationTable dn = rank_corr_table(t, CorrAxis::metric_vs_downstream);
    REQUIRE(dn.col_names == std::vector<std::string>{"downstream_gbt_100"});
    REQUIRE(dn.row_names == std::vector<std::string>{"mig", "tc_mean"});
    CHECK(dn.rho(1, 0) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("independent groups curve matches the worked example") {
    FactorCodeMatrix m = unit_matrix(2, 2, {0.9, 0.1, 0.2, 0.8});
    auto curve = independent_groups_curve(m, {0.5, 0.15});
    REQUIRE(curve.size() == 2);
    CHECK(curve[0].components_gt_one == 2);
    CHECK(curve[0].factors_connected == 2);
    CHECK(curve[1].components_gt_one == 1);
    CHECK(curve[1].factors_connected == 2);
}

TEST_CASE("independent groups curve is piecewise constant between edge weights") {
    FactorCodeMatrix m = unit_matrix(2, 2, {0.9, 0.1, 0.2, 0.8});
    // distinct weights 0.1 0.2 0.8 0.9; probe inside each open interval
    auto a = independent_groups_curve(m, {0.25, 0.5, 0.79});
    CHECK(a[0].components_gt_one == a[1].components_gt_one);
    CHECK(a[1].components_gt_one == a[2].components_gt_one);
    auto b = independent_groups_curve(m, {0.11, 0.15, 0.199});
    CHECK(b[0].components_gt_one == b[1].components_gt_one);
    CHECK(b[1].components_gt_one == b[2].components_gt_one);
    // breakpoint exactly at an edge weight: edges >= t keeps the 0.2 edge
    auto at = independent_groups_curve(m, {0.2, 0.2000001});
    CHECK(at[0].components_gt_one == 1);
    CHECK(at[1].components_gt_one == 2);
}

TEST_CASE("independent groups curve bounds and validation") {
    FactorCodeMatrix m = unit_matrix(3, 4, {0.9, 0.0, 0.1, 0.0, 0.0, 0.8, 0.2, 0.0,
                                            0.1, 0.0, 0.0, 0.7});
    for (const auto& p : independent_groups_curve(m, {0.05, 0.15, 0.5, 0.95})) {
        CHECK(p.components_gt_one <= (3 + 4) / 2);
        CHECK(p.factors_connected <= 3);
        CHECK(p.components_gt_one >= 0);
    }
    FactorCodeMatrix bad = unit_matrix(2, 2, {0.9, 0.1, 1.2, 0.8});
    CHECK_THROWS_AS(independent_groups_curve(bad, {0.5}), argument_error);
    FactorCodeMatrix zero = unit_matrix(2, 2, {0.0, 0.0, 0.0, 0.0});
    CHECK_THROWS_AS(independent_groups_curve(zero, {0.5}), degenerate_error);
    CHECK_THROWS_AS(independent_groups_curve(m, {}), argument_error);
}

TEST_CASE("dendrogram merges the worked example at exactly 0.2") {
    FactorCodeMatrix m = unit_matrix(2, 2, {0.9, 0.1, 0.2, 0.8});
    Dendrogram d = dendrogram(m);
    REQUIRE(d.merges.size() == 1);
    CHECK(d.merges[0].threshold == 0.2);
    CHECK(d.merges[0].factor_a == 0);
    CHECK(d.merges[0].factor_b == 1);
    CHECK(d.pair_threshold(0, 1) == 0.2);
    CHECK(d.pair_threshold(1, 0) == 0.2);
    CHECK(d.pair_threshold(0, 0) == 0.0);
}

TEST_CASE("dendrogram on a diagonal matrix never merges") {
    FactorCodeMatrix m = unit_matrix(2, 2, {0.9, 0.0, 0.0, 0.8});
    Dendrogram d = dendrogram(m);
    CHECK(d.merges.empty());
    CHECK(d.pair_threshold(0, 1) == 0.0);
}

TEST_CASE("dendrogram thresholds are nonincreasing along merges") {
    FactorCodeMatrix m = unit_matrix(3, 3, {1.0, 0.0, 0.0, 0.6, 0.5, 0.0, 0.0, 0.3, 0.2});
    Dendrogram d = dendrogram(m);
    REQUIRE(d.merges.size() == 2);
    CHECK(d.merges[0].threshold == 0.6);
    CHECK(d.merges[1].threshold == 0.3);
    CHECK(d.pair_threshold(0, 1) == 0.6);
    CHECK(d.pair_threshold(0, 2) == 0.3);
    CHECK(d.pair_threshold(1, 2) == 0.3);
    for (std::size_t i = 1; i < d.merges.size(); ++i) {
        CHECK(d.merges[i].threshold <= d.merges[i - 1].threshold);
    }
}

TEST_CASE("confusion thresholds average dendrograms") {
    Dendrogram a = dendrogram(unit_matrix(2, 2, {0.9, 0.1, 0.2, 0.8}));
    Dendrogram b = dendrogram(unit_matrix(2, 2, {0.9, 0.4, 0.1, 0.8}));
    Matrix c = confusion_thresholds({a, b});
    CHECK(c(0, 1) == Catch::Approx(0.3).margin(1e-15));
    CHECK(c(1, 0) == c(0, 1));
    CHECK(c(0, 0) == 0.0);

    Dendrogram other = dendrogram(unit_matrix(3, 3, {1.0, 0.0, 0.0, 0.6, 0.5, 0.0,
                                                     0.0, 0.3, 0.2}));
    CHECK_THROWS_AS(confusion_thresholds({a, other}), argument_error);
    CHECK_THROWS_AS(confusion_thresholds({}), argument_error);
}

TEST_CASE("variance explained separates method effects from noise") {
    ScoreTable pure, noisy;
    Rng rng(13);
    for (int s = 0; s < 20; ++s) {
        for (int mth = 0; mth < 3; ++mth) {
            std::string method = "method" + std::to_string(mth);
            std::string hyper = "h" + std::to_string(s % 2);
            std::string id = method + "_" + hyper + "_" + std::to_string(s);
            pure.add(row(id, "d0", method, hyper, s, "mig", 0.2 * mth));
            noisy.add(row(id, "d0", method, hyper, s, "mig", rng.uniform()));
        }
    }
    VarianceExplained vp = variance_explained(pure, VarianceDesign::method);
    CHECK(vp.r2(0, 0) == Catch::Approx(1.0).margin(1e-12));

    VarianceExplained vn = variance_explained(noisy, VarianceDesign::method);
    CHECK(vn.r2(0, 0) < 0.2);

    VarianceExplained vn2 = variance_explained(noisy, VarianceDesign::method_by_hyperparam);
    CHECK(vn2.r2(0, 0) >= vn.r2(0, 0) - 1e-9);
}

TEST_CASE("variance explained rejects a single predictor group") {
    ScoreTable t;
    t.add(row("a", "d0", "only", "h", 0, "mig", 0.5));
    t.add(row("b", "d0", "only", "h", 1, "mig", 0.6));
    CHECK_THROWS_AS(variance_explained(t, VarianceDesign::method), degenerate_error);
    CHECK_THROWS_AS(variance_explained(ScoreTable{}, VarianceDesign::method), argument_error);
}

namespace {

ScoreTable null_transfer_table(Rng& rng, int n_settings = 5, int n_seeds = 10) {
    ScoreTable t;
    for (const std::string& ds : {"d0", "d1"}) {
        for (const std::string& metric : {"mig", "sap"}) {
            for (int s = 0; s < n_settings; ++s) {
                for (std::uint64_t e = 0; e < static_cast<std::uint64_t>(n_seeds); ++e) {
                    std::string hyper = "h" + std::to_string(s);
                    t.add(row("mdl_" + hyper + "_" + std::to_string(e), ds, "method", hyper, e,
                              metric, rng.uniform()));
                }
            }
        }
    }
    return t;
}

} // namespace

TEST_CASE("transfer protocol is a coin flip on exchangeable scores") {
    Rng data_rng(2024);
    ScoreTable t = null_transfer_table(data_rng);
    Rng rng(7);
    TransferCells c = transfer_protocol(t, 10000, rng);
    CHECK(std::abs(c.same_metric_same_dataset - 0.5) <= 0.02);
    CHECK(std::abs(c.same_metric_diff_dataset - 0.5) <= 0.02);
    CHECK(std::abs(c.diff_metric_same_dataset - 0.5) <= 0.02);
    CHECK(std::abs(c.diff_metric_diff_dataset - 0.5) <= 0.02);
}

TEST_CASE("transfer protocol is invariant under monotone score transforms") {
    Rng data_rng(99);
    ScoreTable t = null_transfer_table(data_rng, 4, 5);
    ScoreTable cubed;
    for (ScoreRow r : t.rows()) {
        r.value = r.value * r.value * r.value;
        cubed.add(r);
    }
    Rng ra(42), rb(42);
    TransferCells a = transfer_protocol(t, 2000, ra);
    TransferCells b = transfer_protocol(cubed, 2000, rb);
    CHECK(a.same_metric_same_dataset == b.same_metric_same_dataset);
    CHECK(a.same_metric_diff_dataset == b.same_metric_diff_dataset);
    CHECK(a.diff_metric_same_dataset == b.diff_metric_same_dataset);
    CHECK(a.diff_metric_diff_dataset == b.diff_metric_diff_dataset);
}

TEST_CASE("transfer protocol rewards a consistently informative ranking") {
    // one setting dominates every metric and dataset; picking it must beat
    // the random baseline far more often than chance
    ScoreTable t;
    Rng noise(5);
    for (const std::string& ds : {"d0", "d1"}) {
        for (const std::string& metric : {"mig", "sap"}) {
            for (int s = 0; s < 4; ++s) {
                for (std::uint64_t e = 0; e < 6; ++e) {
                    std::string hyper = "h" + std::to_string(s);
                    double v = 0.2 * s + 0.01 * noise.uniform();
                    t.add(row("mdl_" + hyper + "_" + std::to_string(e), ds, "method", hyper, e,
                              metric, v));
                }
            }
        }
    }
    Rng rng(3);
    TransferCells c = transfer_protocol(t, 4000, rng);
    CHECK(c.same_metric_same_dataset > 0.8);
    CHECK(c.diff_metric_diff_dataset > 0.8);
}

TEST_CASE("transfer protocol validates the score grid") {
    Rng data_rng(1);
    ScoreTable t = null_transfer_table(data_rng, 3, 4);
    Rng rng(2);
    CHECK_THROWS_AS(transfer_protocol(t, 0, rng), argument_error);

    ScoreTable holes = t;
    holes.add(row("extra", "d0", "method", "h_extra", 99, "mig", 0.5));
    CHECK_THROWS_AS(transfer_protocol(holes, 100, rng), data_error);

    ScoreTable one_ds;
    for (const auto& r : t.rows())
        if (r.dataset_id == "d0") one_ds.add(r);
    CHECK_THROWS_AS(transfer_protocol(one_ds, 100, rng), argument_error);

    ScoreTable dup = t;
    dup.add(t.rows()[0]);
    CHECK_THROWS_AS(transfer_protocol(dup, 100, rng), data_error);
}

TEST_CASE("reliability with identical seeds is a perfect rank match") {
    FactorSpace space = FactorSpace::from_cardinalities({3, 4});
    std::vector<OracleEncoder> zoo;
    zoo.push_back(identity_encoder(space));
    for (int i = 0; i < 9; ++i) {
        zoo.push_back(rotation_encoder(space, 0.05 + 0.045 * i));
    }
    ReliabilityResult same = reliability(space, zoo, {"mig"}, 400, 123, 123);
    REQUIRE(same.metric_names == std::vector<std::string>{"mig"});
    CHECK(same.rho[0] == Catch::Approx(1.0).margin(1e-12));

    ReliabilityResult diff = reliability(space, zoo, {"mig"}, 400, 123, 456);
    CHECK(diff.rho[0] >= -1.0);
    CHECK(diff.rho[0] <= 1.0);
    // mig separates this zoo cleanly even at a small budget
    CHECK(diff.rho[0] > 0.5);
}

TEST_CASE("reliability validates its inputs") {
    FactorSpace space = FactorSpace::from_cardinalities({3, 4});
    std::vector<OracleEncoder> few = {identity_encoder(space)};
    CHECK_THROWS_AS(reliability(space, few, {"mig"}, 400, 1, 2), argument_error);

    std::vector<OracleEncoder> zoo;
    for (int i = 0; i < 10; ++i) zoo.push_back(rotation_encoder(space, 0.05 + 0.04 * i));
    CHECK_THROWS_AS(reliability(space, zoo, {}, 400, 1, 2), argument_error);
    CHECK_THROWS_AS(reliability(space, zoo, {"mig"}, 4, 1, 2), argument_error);
}
