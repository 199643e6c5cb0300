#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "snmlab/dataset.hpp"
#include "snmlab/errors.hpp"
#include "snmlab/rng.hpp"

using namespace snmlab;

namespace {

DataConfig small_config() {
    DataConfig dc;
    dc.n = 16;
    dc.d = 24;
    dc.snr = 0.3;
    dc.sigma_p = 2.0;
    dc.p = 0.6;
    dc.s = 0.2;
    dc.seed = 7;
    return dc;
}

} // namespace

TEST_CASE("make_signal hits the target norm exactly") {
    Rng rng(1);
    const Eigen::VectorXd mu = make_signal(500, 0.05, 20.0, rng);
    // 0.05 * 20 * sqrt(500) = sqrt(500)
    CHECK(mu.norm() == doctest::Approx(22.360679774997896).epsilon(1e-12));

    Rng rng2(2);
    const Eigen::VectorXd one_dim = make_signal(1, 1.0, 1.0, rng2);
    CHECK(std::abs(one_dim[0]) == doctest::Approx(1.0).epsilon(1e-15));

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng r(seed);
        const double snr = 0.01 + 0.2 * static_cast<double>(seed);
        const Eigen::VectorXd v = make_signal(37, snr, 3.5, r);
        CHECK(v.squaredNorm() / (snr * snr * 3.5 * 3.5 * 37.0) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }

    Rng r(3);
    CHECK_THROWS_AS(make_signal(0, 1.0, 1.0, r), ConfigError);
    CHECK_THROWS_AS(make_signal(4, -1.0, 1.0, r), ConfigError);
    CHECK_THROWS_AS(make_signal(4, 1.0, 0.0, r), ConfigError);
}

TEST_CASE("sample_noise is orthogonal to the signal") {
    Rng rng(11);
    const Eigen::VectorXd mu = make_signal(500, 0.05, 20.0, rng);
    for (int rep = 0; rep < 100; ++rep) {
        const Eigen::VectorXd xi = sample_noise(mu, 20.0, rng);
        CHECK(std::abs(xi.dot(mu)) <= 1e-9 * xi.norm() * mu.norm());
        // Lemma-style norm bracket: sigma_p^2 d = 2e5, bracket [1e5, 3e5].
        CHECK(xi.squaredNorm() >= 1e5);
        CHECK(xi.squaredNorm() <= 3e5);
    }

    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(10);
    CHECK_THROWS_AS(sample_noise(zero, 1.0, rng), ConfigError);
}

TEST_CASE("sample_noise mean squared norm matches the projected dimension") {
    // Projection removes exactly one degree of freedom: E||xi||^2 = sigma_p^2 (d-1).
    Rng rng(5);
    const int d = 500;
    const double sigma_p = 20.0;
    const Eigen::VectorXd mu = make_signal(d, 0.05, sigma_p, rng);
    double total = 0.0;
    const int draws = 1000;
    for (int rep = 0; rep < draws; ++rep) total += sample_noise(mu, sigma_p, rng).squaredNorm();
    const double expected = sigma_p * sigma_p * (d - 1);
    CHECK(total / draws == doctest::Approx(expected).epsilon(0.03));
}

TEST_CASE("sample_adjacency degenerate probabilities") {
    Rng rng(3);
    Eigen::VectorXd labels = sample_labels(10, LabelMode::Balanced, rng);

    const auto empty = sample_adjacency(labels, 0.0, 0.0, rng);
    CHECK(empty.cast<int>().sum() == 0);

    const auto full = sample_adjacency(labels, 1.0, 1.0, rng);
    for (int i = 0; i < 10; ++i) {
        CHECK(full(i, i) == 0);
        int degree = 1;
        for (int k = 0; k < 10; ++k) degree += full(i, k);
        CHECK(degree == 10);
    }
}

TEST_CASE("sample_adjacency is symmetric with zero diagonal") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const Eigen::VectorXd labels = sample_labels(30, LabelMode::Iid, rng);
        const auto adj = sample_adjacency(labels, 0.7, 0.2, rng);
        for (int i = 0; i < 30; ++i) {
            CHECK(adj(i, i) == 0);
            for (int k = i + 1; k < 30; ++k) CHECK(adj(i, k) == adj(k, i));
        }
    }
}

TEST_CASE("degree bracket at the dense regime") {
    DataConfig dc;
    dc.n = 1000;
    dc.d = 4;
    dc.snr = 0.1;
    dc.sigma_p = 1.0;
    dc.p = 0.5;
    dc.s = 0.08;
    dc.seed = 17;
    const Dataset ds = build_dataset(dc);
    // n(p+s)/4 = 145, 3n(p+s)/4 = 435
    CHECK(ds.degrees.minCoeff() >= 145);
    CHECK(ds.degrees.maxCoeff() <= 435);
}

TEST_CASE("p=s=0 collapses aggregation to the raw data") {
    DataConfig dc = small_config();
    dc.p = 0.0;
    dc.s = 0.0;
    const Dataset ds = build_dataset(dc);
    CHECK(ds.agg_labels == ds.labels);
    CHECK(ds.agg_noise == ds.noise);
    CHECK(ds.degrees.minCoeff() == 1);
    CHECK(ds.degrees.maxCoeff() == 1);
}

TEST_CASE("aggregates match a naive dense D^-1 (A+I) X product") {
    const DataConfig dc = small_config();
    const Dataset ds = build_dataset(dc);
    const int n = dc.n;
    const int d = dc.d;

    // Independent oracle: full 2d-wide feature matrix aggregated by plain loops.
    std::vector<std::vector<double>> features(n, std::vector<double>(2 * d, 0.0));
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) {
            features[i][k] = ds.labels[i] * ds.mu[k];
            features[i][d + k] = ds.noise(i, k);
        }
    }
    for (int i = 0; i < n; ++i) {
        std::vector<double> acc(2 * d, 0.0);
        double degree = 0.0;
        for (int k = 0; k < n; ++k) {
            const double a = (k == i) ? 1.0 : static_cast<double>(ds.adj(i, k));
            degree += a;
            for (int c = 0; c < 2 * d; ++c) acc[c] += a * features[k][c];
        }
        CHECK(degree == static_cast<double>(ds.degrees[i]));
        for (int k = 0; k < d; ++k) {
            const double want_signal = acc[k] / degree;
            const double want_noise = acc[d + k] / degree;
            CHECK(ds.agg_labels[i] * ds.mu[k] ==
                  doctest::Approx(want_signal).epsilon(1e-12));
            CHECK(ds.agg_noise(i, k) == doctest::Approx(want_noise).epsilon(1e-12));
        }
    }
}

TEST_CASE("build_dataset is deterministic in the seed") {
    const DataConfig dc = small_config();
    const Dataset a = build_dataset(dc);
    const Dataset b = build_dataset(dc);
    CHECK(a.mu == b.mu);
    CHECK(a.labels == b.labels);
    CHECK(a.noise == b.noise);
    CHECK(a.adj == b.adj);
    CHECK(a.agg_labels == b.agg_labels);
    CHECK(a.agg_noise == b.agg_noise);

    DataConfig other = dc;
    other.seed = dc.seed + 1;
    const Dataset c = build_dataset(other);
    CHECK(a.noise != c.noise);
}

TEST_CASE("aggregated labels stay in the homophily bracket at the dense regime") {
    DataConfig dc;
    dc.n = 1000;
    dc.d = 4;
    dc.snr = 0.1;
    dc.sigma_p = 1.0;
    dc.p = 0.5;
    dc.s = 0.08;
    dc.seed = 23;
    const Dataset ds = build_dataset(dc);
    const double xi = ds.homophily();
    CHECK(xi == doctest::Approx(0.7241379310344828).epsilon(1e-12));
    for (int i = 0; i < dc.n; ++i) {
        CHECK(std::abs(ds.agg_labels[i]) >= xi / 2.0);
        CHECK(std::abs(ds.agg_labels[i]) <= 1.5 * xi);
        CHECK(ds.agg_labels[i] * ds.labels[i] > 0.0);
    }
}

TEST_CASE("attach_test_node degenerate graphs") {
    DataConfig dc = small_config();
    dc.p = 0.0;
    dc.s = 0.0;
    const Dataset ds = build_dataset(dc);

    Rng rng(99);
    const TestNode node = attach_test_node(ds, -1.0, rng);
    CHECK(node.degree == 1);
    CHECK(node.agg_label == -1.0);
    // Only the self-loop: the aggregated noise is the fresh draw itself,
    // orthogonal to mu.
    CHECK(std::abs(node.agg_noise.dot(ds.mu)) <=
          1e-9 * node.agg_noise.norm() * ds.mu.norm());

    DataConfig full = small_config();
    full.p = 1.0;
    full.s = 1.0;
    const Dataset ds_full = build_dataset(full);
    const TestNode dense = attach_test_node(ds_full, 1.0, rng);
    CHECK(dense.degree == full.n + 1);
    // Balanced labels sum to zero, so y~_test = y_test / (n+1).
    CHECK(dense.agg_label ==
          doctest::Approx(1.0 / (full.n + 1)).epsilon(1e-12));

    CHECK_THROWS_AS(attach_test_node(ds, 0.5, rng), ConfigError);
}

TEST_CASE("attached test nodes inherit the homophily bracket") {
    DataConfig dc;
    dc.n = 1000;
    dc.d = 4;
    dc.snr = 0.1;
    dc.sigma_p = 1.0;
    dc.p = 0.5;
    dc.s = 0.08;
    dc.seed = 31;
    const Dataset ds = build_dataset(dc);
    const double xi = ds.homophily();

    Rng rng(77);
    int inside = 0;
    const int draws = 1000;
    for (int t = 0; t < draws; ++t) {
        const double y = rng.rademacher();
        const TestNode node = attach_test_node(ds, y, rng);
        const double a = std::abs(node.agg_label);
        if (a >= xi / 2.0 && a <= 1.5 * xi) ++inside;
    }
    CHECK(inside >= static_cast<int>(0.99 * draws));
}

TEST_CASE("dataset dump round-trips") {
    DataConfig dc = small_config();
    dc.n = 6;
    dc.d = 5;
    const Dataset ds = build_dataset(dc);
    const std::string dumped = dump_dataset(ds);
    CHECK(dumped.rfind("snm-sbm v1 6 5 ", 0) == 0);

    const Dataset loaded = load_dataset(dumped);
    CHECK(loaded.mu == ds.mu);
    CHECK(loaded.labels == ds.labels);
    CHECK(loaded.noise == ds.noise);
    CHECK(loaded.adj == ds.adj);
    CHECK(loaded.agg_labels == ds.agg_labels);
    CHECK(loaded.agg_noise == ds.agg_noise);
    CHECK(dump_dataset(loaded) == dumped);
}

TEST_CASE("config validation") {
    DataConfig dc = small_config();
    dc.n = 7;  // odd with balanced labels
    CHECK_THROWS_AS(dc.validate(), ConfigError);
    dc.label_mode = LabelMode::Iid;
    CHECK_NOTHROW(dc.validate());

    DataConfig hetero = small_config();
    hetero.p = 0.1;
    hetero.s = 0.4;
    CHECK_THROWS_AS(hetero.validate(), ConfigError);
    hetero.allow_heterophily = true;
    CHECK_NOTHROW(hetero.validate());

    DataConfig bad = small_config();
    bad.p = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = small_config();
    bad.snr = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = small_config();
    bad.n = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}
