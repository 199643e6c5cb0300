#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "snmlab/dataset.hpp"
#include "snmlab/errors.hpp"
#include "snmlab/model.hpp"

using namespace snmlab;

namespace {

// Reference forward pass written independently of the library path.
double naive_forward(const Eigen::MatrixXd& w_plus, const Eigen::MatrixXd& w_minus,
                     const Eigen::VectorXd& p1, const Eigen::VectorXd& p2, int q) {
    auto sigma = [q](double z) { return z > 0.0 ? std::pow(z, q) : 0.0; };
    double total = 0.0;
    for (int r = 0; r < w_plus.rows(); ++r) {
        double zp1 = 0.0, zp2 = 0.0, zm1 = 0.0, zm2 = 0.0;
        for (int k = 0; k < w_plus.cols(); ++k) {
            zp1 += w_plus(r, k) * p1[k];
            zp2 += w_plus(r, k) * p2[k];
            zm1 += w_minus(r, k) * p1[k];
            zm2 += w_minus(r, k) * p2[k];
        }
        total += sigma(zp1) + sigma(zp2) - sigma(zm1) - sigma(zm2);
    }
    return total / static_cast<double>(w_plus.rows());
}

} // namespace

TEST_CASE("polynomial relu values and derivative") {
    CHECK(act(-1.5, 3) == 0.0);
    CHECK(act_prime(-1.5, 3) == 0.0);
    CHECK(act(0.0, 3) == 0.0);
    CHECK(act_prime(0.0, 3) == 0.0);
    CHECK(act(2.0, 3) == 8.0);
    CHECK(act_prime(2.0, 3) == 12.0);
    CHECK(act(2.0, 4) == 16.0);
    CHECK(act_prime(2.0, 4) == 32.0);

    // Finite-difference oracle at z = 0.7, q = 3: derivative 3*0.49 = 1.47.
    const double h = 1e-6;
    const double fd = (act(0.7 + h, 3) - act(0.7 - h, 3)) / (2.0 * h);
    CHECK(act_prime(0.7, 3) == doctest::Approx(1.47).epsilon(1e-12));
    CHECK(fd == doctest::Approx(act_prime(0.7, 3)).epsilon(1e-6));
}

TEST_CASE("forward_pair hand-computed example") {
    Eigen::MatrixXd w_plus(1, 2);
    w_plus << 1.0, 0.0;
    Eigen::MatrixXd w_minus = Eigen::MatrixXd::Zero(1, 2);
    Eigen::VectorXd p1(2), p2(2);
    p1 << 2.0, 0.0;
    p2 << -1.0, 5.0;
    CHECK(forward_pair(w_plus, w_minus, p1, p2, 3) == 8.0);

    Eigen::VectorXd bad(3);
    CHECK_THROWS_AS(forward_pair(w_plus, w_minus, bad, p2, 3), ShapeError);
}

TEST_CASE("zero weights produce zero output") {
    const Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(4, 6);
    Rng rng(1);
    for (int rep = 0; rep < 5; ++rep) {
        Eigen::VectorXd p1(6), p2(6);
        for (int k = 0; k < 6; ++k) {
            p1[k] = rng.gaussian();
            p2[k] = rng.gaussian();
        }
        CHECK(forward_pair(zeros, zeros, p1, p2, 3) == 0.0);
    }
}

TEST_CASE("swapping banks negates the output") {
    Rng rng(2);
    Eigen::MatrixXd w_plus(3, 5), w_minus(3, 5);
    Eigen::VectorXd p1(5), p2(5);
    for (int rep = 0; rep < 10; ++rep) {
        for (int r = 0; r < 3; ++r)
            for (int k = 0; k < 5; ++k) {
                w_plus(r, k) = rng.gaussian();
                w_minus(r, k) = rng.gaussian();
            }
        for (int k = 0; k < 5; ++k) {
            p1[k] = rng.gaussian();
            p2[k] = rng.gaussian();
        }
        const double f = forward_pair(w_plus, w_minus, p1, p2, 3);
        const double swapped = forward_pair(w_minus, w_plus, p1, p2, 3);
        CHECK(swapped == doctest::Approx(-f).epsilon(1e-12));
    }
}

TEST_CASE("homogeneity: scaling weights scales outputs by c^q") {
    Rng rng(3);
    for (int q : {3, 4}) {
        Eigen::MatrixXd w_plus(2, 4), w_minus(2, 4);
        Eigen::VectorXd p1(4), p2(4);
        for (int r = 0; r < 2; ++r)
            for (int k = 0; k < 4; ++k) {
                w_plus(r, k) = rng.gaussian();
                w_minus(r, k) = rng.gaussian();
            }
        for (int k = 0; k < 4; ++k) {
            p1[k] = rng.gaussian();
            p2[k] = rng.gaussian();
        }
        const double c = 1.7;
        const double f = forward_pair(w_plus, w_minus, p1, p2, q);
        const double scaled = forward_pair(c * w_plus, c * w_minus, p1, p2, q);
        CHECK(scaled == doctest::Approx(std::pow(c, q) * f).epsilon(1e-12));
    }
}

TEST_CASE("neuron permutation within banks leaves the output unchanged") {
    Rng rng(4);
    Eigen::MatrixXd w_plus(5, 7), w_minus(5, 7);
    Eigen::VectorXd p1(7), p2(7);
    for (int r = 0; r < 5; ++r)
        for (int k = 0; k < 7; ++k) {
            w_plus(r, k) = rng.gaussian();
            w_minus(r, k) = rng.gaussian();
        }
    for (int k = 0; k < 7; ++k) {
        p1[k] = rng.gaussian();
        p2[k] = rng.gaussian();
    }
    const double f = forward_pair(w_plus, w_minus, p1, p2, 3);

    std::vector<int> perm = {4, 2, 0, 3, 1};
    Eigen::MatrixXd shuffled_plus(5, 7), shuffled_minus(5, 7);
    for (int r = 0; r < 5; ++r) {
        shuffled_plus.row(r) = w_plus.row(perm[static_cast<std::size_t>(r)]);
        shuffled_minus.row(r) = w_minus.row(perm[static_cast<std::size_t>(r)]);
    }
    CHECK(forward_pair(shuffled_plus, shuffled_minus, p1, p2, 3) ==
          doctest::Approx(f).epsilon(1e-13));
}

TEST_CASE("forward_cnn and forward_gcn coincide on an edgeless graph") {
    DataConfig dc;
    dc.n = 8;
    dc.d = 12;
    dc.snr = 0.4;
    dc.sigma_p = 1.5;
    dc.p = 0.0;
    dc.s = 0.0;
    dc.seed = 5;
    const Dataset ds = build_dataset(dc);
    Rng rng(6);
    const ModelParams params = init_weights(3, dc.d, 0.05, 3, rng);
    for (int i = 0; i < dc.n; ++i)
        CHECK(forward_cnn(params, ds, i) == forward_gcn(params, ds, i));

    CHECK_THROWS_AS(forward_cnn(params, ds, dc.n), ShapeError);
    CHECK_THROWS_AS(forward_gcn(params, ds, -1), ShapeError);
}

TEST_CASE("forward_gcn matches a dense-matrix reference computation") {
    DataConfig dc;
    dc.n = 8;
    dc.d = 16;
    dc.snr = 0.5;
    dc.sigma_p = 2.0;
    dc.p = 0.7;
    dc.s = 0.3;
    dc.seed = 9;
    const Dataset ds = build_dataset(dc);
    Rng rng(10);
    const ModelParams params = init_weights(4, dc.d, 0.2, 3, rng);

    for (int i = 0; i < dc.n; ++i) {
        // Aggregate the full feature matrix naively, then run the naive forward.
        Eigen::VectorXd signal_patch = Eigen::VectorXd::Zero(dc.d);
        Eigen::VectorXd noise_patch = Eigen::VectorXd::Zero(dc.d);
        double degree = 0.0;
        for (int k = 0; k < dc.n; ++k) {
            const double a = (k == i) ? 1.0 : static_cast<double>(ds.adj(i, k));
            degree += a;
            signal_patch += a * ds.labels[k] * ds.mu;
            noise_patch += a * ds.noise.row(k).transpose();
        }
        signal_patch /= degree;
        noise_patch /= degree;
        const double want =
            naive_forward(params.w_plus, params.w_minus, signal_patch, noise_patch, 3);
        CHECK(forward_gcn(params, ds, i) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("init_weights moments and determinism") {
    Rng rng(123);
    const ModelParams params = init_weights(1000, 1000, 0.05, 3, rng);
    // 2 * 10^6 entries; the empirical variance must sit within 1%.
    const double sum_sq = params.w_plus.squaredNorm() + params.w_minus.squaredNorm();
    const double mean = (params.w_plus.sum() + params.w_minus.sum()) / 2e6;
    const double var = sum_sq / 2e6 - mean * mean;
    CHECK(var == doctest::Approx(0.05 * 0.05).epsilon(0.01));

    Rng rng_a(7);
    Rng rng_b(7);
    const ModelParams a = init_weights(4, 10, 1e-3, 3, rng_a);
    const ModelParams b = init_weights(4, 10, 1e-3, 3, rng_b);
    CHECK(a.w_plus == b.w_plus);
    CHECK(a.w_minus == b.w_minus);

    Rng rng_c(8);
    CHECK_THROWS_AS(init_weights(4, 10, 0.0, 3, rng_c), ConfigError);
    CHECK_THROWS_AS(init_weights(0, 10, 1.0, 3, rng_c), ConfigError);
}

TEST_CASE("initialization inner products against mu respect the tail bound") {
    // |<w0, mu>| <= sqrt(2 log(8m/delta)) sigma0 ||mu|| in >= 19/20 seeded trials.
    const int m = 20;
    const double sigma0 = 1e-3;
    const double delta = 0.01;
    Rng data_rng(42);
    const Eigen::VectorXd mu = make_signal(500, 0.05, 20.0, data_rng);
    const double bound = std::sqrt(2.0 * std::log(8.0 * m / delta)) * sigma0 * mu.norm();

    int ok = 0;
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        Rng rng(mix_seed(1000, trial));
        const ModelParams params = init_weights(m, 500, sigma0, 3, rng);
        const double worst = std::max((params.w_plus * mu).cwiseAbs().maxCoeff(),
                                      (params.w_minus * mu).cwiseAbs().maxCoeff());
        if (worst <= bound) ++ok;
    }
    CHECK(ok >= 19);
}

TEST_CASE("initialization responds to aggregated noise at the expected scale") {
    // max_r j <w0_{j,r}, xi~_i> >= sigma0 sigma_p sqrt(d/(n(p+s)))/4, statistically.
    DataConfig dc;
    dc.n = 250;
    dc.d = 500;
    dc.snr = 0.05;
    dc.sigma_p = 20.0;
    dc.p = 0.5;
    dc.s = 0.08;
    const double sigma0 = 1e-3;
    const double lower =
        sigma0 * dc.sigma_p * std::sqrt(dc.d / (dc.n * (dc.p + dc.s))) / 4.0;

    int ok = 0;
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        dc.seed = mix_seed(55, trial);
        const Dataset ds = build_dataset(dc);
        Rng rng(mix_seed(56, trial));
        const ModelParams params = init_weights(20, dc.d, sigma0, 3, rng);
        bool all_ok = true;
        for (int j = 0; j < 2 && all_ok; ++j) {
            const Eigen::MatrixXd dots =
                bank_sign(j) * (params.bank(j) * ds.agg_noise.transpose());
            for (int i = 0; i < dc.n; ++i) {
                if (dots.col(i).maxCoeff() < lower) {
                    all_ok = false;
                    break;
                }
            }
        }
        if (all_ok) ++ok;
    }
    CHECK(ok >= 19);
}
