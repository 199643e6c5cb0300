#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "snmlab/decomposition.hpp"
#include "snmlab/errors.hpp"
#include "snmlab/trainer.hpp"

using namespace snmlab;

namespace {

DataConfig bench_config(std::uint64_t seed) {
    // Stable 50-step training at q = 3 needs a tame noise scale here.
    DataConfig dc;
    dc.n = 60;
    dc.d = 400;
    dc.snr = 0.5;
    dc.sigma_p = 1.0;
    dc.p = 0.5;
    dc.s = 0.08;
    dc.seed = seed;
    return dc;
}

// Normalized infinity distance between two coefficient arrays.
double rel_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const double scale =
        std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-30});
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

} // namespace

TEST_CASE("init_coeffs is all zeros and reconstructs W0 exactly") {
    const CoeffState state = init_coeffs(3, 7);
    CHECK(state.gamma.cwiseAbs().maxCoeff() == 0.0);
    CHECK(state.rho_bar[0].cwiseAbs().maxCoeff() == 0.0);
    CHECK(state.rho_under[1].cwiseAbs().maxCoeff() == 0.0);

    const CoeffSummary s = summary(state);
    CHECK(s.max_gamma_plus == 0.0);
    CHECK(s.max_gamma_minus == 0.0);
    CHECK(s.max_abs_rho == 0.0);

    const Dataset ds = build_dataset(bench_config(1));
    Rng rng(2);
    const ModelParams w0 = init_weights(3, ds.dim(), 1e-3, 3, rng);
    CoeffState sized = init_coeffs(3, ds.n());
    const auto [hat_plus, hat_minus] =
        reconstruct_weights(sized, w0.w_plus, w0.w_minus, ds.mu, ds.noise);
    CHECK(hat_plus == w0.w_plus);
    CHECK(hat_minus == w0.w_minus);

    CHECK_THROWS_AS(init_coeffs(0, 5), ConfigError);
}

TEST_CASE("projection oracle on the unmoved weights returns zeros") {
    const Dataset ds = build_dataset(bench_config(3));
    Rng rng(4);
    const ModelParams w0 = init_weights(4, ds.dim(), 1e-3, 3, rng);
    const ProjectedCoeffs proj = project_coeffs(w0, w0, ds.mu, ds.noise);
    CHECK(proj.gamma_hat.cwiseAbs().maxCoeff() == 0.0);
    CHECK(proj.rho_hat[0].cwiseAbs().maxCoeff() == 0.0);
    CHECK(proj.max_rel_residual == 0.0);
    CHECK(proj.gram_condition < 1e10);
}

TEST_CASE("projection oracle recovers a planted signal coefficient") {
    const Dataset ds = build_dataset(bench_config(5));
    Rng rng(6);
    const ModelParams w0 = init_weights(4, ds.dim(), 1e-3, 3, rng);
    ModelParams moved = w0;
    // Plant j * 3 * mu/||mu||^2 in one neuron of each bank: gamma = 3 for both.
    moved.w_plus.row(1) += 3.0 * ds.mu.transpose() / ds.mu_norm_sq;
    moved.w_minus.row(2) -= 3.0 * ds.mu.transpose() / ds.mu_norm_sq;

    const ProjectedCoeffs proj = project_coeffs(moved, w0, ds.mu, ds.noise);
    CHECK(proj.gamma_hat(0, 1) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(proj.gamma_hat(1, 2) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(proj.gamma_hat(0, 0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
    for (int j = 0; j < 2; ++j)
        CHECK(proj.rho_hat[j].cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("projection requires an over-complete dimension") {
    DataConfig dc = bench_config(7);
    dc.n = 60;
    dc.d = 50;  // d <= n+1
    const Dataset ds = build_dataset(dc);
    Rng rng(8);
    const ModelParams w0 = init_weights(2, ds.dim(), 1e-3, 3, rng);
    CHECK_THROWS_AS(project_coeffs(w0, w0, ds.mu, ds.noise), ConfigError);
}

TEST_CASE("lockstep iteration reconstructs the gradient-descent trajectory") {
    // 50 steps on n=60, d=400, m=8, q=3, both models: residual <= 1e-6 at every
    // step and the projection oracle agrees with the iterated coefficients.
    const Dataset ds = build_dataset(bench_config(9));
    for (ModelKind kind : {ModelKind::Cnn, ModelKind::Gcn}) {
        Rng rng(10);
        const ModelParams w0 = init_weights(8, ds.dim(), 1e-3, 3, rng);
        ModelParams params = w0;
        CoeffState state = init_coeffs(8, ds.n());
        const double eta = 0.03;

        for (int step = 0; step < 50; ++step) {
            REQUIRE(params.all_finite());
            const BatchEval eval = batch_eval(params, ds, kind);
            const GradPair grad = kind == ModelKind::Cnn ? cnn_gradient(params, ds)
                                                         : gcn_gradient(params, ds);
            const CoeffState before = state;
            if (kind == ModelKind::Cnn)
                step_coeffs_cnn(state, params, ds, eval.loss_derivs, eta);
            else
                step_coeffs_gcn(state, params, ds, eval.loss_derivs, eta);

            // unconditional sign structure
            for (int j = 0; j < 2; ++j) {
                CHECK(((state.rho_bar[j] - before.rho_bar[j]).array() >= 0.0).all());
                CHECK(((state.rho_under[j] - before.rho_under[j]).array() <= 0.0).all());
                CHECK((state.rho_bar[j].array() >= 0.0).all());
                CHECK((state.rho_under[j].array() <= 0.0).all());
            }

            params.w_plus -= eta * grad.plus;
            params.w_minus -= eta * grad.minus;
            CHECK(reconstruction_residual(state, params, w0, ds.mu, ds.noise) <= 1e-6);
        }

        // gamma recovery identity: j<w^t - w^0, mu> = gamma (xi orthogonal to mu)
        for (int j = 0; j < 2; ++j) {
            const Eigen::VectorXd recovered =
                bank_sign(j) * ((params.bank(j) - w0.bank(j)) * ds.mu);
            for (int r = 0; r < 8; ++r)
                CHECK(std::abs(recovered[r] - state.gamma(j, r)) <= 1e-9);
        }

        const ProjectedCoeffs proj = project_coeffs(params, w0, ds.mu, ds.noise);
        CHECK(proj.gram_condition < 1e10);
        CHECK(rel_gap(proj.gamma_hat, state.gamma) <= 1e-6);
        for (int j = 0; j < 2; ++j)
            CHECK(rel_gap(proj.rho_hat[j], state.rho_bar[j] + state.rho_under[j]) <= 1e-6);
    }
}

TEST_CASE("cnn stepping equals gcn stepping on an edgeless graph") {
    DataConfig dc = bench_config(11);
    dc.p = 0.0;
    dc.s = 0.0;
    const Dataset ds = build_dataset(dc);
    Rng rng(12);
    ModelParams params = init_weights(4, ds.dim(), 1e-3, 3, rng);

    CoeffState via_cnn = init_coeffs(4, ds.n());
    CoeffState via_gcn = init_coeffs(4, ds.n());
    for (int step = 0; step < 5; ++step) {
        const BatchEval eval = batch_eval(params, ds, ModelKind::Cnn);
        step_coeffs_cnn(via_cnn, params, ds, eval.loss_derivs, 0.05);
        step_coeffs_gcn(via_gcn, params, ds, eval.loss_derivs, 0.05);
        const GradPair grad = cnn_gradient(params, ds);
        params.w_plus -= 0.05 * grad.plus;
        params.w_minus -= 0.05 * grad.minus;
    }
    CHECK(via_cnn.gamma == via_gcn.gamma);
    for (int j = 0; j < 2; ++j) {
        CHECK(via_cnn.rho_bar[j] == via_gcn.rho_bar[j]);
        CHECK(via_cnn.rho_under[j] == via_gcn.rho_under[j]);
    }
}

TEST_CASE("cnn rho updates are gated by the class indicators") {
    const Dataset ds = build_dataset(bench_config(13));
    Rng rng(14);
    const ModelParams params = init_weights(4, ds.dim(), 1e-3, 3, rng);
    CoeffState state = init_coeffs(4, ds.n());
    const BatchEval eval = batch_eval(params, ds, ModelKind::Cnn);
    step_coeffs_cnn(state, params, ds, eval.loss_derivs, 0.05);

    for (int j = 0; j < 2; ++j) {
        const double js = bank_sign(j);
        for (int i = 0; i < ds.n(); ++i) {
            if (ds.labels[i] == js) {
                CHECK(state.rho_under[j].col(i).cwiseAbs().maxCoeff() == 0.0);
            } else {
                CHECK(state.rho_bar[j].col(i).cwiseAbs().maxCoeff() == 0.0);
            }
        }
    }
}

TEST_CASE("first gcn step from gaussian init has the predicted signs") {
    const Dataset ds = build_dataset(bench_config(15));
    // verified event: all y_i y~_i > 0 at this regime
    REQUIRE((ds.labels.array() * ds.agg_labels.array()).minCoeff() > 0.0);

    Rng rng(16);
    const ModelParams params = init_weights(4, ds.dim(), 1e-3, 3, rng);
    CoeffState state = init_coeffs(4, ds.n());
    const BatchEval eval = batch_eval(params, ds, ModelKind::Gcn);
    step_coeffs_gcn(state, params, ds, eval.loss_derivs, 0.05);

    CHECK((state.gamma.array() >= 0.0).all());
    for (int j = 0; j < 2; ++j) {
        CHECK((state.rho_bar[j].array() >= 0.0).all());
        CHECK((state.rho_under[j].array() <= 0.0).all());
    }
}

TEST_CASE("signal learning dominates in a benign-regime gcn run") {
    // A configuration on the benign side of the separation curve: the signal
    // coefficient must reach order one while noise memory stays two orders
    // below it.
    DataConfig dc;
    dc.n = 100;
    dc.d = 600;
    dc.snr = 0.5;
    dc.sigma_p = 10.0;
    dc.p = 0.5;
    dc.s = 0.08;
    dc.seed = 17;
    const Dataset ds = build_dataset(dc);

    Rng rng(18);
    const ModelParams initial = init_weights(8, ds.dim(), 1e-4, 3, rng);
    TrainConfig tc;
    tc.eta = 0.03;
    tc.epochs = 120;
    tc.model_kind = ModelKind::Gcn;
    tc.n_test = 200;
    tc.track_decomposition = true;
    tc.eval_every = 0;
    tc.eval_seed = 19;
    const TrainRecord record = train(ds, initial, tc);

    REQUIRE(record.final_coeffs.has_value());
    const CoeffSummary s = summary(*record.final_coeffs);
    const double max_gamma = std::max(s.max_gamma_plus, s.max_gamma_minus);
    CHECK(max_gamma >= 1.0);
    CHECK(s.max_abs_rho <= 0.1 * max_gamma);
    CHECK(record.metrics.back().test_acc >= 0.95);
}

TEST_CASE("coefficient trace rows are well formed") {
    CoeffState state = init_coeffs(2, 3);
    state.gamma(0, 1) = 0.5;
    state.rho_bar[1](0, 2) = 0.25;
    const std::string rows = coeff_trace_rows(state, 7);
    CHECK(rows.find("7,1,1,0.5,0,0\n") != std::string::npos);
    CHECK(rows.find("7,-1,0,0,0.25,0\n") != std::string::npos);
}
