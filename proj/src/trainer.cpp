#include "snmlab/trainer.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "snmlab/errors.hpp"
#include "snmlab/io.hpp"

namespace snmlab {

namespace {

constexpr double kLossAbortThreshold = 1e6;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

// The two models differ only in which (signal scalar, noise row) pair feeds
// each sample: CNN uses (y_i, xi_i), GCN uses (y~_i, xi~_i).
struct ModelInputs {
    const Eigen::VectorXd& signal_scalars;
    const Eigen::MatrixXd& noise_rows;
};

ModelInputs select_inputs(const Dataset& dataset, ModelKind kind) {
    if (kind == ModelKind::Cnn) return {dataset.labels, dataset.noise};
    return {dataset.agg_labels, dataset.agg_noise};
}

struct CoreResult {
    Eigen::VectorXd outputs;
    Eigen::VectorXd loss_derivs;
    double loss = 0.0;
    double accuracy = 0.0;
    GradPair grad;
};

// One pass over the batch: outputs, loss, loss derivatives and (optionally)
// the exact gradient
//   dL/dw_{j,r} = (1/nm) sum_i l'_i j y_i [ sigma'(<w, s_i mu>) s_i mu
//                                         + sigma'(<w, z_i>) z_i ].
CoreResult batch_core(const ModelParams& params, const Dataset& dataset, ModelKind kind,
                      bool want_grad) {
    const ModelInputs in = select_inputs(dataset, kind);
    const int n = dataset.n();
    const int m = params.width();
    const int q = params.q;
    if (in.noise_rows.cols() != params.dim())
        throw ShapeError("batch_core: dataset dimension does not match weights");

    CoreResult res;
    res.outputs.setZero(n);

    Eigen::VectorXd mu_dot[2];
    Eigen::MatrixXd pre[2];
    for (int j = 0; j < 2; ++j) {
        mu_dot[j] = params.bank(j) * dataset.mu;                 // m
        pre[j] = params.bank(j) * in.noise_rows.transpose();     // m x n
    }

    for (int j = 0; j < 2; ++j) {
        const double js = bank_sign(j);
        for (int i = 0; i < n; ++i) {
            double sum = 0.0;
            for (int r = 0; r < m; ++r)
                sum += act(in.signal_scalars[i] * mu_dot[j][r], q) + act(pre[j](r, i), q);
            res.outputs[i] += js * sum / static_cast<double>(m);
        }
    }

    res.loss_derivs.resize(n);
    int correct = 0;
    double loss_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double margin = dataset.labels[i] * res.outputs[i];
        loss_sum += softplus_loss(margin);
        res.loss_derivs[i] = loss_derivative(margin);
        const double predicted = res.outputs[i] >= 0.0 ? 1.0 : -1.0;  // sign(0) -> +1
        if (predicted == dataset.labels[i]) ++correct;
    }
    res.loss = loss_sum / n;
    res.accuracy = static_cast<double>(correct) / n;

    if (want_grad) {
        const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(m));
        for (int j = 0; j < 2; ++j) {
            const double js = bank_sign(j);
            // Noise part: (1/nm) C_j Z with C_j(r,i) = l'_i j y_i sigma'(pre(r,i)).
            Eigen::MatrixXd coeffs(m, n);
            Eigen::VectorXd signal_coeffs = Eigen::VectorXd::Zero(m);
            for (int i = 0; i < n; ++i) {
                const double common = res.loss_derivs[i] * js * dataset.labels[i];
                for (int r = 0; r < m; ++r) {
                    coeffs(r, i) = common * act_prime(pre[j](r, i), q);
                    signal_coeffs[r] +=
                        common * act_prime(in.signal_scalars[i] * mu_dot[j][r], q) *
                        in.signal_scalars[i];
                }
            }
            Eigen::MatrixXd grad = coeffs * in.noise_rows;             // m x d
            grad.noalias() += signal_coeffs * dataset.mu.transpose();  // rank-1 signal part
            grad *= scale;
            (j == 0 ? res.grad.plus : res.grad.minus) = std::move(grad);
        }
    }
    return res;
}

EpochMetrics make_epoch_metrics(int epoch) {
    EpochMetrics em;
    em.epoch = epoch;
    em.test_loss = kNaN;
    em.test_acc = kNaN;
    em.max_gamma_plus = kNaN;
    em.max_gamma_minus = kNaN;
    em.max_abs_rho = kNaN;
    em.recon_residual = kNaN;
    return em;
}

} // namespace

const char* model_name(ModelKind kind) { return kind == ModelKind::Cnn ? "cnn" : "gcn"; }

double softplus_loss(double z) {
    if (z >= 0.0) return std::log1p(std::exp(-z));
    return -z + std::log1p(std::exp(z));
}

double loss_derivative(double z) {
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return -e / (1.0 + e);
    }
    return -1.0 / (1.0 + std::exp(z));
}

void TrainConfig::validate() const {
    if (!(eta >= 0.0)) throw ConfigError("eta must be nonnegative (got " + format_double(eta) + ")");
    if (epochs < 1) throw ConfigError("epochs must be at least 1 (got " + format_int(epochs) + ")");
    if (n_test < 1) throw ConfigError("n_test must be at least 1 (got " + format_int(n_test) + ")");
    if (grad_check_every < 0) throw ConfigError("grad_check_every must be nonnegative");
}

GradPair cnn_gradient(const ModelParams& params, const Dataset& dataset) {
    return batch_core(params, dataset, ModelKind::Cnn, true).grad;
}

GradPair gcn_gradient(const ModelParams& params, const Dataset& dataset) {
    return batch_core(params, dataset, ModelKind::Gcn, true).grad;
}

BatchEval batch_eval(const ModelParams& params, const Dataset& dataset, ModelKind kind) {
    CoreResult core = batch_core(params, dataset, kind, false);
    return {std::move(core.outputs), std::move(core.loss_derivs), core.loss, core.accuracy};
}

EvalResult evaluate(const ModelParams& params, const Dataset& dataset, ModelKind kind,
                    int n_test, Rng& rng) {
    if (n_test < 1) throw ConfigError("evaluate: n_test must be at least 1");

    double loss_sum = 0.0;
    int correct = 0;
    for (int t = 0; t < n_test; ++t) {
        const double y = rng.rademacher();
        double f = 0.0;
        if (kind == ModelKind::Gcn) {
            const TestNode node = attach_test_node(dataset, y, rng);
            f = forward_pair(params.w_plus, params.w_minus, node.agg_label * dataset.mu,
                             node.agg_noise, params.q);
        } else {
            const Eigen::VectorXd xi = sample_noise(dataset.mu, dataset.config.sigma_p, rng);
            f = forward_pair(params.w_plus, params.w_minus, y * dataset.mu, xi, params.q);
        }
        loss_sum += softplus_loss(y * f);
        const double predicted = f >= 0.0 ? 1.0 : -1.0;
        if (predicted == y) ++correct;
    }
    return {loss_sum / n_test, static_cast<double>(correct) / n_test};
}

TrainRecord train(const Dataset& dataset, const ModelParams& initial,
                  const TrainConfig& config, std::ostream* log) {
    config.validate();
    if (initial.dim() != dataset.dim())
        throw ShapeError("train: weight dimension does not match dataset");

    TrainRecord record;
    record.config = config;
    record.coeff_alpha = 4.0 * std::log(static_cast<double>(config.epochs));
    record.max_grad_check_error = config.grad_check_every > 0 ? 0.0 : kNaN;

    ModelParams params = initial;
    const int m = params.width();
    const int n = dataset.n();

    const bool tracking = config.track_decomposition;
    CoeffState coeffs;
    if (tracking) coeffs = init_coeffs(m, n);

    // Dataset-level homophily event for the gamma monotonicity monitor; for the
    // CNN the "aggregated" label is y itself, so the event always holds.
    const Eigen::VectorXd& signal_scalars = select_inputs(dataset, config.model_kind).signal_scalars;
    record.homophily_event =
        (dataset.labels.array() * signal_scalars.array()).minCoeff() >= 0.0;

    for (int epoch = 0; epoch <= config.epochs; ++epoch) {
        const bool final_epoch = epoch == config.epochs;
        CoreResult core = batch_core(params, dataset, config.model_kind, !final_epoch);

        if (!std::isfinite(core.loss) || core.loss > kLossAbortThreshold)
            throw DivergenceError("training diverged at epoch " + format_int(epoch) +
                                      " (train loss " + format_double(core.loss) + ")",
                                  epoch);

        EpochMetrics em = make_epoch_metrics(epoch);
        em.train_loss = core.loss;
        em.train_acc = core.accuracy;

        if (config.eval_every == 1 || final_epoch) {
            // Same draw stream every epoch (common random numbers): curves are
            // comparable across epochs and eta = 0 gives exactly flat metrics.
            Rng eval_rng(config.eval_seed);
            const EvalResult ev = evaluate(params, dataset, config.model_kind,
                                           config.n_test, eval_rng);
            em.test_loss = ev.loss;
            em.test_acc = ev.accuracy;
        }

        if (tracking) {
            const CoeffSummary s = summary(coeffs);
            em.max_gamma_plus = s.max_gamma_plus;
            em.max_gamma_minus = s.max_gamma_minus;
            em.max_abs_rho = s.max_abs_rho;
            em.recon_residual = reconstruction_residual(coeffs, params, initial,
                                                        dataset.mu, dataset.noise);
            const double worst = std::max({coeffs.gamma.maxCoeff(),
                                           coeffs.rho_bar[0].maxCoeff(),
                                           coeffs.rho_bar[1].maxCoeff(),
                                           -coeffs.rho_under[0].minCoeff(),
                                           -coeffs.rho_under[1].minCoeff()});
            if (worst > record.coeff_alpha) record.coeff_bound_exceeded = true;
        }
        record.metrics.push_back(em);

        if (final_epoch) break;

        if (config.grad_check_every > 0 && epoch % config.grad_check_every == 0) {
            Rng gc_rng(mix_seed(config.eval_seed, 0x6AD07ECULL ^ static_cast<std::uint64_t>(epoch)));
            const GradCheckResult gc = grad_check(params, dataset, config.model_kind, 20, gc_rng);
            record.max_grad_check_error = std::max(record.max_grad_check_error, gc.max_rel_error);
            if (gc.max_rel_error > 1e-4 && log)
                (*log) << "warning: gradient check error " << format_double(gc.max_rel_error)
                       << " at epoch " << epoch << "\n";
        }

        if (tracking) {
            const CoeffState before = coeffs;
            if (config.model_kind == ModelKind::Gcn)
                step_coeffs_gcn(coeffs, params, dataset, core.loss_derivs, config.eta);
            else
                step_coeffs_cnn(coeffs, params, dataset, core.loss_derivs, config.eta);
            for (int j = 0; j < 2; ++j) {
                if (((coeffs.rho_bar[j] - before.rho_bar[j]).array() < 0.0).any())
                    record.rho_bar_monotone = false;
                if (((coeffs.rho_under[j] - before.rho_under[j]).array() > 0.0).any())
                    record.rho_under_monotone = false;
            }
            if (record.homophily_event &&
                ((coeffs.gamma - before.gamma).array() < 0.0).any())
                record.gamma_monotone_under_event = false;
        }

        params.w_plus.noalias() -= config.eta * core.grad.plus;
        params.w_minus.noalias() -= config.eta * core.grad.minus;
        if (!params.all_finite())
            throw DivergenceError("training diverged at epoch " + format_int(epoch + 1) +
                                      " (non-finite weights)",
                                  epoch + 1);
    }

    if (log && record.coeff_bound_exceeded)
        (*log) << "warning: coefficient magnitude exceeded alpha = 4 log T = "
               << format_double(record.coeff_alpha) << "\n";

    record.final_params = std::move(params);
    if (tracking) record.final_coeffs = std::move(coeffs);
    return record;
}

GradCheckResult grad_check(const ModelParams& params, const Dataset& dataset,
                           ModelKind kind, int n_coords, Rng& rng) {
    const GradPair analytic = kind == ModelKind::Cnn ? cnn_gradient(params, dataset)
                                                     : gcn_gradient(params, dataset);
    ModelParams work = params;
    const int m = params.width();
    const int d = params.dim();

    auto loss_at = [&]() { return batch_core(work, dataset, kind, false).loss; };

    GradCheckResult result;
    result.coords_checked = n_coords;
    for (int c = 0; c < n_coords; ++c) {
        const int j = static_cast<int>(rng.next_u64() % 2);
        const int r = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(m));
        const int k = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(d));

        double& w = work.bank(j)(r, k);
        const double saved = w;
        const double h = 1e-5 * (1.0 + std::abs(saved));
        w = saved + h;
        const double up = loss_at();
        w = saved - h;
        const double down = loss_at();
        w = saved;

        const double fd = (up - down) / (2.0 * h);
        const double an = (j == 0 ? analytic.plus : analytic.minus)(r, k);
        // The floor keeps dead-activation coordinates (both sides ~0) from
        // reporting pure rounding noise as relative error.
        const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6});
        result.max_rel_error = std::max(result.max_rel_error, rel);
    }
    return result;
}

std::string dynamics_csv(const TrainRecord& record) {
    std::ostringstream out;
    out << "epoch,train_loss,test_loss,train_acc,test_acc,"
           "max_gamma_plus,max_gamma_minus,max_abs_rho,recon_residual\n";
    auto cell = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
    for (const EpochMetrics& em : record.metrics) {
        out << format_int(em.epoch) << ',' << format_double(em.train_loss) << ','
            << cell(em.test_loss) << ',' << format_double(em.train_acc) << ','
            << cell(em.test_acc) << ',' << cell(em.max_gamma_plus) << ','
            << cell(em.max_gamma_minus) << ',' << cell(em.max_abs_rho) << ','
            << cell(em.recon_residual) << '\n';
    }
    return out.str();
}

} // namespace snmlab
