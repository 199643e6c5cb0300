#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "snmlab/dataset.hpp"
#include "snmlab/decomposition.hpp"
#include "snmlab/model.hpp"
#include "snmlab/rng.hpp"

namespace snmlab {

enum class ModelKind { Cnn, Gcn };

const char* model_name(ModelKind kind);

// Numerically stable l(z) = log(1 + exp(-z)).
double softplus_loss(double z);
// l'(z) = -1 / (1 + exp(z)), in (-1, 0).
double loss_derivative(double z);

struct TrainConfig {
    double eta = 0.03;
    int epochs = 100;
    ModelKind model_kind = ModelKind::Gcn;
    int n_test = 500;
    bool track_decomposition = false;
    int grad_check_every = 0;   // 0 = off
    int eval_every = 1;         // 1 = test metrics every epoch, 0 = final epoch only
    std::uint64_t eval_seed = 1;

    void validate() const;
};

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double test_loss = 0.0;        // NaN when not evaluated this epoch
    double test_acc = 0.0;
    double max_gamma_plus = 0.0;   // NaN when decomposition tracking is off
    double max_gamma_minus = 0.0;
    double max_abs_rho = 0.0;
    double recon_residual = 0.0;
};

struct TrainRecord {
    TrainConfig config;
    std::vector<EpochMetrics> metrics;  // epochs + 1 rows, starting at epoch 0
    ModelParams final_params;
    std::optional<CoeffState> final_coeffs;

    // Monitors (populated when tracking): the homophily event min_i y_i*y~_i >= 0,
    // unconditional rho monotonicity, gamma monotonicity under the event, and the
    // alpha = 4 log(epochs) coefficient-bound heuristic (reported, never asserted).
    bool homophily_event = false;
    bool rho_bar_monotone = true;
    bool rho_under_monotone = true;
    bool gamma_monotone_under_event = true;
    double coeff_alpha = 0.0;
    bool coeff_bound_exceeded = false;

    double max_grad_check_error = 0.0;  // NaN unless grad_check_every > 0
};

struct GradPair {
    Eigen::MatrixXd plus;   // dL/dW_plus, m x d
    Eigen::MatrixXd minus;
};

// Gradient of the empirical loss (before multiplying by -eta).
GradPair cnn_gradient(const ModelParams& params, const Dataset& dataset);
GradPair gcn_gradient(const ModelParams& params, const Dataset& dataset);

// Per-sample outputs and loss derivatives at the current weights.
struct BatchEval {
    Eigen::VectorXd outputs;      // f_i
    Eigen::VectorXd loss_derivs;  // l'(y_i f_i)
    double loss = 0.0;
    double accuracy = 0.0;
};
BatchEval batch_eval(const ModelParams& params, const Dataset& dataset, ModelKind kind);

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

// Monte-Carlo population metrics over n_test fresh draws; GCN test points are
// attached inductively one at a time, CNN test points are fresh (y, xi) pairs.
// sign(0) counts as +1.
EvalResult evaluate(const ModelParams& params, const Dataset& dataset, ModelKind kind,
                    int n_test, Rng& rng);

// Full-batch gradient descent from the given initial weights. Metrics are
// recorded at epoch 0 and after every update; aborts with DivergenceError if
// the train loss exceeds 1e6 or any weight becomes non-finite.
TrainRecord train(const Dataset& dataset, const ModelParams& initial,
                  const TrainConfig& config, std::ostream* log = nullptr);

struct GradCheckResult {
    double max_rel_error = 0.0;
    int coords_checked = 0;
};

// Central finite differences of the scalar loss, step 1e-5*(1+|w|), against
// the analytic gradient on n_coords randomly chosen coordinates.
GradCheckResult grad_check(const ModelParams& params, const Dataset& dataset,
                           ModelKind kind, int n_coords, Rng& rng);

// Dynamics CSV with one row per epoch; decomposition columns are empty when
// tracking is off, test columns empty on epochs without evaluation.
std::string dynamics_csv(const TrainRecord& record);

} // namespace snmlab
