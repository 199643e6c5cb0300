#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <utility>

#include "snmlab/dataset.hpp"
#include "snmlab/model.hpp"

namespace snmlab {

// Signal/noise coefficients of the weight decomposition
//   w_{j,r}^(t) = w_{j,r}^(0) + j*gamma_{j,r} * mu/||mu||^2
//                 + sum_i (rho_bar + rho_under)_{j,r,i} * xi_i/||xi_i||^2.
// rho_bar accumulates the same-class (y_k = j) part and stays >= 0;
// rho_under the opposite-class part, <= 0. Index 0 <-> j=+1, 1 <-> j=-1.
struct CoeffState {
    Eigen::MatrixXd gamma;                      // 2 x m
    std::array<Eigen::MatrixXd, 2> rho_bar;     // each m x n
    std::array<Eigen::MatrixXd, 2> rho_under;   // each m x n

    // Cached from the dataset on first step/reconstruct.
    double mu_norm_sq = 0.0;
    Eigen::VectorXd noise_norm_sq;

    int width() const { return static_cast<int>(gamma.cols()); }
    int samples() const { return static_cast<int>(rho_bar[0].cols()); }
};

struct CoeffSummary {
    double max_gamma_plus = 0.0;
    double max_gamma_minus = 0.0;
    double max_abs_rho = 0.0;  // max_{j,r,i} |rho_bar + rho_under|
};

// Oracle coefficients recovered by least squares against {mu, xi_1..xi_n}.
struct ProjectedCoeffs {
    Eigen::MatrixXd gamma_hat;                  // 2 x m
    std::array<Eigen::MatrixXd, 2> rho_hat;     // each m x n (signed)
    double gram_condition = 0.0;
    double max_rel_residual = 0.0;
};

CoeffState init_coeffs(int m, int n);

// One coefficient-iteration step, in lockstep with the gradient step taken at
// the same weights; loss_derivs must be the l'_i computed at those weights.
void step_coeffs_gcn(CoeffState& state, const ModelParams& params, const Dataset& dataset,
                     const Eigen::VectorXd& loss_derivs, double eta);

// The identity-graph specialization (N(i) = {i}, D_i = 1, raw patches).
void step_coeffs_cnn(CoeffState& state, const ModelParams& params, const Dataset& dataset,
                     const Eigen::VectorXd& loss_derivs, double eta);

// Rebuild the weight banks from the coefficients; returns (w_plus, w_minus).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd>
reconstruct_weights(const CoeffState& state, const Eigen::MatrixXd& w0_plus,
                    const Eigen::MatrixXd& w0_minus, const Eigen::VectorXd& mu,
                    const Eigen::MatrixXd& noise);

// Independent route: solve the (n+1)-dim Gram system for each neuron's
// weight delta. Requires d > n+1; throws DegenerateBasisError when the Gram
// condition number exceeds 1e12.
ProjectedCoeffs project_coeffs(const ModelParams& params, const ModelParams& params0,
                               const Eigen::VectorXd& mu, const Eigen::MatrixXd& noise);

CoeffSummary summary(const CoeffState& state);

// ||W_hat - W||_F / max(||W - W0||_F, eps) over both banks.
double reconstruction_residual(const CoeffState& state, const ModelParams& params,
                               const ModelParams& params0, const Eigen::VectorXd& mu,
                               const Eigen::MatrixXd& noise);

// Rows `epoch,j,r,gamma,max_rho_bar,min_rho_under` for the trace CSV.
std::string coeff_trace_rows(const CoeffState& state, int epoch);

} // namespace snmlab
