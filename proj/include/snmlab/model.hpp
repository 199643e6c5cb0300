#pragma once

#include <Eigen/Dense>

#include "snmlab/dataset.hpp"
#include "snmlab/rng.hpp"

namespace snmlab {

// Polynomial ReLU sigma(z) = max(0,z)^q and its derivative q*max(0,z)^(q-1).
double act(double z, int q);
double act_prime(double z, int q);

// First-layer weight banks of the two-layer network. The second layer is the
// fixed constants +1 (for the W_plus bank) and -1 (for W_minus); it is never
// stored or trained.
struct ModelParams {
    Eigen::MatrixXd w_plus;   // m x d
    Eigen::MatrixXd w_minus;  // m x d
    int q = 3;
    double sigma0 = 1e-3;

    int width() const { return static_cast<int>(w_plus.rows()); }
    int dim() const { return static_cast<int>(w_plus.cols()); }
    const Eigen::MatrixXd& bank(int j_index) const { return j_index == 0 ? w_plus : w_minus; }
    Eigen::MatrixXd& bank(int j_index) { return j_index == 0 ? w_plus : w_minus; }
    bool all_finite() const { return w_plus.allFinite() && w_minus.allFinite(); }
};

// Sign of the bank: index 0 <-> j = +1, index 1 <-> j = -1.
inline double bank_sign(int j_index) { return j_index == 0 ? 1.0 : -1.0; }

// f = F_{+1} - F_{-1} with F_j = (1/m) sum_r [sigma(<w_{j,r},p1>) + sigma(<w_{j,r},p2>)].
double forward_pair(const Eigen::MatrixXd& w_plus, const Eigen::MatrixXd& w_minus,
                    const Eigen::VectorXd& patch1, const Eigen::VectorXd& patch2, int q);

// CNN uses the raw patches (y_i mu, xi_i); GCN the aggregated (y~_i mu, xi~_i).
double forward_cnn(const ModelParams& params, const Dataset& dataset, int i);
double forward_gcn(const ModelParams& params, const Dataset& dataset, int i);

// i.i.d. N(0, sigma0^2) entries in both banks.
ModelParams init_weights(int m, int d, double sigma0, int q, Rng& rng);

} // namespace snmlab
