#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

#include "snmlab/rng.hpp"

namespace snmlab {

enum class LabelMode { Balanced, Iid };

// Parameters of one data draw: n samples in dimension d, signal strength set
// by snr = ||mu|| / (sigma_p * sqrt(d)), same-class edges Ber(p), cross-class
// edges Ber(s).
struct DataConfig {
    int n = 250;
    int d = 500;
    double snr = 0.05;
    double sigma_p = 20.0;
    double p = 0.5;
    double s = 0.08;
    LabelMode label_mode = LabelMode::Balanced;
    std::uint64_t seed = 42;
    // p < s (heterophily) is rejected unless explicitly allowed.
    bool allow_heterophily = false;

    void validate() const;  // throws ConfigError
};

// One generated instance plus everything the graph convolution precomputes.
// Immutable after build_dataset; safe to share across threads.
struct Dataset {
    Eigen::VectorXd mu;                 // signal direction, ||mu|| = snr*sigma_p*sqrt(d)
    Eigen::VectorXd labels;             // +-1, length n
    Eigen::MatrixXd noise;              // n x d, rows orthogonal to mu
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> adj;  // n x n, symmetric, zero diagonal
    Eigen::VectorXi degrees;            // row sums of A + I (>= 1)
    Eigen::VectorXd agg_labels;         // y~_i = D_i^-1 sum_{k in N(i)} y_k
    Eigen::MatrixXd agg_noise;          // xi~_i = D_i^-1 sum_{k in N(i)} xi_k
    double mu_norm_sq = 0.0;
    Eigen::VectorXd noise_norm_sq;      // ||xi_i||^2 per row

    DataConfig config;

    int n() const { return static_cast<int>(labels.size()); }
    int dim() const { return static_cast<int>(mu.size()); }
    // Homophily coefficient (p-s)/(p+s); 0 for the edgeless p=s=0 graph.
    double homophily() const {
        const double denom = config.p + config.s;
        return denom > 0.0 ? (config.p - config.s) / denom : 0.0;
    }
};

// A single inductive test node: fresh label/noise, SBM edges into the
// training graph, aggregated feature (agg_label * mu, agg_noise).
struct TestNode {
    double label = 0.0;
    int degree = 0;
    double agg_label = 0.0;
    Eigen::VectorXd agg_noise;
};

// Random direction on the sphere scaled so ||mu|| = snr * sigma_p * sqrt(d).
Eigen::VectorXd make_signal(int d, double snr, double sigma_p, Rng& rng);

// Draw g ~ N(0, sigma_p^2 I) and project out the mu component exactly.
Eigen::VectorXd sample_noise(const Eigen::VectorXd& mu, double sigma_p, Rng& rng);

// Symmetric 0/1 adjacency, zero diagonal; each unordered pair sampled once.
Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>
sample_adjacency(const Eigen::VectorXd& labels, double p, double s, Rng& rng);

Eigen::VectorXd sample_labels(int n, LabelMode mode, Rng& rng);

// Full draw: mu, labels, noise, graph, then the self-loop aggregates.
// Deterministic given config.seed.
Dataset build_dataset(const DataConfig& config);

// Attach one test node with label y_test; the training data are not modified.
TestNode attach_test_node(const Dataset& dataset, double y_test, Rng& rng);

// Plain-text container (header `snm-sbm v1 ...`, mu, y, noise rows, adjacency
// lower-triangle bitrows). Decimals are shortest round-trip.
std::string dump_dataset(const Dataset& dataset);
Dataset load_dataset(const std::string& text);

} // namespace snmlab
