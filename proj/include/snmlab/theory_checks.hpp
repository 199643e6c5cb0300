#pragma once

#include <map>
#include <string>

#include "snmlab/dataset.hpp"

namespace snmlab {

// Outcome of one Monte-Carlo concentration check. A trial passes when every
// bounded statistic lies inside its bound; the check passes when the pass
// rate reaches required_rate. worst_margin is the smallest normalized slack
// seen across trials (negative = some bound was violated).
struct CheckReport {
    std::string name;
    int attempted = 0;
    int passed = 0;
    double worst_margin = 0.0;
    bool preconditions_met = true;
    bool skipped = false;
    double required_rate = 0.95;
    std::string note;
    std::map<std::string, double> stats;  // auxiliary monitored quantities

    bool pass() const {
        if (skipped) return true;
        if (attempted == 0) return false;
        return static_cast<double>(passed) >=
               required_rate * static_cast<double>(attempted) - 1e-9;
    }
};

// Benign/harmful classification from the separation curves:
// cnn_score = n*SNR^q, gcn_score = n*SNR^q*(n(p+s))^((q-2)/2), threshold 1.
struct PhaseVerdict {
    int n = 0;
    double snr = 0.0;
    double p = 0.0;
    double s = 0.0;
    int q = 0;
    double cnn_score = 0.0;
    double gcn_score = 0.0;
    bool cnn_benign = false;
    bool gcn_benign = false;
};

// Noise-vector geometry: ||xi_i||^2 in [sigma_p^2 d/2, 3 sigma_p^2 d/2] and
// |<xi_i, xi_i'>| <= 2 sigma_p^2 sqrt(d log(4n^2/delta)) for all pairs.
CheckReport check_noise_geometry(const DataConfig& config, int trials, double delta,
                                 int workers = 0);

// Degree concentration: D_i in [n(p+s)/4, 3n(p+s)/4] for all i.
CheckReport check_degree_concentration(const DataConfig& config, int trials,
                                       int workers = 0);

// Aggregated-label stability: |y~_i| in [Xi/2, 3Xi/2] and sign(y~_i) = sign(y_i).
CheckReport check_label_homophily(const DataConfig& config, int trials, int workers = 0);

// Aggregated-noise norm: ||xi~_i||^2 in [sigma_p^2 d/(4n(p+s)), 3 sigma_p^2 d/(4n(p+s))].
// Also records the median shrink ratio ||xi~||/||xi|| in stats.
CheckReport check_agg_noise_norm(const DataConfig& config, int trials, int workers = 0);

// Initialization inner-product bounds against mu and the aggregated noise.
CheckReport check_init_inner_products(const DataConfig& config, int m, double sigma0,
                                      int trials, double delta, int workers = 0);

PhaseVerdict phase_condition(int n, double snr, double p, double s, int q);

// Initialization-scale upper bound expression (all hidden constants taken as 1)
// so users can confirm their sigma0 sits below it.
double sigma0_upper_bound(int n, int d, int m, int q, double snr, double sigma_p,
                          double p, double s);

} // namespace snmlab
