#include "snmlab/theory_checks.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

#include "snmlab/errors.hpp"
#include "snmlab/io.hpp"
#include "snmlab/model.hpp"
#include "snmlab/rng.hpp"

namespace snmlab {

namespace {

constexpr double kDefaultDelta = 0.01;
// Scale factor applied when labeling unmet Omega(.) preconditions whose
// absolute constants the statements leave open.
constexpr double kPreconditionConstant = 0.5;

const double kInf = std::numeric_limits<double>::infinity();

struct TrialOutcome {
    bool pass = false;
    double margin = 0.0;
    std::map<std::string, double> stats;
};

int resolve_workers(int workers, int trials) {
    if (workers <= 0) {
        const unsigned hc = std::thread::hardware_concurrency();
        workers = hc > 0 ? static_cast<int>(hc) : 1;
    }
    return std::max(1, std::min(workers, trials));
}

// Trials are independent with per-trial derived seeds; results are stored by
// trial index, so the report does not depend on the worker count.
CheckReport run_trials(std::string name, const DataConfig& config, int trials, int workers,
                       const std::function<TrialOutcome(std::uint64_t trial_seed)>& body) {
    if (trials < 1) throw ConfigError(name + ": trials must be at least 1");
    config.validate();

    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(trials));
    const int nworkers = resolve_workers(workers, trials);
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int t = next.fetch_add(1);
            if (t >= trials) return;
            outcomes[static_cast<std::size_t>(t)] =
                body(mix_seed(config.seed, static_cast<std::uint64_t>(t)));
        }
    };
    if (nworkers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nworkers));
        for (int w = 0; w < nworkers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    CheckReport report;
    report.name = std::move(name);
    report.attempted = trials;
    report.worst_margin = kInf;
    std::map<std::string, std::vector<double>> collected;
    for (const TrialOutcome& o : outcomes) {
        if (o.pass) ++report.passed;
        report.worst_margin = std::min(report.worst_margin, o.margin);
        for (const auto& [key, value] : o.stats) collected[key].push_back(value);
    }
    for (auto& [key, values] : collected) {
        std::sort(values.begin(), values.end());
        report.stats[key] = values[values.size() / 2];  // median over trials
    }
    return report;
}

double bracket_margin(double value, double lo, double hi) {
    const double width = std::max(hi - lo, 1e-300);
    return std::min(value - lo, hi - value) / width;
}

double upper_margin(double value, double bound) {
    return (bound - value) / std::max(std::abs(bound), 1e-300);
}

} // namespace

CheckReport check_noise_geometry(const DataConfig& config, int trials, double delta,
                                 int workers) {
    const int n = config.n;
    const int d = config.d;
    const double sp2 = config.sigma_p * config.sigma_p;
    const double norm_lo = sp2 * d / 2.0;
    const double norm_hi = 3.0 * sp2 * d / 2.0;
    const double cross_bound = 2.0 * sp2 * std::sqrt(d * std::log(4.0 * n * n / delta));

    auto body = [&](std::uint64_t seed) {
        Rng rng(seed);
        const Eigen::VectorXd mu = make_signal(d, config.snr, config.sigma_p, rng);
        Eigen::MatrixXd noise(n, d);
        for (int i = 0; i < n; ++i)
            noise.row(i) = sample_noise(mu, config.sigma_p, rng).transpose();

        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(noise);

        TrialOutcome out;
        out.margin = kInf;
        double max_cross = 0.0;
        for (int i = 0; i < n; ++i) {
            out.margin = std::min(out.margin, bracket_margin(gram(i, i), norm_lo, norm_hi));
            for (int k = i + 1; k < n; ++k) {
                max_cross = std::max(max_cross, std::abs(gram(k, i)));
            }
        }
        out.margin = std::min(out.margin, upper_margin(max_cross, cross_bound));
        out.pass = out.margin >= 0.0;
        out.stats["max_cross_over_min_normsq"] =
            max_cross / gram.diagonal().minCoeff();
        return out;
    };

    CheckReport report = run_trials("noise_geometry", config, trials, workers, body);
    if (d < kPreconditionConstant * std::log(4.0 * n / delta)) {
        report.preconditions_met = false;
        report.note = "preconditions unmet: d below log(4n/delta) scale";
    }
    return report;
}

CheckReport check_degree_concentration(const DataConfig& config, int trials, int workers) {
    const int n = config.n;
    const double lo = n * (config.p + config.s) / 4.0;
    const double hi = 3.0 * n * (config.p + config.s) / 4.0;

    auto body = [&](std::uint64_t seed) {
        Rng rng(seed);
        const Eigen::VectorXd labels = sample_labels(n, config.label_mode, rng);
        const auto adj = sample_adjacency(labels, config.p, config.s, rng);

        TrialOutcome out;
        out.margin = kInf;
        double degree_sum = 0.0;
        for (int i = 0; i < n; ++i) {
            const double deg = 1.0 + adj.row(i).cast<double>().sum();
            degree_sum += deg;
            out.margin = std::min(out.margin, bracket_margin(deg, lo, hi));
        }
        out.pass = out.margin >= 0.0;
        out.stats["mean_degree"] = degree_sum / n;
        return out;
    };

    CheckReport report = run_trials("degree_concentration", config, trials, workers, body);
    const double threshold =
        kPreconditionConstant * std::sqrt(std::log(n / kDefaultDelta) / n);
    if (std::min(config.p, config.s) < threshold) {
        report.preconditions_met = false;
        report.note = "preconditions unmet: p or s below sqrt(log(n/delta)/n) scale";
    }
    return report;
}

CheckReport check_label_homophily(const DataConfig& config, int trials, int workers) {
    const int n = config.n;
    const double xi = (config.p + config.s) > 0.0
                          ? (config.p - config.s) / (config.p + config.s)
                          : 0.0;
    const double lo = xi / 2.0;
    const double hi = 3.0 * xi / 2.0;

    auto body = [&](std::uint64_t seed) {
        Rng rng(seed);
        const Eigen::VectorXd labels = sample_labels(n, config.label_mode, rng);
        const auto adj = sample_adjacency(labels, config.p, config.s, rng);

        TrialOutcome out;
        out.margin = kInf;
        bool sign_stable = true;
        for (int i = 0; i < n; ++i) {
            int deg = 1;
            double sum = labels[i];
            for (int k = 0; k < n; ++k) {
                if (adj(i, k)) {
                    ++deg;
                    sum += labels[k];
                }
            }
            const double agg = sum / deg;
            out.margin = std::min(out.margin, bracket_margin(std::abs(agg), lo, hi));
            if (agg * labels[i] <= 0.0) sign_stable = false;
        }
        out.pass = out.margin >= 0.0 && sign_stable;
        if (!sign_stable) out.margin = std::min(out.margin, -1.0);
        return out;
    };

    CheckReport report = run_trials("label_homophily", config, trials, workers, body);
    const double needed = (config.p == config.s)
                              ? kInf
                              : 8.0 * (config.p + config.s) /
                                    ((config.p - config.s) * (config.p - config.s)) *
                                    std::log(4.0 / kDefaultDelta);
    if (static_cast<double>(n) < needed) {
        report.preconditions_met = false;
        report.note = "preconditions unmet: n below 8(p+s)/(p-s)^2 log(4/delta)";
    }
    return report;
}

CheckReport check_agg_noise_norm(const DataConfig& config, int trials, int workers) {
    const int n = config.n;
    const int d = config.d;
    const double ps = config.p + config.s;
    if (ps <= 0.0) {
        CheckReport report;
        report.name = "agg_noise_norm";
        report.skipped = true;
        report.note = "skipped: p = s = 0 makes aggregation the identity";
        return report;
    }
    const double sp2 = config.sigma_p * config.sigma_p;
    const double lo = sp2 * d / (4.0 * n * ps);
    const double hi = 3.0 * sp2 * d / (4.0 * n * ps);

    auto body = [&](std::uint64_t seed) {
        Rng rng(seed);
        const Eigen::VectorXd mu = make_signal(d, config.snr, config.sigma_p, rng);
        const Eigen::VectorXd labels = sample_labels(n, config.label_mode, rng);
        Eigen::MatrixXd noise(n, d);
        for (int i = 0; i < n; ++i)
            noise.row(i) = sample_noise(mu, config.sigma_p, rng).transpose();
        const auto adj = sample_adjacency(labels, config.p, config.s, rng);

        // ||xi~_i||^2 = D_i^-2 (A~ G A~)_ii with G the noise Gram matrix; this
        // avoids forming the aggregated n x d matrix.
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(noise);
        gram.triangularView<Eigen::Upper>() = gram.transpose();

        Eigen::MatrixXd adj_tilde = adj.cast<double>();
        adj_tilde.diagonal().setOnes();
        const Eigen::VectorXd agg_norm_raw =
            ((adj_tilde * gram).cwiseProduct(adj_tilde)).rowwise().sum();

        TrialOutcome out;
        out.margin = kInf;
        std::vector<double> ratios(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double deg = adj_tilde.row(i).sum();  // self-loop included
            const double agg_sq = agg_norm_raw[i] / (deg * deg);
            out.margin = std::min(out.margin, bracket_margin(agg_sq, lo, hi));
            ratios[static_cast<std::size_t>(i)] = std::sqrt(agg_sq / gram(i, i));
        }
        out.pass = out.margin >= 0.0;
        std::sort(ratios.begin(), ratios.end());
        out.stats["median_shrink_ratio"] = ratios[ratios.size() / 2];
        return out;
    };

    CheckReport report = run_trials("agg_noise_norm", config, trials, workers, body);
    const double needed = kPreconditionConstant * n * n * ps * ps *
                          std::log(4.0 * n * n / kDefaultDelta);
    if (static_cast<double>(d) < needed) {
        report.preconditions_met = false;
        report.note = "preconditions unmet: d below n^2(p+s)^2 log(4n^2/delta) scale";
    }
    return report;
}

CheckReport check_init_inner_products(const DataConfig& config, int m, double sigma0,
                                      int trials, double delta, int workers) {
    if (m < 1) throw ConfigError("check_init_inner_products: m must be positive");
    if (sigma0 < 0.0) throw ConfigError("check_init_inner_products: sigma0 must be nonnegative");
    const int n = config.n;
    const int d = config.d;
    const double ps = config.p + config.s;
    const double agg_scale =
        ps > 0.0 ? sigma0 * config.sigma_p * std::sqrt(d / (n * ps)) : 0.0;
    const double mu_norm = config.snr * config.sigma_p * std::sqrt(static_cast<double>(d));
    const double mu_bound = std::sqrt(2.0 * std::log(8.0 * m / delta)) * sigma0 * mu_norm;
    const double abs_bound = 4.0 * std::sqrt(std::log(8.0 * m * n / delta)) * agg_scale;
    const double max_lo = agg_scale / 4.0;
    const double max_hi = 2.0 * std::sqrt(std::log(8.0 * m * n / delta)) * agg_scale;

    auto body = [&](std::uint64_t seed) {
        DataConfig dc = config;
        dc.seed = seed;
        const Dataset ds = build_dataset(dc);
        Rng rng(mix_seed(seed, 0x1417ULL));
        ModelParams params;
        if (sigma0 > 0.0) {
            params = init_weights(m, d, sigma0, 3, rng);
        } else {
            params.w_plus = Eigen::MatrixXd::Zero(m, d);
            params.w_minus = Eigen::MatrixXd::Zero(m, d);
        }

        TrialOutcome out;
        out.margin = kInf;
        for (int j = 0; j < 2; ++j) {
            const double js = bank_sign(j);
            const Eigen::VectorXd mu_dot = params.bank(j) * ds.mu;
            out.margin =
                std::min(out.margin, upper_margin(mu_dot.cwiseAbs().maxCoeff(), mu_bound));

            const Eigen::MatrixXd agg_dot = params.bank(j) * ds.agg_noise.transpose();  // m x n
            out.margin = std::min(
                out.margin, upper_margin(agg_dot.cwiseAbs().maxCoeff(), abs_bound));
            for (int i = 0; i < n; ++i) {
                const double max_signed = (js * agg_dot.col(i)).maxCoeff();
                out.margin = std::min(out.margin, upper_margin(max_signed, max_hi));
                // strict: the lower bound must be exceeded, so sigma0 = 0 is reported
                out.margin = std::min(out.margin,
                                      max_signed > max_lo ? (max_signed - max_lo) /
                                                                std::max(max_lo, 1e-300)
                                                          : -1.0);
            }
        }
        out.pass = out.margin >= 0.0;
        return out;
    };

    CheckReport report = run_trials("init_inner_products", config, trials, workers, body);
    const double needed =
        kPreconditionConstant * n * ps * std::log(static_cast<double>(n) * m / delta);
    if (static_cast<double>(d) < needed || ps <= 0.0) {
        report.preconditions_met = false;
        report.note = "preconditions unmet: d below n(p+s) log(nm/delta) scale";
    }
    return report;
}

PhaseVerdict phase_condition(int n, double snr, double p, double s, int q) {
    if (n < 1 || !(snr > 0.0) || p < 0.0 || s < 0.0)
        throw ConfigError("phase_condition: n, snr must be positive and p, s nonnegative");
    if (q < 2) throw ConfigError("phase_condition: q must be at least 2");

    PhaseVerdict v;
    v.n = n;
    v.snr = snr;
    v.p = p;
    v.s = s;
    v.q = q;
    v.cnn_score = n * std::pow(snr, q);
    v.gcn_score = v.cnn_score * std::pow(n * (p + s), 0.5 * (q - 2));
    v.cnn_benign = v.cnn_score >= 1.0;
    v.gcn_benign = v.gcn_score >= 1.0;
    return v;
}

double sigma0_upper_bound(int n, int d, int m, int q, double snr, double sigma_p,
                          double p, double s) {
    if (q <= 2) return std::numeric_limits<double>::quiet_NaN();
    const double mu_norm = snr * sigma_p * std::sqrt(static_cast<double>(d));
    const double ps = p + s;
    const double xi = ps > 0.0 ? (p - s) / ps : 0.0;
    const double agg = ps > 0.0 ? sigma_p * std::sqrt(d / (n * ps)) : kInf;
    const double tail = std::min(agg > 0.0 ? 1.0 / agg : kInf,
                                 (xi > 0.0 && mu_norm > 0.0) ? 1.0 / (xi * mu_norm) : kInf);
    const double m_part = std::pow(m, -2.0 / (q - 2));
    const double n_part = std::pow(n, -std::max(1.0 / (q - 2), 1.0));
    return m_part * n_part * tail;
}

} // namespace snmlab
