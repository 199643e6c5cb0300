#include "snmlab/dataset.hpp"

#include <cmath>
#include <sstream>

#include "snmlab/errors.hpp"
#include "snmlab/io.hpp"

namespace snmlab {

void DataConfig::validate() const {
    if (n < 2) throw ConfigError("n must be at least 2 (got " + format_int(n) + ")");
    if (d < 1) throw ConfigError("d must be positive (got " + format_int(d) + ")");
    if (!(snr > 0.0)) throw ConfigError("snr must be positive (got " + format_double(snr) + ")");
    if (!(sigma_p > 0.0)) throw ConfigError("sigma_p must be positive (got " + format_double(sigma_p) + ")");
    if (p < 0.0 || p > 1.0) throw ConfigError("p must lie in [0,1] (got " + format_double(p) + ")");
    if (s < 0.0 || s > 1.0) throw ConfigError("s must lie in [0,1] (got " + format_double(s) + ")");
    if (p < s && !allow_heterophily)
        throw ConfigError("p < s (heterophily) requires allow_heterophily; got p = " +
                          format_double(p) + ", s = " + format_double(s));
    if (label_mode == LabelMode::Balanced && n % 2 != 0)
        throw ConfigError("balanced labels need even n (got " + format_int(n) + ")");
}

Eigen::VectorXd make_signal(int d, double snr, double sigma_p, Rng& rng) {
    if (d < 1) throw ConfigError("make_signal: d must be positive");
    if (!(snr > 0.0)) throw ConfigError("make_signal: snr must be positive");
    if (!(sigma_p > 0.0)) throw ConfigError("make_signal: sigma_p must be positive");

    Eigen::VectorXd direction(d);
    double norm_sq = 0.0;
    do {
        for (int k = 0; k < d; ++k) direction[k] = rng.gaussian();
        norm_sq = direction.squaredNorm();
    } while (norm_sq == 0.0);

    const double target_norm = snr * sigma_p * std::sqrt(static_cast<double>(d));
    return direction * (target_norm / std::sqrt(norm_sq));
}

Eigen::VectorXd sample_noise(const Eigen::VectorXd& mu, double sigma_p, Rng& rng) {
    const double mu_norm_sq = mu.squaredNorm();
    if (!(mu_norm_sq > 0.0)) throw ConfigError("sample_noise: mu must be nonzero");

    Eigen::VectorXd g(mu.size());
    for (Eigen::Index k = 0; k < g.size(); ++k) g[k] = rng.gaussian(0.0, sigma_p);
    // Exact projection: the returned vector is orthogonal to mu up to rounding.
    return g - (g.dot(mu) / mu_norm_sq) * mu;
}

Eigen::VectorXd sample_labels(int n, LabelMode mode, Rng& rng) {
    Eigen::VectorXd y(n);
    if (mode == LabelMode::Balanced) {
        // Exactly n/2 per class, interleaved.
        for (int i = 0; i < n; ++i) y[i] = (i % 2 == 0) ? 1.0 : -1.0;
    } else {
        for (int i = 0; i < n; ++i) y[i] = rng.rademacher();
    }
    return y;
}

Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>
sample_adjacency(const Eigen::VectorXd& labels, double p, double s, Rng& rng) {
    const int n = static_cast<int>(labels.size());
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> adj(n, n);
    adj.setZero();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double prob = (labels[i] == labels[j]) ? p : s;
            if (rng.bernoulli(prob)) {
                adj(i, j) = 1;
                adj(j, i) = 1;
            }
        }
    }
    return adj;
}

namespace {

// Self-loop aggregation: N(i) contains i, D_i = 1 + sum_j A_ij.
void compute_aggregates(Dataset& ds) {
    const int n = ds.n();
    ds.degrees.resize(n);
    ds.agg_labels.resize(n);
    ds.agg_noise.resize(n, ds.dim());
    for (int i = 0; i < n; ++i) {
        int deg = 1;
        double label_sum = ds.labels[i];
        Eigen::RowVectorXd noise_sum = ds.noise.row(i);
        for (int k = 0; k < n; ++k) {
            if (ds.adj(i, k)) {
                ++deg;
                label_sum += ds.labels[k];
                noise_sum += ds.noise.row(k);
            }
        }
        ds.degrees[i] = deg;
        const double inv_deg = 1.0 / static_cast<double>(deg);
        ds.agg_labels[i] = label_sum * inv_deg;
        ds.agg_noise.row(i) = noise_sum * inv_deg;
    }
}

} // namespace

Dataset build_dataset(const DataConfig& config) {
    config.validate();
    Rng rng(config.seed);

    Dataset ds;
    ds.config = config;
    ds.mu = make_signal(config.d, config.snr, config.sigma_p, rng);
    ds.mu_norm_sq = ds.mu.squaredNorm();
    ds.labels = sample_labels(config.n, config.label_mode, rng);

    ds.noise.resize(config.n, config.d);
    for (int i = 0; i < config.n; ++i)
        ds.noise.row(i) = sample_noise(ds.mu, config.sigma_p, rng).transpose();
    ds.noise_norm_sq = ds.noise.rowwise().squaredNorm();

    ds.adj = sample_adjacency(ds.labels, config.p, config.s, rng);
    compute_aggregates(ds);
    return ds;
}

TestNode attach_test_node(const Dataset& dataset, double y_test, Rng& rng) {
    if (y_test != 1.0 && y_test != -1.0)
        throw ConfigError("attach_test_node: label must be +1 or -1");

    TestNode node;
    node.label = y_test;
    Eigen::VectorXd xi = sample_noise(dataset.mu, dataset.config.sigma_p, rng);

    // Self-loop plus Ber(p)/Ber(s) edges to each training node by class match.
    int degree = 1;
    double label_sum = y_test;
    Eigen::VectorXd noise_sum = xi;
    const int n = dataset.n();
    for (int k = 0; k < n; ++k) {
        const double prob = (dataset.labels[k] == y_test) ? dataset.config.p : dataset.config.s;
        if (rng.bernoulli(prob)) {
            ++degree;
            label_sum += dataset.labels[k];
            noise_sum += dataset.noise.row(k).transpose();
        }
    }
    node.degree = degree;
    const double inv_deg = 1.0 / static_cast<double>(degree);
    node.agg_label = label_sum * inv_deg;
    node.agg_noise = noise_sum * inv_deg;
    return node;
}

std::string dump_dataset(const Dataset& ds) {
    std::ostringstream out;
    const DataConfig& c = ds.config;
    out << "snm-sbm v1 " << format_int(c.n) << ' ' << format_int(c.d) << ' '
        << format_double(c.p) << ' ' << format_double(c.s) << ' '
        << format_double(c.sigma_p) << ' ' << format_double(c.snr) << ' '
        << format_u64(c.seed) << '\n';

    for (int k = 0; k < c.d; ++k) {
        if (k) out << ' ';
        out << format_double(ds.mu[k]);
    }
    out << '\n';
    for (int i = 0; i < c.n; ++i) {
        if (i) out << ' ';
        out << format_int(static_cast<std::int64_t>(ds.labels[i]));
    }
    out << '\n';
    for (int i = 0; i < c.n; ++i) {
        for (int k = 0; k < c.d; ++k) {
            if (k) out << ' ';
            out << format_double(ds.noise(i, k));
        }
        out << '\n';
    }
    // Lower triangle, row i over columns 0..i-1, as 0/1 characters.
    for (int i = 1; i < c.n; ++i) {
        for (int j = 0; j < i; ++j) out << (ds.adj(i, j) ? '1' : '0');
        out << '\n';
    }
    return out.str();
}

Dataset load_dataset(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("dataset dump: empty input");
    auto header = split_whitespace(line);
    if (header.size() != 9 || header[0] != "snm-sbm" || header[1] != "v1")
        throw ConfigError("dataset dump: bad header");

    Dataset ds;
    std::int64_t n64 = 0, d64 = 0;
    std::uint64_t seed = 0;
    if (!parse_i64(header[2], n64) || !parse_i64(header[3], d64) ||
        !parse_double(header[4], ds.config.p) || !parse_double(header[5], ds.config.s) ||
        !parse_double(header[6], ds.config.sigma_p) || !parse_double(header[7], ds.config.snr) ||
        !parse_u64(header[8], seed))
        throw ConfigError("dataset dump: unparseable header field");
    const int n = static_cast<int>(n64);
    const int d = static_cast<int>(d64);
    ds.config.n = n;
    ds.config.d = d;
    ds.config.seed = seed;

    auto read_row = [&](Eigen::Index expected) {
        if (!std::getline(in, line)) throw ConfigError("dataset dump: truncated");
        auto tokens = split_whitespace(line);
        if (static_cast<Eigen::Index>(tokens.size()) != expected)
            throw ConfigError("dataset dump: wrong row length");
        Eigen::VectorXd row(expected);
        for (Eigen::Index k = 0; k < expected; ++k)
            if (!parse_double(tokens[static_cast<std::size_t>(k)], row[k]))
                throw ConfigError("dataset dump: bad decimal");
        return row;
    };

    ds.mu = read_row(d);
    ds.mu_norm_sq = ds.mu.squaredNorm();
    ds.labels = read_row(n);
    ds.noise.resize(n, d);
    for (int i = 0; i < n; ++i) ds.noise.row(i) = read_row(d).transpose();
    ds.noise_norm_sq = ds.noise.rowwise().squaredNorm();

    ds.adj.resize(n, n);
    ds.adj.setZero();
    for (int i = 1; i < n; ++i) {
        if (!std::getline(in, line)) throw ConfigError("dataset dump: truncated adjacency");
        if (static_cast<int>(line.size()) != i) throw ConfigError("dataset dump: bad bitrow length");
        for (int j = 0; j < i; ++j) {
            if (line[static_cast<std::size_t>(j)] == '1') {
                ds.adj(i, j) = 1;
                ds.adj(j, i) = 1;
            } else if (line[static_cast<std::size_t>(j)] != '0') {
                throw ConfigError("dataset dump: bitrow must be 0/1");
            }
        }
    }

    // Aggregates are derived data; recompute them from the stored parts.
    compute_aggregates(ds);
    return ds;
}

} // namespace snmlab
