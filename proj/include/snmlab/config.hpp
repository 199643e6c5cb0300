#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "snmlab/dataset.hpp"
#include "snmlab/experiments.hpp"

namespace snmlab {

inline constexpr const char* kArtifactVersion = "0.1.0";

// Every tunable of the artifact, flat. Precedence: flags > file > defaults.
struct Options {
    // data
    int n = 250;
    int d = 500;
    double snr = 0.05;
    double sigma_p = 20.0;
    double p = 0.5;
    double s = 0.08;
    std::string label_mode = "balanced";  // balanced | iid
    bool allow_heterophily = false;
    std::uint64_t seed = 42;

    // model
    int m = 20;
    int q = 3;
    double sigma0 = 1e-3;
    bool allow_q2 = false;

    // training
    double eta = 0.03;
    int epochs = -1;  // -1 = per-subcommand default (train 100, sweep 200)
    int n_test = 500;
    int grad_check_every = 0;
    bool coeff_trace = false;

    // theory checks
    int trials = 20;
    double delta = 0.01;

    // sweep
    std::vector<double> snr_values;  // empty = default axis
    std::vector<int> n_values;
    std::string models = "cnn gcn";
    int repeats = 3;
    int workers = 0;
    bool full_grid = false;

    // io
    std::string out = ".";

    // Keys set explicitly (by file or flag), for per-subcommand defaulting.
    std::set<std::string> explicit_keys;

    bool is_explicit(const std::string& key) const { return explicit_keys.count(key) > 0; }
};

// All recognized keys in manifest order.
const std::vector<std::string>& config_keys();

// Set one key from its string value; throws ConfigError (naming key and
// context) on unknown keys or unparseable values.
void apply_key(Options& options, const std::string& key, const std::string& value,
               const std::string& context);

// Line-oriented `key = value` text with # comments; unknown keys rejected with
// the offending line number. Later sources override earlier ones.
void apply_config_text(Options& options, const std::string& text);

// Defaults -> file -> flag overrides (in order).
Options parse_config(const std::string& file_text,
                     const std::vector<std::pair<std::string, std::string>>& flag_overrides);

// Cross-field constraint validation; throws ConfigError naming the constraint.
void validate_options(const Options& options);

std::string format_key_value(const Options& options, const std::string& key);

DataConfig data_config_from(const Options& options);
SweepConfig sweep_config_from(const Options& options);
DynamicsConfig dynamics_config_from(const Options& options);

// Run manifest: structured comments (version, subcommand, duration, outputs)
// followed by the full resolved configuration as plain `key = value` lines.
// The whole file re-parses as a config and reproduces the identical run.
struct RunManifest {
    std::string subcommand;
    Options options;
    std::vector<std::string> outputs;
    std::int64_t duration_ms = 0;
};

std::string manifest_text(const RunManifest& manifest);

} // namespace snmlab
