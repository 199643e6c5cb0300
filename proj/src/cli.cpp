#include "snmlab/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <sstream>

#include "CLI11.hpp"

#include "snmlab/config.hpp"
#include "snmlab/errors.hpp"
#include "snmlab/io.hpp"
#include "snmlab/theory_checks.hpp"

namespace snmlab {

namespace {

namespace fs = std::filesystem;

struct CliState {
    std::string config_file;
    std::vector<std::pair<std::string, std::string>> overrides;  // in parse order
};

void add_value_option(CLI::App& app, CliState& state, const std::string& key,
                      const std::string& description) {
    app.add_option_function<std::string>(
           "--" + key,
           [&state, key](const std::string& value) { state.overrides.emplace_back(key, value); },
           description)
        ->expected(1);
}

void add_bool_flag(CLI::App& app, CliState& state, const std::string& flag,
                   const std::string& key, const std::string& description) {
    app.add_flag_callback(
        flag, [&state, key]() { state.overrides.emplace_back(key, "true"); }, description);
}

void register_options(CLI::App& app, CliState& state) {
    app.add_option("--config", state.config_file,
                   "config file of `key = value` lines, # comments; flags override it");
    add_value_option(app, state, "n", "sample count (default 250)");
    add_value_option(app, state, "d", "per-patch dimension (default 500)");
    add_value_option(app, state, "snr", "signal-to-noise ratio ||mu||/(sigma_p sqrt(d)) (default 0.05)");
    add_value_option(app, state, "sigma_p", "noise standard deviation (default 20)");
    add_value_option(app, state, "p", "same-class edge probability (default 0.5)");
    add_value_option(app, state, "s", "cross-class edge probability (default 0.08)");
    add_value_option(app, state, "label_mode", "balanced | iid (default balanced)");
    add_bool_flag(app, state, "--allow-heterophily", "allow_heterophily",
                  "permit p < s (off by default)");
    add_value_option(app, state, "seed", "master seed, 64-bit (default 42)");
    add_value_option(app, state, "m", "hidden width per bank (default 20)");
    add_value_option(app, state, "q", "activation exponent, q > 2 for strict use (default 3)");
    add_bool_flag(app, state, "--allow-q2", "allow_q2", "permit the diagnostic q = 2 mode");
    add_value_option(app, state, "sigma0", "weight init scale (default 0.001)");
    add_value_option(app, state, "eta", "learning rate (default 0.03)");
    add_value_option(app, state, "epochs",
                     "iteration budget (default: 100 for train, 200 for sweep)");
    add_value_option(app, state, "n_test", "Monte-Carlo test draws per evaluation (default 500)");
    add_value_option(app, state, "grad_check_every",
                     "run a gradient spot-check every k epochs, 0 = off (default 0)");
    add_bool_flag(app, state, "--coeff-trace", "coeff_trace",
                  "also write per-neuron coefficient trace CSVs (train)");
    add_value_option(app, state, "trials", "trials per concentration check (default 20)");
    add_value_option(app, state, "delta", "failure probability in lemma bounds (default 0.01)");
    add_value_option(app, state, "snr_values",
                     "sweep SNR axis, space/comma separated (default: 6 log-spaced in [0.045, 0.98])");
    add_value_option(app, state, "n_values",
                     "sweep n axis (default: 200 450 1000 2250)");
    add_value_option(app, state, "models", "sweep models, subset of {cnn, gcn} (default both)");
    add_value_option(app, state, "repeats", "sweep repeats per cell (default 3)");
    add_value_option(app, state, "workers", "worker threads, 0 = hardware (default 0)");
    add_bool_flag(app, state, "--full-grid", "full_grid",
                  "extend the sweep n axis to 7200 (default off)");
    add_value_option(app, state, "out", "output directory (default .)");
}

std::string out_path(const Options& options, const std::string& name) {
    return (fs::path(options.out) / name).string();
}

void write_manifest(const std::string& subcommand, const Options& options,
                    const std::vector<std::string>& outputs,
                    std::chrono::steady_clock::time_point started) {
    RunManifest manifest;
    manifest.subcommand = subcommand;
    manifest.options = options;
    manifest.outputs = outputs;
    manifest.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - started)
                               .count();
    write_text_file(out_path(options, "manifest_" + subcommand + ".txt"),
                    manifest_text(manifest));
}

int cmd_generate(const Options& options, std::ostream& out) {
    const auto started = std::chrono::steady_clock::now();
    const Dataset dataset = build_dataset(data_config_from(options));
    const std::string file = out_path(options, "dataset.txt");
    write_text_file(file, dump_dataset(dataset));
    out << "wrote " << file << " (n = " << dataset.n() << ", d = " << dataset.dim() << ")\n";
    write_manifest("generate", options, {"dataset.txt"}, started);
    return 0;
}

int cmd_train(Options options, std::ostream& out, std::ostream& err) {
    const auto started = std::chrono::steady_clock::now();
    options.epochs = options.epochs == -1 ? 100 : options.epochs;
    const DynamicsConfig config = dynamics_config_from(options);

    const DynamicsResult result = run_dynamics(config, &err);
    std::vector<std::string> outputs;
    for (const auto* pair : {&result.cnn, &result.gcn}) {
        const std::string name = std::string("dynamics_") + model_name(pair->config.model_kind) + ".csv";
        write_text_file(out_path(options, name), dynamics_csv(*pair));
        outputs.push_back(name);
        if (options.coeff_trace && pair->final_coeffs) {
            const std::string trace_name =
                std::string("coeff_trace_") + model_name(pair->config.model_kind) + ".csv";
            std::string csv = "epoch,j,r,gamma,max_rho_bar,min_rho_under\n" +
                              coeff_trace_rows(*pair->final_coeffs, pair->config.epochs);
            write_text_file(out_path(options, trace_name), csv);
            outputs.push_back(trace_name);
        }
    }

    for (const auto* pair : {&result.cnn, &result.gcn}) {
        const EpochMetrics& last = pair->metrics.back();
        out << model_name(pair->config.model_kind)
            << ": final train_acc = " << format_double(last.train_acc)
            << ", test_acc = " << format_double(last.test_acc)
            << ", max_gamma = " << format_double(std::max(last.max_gamma_plus, last.max_gamma_minus))
            << ", max_abs_rho = " << format_double(last.max_abs_rho) << "\n";
        out << "  homophily_event (min_i y_i*y~_i >= 0): "
            << (pair->homophily_event ? "true" : "false")
            << ", rho monotone: " << (pair->rho_bar_monotone && pair->rho_under_monotone ? "yes" : "NO")
            << ", coeff bound alpha = " << format_double(pair->coeff_alpha)
            << (pair->coeff_bound_exceeded ? " EXCEEDED (reported, not asserted)" : " ok") << "\n";
    }
    write_manifest("train", options, outputs, started);
    return 0;
}

int cmd_sweep(Options options, std::ostream& out) {
    const auto started = std::chrono::steady_clock::now();
    options.epochs = options.epochs == -1 ? 200 : options.epochs;
    const SweepConfig config = sweep_config_from(options);

    const SweepGrid grid = run_phase_sweep(config, &out);

    std::vector<std::string> outputs = {"sweep.csv"};
    write_text_file(out_path(options, "sweep.csv"), sweep_csv(grid));
    for (ModelKind kind : config.models) {
        const std::string name = std::string("heatmap_") + model_name(kind) + ".pgm";
        write_text_file(out_path(options, name), render_heatmap(grid, kind));
        outputs.push_back(name);
    }
    outputs.push_back("sweep_manifest.txt");
    write_text_file(out_path(options, "sweep_manifest.txt"), sweep_manifest(config, outputs));
    out << "sweep complete: " << grid.cells.size() << " runs\n";
    write_manifest("sweep", options, outputs, started);
    return 0;
}

int cmd_verify_lemmas(const Options& options, std::ostream& out) {
    const auto started = std::chrono::steady_clock::now();

    // Each check defaults to its canonical regime; explicitly set keys override.
    auto regime = [&](int n, int d, double snr, double sigma_p, double p, double s,
                      std::uint64_t tag) {
        DataConfig dc;
        dc.n = options.is_explicit("n") ? options.n : n;
        dc.d = options.is_explicit("d") ? options.d : d;
        dc.snr = options.is_explicit("snr") ? options.snr : snr;
        dc.sigma_p = options.is_explicit("sigma_p") ? options.sigma_p : sigma_p;
        dc.p = options.is_explicit("p") ? options.p : p;
        dc.s = options.is_explicit("s") ? options.s : s;
        dc.label_mode = options.label_mode == "iid" ? LabelMode::Iid : LabelMode::Balanced;
        dc.allow_heterophily = options.allow_heterophily;
        dc.seed = mix_seed(options.seed, tag);
        return dc;
    };

    std::vector<CheckReport> reports;
    reports.push_back(check_noise_geometry(regime(100, 10000, 0.05, 1.0, 0.5, 0.08, 0xA1),
                                           options.trials, options.delta, options.workers));
    reports.push_back(check_degree_concentration(regime(1000, 10, 0.05, 1.0, 0.5, 0.08, 0xA3),
                                                 options.trials, options.workers));
    reports.push_back(check_label_homophily(regime(1000, 10, 0.05, 1.0, 0.5, 0.08, 0xA4),
                                            options.trials, options.workers));
    reports.push_back(check_agg_noise_norm(regime(1000, 50000, 0.05, 1.0, 0.5, 0.08, 0xA5),
                                           options.trials, options.workers));
    reports.push_back(check_init_inner_products(regime(250, 500, 0.05, 20.0, 0.5, 0.08, 0xA6),
                                                options.m, options.sigma0, options.trials,
                                                options.delta, options.workers));

    bool all_pass = true;
    for (const CheckReport& report : reports) {
        out << report.name << ' ' << report.passed << '/' << report.attempted
            << " worst_margin=" << format_double(report.worst_margin) << ' '
            << (report.pass() ? "PASS" : "FAIL");
        if (report.skipped) out << " (skipped)";
        if (!report.preconditions_met) out << " (preconditions unmet)";
        if (!report.note.empty()) out << " -- " << report.note;
        for (const auto& [key, value] : report.stats)
            out << ' ' << key << '=' << format_double(value);
        out << '\n';
        if (!report.pass()) all_pass = false;
    }
    write_manifest("verify-lemmas", options, {}, started);
    return all_pass ? 0 : 1;
}

int cmd_phase(const Options& options, std::ostream& out) {
    const auto started = std::chrono::steady_clock::now();
    const PhaseVerdict verdict =
        phase_condition(options.n, options.snr, options.p, options.s, options.q);
    out << "n = " << verdict.n << ", snr = " << format_double(verdict.snr)
        << ", p = " << format_double(verdict.p) << ", s = " << format_double(verdict.s)
        << ", q = " << verdict.q << "\n";
    out << "cnn_score = " << format_double(verdict.cnn_score) << " ("
        << (verdict.cnn_benign ? "benign" : "harmful") << ")\n";
    out << "gcn_score = " << format_double(verdict.gcn_score) << " ("
        << (verdict.gcn_benign ? "benign" : "harmful") << ")\n";

    const double bound = sigma0_upper_bound(options.n, options.d, options.m, options.q,
                                            options.snr, options.sigma_p, options.p, options.s);
    out << "sigma0 init-scale bound (hidden constants = 1): " << format_double(bound)
        << "; sigma0 = " << format_double(options.sigma0) << " is "
        << (options.sigma0 <= bound ? "below" : "ABOVE") << " it\n";
    write_manifest("phase", options, {}, started);
    return 0;
}

int cmd_gradcheck(const Options& options, std::ostream& out) {
    const auto started = std::chrono::steady_clock::now();
    const Dataset dataset = build_dataset(data_config_from(options));
    Rng init_rng(mix_seed(options.seed, kSeedTagInit));
    const ModelParams params =
        init_weights(options.m, options.d, options.sigma0, options.q, init_rng);

    bool ok = true;
    for (ModelKind kind : {ModelKind::Cnn, ModelKind::Gcn}) {
        Rng rng(mix_seed(options.seed, kind == ModelKind::Cnn ? 0xFD1ULL : 0xFD2ULL));
        const GradCheckResult result = grad_check(params, dataset, kind, 120, rng);
        out << model_name(kind) << " max rel error = " << format_double(result.max_rel_error)
            << " over " << result.coords_checked << " coordinates\n";
        if (!(result.max_rel_error <= 1e-4)) ok = false;
    }
    write_manifest("gradcheck", options, {}, started);
    return ok ? 0 : 1;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"snmlab: GCN-vs-CNN feature-learning laboratory on SNM-SBM data"};
    app.require_subcommand(1);
    CliState state;
    register_options(app, state);

    CLI::App* sub_generate = app.add_subcommand("generate", "draw a dataset and dump it");
    CLI::App* sub_train =
        app.add_subcommand("train", "train CNN and GCN on one draw, write dynamics CSVs");
    CLI::App* sub_sweep = app.add_subcommand("sweep", "run the SNR x n phase sweep");
    CLI::App* sub_verify =
        app.add_subcommand("verify-lemmas", "run the concentration checks");
    CLI::App* sub_phase = app.add_subcommand("phase", "print the benign/harmful phase verdict");
    CLI::App* sub_gradcheck =
        app.add_subcommand("gradcheck", "finite-difference check of both gradients");
    for (CLI::App* sub :
         {sub_generate, sub_train, sub_sweep, sub_verify, sub_phase, sub_gradcheck})
        sub->fallthrough();

    std::vector<std::string> cli_args(args.rbegin(), args.rend());  // CLI11 wants reversed
    try {
        app.parse(cli_args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        std::string file_text;
        if (!state.config_file.empty()) file_text = read_text_file(state.config_file);
        const Options options = parse_config(file_text, state.overrides);
        fs::create_directories(options.out);

        if (sub_generate->parsed()) return cmd_generate(options, out);
        if (sub_train->parsed()) return cmd_train(options, out, err);
        if (sub_sweep->parsed()) return cmd_sweep(options, out);
        if (sub_verify->parsed()) return cmd_verify_lemmas(options, out);
        if (sub_phase->parsed()) return cmd_phase(options, out);
        if (sub_gradcheck->parsed()) return cmd_gradcheck(options, out);
        err << "error: no subcommand\n" << app.help();
        return 2;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace snmlab
