#include "snmlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "snmlab/errors.hpp"
#include "snmlab/io.hpp"

namespace snmlab {

namespace {

std::string trim(const std::string& text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return text.substr(begin, end - begin);
}

std::vector<std::string> split_list(const std::string& value) {
    std::string normalized = value;
    std::replace(normalized.begin(), normalized.end(), ',', ' ');
    return split_whitespace(normalized);
}

int to_int(const std::string& value, const std::string& key, const std::string& context) {
    std::int64_t parsed = 0;
    if (!parse_i64(value, parsed))
        throw ConfigError(context + ": key '" + key + "' expects an integer, got '" + value + "'");
    return static_cast<int>(parsed);
}

double to_double(const std::string& value, const std::string& key, const std::string& context) {
    double parsed = 0.0;
    if (!parse_double(value, parsed))
        throw ConfigError(context + ": key '" + key + "' expects a number, got '" + value + "'");
    return parsed;
}

bool to_bool(const std::string& value, const std::string& key, const std::string& context) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    throw ConfigError(context + ": key '" + key + "' expects true/false, got '" + value + "'");
}

} // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "n", "d", "snr", "sigma_p", "p", "s", "label_mode", "allow_heterophily", "seed",
        "m", "q", "sigma0", "allow_q2",
        "eta", "epochs", "n_test", "grad_check_every", "coeff_trace",
        "trials", "delta",
        "snr_values", "n_values", "models", "repeats", "workers", "full_grid",
        "out"};
    return keys;
}

void apply_key(Options& o, const std::string& key, const std::string& value,
               const std::string& context) {
    if (key == "n") o.n = to_int(value, key, context);
    else if (key == "d") o.d = to_int(value, key, context);
    else if (key == "snr") o.snr = to_double(value, key, context);
    else if (key == "sigma_p") o.sigma_p = to_double(value, key, context);
    else if (key == "p") o.p = to_double(value, key, context);
    else if (key == "s") o.s = to_double(value, key, context);
    else if (key == "label_mode") {
        if (value != "balanced" && value != "iid")
            throw ConfigError(context + ": label_mode must be 'balanced' or 'iid', got '" +
                              value + "'");
        o.label_mode = value;
    } else if (key == "allow_heterophily") o.allow_heterophily = to_bool(value, key, context);
    else if (key == "seed") {
        std::uint64_t parsed = 0;
        if (!parse_u64(value, parsed))
            throw ConfigError(context + ": key 'seed' expects a 64-bit unsigned integer, got '" +
                              value + "'");
        o.seed = parsed;
    } else if (key == "m") o.m = to_int(value, key, context);
    else if (key == "q") o.q = to_int(value, key, context);
    else if (key == "sigma0") o.sigma0 = to_double(value, key, context);
    else if (key == "allow_q2") o.allow_q2 = to_bool(value, key, context);
    else if (key == "eta") o.eta = to_double(value, key, context);
    else if (key == "epochs") o.epochs = to_int(value, key, context);
    else if (key == "n_test") o.n_test = to_int(value, key, context);
    else if (key == "grad_check_every") o.grad_check_every = to_int(value, key, context);
    else if (key == "coeff_trace") o.coeff_trace = to_bool(value, key, context);
    else if (key == "trials") o.trials = to_int(value, key, context);
    else if (key == "delta") o.delta = to_double(value, key, context);
    else if (key == "snr_values") {
        o.snr_values.clear();
        for (const std::string& token : split_list(value))
            o.snr_values.push_back(to_double(token, key, context));
    } else if (key == "n_values") {
        o.n_values.clear();
        for (const std::string& token : split_list(value))
            o.n_values.push_back(to_int(token, key, context));
    } else if (key == "models") {
        for (const std::string& token : split_list(value))
            if (token != "cnn" && token != "gcn")
                throw ConfigError(context + ": models must be a subset of {cnn, gcn}, got '" +
                                  token + "'");
        if (split_list(value).empty())
            throw ConfigError(context + ": models must be nonempty");
        o.models = trim(value);
    } else if (key == "repeats") o.repeats = to_int(value, key, context);
    else if (key == "workers") o.workers = to_int(value, key, context);
    else if (key == "full_grid") o.full_grid = to_bool(value, key, context);
    else if (key == "out") o.out = value;
    else
        throw ConfigError(context + ": unknown key '" + key + "'");
    o.explicit_keys.insert(key);
}

void apply_config_text(Options& options, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        const std::string context = "config line " + format_int(line_no);
        if (eq == std::string::npos)
            throw ConfigError(context + ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(context + ": empty key");
        apply_key(options, key, value, context);
    }
}

Options parse_config(const std::string& file_text,
                     const std::vector<std::pair<std::string, std::string>>& flag_overrides) {
    Options options;
    apply_config_text(options, file_text);
    for (const auto& [key, value] : flag_overrides)
        apply_key(options, key, value, "flag --" + key);
    validate_options(options);
    return options;
}

void validate_options(const Options& o) {
    if (o.q < 2)
        throw ConfigError("constraint violated: q >= 2 is required (got q = " +
                          format_int(o.q) + ")");
    if (o.q == 2 && !o.allow_q2)
        throw ConfigError("constraint violated: strict use requires q > 2; "
                          "q = 2 is a diagnostic mode, enable it with allow_q2");
    if (!(o.sigma0 > 0.0))
        throw ConfigError("constraint violated: sigma0 must be positive (got " +
                          format_double(o.sigma0) + ")");
    if (o.m < 1)
        throw ConfigError("constraint violated: m must be at least 1 (got " +
                          format_int(o.m) + ")");
    if (!(o.eta >= 0.0))
        throw ConfigError("constraint violated: eta must be nonnegative (got " +
                          format_double(o.eta) + ")");
    if (o.epochs != -1 && o.epochs < 1)
        throw ConfigError("constraint violated: epochs must be at least 1 (got " +
                          format_int(o.epochs) + ")");
    if (o.n_test < 1)
        throw ConfigError("constraint violated: n_test must be at least 1");
    if (o.trials < 1)
        throw ConfigError("constraint violated: trials must be at least 1");
    if (!(o.delta > 0.0 && o.delta < 1.0))
        throw ConfigError("constraint violated: delta must lie in (0,1)");
    if (o.repeats < 1)
        throw ConfigError("constraint violated: repeats must be at least 1");
    if (o.workers < 0)
        throw ConfigError("constraint violated: workers must be nonnegative");
    // Full data-side validation (n, d, snr, sigma_p, p/s ranges, homophily,
    // balanced parity) lives in DataConfig::validate.
    data_config_from(o).validate();
}

std::string format_key_value(const Options& o, const std::string& key) {
    auto list_d = [](const std::vector<double>& values) {
        std::string out;
        for (double v : values) {
            if (!out.empty()) out += ' ';
            out += format_double(v);
        }
        return out;
    };
    auto list_i = [](const std::vector<int>& values) {
        std::string out;
        for (int v : values) {
            if (!out.empty()) out += ' ';
            out += format_int(v);
        }
        return out;
    };
    auto b = [](bool v) { return std::string(v ? "true" : "false"); };

    if (key == "n") return format_int(o.n);
    if (key == "d") return format_int(o.d);
    if (key == "snr") return format_double(o.snr);
    if (key == "sigma_p") return format_double(o.sigma_p);
    if (key == "p") return format_double(o.p);
    if (key == "s") return format_double(o.s);
    if (key == "label_mode") return o.label_mode;
    if (key == "allow_heterophily") return b(o.allow_heterophily);
    if (key == "seed") return format_u64(o.seed);
    if (key == "m") return format_int(o.m);
    if (key == "q") return format_int(o.q);
    if (key == "sigma0") return format_double(o.sigma0);
    if (key == "allow_q2") return b(o.allow_q2);
    if (key == "eta") return format_double(o.eta);
    if (key == "epochs") return format_int(o.epochs);
    if (key == "n_test") return format_int(o.n_test);
    if (key == "grad_check_every") return format_int(o.grad_check_every);
    if (key == "coeff_trace") return b(o.coeff_trace);
    if (key == "trials") return format_int(o.trials);
    if (key == "delta") return format_double(o.delta);
    if (key == "snr_values")
        return list_d(o.snr_values.empty() ? default_snr_values() : o.snr_values);
    if (key == "n_values")
        return list_i(o.n_values.empty() ? default_n_values(o.full_grid) : o.n_values);
    if (key == "models") return o.models;
    if (key == "repeats") return format_int(o.repeats);
    if (key == "workers") return format_int(o.workers);
    if (key == "full_grid") return b(o.full_grid);
    if (key == "out") return o.out;
    throw ConfigError("format_key_value: unknown key '" + key + "'");
}

DataConfig data_config_from(const Options& o) {
    DataConfig dc;
    dc.n = o.n;
    dc.d = o.d;
    dc.snr = o.snr;
    dc.sigma_p = o.sigma_p;
    dc.p = o.p;
    dc.s = o.s;
    dc.label_mode = o.label_mode == "iid" ? LabelMode::Iid : LabelMode::Balanced;
    dc.seed = o.seed;
    dc.allow_heterophily = o.allow_heterophily;
    return dc;
}

SweepConfig sweep_config_from(const Options& o) {
    SweepConfig sc;
    sc.snr_values = o.snr_values.empty() ? default_snr_values() : o.snr_values;
    sc.n_values = o.n_values.empty() ? default_n_values(o.full_grid) : o.n_values;
    sc.models.clear();
    {
        std::string normalized = o.models;
        std::replace(normalized.begin(), normalized.end(), ',', ' ');
        for (const std::string& token : split_whitespace(normalized))
            sc.models.push_back(token == "cnn" ? ModelKind::Cnn : ModelKind::Gcn);
    }
    sc.d = o.d;
    sc.sigma_p = o.sigma_p;
    sc.p = o.p;
    sc.s = o.s;
    sc.label_mode = o.label_mode == "iid" ? LabelMode::Iid : LabelMode::Balanced;
    sc.q = o.q;
    sc.eta = o.eta;
    sc.m = o.m;
    sc.sigma0 = o.sigma0;
    sc.epochs = o.epochs == -1 ? 200 : o.epochs;
    sc.n_test = o.n_test;
    sc.repeats = o.repeats;
    sc.master_seed = o.seed;
    sc.workers = o.workers;
    return sc;
}

DynamicsConfig dynamics_config_from(const Options& o) {
    DynamicsConfig dyn;
    dyn.data = data_config_from(o);
    dyn.m = o.m;
    dyn.q = o.q;
    dyn.sigma0 = o.sigma0;
    dyn.eta = o.eta;
    dyn.epochs = o.epochs == -1 ? 100 : o.epochs;
    dyn.n_test = o.n_test;
    dyn.grad_check_every = o.grad_check_every;
    dyn.master_seed = o.seed;
    return dyn;
}

std::string manifest_text(const RunManifest& manifest) {
    std::ostringstream out;
    out << "# snmlab run manifest\n";
    out << "# version: " << kArtifactVersion << '\n';
    out << "# subcommand: " << manifest.subcommand << '\n';
    out << "# duration_ms: " << format_int(manifest.duration_ms) << '\n';
    for (const std::string& file : manifest.outputs) out << "# output: " << file << '\n';
    for (const std::string& key : config_keys())
        out << key << " = " << format_key_value(manifest.options, key) << '\n';
    return out.str();
}

} // namespace snmlab
