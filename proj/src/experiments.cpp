#include "snmlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "snmlab/errors.hpp"
#include "snmlab/io.hpp"

namespace snmlab {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

TrainRecord train_one_model(const Dataset& dataset, ModelKind kind, int m, int q,
                            double sigma0, double eta, int epochs, int n_test,
                            bool track, int eval_every, int grad_check_every,
                            std::uint64_t init_seed, std::uint64_t eval_seed,
                            std::ostream* log) {
    Rng init_rng(init_seed);
    const ModelParams initial = init_weights(m, dataset.dim(), sigma0, q, init_rng);
    TrainConfig tc;
    tc.eta = eta;
    tc.epochs = epochs;
    tc.model_kind = kind;
    tc.n_test = n_test;
    tc.track_decomposition = track;
    tc.eval_every = eval_every;
    tc.grad_check_every = grad_check_every;
    tc.eval_seed = eval_seed;
    return train(dataset, initial, tc, log);
}

} // namespace

DynamicsResult run_dynamics(const DynamicsConfig& config, std::ostream* log) {
    DataConfig dc = config.data;
    dc.seed = mix_seed(config.master_seed, kSeedTagData);
    const Dataset dataset = build_dataset(dc);

    const std::uint64_t init_seed = mix_seed(config.master_seed, kSeedTagInit);
    const std::uint64_t eval_seed = mix_seed(config.master_seed, kSeedTagEval);

    DynamicsResult result;
    for (ModelKind kind : {ModelKind::Cnn, ModelKind::Gcn}) {
        TrainRecord record =
            train_one_model(dataset, kind, config.m, config.q, config.sigma0, config.eta,
                            config.epochs, config.n_test, /*track=*/true,
                            /*eval_every=*/1, config.grad_check_every, init_seed,
                            eval_seed, log);
        (kind == ModelKind::Cnn ? result.cnn : result.gcn) = std::move(record);
    }
    return result;
}

void SweepConfig::validate() const {
    if (snr_values.empty()) throw ConfigError("sweep: snr_values must be nonempty");
    if (n_values.empty()) throw ConfigError("sweep: n_values must be nonempty");
    if (models.empty()) throw ConfigError("sweep: models must be nonempty");
    if (epochs < 1) throw ConfigError("sweep: epochs must be at least 1");
    if (repeats < 1) throw ConfigError("sweep: repeats must be at least 1");
    for (double v : snr_values)
        if (!(v > 0.0)) throw ConfigError("sweep: snr values must be positive");
    for (int v : n_values)
        if (v < 2) throw ConfigError("sweep: n values must be at least 2");
}

std::uint64_t sweep_cell_seed(std::uint64_t master, ModelKind model, int n_index,
                              int snr_index, int repeat) {
    std::uint64_t h = mix_seed(master, kSeedTagCell);
    h = mix_seed(h, model == ModelKind::Cnn ? 0u : 1u);
    h = mix_seed(h, static_cast<std::uint64_t>(n_index));
    h = mix_seed(h, static_cast<std::uint64_t>(snr_index));
    return mix_seed(h, static_cast<std::uint64_t>(repeat));
}

std::uint64_t sweep_dataset_seed(std::uint64_t master, int n_index, int snr_index,
                                 int repeat) {
    std::uint64_t h = mix_seed(master, kSeedTagData);
    h = mix_seed(h, static_cast<std::uint64_t>(n_index));
    h = mix_seed(h, static_cast<std::uint64_t>(snr_index));
    return mix_seed(h, static_cast<std::uint64_t>(repeat));
}

std::uint64_t sweep_init_seed(std::uint64_t master, int n_index, int snr_index,
                              int repeat) {
    std::uint64_t h = mix_seed(master, kSeedTagInit);
    h = mix_seed(h, static_cast<std::uint64_t>(n_index));
    h = mix_seed(h, static_cast<std::uint64_t>(snr_index));
    return mix_seed(h, static_cast<std::uint64_t>(repeat));
}

const Eigen::MatrixXd& SweepGrid::accuracy(ModelKind kind) const {
    for (std::size_t idx = 0; idx < models.size(); ++idx)
        if (models[idx] == kind) return mean_acc[idx];
    throw ConfigError("sweep grid has no data for model " + std::string(model_name(kind)));
}

SweepGrid run_phase_sweep(const SweepConfig& config, std::ostream* log) {
    config.validate();

    SweepGrid grid;
    grid.snr_values = config.snr_values;
    grid.n_values = config.n_values;
    grid.models = config.models;

    const int n_models = static_cast<int>(config.models.size());
    const int n_rows = static_cast<int>(config.n_values.size());
    const int n_cols = static_cast<int>(config.snr_values.size());
    const int n_jobs = n_rows * n_cols * config.repeats;

    // cells in canonical (model, n, snr, repeat) order, filled by slot index.
    grid.cells.resize(static_cast<std::size_t>(n_models) * n_jobs);
    auto slot = [&](int model_idx, int ni, int si, int rep) {
        return ((static_cast<std::size_t>(model_idx) * n_rows + ni) * n_cols + si) *
                   config.repeats +
               rep;
    };

    std::mutex log_mutex;
    std::atomic<int> next_job{0};

    // One job covers every model on one (n, snr, repeat) triple so the shared
    // dataset draw is built once.
    auto worker = [&]() {
        for (;;) {
            const int job = next_job.fetch_add(1);
            if (job >= n_jobs) return;
            const int rep = job % config.repeats;
            const int si = (job / config.repeats) % n_cols;
            const int ni = job / (config.repeats * n_cols);

            DataConfig dc;
            dc.n = config.n_values[static_cast<std::size_t>(ni)];
            dc.d = config.d;
            dc.snr = config.snr_values[static_cast<std::size_t>(si)];
            dc.sigma_p = config.sigma_p;
            dc.p = config.p;
            dc.s = config.s;
            dc.label_mode = config.label_mode;
            dc.seed = sweep_dataset_seed(config.master_seed, ni, si, rep);
            const Dataset dataset = build_dataset(dc);
            const std::uint64_t init_seed =
                sweep_init_seed(config.master_seed, ni, si, rep);

            for (int mi = 0; mi < n_models; ++mi) {
                const ModelKind kind = config.models[static_cast<std::size_t>(mi)];
                CellResult cell;
                cell.model = kind;
                cell.n_index = ni;
                cell.snr_index = si;
                cell.repeat = rep;
                cell.seed = sweep_cell_seed(config.master_seed, kind, ni, si, rep);
                try {
                    const TrainRecord record = train_one_model(
                        dataset, kind, config.m, config.q, config.sigma0, config.eta,
                        config.epochs, config.n_test, /*track=*/false,
                        /*eval_every=*/0, /*grad_check_every=*/0, init_seed, cell.seed,
                        nullptr);
                    cell.final_train_acc = record.metrics.back().train_acc;
                    cell.final_test_acc = record.metrics.back().test_acc;
                } catch (const DivergenceError& e) {
                    cell.final_train_acc = kNaN;
                    cell.final_test_acc = kNaN;
                    if (log) {
                        std::lock_guard<std::mutex> guard(log_mutex);
                        (*log) << "warning: diverged cell model=" << model_name(kind)
                               << " n=" << dc.n << " snr=" << format_double(dc.snr)
                               << " repeat=" << rep << ": " << e.what() << "\n";
                    }
                }
                grid.cells[slot(mi, ni, si, rep)] = cell;
                if (log) {
                    std::lock_guard<std::mutex> guard(log_mutex);
                    (*log) << "cell model=" << model_name(kind) << " n=" << dc.n
                           << " snr=" << format_double(dc.snr) << " repeat=" << rep
                           << " seed=" << format_u64(cell.seed)
                           << " train_acc=" << format_double(cell.final_train_acc)
                           << " test_acc=" << format_double(cell.final_test_acc) << "\n";
                }
            }
        }
    };

    int workers = config.workers;
    if (workers <= 0) {
        const unsigned hc = std::thread::hardware_concurrency();
        workers = hc > 0 ? static_cast<int>(hc) : 1;
    }
    workers = std::max(1, std::min(workers, n_jobs));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Means over repeats, NaN cells excluded.
    grid.mean_acc.assign(static_cast<std::size_t>(n_models),
                         Eigen::MatrixXd::Constant(n_rows, n_cols, kNaN));
    for (int mi = 0; mi < n_models; ++mi) {
        for (int ni = 0; ni < n_rows; ++ni) {
            for (int si = 0; si < n_cols; ++si) {
                double sum = 0.0;
                int count = 0;
                for (int rep = 0; rep < config.repeats; ++rep) {
                    const double acc =
                        grid.cells[slot(mi, ni, si, rep)].final_test_acc;
                    if (!std::isnan(acc)) {
                        sum += acc;
                        ++count;
                    }
                }
                if (count > 0)
                    grid.mean_acc[static_cast<std::size_t>(mi)](ni, si) = sum / count;
            }
        }
    }
    return grid;
}

std::string sweep_csv(const SweepGrid& grid) {
    std::ostringstream out;
    out << "model,n,snr,repeat,seed,final_train_acc,final_test_acc\n";
    for (const CellResult& cell : grid.cells) {
        out << model_name(cell.model) << ','
            << format_int(grid.n_values[static_cast<std::size_t>(cell.n_index)]) << ','
            << format_double(grid.snr_values[static_cast<std::size_t>(cell.snr_index)])
            << ',' << format_int(cell.repeat) << ',' << format_u64(cell.seed) << ','
            << format_double(cell.final_train_acc) << ','
            << format_double(cell.final_test_acc) << '\n';
    }
    return out.str();
}

std::string render_heatmap(const SweepGrid& grid, ModelKind kind) {
    if (grid.n_values.empty() || grid.snr_values.empty())
        throw ConfigError("render_heatmap: empty grid");
    const Eigen::MatrixXd& acc = grid.accuracy(kind);

    // Largest n at the top; stable on ties.
    std::vector<int> order(grid.n_values.size());
    for (std::size_t idx = 0; idx < order.size(); ++idx) order[idx] = static_cast<int>(idx);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return grid.n_values[static_cast<std::size_t>(a)] >
               grid.n_values[static_cast<std::size_t>(b)];
    });

    std::ostringstream out;
    out << "P2\n"
        << grid.snr_values.size() << ' ' << grid.n_values.size() << "\n255\n";
    for (int row : order) {
        for (Eigen::Index col = 0; col < acc.cols(); ++col) {
            const double value = acc(row, col);
            int pixel = 0;
            if (!std::isnan(value)) {
                pixel = static_cast<int>(std::floor(255.0 * value + 0.5));  // half-up
                pixel = std::max(0, std::min(255, pixel));
            }
            if (col) out << ' ';
            out << pixel;
        }
        out << '\n';
    }
    return out.str();
}

std::string sweep_manifest(const SweepConfig& config, const std::vector<std::string>& files) {
    std::ostringstream out;
    out << "snmlab sweep manifest\n";
    out << "snr_values =";
    for (double v : config.snr_values) out << ' ' << format_double(v);
    out << "\nn_values =";
    for (int v : config.n_values) out << ' ' << format_int(v);
    out << "\nmodels =";
    for (ModelKind kind : config.models) out << ' ' << model_name(kind);
    out << "\nrepeats = " << format_int(config.repeats);
    out << "\nepochs = " << format_int(config.epochs);
    out << "\nn_test = " << format_int(config.n_test);
    out << "\nmaster_seed = " << format_u64(config.master_seed);
    out << '\n';
    for (const std::string& file : files) out << "file = " << file << '\n';
    return out.str();
}

std::vector<double> default_snr_values() {
    // 6 log-spaced values spanning [0.045, 0.98].
    const double lo = 0.045;
    const double hi = 0.98;
    const int count = 6;
    std::vector<double> values(count);
    for (int k = 0; k < count; ++k)
        values[static_cast<std::size_t>(k)] =
            lo * std::pow(hi / lo, static_cast<double>(k) / (count - 1));
    values.back() = hi;
    return values;
}

std::vector<int> default_n_values(bool full_grid) {
    if (full_grid) return {200, 450, 1000, 2250, 4500, 7200};
    return {200, 450, 1000, 2250};
}

} // namespace snmlab
