#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "snmlab/dataset.hpp"
#include "snmlab/trainer.hpp"

namespace snmlab {

// Named sub-stream tags: every random draw in an experiment descends from the
// master seed through mix_seed with one of these, so any piece of a run can be
// recomputed in isolation.
inline constexpr std::uint64_t kSeedTagData = 0xDA7A5EEDULL;
inline constexpr std::uint64_t kSeedTagInit = 0x12175EEDULL;
inline constexpr std::uint64_t kSeedTagEval = 0xE7A15EEDULL;
inline constexpr std::uint64_t kSeedTagCell = 0xCE115EEDULL;

struct DynamicsConfig {
    DataConfig data;
    int m = 20;
    int q = 3;
    double sigma0 = 1e-3;
    double eta = 0.03;
    int epochs = 100;
    int n_test = 500;
    int grad_check_every = 0;
    std::uint64_t master_seed = 42;
};

struct DynamicsResult {
    TrainRecord cnn;
    TrainRecord gcn;
};

// Train both models on one shared dataset draw with decomposition tracking on.
// The dataset, weight-init and evaluation streams are derived independently
// from the master seed; init and eval streams are shared by the two models so
// the comparison is paired.
DynamicsResult run_dynamics(const DynamicsConfig& config, std::ostream* log = nullptr);

struct SweepConfig {
    std::vector<double> snr_values;
    std::vector<int> n_values;
    std::vector<ModelKind> models = {ModelKind::Cnn, ModelKind::Gcn};
    int d = 500;
    double sigma_p = 20.0;
    double p = 0.5;
    double s = 0.08;
    LabelMode label_mode = LabelMode::Balanced;
    int q = 3;
    double eta = 0.03;
    int m = 20;
    double sigma0 = 1e-3;
    int epochs = 200;
    int n_test = 500;
    int repeats = 3;
    std::uint64_t master_seed = 42;
    int workers = 0;  // 0 = hardware concurrency

    void validate() const;
};

struct CellResult {
    ModelKind model = ModelKind::Cnn;
    int n_index = 0;
    int snr_index = 0;
    int repeat = 0;
    std::uint64_t seed = 0;
    double final_train_acc = 0.0;  // NaN for a diverged cell
    double final_test_acc = 0.0;
};

struct SweepGrid {
    std::vector<double> snr_values;
    std::vector<int> n_values;
    std::vector<ModelKind> models;
    // mean_acc[model index as in models] is (n index) x (snr index), NaN = no data.
    std::vector<Eigen::MatrixXd> mean_acc;
    std::vector<CellResult> cells;  // canonical (model, n, snr, repeat) order

    const Eigen::MatrixXd& accuracy(ModelKind kind) const;
};

// Per-run seeds, pure functions of the tuple indices.
std::uint64_t sweep_cell_seed(std::uint64_t master, ModelKind model, int n_index,
                              int snr_index, int repeat);
std::uint64_t sweep_dataset_seed(std::uint64_t master, int n_index, int snr_index,
                                 int repeat);
std::uint64_t sweep_init_seed(std::uint64_t master, int n_index, int snr_index,
                              int repeat);

// Grid of independent runs; cells may execute on any worker count with
// identical output. Diverged cells are recorded as NaN and excluded from means.
SweepGrid run_phase_sweep(const SweepConfig& config, std::ostream* log = nullptr);

// CSV `model,n,snr,repeat,seed,final_train_acc,final_test_acc`.
std::string sweep_csv(const SweepGrid& grid);

// Plain-text graymap (P2): width = #snr values, height = #n values, maxval 255,
// pixel = round(255 * accuracy) half-up, rows ordered by descending n,
// missing cells rendered 0.
std::string render_heatmap(const SweepGrid& grid, ModelKind kind);

// Plain-text manifest listing the axes and emitted files.
std::string sweep_manifest(const SweepConfig& config, const std::vector<std::string>& files);

// Desk-scale default axes (6 log-spaced SNR values in [0.045, 0.98]) and the
// flagged full grid reaching n = 7200.
std::vector<double> default_snr_values();
std::vector<int> default_n_values(bool full_grid);

} // namespace snmlab
