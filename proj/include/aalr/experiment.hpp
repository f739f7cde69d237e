#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "aalr/controller.hpp"
#include "aalr/dataset.hpp"
#include "aalr/model.hpp"
#include "aalr/schedulers.hpp"
#include "aalr/trainer.hpp"

#include <json.hpp>

namespace aalr {

enum class SchedulerKind { Aalr, Step, Cosine, Cyclic };

/// Which loss the controller sees: post-epoch full training set, or the
/// running mean of the epoch's mini-batch losses.
enum class LossMode { FullSet, RunningMean };

std::string_view to_string(SchedulerKind kind);
SchedulerKind scheduler_kind_from_string(std::string_view name);

struct TaskConfig {
    std::string kind = "blobs";  // blobs | moons | spirals | idx
    std::size_t train_size = 1000;
    std::size_t test_size = 500;
    SyntheticOptions synthetic;
    std::string train_images, train_labels, test_images, test_labels;
};

struct ModelConfig {
    std::vector<int> hidden = {32, 32};
    Activation activation = Activation::ReLU;
};

struct SchedulerConfig {
    SchedulerKind kind = SchedulerKind::Aalr;
    // Initial LR for aalr, base LR for step, eta_max for cosine and cyclic.
    double lr = 0.1;
    BlockMode block = BlockMode::Patience;
    LossMode loss_mode = LossMode::FullSet;
    std::vector<int> milestones;  // empty: epochs/2 and 3*epochs/4
    double gamma = 0.1;
    double eta_min = 0.0;           // cosine
    double cyclic_eta_min = 0.001;  // cyclic
    int period_0 = 10;
    int period_mult = 2;
    int half_cycle = 0;  // 0: 2000 iterations expressed in epochs
};

struct RunConfig {
    TaskConfig task;
    ModelConfig model;
    SchedulerConfig scheduler;
    SgdConfig sgd;
    int epochs = 30;
    AttackConfig attack;
    std::string output_dir;
    std::string checkpoint_path;
    std::uint64_t seed = 0;
    bool record_wall_time = false;

    /// Throws ConfigError.
    void validate() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double eval_loss = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
    std::optional<double> adv_acc;
    std::string phase;  // "initial", "binary" or "schedule"
    std::optional<int> patience;
    double wall_ms = 0.0;
};

/// One JSON object per epoch; non-finite numbers are written as null.
nlohmann::json to_json(const EpochRecord& r, bool with_wall_time);

struct RunResult {
    std::string label;
    std::vector<EpochRecord> records;
    std::vector<LrPoint> lr_trajectory;
    std::vector<ControllerState> controller_states;  // AALR runs only
    int divergence_events = 0;

    double peak_test_acc() const;
    double peak_train_acc() const;
    std::optional<double> peak_adv_acc() const;
    /// Zero-based epoch of the peak test accuracy.
    int epochs_to_best() const;
    double final_loss() const;
};

struct TaskData {
    Dataset train;
    Dataset test;
};

/// Builds the train/test split. Throws DatasetNotFoundError for missing IDX files.
TaskData prepare_task(const TaskConfig& task, std::uint64_t seed);

/// Resolved baseline schedule, with defaults filled in from the run.
Schedule make_schedule(const RunConfig& config, std::size_t train_size);

/// Runs training in memory.
RunResult run_experiment(const RunConfig& config);
RunResult run_experiment(const RunConfig& config, const TaskData& data);

/// Writes epochs.jsonl, metrics.csv, lr_trajectory.csv and config.json.
void write_artifacts(const RunConfig& config, const RunResult& result, const std::filesystem::path& dir);

struct CompareRow {
    std::string label;
    int runs = 0;
    int epochs = 0;
    double peak_acc_mean = 0.0, peak_acc_std = 0.0;
    double final_loss_mean = 0.0, final_loss_std = 0.0;
    double epochs_to_best_mean = 0.0, epochs_to_best_std = 0.0;
};

/// Runs each config for `seeds` consecutive seeds. Configs must differ only in
/// their scheduler section (output paths aside); otherwise ConfigError.
std::vector<CompareRow> compare(const std::vector<RunConfig>& configs, int seeds);

void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows);

} // namespace aalr
