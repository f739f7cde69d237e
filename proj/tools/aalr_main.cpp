#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aalr/errors.hpp"
#include "aalr/experiment.hpp"
#include "aalr/log.hpp"
#include "aalr/oracle_sim.hpp"

namespace {

constexpr int kUsageError = 2;
constexpr int kDatasetMissing = 3;

struct RunFlags {
    std::string config_file;
    std::string scheduler;
    std::string task;
    std::string block;
    std::string loss_mode;
    std::string attack;
    std::string activation;
    std::vector<int> hidden;
    std::vector<int> milestones;
    int epochs = 0;
    int train_size = 0;
    int test_size = 0;
    int batch_size = 0;
    long long seed = -1;
    double lr = 0.0;
    double epsilon = 0.0;
    double alpha = 0.0;
    std::string checkpoint_path;
    bool record_wall_time = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--config", f.config_file, "JSON run configuration; flags override it")
        ->check(CLI::ExistingFile);
    cmd->add_option("--scheduler", f.scheduler, "aalr, step, cosine or cyclic")
        ->check(CLI::IsMember({"aalr", "step", "cosine", "cyclic"}));
    cmd->add_option("--task", f.task, "blobs, moons, spirals or idx")
        ->check(CLI::IsMember({"blobs", "moons", "spirals", "idx"}));
    cmd->add_option("--epochs", f.epochs, "Epoch budget")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", f.seed, "Seed for data, initialization and shuffling")->check(CLI::NonNegativeNumber);
    cmd->add_option("--lr", f.lr, "Initial (aalr), base (step) or maximum (cosine, cyclic) LR")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--block", f.block, "Train-block length: p or p1")->check(CLI::IsMember({"p", "p1"}));
    cmd->add_option("--loss-mode", f.loss_mode, "Loss reported to the controller: full or running")
        ->check(CLI::IsMember({"full", "running"}));
    cmd->add_option("--milestones", f.milestones, "Step-decay milestones")->delimiter(',');
    cmd->add_option("--hidden", f.hidden, "Hidden layer widths, e.g. 32,32")->delimiter(',');
    cmd->add_option("--activation", f.activation, "relu or tanh")->check(CLI::IsMember({"relu", "tanh"}));
    cmd->add_option("--train-size", f.train_size, "Synthetic training set size")->check(CLI::PositiveNumber);
    cmd->add_option("--test-size", f.test_size, "Synthetic test set size")->check(CLI::PositiveNumber);
    cmd->add_option("--batch-size", f.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
    cmd->add_option("--attack", f.attack, "Adversarial training: none or fgsm")
        ->check(CLI::IsMember({"none", "fgsm"}));
    cmd->add_option("--epsilon", f.epsilon, "FGSM radius")->check(CLI::PositiveNumber);
    cmd->add_option("--alpha", f.alpha, "FGSM step size")->check(CLI::PositiveNumber);
    cmd->add_option("--checkpoint-path", f.checkpoint_path, "File-backed checkpoint store");
    cmd->add_flag("--record-wall-time", f.record_wall_time, "Add wall_ms to every JSONL record");
}

aalr::RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw aalr::ConfigError("cannot open config " + path);
    }
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw aalr::ConfigError(path + ": " + e.what());
    }
    return j.get<aalr::RunConfig>();
}

aalr::RunConfig resolve(const RunFlags& f) {
    aalr::RunConfig c = f.config_file.empty() ? aalr::RunConfig{} : load_config(f.config_file);
    if (!f.scheduler.empty()) {
        c.scheduler.kind = aalr::scheduler_kind_from_string(f.scheduler);
    }
    if (!f.task.empty()) {
        c.task.kind = f.task;
    }
    if (f.epochs > 0) {
        c.epochs = f.epochs;
    }
    if (f.seed >= 0) {
        c.seed = static_cast<std::uint64_t>(f.seed);
    }
    if (f.lr > 0.0) {
        c.scheduler.lr = f.lr;
    }
    if (!f.block.empty()) {
        c.scheduler.block = f.block == "p" ? aalr::BlockMode::Patience : aalr::BlockMode::PatiencePlusOne;
    }
    if (!f.loss_mode.empty()) {
        c.scheduler.loss_mode = f.loss_mode == "full" ? aalr::LossMode::FullSet : aalr::LossMode::RunningMean;
    }
    if (!f.milestones.empty()) {
        c.scheduler.milestones = f.milestones;
    }
    if (!f.hidden.empty()) {
        c.model.hidden = f.hidden;
    }
    if (!f.activation.empty()) {
        c.model.activation = aalr::activation_from_string(f.activation);
    }
    if (f.train_size > 0) {
        c.task.train_size = static_cast<std::size_t>(f.train_size);
    }
    if (f.test_size > 0) {
        c.task.test_size = static_cast<std::size_t>(f.test_size);
    }
    if (f.batch_size > 0) {
        c.sgd.batch_size = f.batch_size;
    }
    if (!f.attack.empty()) {
        c.attack.enabled = f.attack == "fgsm";
    }
    if (f.epsilon > 0.0) {
        c.attack.epsilon = f.epsilon;
    }
    if (f.alpha > 0.0) {
        c.attack.alpha = f.alpha;
    } else if (c.attack.alpha > c.attack.epsilon) {
        c.attack.alpha = c.attack.epsilon;
    }
    if (!f.checkpoint_path.empty()) {
        c.checkpoint_path = f.checkpoint_path;
    }
    if (f.record_wall_time) {
        c.record_wall_time = true;
    }
    return c;
}

// "0.1:40,0.05:40" -> segments
std::vector<aalr::OptSegment> parse_segments(const std::string& text) {
    std::vector<aalr::OptSegment> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            throw aalr::ConfigError("segment '" + item + "' is not lr:length");
        }
        try {
            out.push_back({std::stod(item.substr(0, colon)), std::stoi(item.substr(colon + 1))});
        } catch (const std::logic_error&) {
            throw aalr::ConfigError("segment '" + item + "' is not lr:length");
        }
    }
    if (out.empty()) {
        throw aalr::ConfigError("no segments given");
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive learning-rate experiments"};
    app.require_subcommand(1);

    RunFlags run_flags;
    std::string run_out = "runs/latest";
    auto* run = app.add_subcommand("run", "Train one model and write logs");
    add_run_flags(run, run_flags);
    run->add_option("--out", run_out, "Output directory");

    std::vector<std::string> compare_configs;
    std::vector<std::string> compare_schedulers;
    RunFlags compare_flags;
    int seeds = 1;
    std::string compare_out;
    auto* cmp = app.add_subcommand("compare", "Compare schedulers on the same task");
    cmp->add_option("--configs", compare_configs, "JSON run configurations")->check(CLI::ExistingFile);
    cmp->add_option("--schedulers", compare_schedulers, "Schedulers applied to a shared flag-built config")
        ->delimiter(',');
    add_run_flags(cmp, compare_flags);
    cmp->add_option("--seeds", seeds, "Seeds per scheduler")->check(CLI::PositiveNumber);
    cmp->add_option("--out", compare_out, "CSV output path (default stdout)");

    std::string segments;
    std::string sim_block = "p1";
    double noise = 0.0;
    std::uint64_t sim_seed = 0;
    std::string sim_out;
    auto* sim = app.add_subcommand("simulate", "Simulate the controller against a piecewise-constant oracle");
    sim->add_option("--segments", segments, "OPT schedule as lr:length,lr:length,...")->required();
    sim->add_option("--block", sim_block, "p or p1")->check(CLI::IsMember({"p", "p1"}));
    sim->add_option("--noise", noise, "Probability of flipping the improvement signal")
        ->check(CLI::Range(0.0, 1.0));
    sim->add_option("--seed", sim_seed, "Noise seed");
    sim->add_option("--out", sim_out, "CSV output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        if (*run) {
            aalr::RunConfig config = resolve(run_flags);
            config.output_dir = run_out;
            const aalr::RunResult result = aalr::run_experiment(config);
            aalr::write_artifacts(config, result, run_out);
            std::cout << result.label << ": peak test acc " << result.peak_test_acc() << " at epoch "
                      << result.epochs_to_best() << ", final loss " << result.final_loss() << ", "
                      << result.divergence_events << " divergence event(s); logs in " << run_out << '\n';
        } else if (*cmp) {
            std::vector<aalr::RunConfig> configs;
            for (const auto& path : compare_configs) {
                configs.push_back(load_config(path));
            }
            for (const auto& name : compare_schedulers) {
                aalr::RunConfig c = resolve(compare_flags);
                c.scheduler.kind = aalr::scheduler_kind_from_string(name);
                configs.push_back(c);
            }
            const auto rows = aalr::compare(configs, seeds);
            if (compare_out.empty()) {
                aalr::write_compare_csv(std::cout, rows);
            } else {
                std::ofstream os(compare_out);
                aalr::write_compare_csv(os, rows);
            }
        } else if (*sim) {
            const auto schedule = aalr::OptSchedule::create(parse_segments(segments));
            aalr::SimOptions options;
            options.block = sim_block == "p" ? aalr::BlockMode::Patience : aalr::BlockMode::PatiencePlusOne;
            options.noise = noise;
            options.seed = sim_seed;
            const auto trajectory = aalr::simulate(schedule, options);
            if (sim_out.empty()) {
                aalr::write_trajectory_csv(std::cout, trajectory);
            } else {
                std::ofstream os(sim_out);
                aalr::write_trajectory_csv(os, trajectory);
            }
            std::cerr << "delay ratio " << aalr::delay_ratio(trajectory) << '\n';
        }
    } catch (const aalr::DatasetNotFoundError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDatasetMissing;
    } catch (const aalr::ConfigError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsageError;
    } catch (const aalr::DomainError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return EXIT_FAILURE;
    }
    return EXIT_SUCCESS;
}
