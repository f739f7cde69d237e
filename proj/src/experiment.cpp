#include "aalr/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <variant>

#include "aalr/checkpoint.hpp"
#include "aalr/errors.hpp"
#include "aalr/log.hpp"

namespace aalr {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string_view to_string(BlockMode m) { return m == BlockMode::Patience ? "p" : "p1"; }

BlockMode block_mode_from_string(std::string_view s) {
    if (s == "p") {
        return BlockMode::Patience;
    }
    if (s == "p1") {
        return BlockMode::PatiencePlusOne;
    }
    throw ConfigError("block must be 'p' or 'p1', got '" + std::string(s) + "'");
}

std::string_view to_string(LossMode m) { return m == LossMode::FullSet ? "full" : "running"; }

LossMode loss_mode_from_string(std::string_view s) {
    if (s == "full") {
        return LossMode::FullSet;
    }
    if (s == "running") {
        return LossMode::RunningMean;
    }
    throw ConfigError("loss_mode must be 'full' or 'running', got '" + std::string(s) + "'");
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double mean(const std::vector<double>& xs) { return std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size(); }

double sample_std(const std::vector<double>& xs) {
    if (xs.size() < 2) {
        return 0.0;
    }
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - m) * (x - m);
    }
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::vector<int> layer_sizes(const RunConfig& config, const Dataset& train) {
    std::vector<int> sizes{static_cast<int>(train.features())};
    sizes.insert(sizes.end(), config.model.hidden.begin(), config.model.hidden.end());
    sizes.push_back(train.num_classes);
    return sizes;
}

// Trains one epoch and fills in everything but lr/phase/patience.
class EpochRunner {
public:
    EpochRunner(const RunConfig& config, const TaskData& data)
        : config_(config), data_(data), sgd_(config.sgd) {
        sgd_.seed = config.seed;
    }

    EpochRecord run(Model& model, SgdState& state, double lr, int epoch) const {
        const auto t0 = std::chrono::steady_clock::now();
        const EpochStats stats =
            train_epoch(model, state, data_.train, lr, sgd_, config_.attack, static_cast<std::uint64_t>(epoch));
        EpochRecord r;
        r.epoch = epoch;
        r.lr = lr;
        r.train_loss = stats.train_loss;
        r.eval_loss = stats.eval_loss;
        r.train_acc = stats.train_acc;
        r.test_acc = accuracy(model, data_.test.view());
        if (config_.attack.enabled) {
            r.adv_acc = adversarial_accuracy(model, data_.test.view(), config_.attack.epsilon);
        }
        r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        return r;
    }

private:
    const RunConfig& config_;
    const TaskData& data_;
    SgdConfig sgd_;
};

RunResult run_aalr(const RunConfig& config, const TaskData& data) {
    const auto& sc = config.scheduler;
    Model model = Model::initialize(layer_sizes(config, data.train), config.model.activation, config.seed);
    const std::vector<double> initial(model.parameters().begin(), model.parameters().end());
    SgdState sgd(model.parameter_count());

    std::unique_ptr<CheckpointStore> store;
    if (config.checkpoint_path.empty()) {
        store = std::make_unique<MemoryCheckpointStore>();
    } else {
        store = std::make_unique<FileCheckpointStore>(config.checkpoint_path);
    }

    const EpochRunner runner(config, data);
    RunResult result;
    result.label = "aalr";

    ControllerState state =
        new_controller(sc.lr, config.epochs, LossObservation(forward_loss(model, data.train.view())), sc.block);
    std::vector<Directive> directives = start_directives(state);
    double lr = state.lr;
    int epoch = 0;

    while (true) {
        bool stop = false;
        EpochRecord last;
        for (const auto& d : directives) {
            std::visit(overloaded{
                           [&](const SetLr& s) {
                               lr = s.lr;
                               sgd.reset();
                           },
                           [&](const SaveCheckpoint&) {
                               const auto p = model.parameters();
                               store->save({{p.begin(), p.end()}, sgd.velocity, state.best_loss,
                                            static_cast<std::uint64_t>(epoch), lr});
                           },
                           [&](const RestoreCheckpoint&) {
                               const Checkpoint c = store->restore();
                               model.set_parameters(c.parameters);
                               sgd.reset();
                           },
                           [&](const ReinitializeModel&) {
                               model.set_parameters(initial);
                               sgd.reset();
                           },
                           [&](const TrainEpochs& t) {
                               result.controller_states.push_back(state);
                               for (int i = 0; i < t.count; ++i) {
                                   last = runner.run(model, sgd, lr, epoch++);
                                   last.phase = state.phase == Phase::InitialExploration ? "initial" : "binary";
                                   last.patience = state.patience;
                                   result.lr_trajectory.push_back({last.epoch, lr});
                                   result.records.push_back(last);
                               }
                           },
                           [&](const Stop&) { stop = true; },
                       },
                       d);
        }
        if (stop) {
            break;
        }
        const double loss = sc.loss_mode == LossMode::FullSet ? last.eval_loss : last.train_loss;
        if (!std::isfinite(loss)) {
            ++result.divergence_events;
            log::info("non-finite loss after epoch " + std::to_string(last.epoch) + " at lr " + std::to_string(lr));
        }
        ControllerStep step = observe(state, LossObservation(loss));
        state = std::move(step.state);
        directives = std::move(step.directives);
    }
    return result;
}

RunResult run_baseline(const RunConfig& config, const TaskData& data) {
    const Schedule schedule = make_schedule(config, data.train.size());
    Model model = Model::initialize(layer_sizes(config, data.train), config.model.activation, config.seed);
    SgdState sgd(model.parameter_count());
    const EpochRunner runner(config, data);

    RunResult result;
    result.label = std::string(schedule_name(schedule));
    for (int e = 0; e < config.epochs; ++e) {
        const double lr = lr_at(schedule, e);
        EpochRecord r = runner.run(model, sgd, lr, e);
        r.phase = "schedule";
        if (!std::isfinite(r.eval_loss)) {
            ++result.divergence_events;
        }
        result.lr_trajectory.push_back({e, lr});
        result.records.push_back(std::move(r));
    }
    return result;
}

// The config with everything a comparison may vary stripped out.
json comparable(const RunConfig& c) {
    json j = c;
    j.erase("scheduler");
    j.erase("output_dir");
    j.erase("checkpoint_path");
    j.erase("seed");
    return j;
}

} // namespace

std::string_view to_string(SchedulerKind kind) {
    switch (kind) {
    case SchedulerKind::Aalr: return "aalr";
    case SchedulerKind::Step: return "step";
    case SchedulerKind::Cosine: return "cosine";
    case SchedulerKind::Cyclic: return "cyclic";
    }
    return "?";
}

SchedulerKind scheduler_kind_from_string(std::string_view name) {
    for (auto k : {SchedulerKind::Aalr, SchedulerKind::Step, SchedulerKind::Cosine, SchedulerKind::Cyclic}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw ConfigError("unknown scheduler '" + std::string(name) + "' (expected aalr, step, cosine or cyclic)");
}

void RunConfig::validate() const {
    if (epochs < 1) {
        throw ConfigError("epochs must be at least 1");
    }
    if (task.kind == "idx") {
        if (task.train_images.empty() || task.train_labels.empty() || task.test_images.empty() ||
            task.test_labels.empty()) {
            throw ConfigError("idx task needs train/test image and label paths");
        }
    } else {
        synthetic_kind_from_string(task.kind);
        if (task.train_size < 2 || task.test_size < 1) {
            throw ConfigError("synthetic task needs train_size >= 2 and test_size >= 1");
        }
        if (task.synthetic.features < 2) {
            throw ConfigError("synthetic task needs at least 2 features");
        }
    }
    for (int h : model.hidden) {
        if (h < 1) {
            throw ConfigError("hidden layer widths must be positive");
        }
    }
    if (!(scheduler.lr > 0.0) || !std::isfinite(scheduler.lr)) {
        throw ConfigError("scheduler lr must be positive and finite");
    }
    sgd.validate();
    if (attack.enabled) {
        attack.validate();
    }
    if (scheduler.kind != SchedulerKind::Aalr) {
        aalr::validate(make_schedule(*this, task.train_size));
    }
}

void to_json(json& j, const RunConfig& c) {
    const auto& t = c.task;
    const auto& s = c.scheduler;
    j = json{
        {"task",
         {{"kind", t.kind},
          {"train_size", t.train_size},
          {"test_size", t.test_size},
          {"features", t.synthetic.features},
          {"strong_features", t.synthetic.strong_features},
          {"separation", t.synthetic.separation},
          {"weak_separation", t.synthetic.weak_separation},
          {"noise", t.synthetic.noise},
          {"spiral_turns", t.synthetic.spiral_turns},
          {"train_images", t.train_images},
          {"train_labels", t.train_labels},
          {"test_images", t.test_images},
          {"test_labels", t.test_labels}}},
        {"model", {{"hidden", c.model.hidden}, {"activation", to_string(c.model.activation)}}},
        {"scheduler",
         {{"kind", to_string(s.kind)},
          {"lr", s.lr},
          {"block", to_string(s.block)},
          {"loss_mode", to_string(s.loss_mode)},
          {"milestones", s.milestones},
          {"gamma", s.gamma},
          {"eta_min", s.eta_min},
          {"cyclic_eta_min", s.cyclic_eta_min},
          {"period_0", s.period_0},
          {"period_mult", s.period_mult},
          {"half_cycle", s.half_cycle}}},
        {"sgd",
         {{"momentum", c.sgd.momentum}, {"weight_decay", c.sgd.weight_decay}, {"batch_size", c.sgd.batch_size}}},
        {"epochs", c.epochs},
        {"attack",
         {{"enabled", c.attack.enabled}, {"epsilon", c.attack.epsilon}, {"alpha", c.attack.alpha}}},
        {"output_dir", c.output_dir},
        {"checkpoint_path", c.checkpoint_path},
        {"seed", c.seed},
        {"record_wall_time", c.record_wall_time},
    };
}

void from_json(const json& j, RunConfig& c) {
    try {
        c = RunConfig{};
        if (!j.is_object()) {
            throw ConfigError("config must be a JSON object");
        }
        if (j.contains("task")) {
            const auto& t = j.at("task");
            auto& o = c.task;
            o.kind = t.value("kind", o.kind);
            o.train_size = t.value("train_size", o.train_size);
            o.test_size = t.value("test_size", o.test_size);
            o.synthetic.features = t.value("features", o.synthetic.features);
            o.synthetic.strong_features = t.value("strong_features", o.synthetic.strong_features);
            o.synthetic.separation = t.value("separation", o.synthetic.separation);
            o.synthetic.weak_separation = t.value("weak_separation", o.synthetic.weak_separation);
            o.synthetic.noise = t.value("noise", o.synthetic.noise);
            o.synthetic.spiral_turns = t.value("spiral_turns", o.synthetic.spiral_turns);
            o.train_images = t.value("train_images", o.train_images);
            o.train_labels = t.value("train_labels", o.train_labels);
            o.test_images = t.value("test_images", o.test_images);
            o.test_labels = t.value("test_labels", o.test_labels);
        }
        if (j.contains("model")) {
            const auto& m = j.at("model");
            c.model.hidden = m.value("hidden", c.model.hidden);
            if (m.contains("activation")) {
                c.model.activation = activation_from_string(m.at("activation").get<std::string>());
            }
        }
        if (j.contains("scheduler")) {
            const auto& s = j.at("scheduler");
            auto& o = c.scheduler;
            if (s.contains("kind")) {
                o.kind = scheduler_kind_from_string(s.at("kind").get<std::string>());
            }
            o.lr = s.value("lr", o.lr);
            if (s.contains("block")) {
                o.block = block_mode_from_string(s.at("block").get<std::string>());
            }
            if (s.contains("loss_mode")) {
                o.loss_mode = loss_mode_from_string(s.at("loss_mode").get<std::string>());
            }
            o.milestones = s.value("milestones", o.milestones);
            o.gamma = s.value("gamma", o.gamma);
            o.eta_min = s.value("eta_min", o.eta_min);
            o.cyclic_eta_min = s.value("cyclic_eta_min", o.cyclic_eta_min);
            o.period_0 = s.value("period_0", o.period_0);
            o.period_mult = s.value("period_mult", o.period_mult);
            o.half_cycle = s.value("half_cycle", o.half_cycle);
        }
        if (j.contains("sgd")) {
            const auto& s = j.at("sgd");
            c.sgd.momentum = s.value("momentum", c.sgd.momentum);
            c.sgd.weight_decay = s.value("weight_decay", c.sgd.weight_decay);
            c.sgd.batch_size = s.value("batch_size", c.sgd.batch_size);
        }
        c.epochs = j.value("epochs", c.epochs);
        if (j.contains("attack")) {
            const auto& a = j.at("attack");
            c.attack.enabled = a.value("enabled", c.attack.enabled);
            c.attack.epsilon = a.value("epsilon", c.attack.epsilon);
            c.attack.alpha = a.value("alpha", c.attack.alpha);
        }
        c.output_dir = j.value("output_dir", c.output_dir);
        c.checkpoint_path = j.value("checkpoint_path", c.checkpoint_path);
        c.seed = j.value("seed", c.seed);
        c.record_wall_time = j.value("record_wall_time", c.record_wall_time);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
}

json to_json(const EpochRecord& r, bool with_wall_time) {
    json j{
        {"epoch", r.epoch},
        {"lr", finite_or_null(r.lr)},
        {"train_loss", finite_or_null(r.train_loss)},
        {"eval_loss", finite_or_null(r.eval_loss)},
        {"train_acc", r.train_acc},
        {"test_acc", r.test_acc},
        {"phase", r.phase},
        {"patience", r.patience ? json(*r.patience) : json(nullptr)},
    };
    if (r.adv_acc) {
        j["adv_acc"] = *r.adv_acc;
    }
    if (with_wall_time) {
        j["wall_ms"] = r.wall_ms;
    }
    return j;
}

double RunResult::peak_test_acc() const {
    double best = 0.0;
    for (const auto& r : records) {
        best = std::max(best, r.test_acc);
    }
    return best;
}

double RunResult::peak_train_acc() const {
    double best = 0.0;
    for (const auto& r : records) {
        best = std::max(best, r.train_acc);
    }
    return best;
}

std::optional<double> RunResult::peak_adv_acc() const {
    std::optional<double> best;
    for (const auto& r : records) {
        if (r.adv_acc) {
            best = std::max(best.value_or(0.0), *r.adv_acc);
        }
    }
    return best;
}

int RunResult::epochs_to_best() const {
    int at = 0;
    double best = -1.0;
    for (const auto& r : records) {
        if (r.test_acc > best) {
            best = r.test_acc;
            at = r.epoch;
        }
    }
    return at;
}

double RunResult::final_loss() const {
    if (records.empty()) {
        throw DomainError("run has no epochs");
    }
    return records.back().eval_loss;
}

TaskData prepare_task(const TaskConfig& task, std::uint64_t seed) {
    if (task.kind == "idx") {
        return {load_idx(task.train_images, task.train_labels), load_idx(task.test_images, task.test_labels)};
    }
    const SyntheticKind kind = synthetic_kind_from_string(task.kind);
    // The test split comes from a disjoint seed stream.
    return {make_synthetic(kind, task.train_size, 2 * seed, task.synthetic),
            make_synthetic(kind, task.test_size, 2 * seed + 1, task.synthetic)};
}

Schedule make_schedule(const RunConfig& config, std::size_t train_size) {
    const auto& s = config.scheduler;
    switch (s.kind) {
    case SchedulerKind::Step: {
        std::vector<int> milestones = s.milestones;
        if (milestones.empty()) {
            milestones = {config.epochs / 2, 3 * config.epochs / 4};
            if (milestones[0] == milestones[1]) {
                milestones.pop_back();
            }
        }
        return StepDecay{s.lr, milestones, s.gamma};
    }
    case SchedulerKind::Cosine:
        return CosineRestarts{s.lr, s.eta_min, s.period_0, s.period_mult};
    case SchedulerKind::Cyclic: {
        int half = s.half_cycle;
        if (half == 0) {
            const auto batch = static_cast<std::size_t>(std::max(1, config.sgd.batch_size));
            const auto per_epoch = static_cast<double>((train_size + batch - 1) / batch);
            half = std::max(1, static_cast<int>(std::lround(2000.0 / per_epoch)));
        }
        return Cyclic{s.cyclic_eta_min, s.lr, half};
    }
    case SchedulerKind::Aalr: break;
    }
    throw ConfigError("aalr has no fixed schedule");
}

RunResult run_experiment(const RunConfig& config) {
    config.validate();
    const TaskData data = prepare_task(config.task, config.seed);
    return run_experiment(config, data);
}

RunResult run_experiment(const RunConfig& config, const TaskData& data) {
    config.validate();
    data.train.validate();
    data.test.validate();
    if (data.train.features() != data.test.features()) {
        throw ShapeError("train and test feature counts differ");
    }
    return config.scheduler.kind == SchedulerKind::Aalr ? run_aalr(config, data) : run_baseline(config, data);
}

void write_artifacts(const RunConfig& config, const RunResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&dir](const char* name) {
        std::ofstream os(dir / name);
        if (!os) {
            throw Error("cannot write " + (dir / name).string());
        }
        os.precision(17);
        return os;
    };
    {
        auto os = open("epochs.jsonl");
        for (const auto& r : result.records) {
            os << to_json(r, config.record_wall_time).dump() << '\n';
        }
    }
    {
        auto os = open("lr_trajectory.csv");
        os << "epoch,lr\n";
        for (const auto& p : result.lr_trajectory) {
            os << p.epoch << ',' << p.lr << '\n';
        }
    }
    {
        auto os = open("metrics.csv");
        os << "scheduler,task,seed,epochs,final_train_loss,final_eval_loss,final_test_acc,peak_test_acc,"
              "epochs_to_best,divergence_events,peak_adv_acc\n";
        const auto& last = result.records.back();
        os << result.label << ',' << config.task.kind << ',' << config.seed << ',' << result.records.size() << ','
           << last.train_loss << ',' << last.eval_loss << ',' << last.test_acc << ',' << result.peak_test_acc()
           << ',' << result.epochs_to_best() << ',' << result.divergence_events << ',';
        if (auto adv = result.peak_adv_acc()) {
            os << *adv;
        }
        os << '\n';
    }
    {
        auto os = open("config.json");
        os << json(config).dump(2) << '\n';
    }
}

std::vector<CompareRow> compare(const std::vector<RunConfig>& configs, int seeds) {
    if (configs.size() < 2) {
        throw ConfigError("compare needs at least two configurations");
    }
    if (seeds < 1) {
        throw ConfigError("compare needs at least one seed");
    }
    const json base = comparable(configs.front());
    for (std::size_t i = 1; i < configs.size(); ++i) {
        if (comparable(configs[i]) != base || configs[i].seed != configs.front().seed) {
            throw ConfigError("configuration " + std::to_string(i) + " differs in more than the scheduler");
        }
    }
    for (const auto& c : configs) {
        c.validate();
    }

    std::map<std::uint64_t, TaskData> data;
    std::vector<CompareRow> rows;
    std::map<std::string, int> seen;
    for (const auto& c : configs) {
        std::vector<double> peak, loss, best_at;
        for (int s = 0; s < seeds; ++s) {
            RunConfig run = c;
            run.seed = c.seed + static_cast<std::uint64_t>(s);
            auto it = data.find(run.seed);
            if (it == data.end()) {
                it = data.emplace(run.seed, prepare_task(run.task, run.seed)).first;
            }
            const RunResult r = run_experiment(run, it->second);
            peak.push_back(r.peak_test_acc());
            loss.push_back(r.final_loss());
            best_at.push_back(r.epochs_to_best());
        }
        CompareRow row;
        row.label = std::string(to_string(c.scheduler.kind));
        if (int n = seen[row.label]++; n > 0) {
            row.label += "#" + std::to_string(n + 1);
        }
        row.runs = seeds;
        row.epochs = c.epochs;
        row.peak_acc_mean = mean(peak);
        row.peak_acc_std = sample_std(peak);
        row.final_loss_mean = mean(loss);
        row.final_loss_std = sample_std(loss);
        row.epochs_to_best_mean = mean(best_at);
        row.epochs_to_best_std = sample_std(best_at);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows) {
    os << "scheduler,runs,epochs,peak_test_acc_mean,peak_test_acc_std,final_loss_mean,final_loss_std,"
          "epochs_to_best_mean,epochs_to_best_std\n";
    for (const auto& r : rows) {
        os << r.label << ',' << r.runs << ',' << r.epochs << ',' << r.peak_acc_mean << ',' << r.peak_acc_std << ','
           << r.final_loss_mean << ',' << r.final_loss_std << ',' << r.epochs_to_best_mean << ','
           << r.epochs_to_best_std << '\n';
    }
}

} // namespace aalr
