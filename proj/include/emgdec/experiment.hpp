#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emgdec/analysis.hpp"
#include "emgdec/data.hpp"
#include "emgdec/filtering.hpp"
#include "emgdec/model.hpp"
#include "emgdec/training.hpp"

namespace emgdec {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MissingPrerequisite : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    SyntheticConfig synthetic;
    ModelConfig model;
    TrainConfig train;
    std::vector<OutputParam> output_params = {OutputParam::Position, OutputParam::Velocity};
    std::vector<TaskMode> task_modes = {TaskMode::SingleTracking};
    std::vector<double> scalars = {0.1};
    std::vector<double> betas = default_beta_grid();
    std::vector<int> seeds = {0};
    double window_s = 5.0;
    double train_hop_s = 2.5;  // 50% overlap for training; evaluation is non-overlapping
    std::string out_dir = "results";

    void validate() const {
        synthetic.validate();
        model.validate();
        train.validate();
        if (output_params.empty() || task_modes.empty() || scalars.empty() || betas.empty() ||
            seeds.empty())
            throw ConfigError("ExperimentConfig: grids must be non-empty");
        if (synthetic.channels != model.emg_channels || synthetic.joints != model.joints ||
            synthetic.sample_rate_hz != model.emg_rate_hz)
            throw ConfigError("ExperimentConfig: synthetic data and model disagree on "
                              "channels/joints/sample rate");
    }
};

inline OutputParam output_param_from_string(const std::string& s) {
    if (s == "position") return OutputParam::Position;
    if (s == "velocity") return OutputParam::Velocity;
    throw ConfigError("unknown output parameterization: " + s);
}
inline TaskMode task_mode_from_string(const std::string& s) {
    if (s == "single_tracking") return TaskMode::SingleTracking;
    if (s == "single_regression") return TaskMode::SingleRegression;
    if (s == "multitask") return TaskMode::Multitask;
    throw ConfigError("unknown task mode: " + s);
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    std::vector<std::string> ops, modes;
    for (auto p : c.output_params) ops.push_back(to_string(p));
    for (auto m : c.task_modes) modes.push_back(to_string(m));
    j = {{"synthetic", c.synthetic}, {"model", c.model},       {"train", c.train},
         {"output_params", ops},     {"task_modes", modes},    {"scalars", c.scalars},
         {"betas", c.betas},         {"seeds", c.seeds},       {"window_s", c.window_s},
         {"train_hop_s", c.train_hop_s}, {"out_dir", c.out_dir}};
}

namespace exp_detail {

// A config section may be inlined, a preset name, or a path to another
// JSON file (include-by-reference).
inline nlohmann::json resolve_section(const nlohmann::json& j, const std::string& key,
                                      const std::string& base_dir) {
    const auto& v = j.at(key);
    if (v.is_object()) return v;
    if (!v.is_string()) throw ConfigError("config section '" + key + "' must be object or string");
    std::string s = v.get<std::string>();
    if (s == "desk" || s == "paper" || s == "tiny") return nlohmann::json{{"preset", s}};
    std::filesystem::path p(s);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    std::ifstream in(p);
    if (!in) throw ConfigError("config include not found: " + p.string());
    return nlohmann::json::parse(in);
}

template <typename T>
T section_with_presets(const nlohmann::json& s, T desk, T paper, T tiny) {
    if (s.contains("preset")) {
        std::string p = s.at("preset").get<std::string>();
        if (p == "desk") return desk;
        if (p == "paper") return paper;
        return tiny;
    }
    return s.get<T>();
}

} // namespace exp_detail

inline ExperimentConfig load_experiment_config(const std::string& path,
                                               const std::string& scale = "desk") {
    ExperimentConfig cfg;
    if (scale == "desk") {
        cfg.synthetic = SyntheticConfig::desk_scale();
        cfg.model = ModelConfig::desk_scale();
        cfg.train = TrainConfig::desk_scale();
    } else if (scale == "paper") {
        cfg.synthetic = SyntheticConfig::desk_scale();
        cfg.synthetic.channels = 16;
        cfg.synthetic.joints = 20;
        cfg.model = ModelConfig::paper_scale();
        cfg.train = TrainConfig::paper_scale();
    } else {
        throw ConfigError("unknown scale: " + scale);
    }
    if (path.empty()) return cfg;

    std::ifstream in(path);
    if (!in) throw ConfigError("config file not found: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    std::string base_dir = std::filesystem::path(path).parent_path().string();
    try {
        if (j.contains("synthetic"))
            cfg.synthetic = exp_detail::section_with_presets(
                exp_detail::resolve_section(j, "synthetic", base_dir),
                SyntheticConfig::desk_scale(), SyntheticConfig::desk_scale(),
                SyntheticConfig::tiny());
        if (j.contains("model"))
            cfg.model = exp_detail::section_with_presets(
                exp_detail::resolve_section(j, "model", base_dir), ModelConfig::desk_scale(),
                ModelConfig::paper_scale(), ModelConfig::tiny());
        if (j.contains("train"))
            cfg.train = exp_detail::section_with_presets(
                exp_detail::resolve_section(j, "train", base_dir), TrainConfig::desk_scale(),
                TrainConfig::paper_scale(), TrainConfig::desk_scale());
        if (j.contains("output_params")) {
            cfg.output_params.clear();
            for (const auto& s : j.at("output_params"))
                cfg.output_params.push_back(output_param_from_string(s.get<std::string>()));
        }
        if (j.contains("task_modes")) {
            cfg.task_modes.clear();
            for (const auto& s : j.at("task_modes"))
                cfg.task_modes.push_back(task_mode_from_string(s.get<std::string>()));
        }
        if (j.contains("scalars")) j.at("scalars").get_to(cfg.scalars);
        if (j.contains("betas")) j.at("betas").get_to(cfg.betas);
        if (j.contains("seeds")) j.at("seeds").get_to(cfg.seeds);
        if (j.contains("window_s")) j.at("window_s").get_to(cfg.window_s);
        if (j.contains("train_hop_s")) j.at("train_hop_s").get_to(cfg.train_hop_s);
        if (j.contains("out_dir")) j.at("out_dir").get_to(cfg.out_dir);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config error in " + path + ": " + e.what());
    }
    return cfg;
}

struct GridPoint {
    OutputParam output_param;
    TaskMode task_mode;
    double scalar;

    std::string model_id() const {
        std::ostringstream os;
        os << to_string(output_param) << "_" << to_string(task_mode) << "_s" << scalar;
        return os.str();
    }
};

inline std::vector<GridPoint> grid_points(const ExperimentConfig& cfg) {
    std::vector<GridPoint> out;
    for (auto p : cfg.output_params)
        for (auto m : cfg.task_modes)
            for (double s : cfg.scalars) out.push_back({p, m, s});
    return out;
}

// Every output CSV gets a JSON sidecar with the resolved config and
// seeds, sufficient to reproduce the file.
inline void write_sidecar(const std::string& csv_path, const ExperimentConfig& cfg,
                          const nlohmann::json& extra = {}) {
    nlohmann::json j;
    j["config"] = cfg;
    if (!extra.is_null() && !extra.empty()) j["context"] = extra;
    std::string tmp = csv_path + ".json.tmp";
    std::ofstream out(tmp, std::ios::trunc);
    out << j.dump(2) << "\n";
    out.close();
    std::filesystem::rename(tmp, csv_path + ".json");
}

// Atomic text write (temp + rename) so reruns overwrite cleanly.
class AtomicCsv {
public:
    explicit AtomicCsv(const std::string& path) : path_(path), tmp_(path + ".tmp"), out_(tmp_, std::ios::trunc) {
        if (!out_) throw std::runtime_error("cannot open " + tmp_);
    }
    std::ofstream& stream() { return out_; }
    void commit() {
        out_.close();
        std::filesystem::rename(tmp_, path_);
    }

private:
    std::string path_;
    std::string tmp_;
    std::ofstream out_;
};

// ---- gen-data -------------------------------------------------------

inline std::string manifest_path(const ExperimentConfig& cfg) {
    return cfg.out_dir + "/sessions/manifest.json";
}

inline void cmd_gen_data(const ExperimentConfig& cfg) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir + "/sessions");

    std::vector<Session> sessions;
    for (int u = 0; u < cfg.synthetic.n_users; ++u)
        for (int st = 0; st < cfg.synthetic.n_stages; ++st)
            for (int k = 0; k < cfg.synthetic.sessions_per_pair; ++k)
                sessions.push_back(
                    generate_session(cfg.synthetic, user_name(u), stage_name(st), k));
    SplitSet splits = split(cfg.synthetic, sessions);

    nlohmann::json manifest;
    manifest["config"] = cfg;
    auto dump_split = [&](const char* name, const std::vector<Session>& ss) {
        nlohmann::json files = nlohmann::json::array();
        for (const auto& s : ss) {
            std::string rel = s.session_id + ".emgses";
            write_session(s, cfg.out_dir + "/sessions/" + rel);
            files.push_back(rel);
        }
        manifest["splits"][name] = files;
    };
    dump_split("train", splits.train);
    dump_split("val", splits.val);
    dump_split("test_user", splits.test_user);
    dump_split("test_stage", splits.test_stage);
    dump_split("test_user_stage", splits.test_user_stage);

    std::string tmp = manifest_path(cfg) + ".tmp";
    std::ofstream out(tmp, std::ios::trunc);
    out << manifest.dump(2) << "\n";
    out.close();
    fs::rename(tmp, manifest_path(cfg));
}

inline std::vector<Session> load_split(const ExperimentConfig& cfg, const std::string& name) {
    std::ifstream in(manifest_path(cfg));
    if (!in)
        throw MissingPrerequisite("manifest not found: " + manifest_path(cfg) +
                                  " (run gen-data first)");
    nlohmann::json manifest = nlohmann::json::parse(in);
    std::vector<Session> out;
    for (const auto& rel : manifest.at("splits").at(name))
        out.push_back(read_session(cfg.out_dir + "/sessions/" + rel.get<std::string>()));
    return out;
}

inline std::vector<Window> split_windows(const std::vector<Session>& sessions, double window_s,
                                         double hop_s) {
    std::vector<Window> out;
    for (const auto& s : sessions) {
        auto ws = windows(s, window_s, hop_s);
        out.insert(out.end(), ws.begin(), ws.end());
    }
    return out;
}

// ---- train ----------------------------------------------------------

inline std::string checkpoint_path(const ExperimentConfig& cfg, const GridPoint& gp, int seed) {
    return cfg.out_dir + "/checkpoints/" + gp.model_id() + "_seed" + std::to_string(seed) +
           ".ckpt";
}

inline std::string train_csv_path(const ExperimentConfig& cfg, const GridPoint& gp, int seed) {
    return cfg.out_dir + "/train/" + gp.model_id() + "_seed" + std::to_string(seed) + ".csv";
}

inline TrainReport train_grid_point(const ExperimentConfig& cfg, const GridPoint& gp, int seed,
                                    const std::vector<Window>& train_w,
                                    const std::vector<Window>& val_w, ModelParams& model_out) {
    ModelConfig mc = cfg.model;
    mc.output_scalar_s = gp.scalar;
    bool needs_regression = gp.task_mode != TaskMode::SingleTracking;
    bool needs_pos_head = needs_regression && gp.output_param == OutputParam::Velocity;
    model_out = init_model(mc, static_cast<std::uint64_t>(seed), needs_pos_head, needs_regression);
    return train(model_out, train_w, val_w, cfg.train, gp.output_param, gp.task_mode,
                 static_cast<std::uint64_t>(seed) + 0x5eed);
}

inline void cmd_train(const ExperimentConfig& cfg) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir + "/checkpoints");
    fs::create_directories(cfg.out_dir + "/train");

    auto train_w = split_windows(load_split(cfg, "train"), cfg.window_s, cfg.train_hop_s);
    auto val_w = split_windows(load_split(cfg, "val"), cfg.window_s, cfg.window_s);

    for (const auto& gp : grid_points(cfg)) {
        for (int seed : cfg.seeds) {
            ModelParams model;
            TrainReport report = train_grid_point(cfg, gp, seed, train_w, val_w, model);
            save_checkpoint(model, checkpoint_path(cfg, gp, seed));

            AtomicCsv csv(train_csv_path(cfg, gp, seed));
            csv.stream() << "epoch,val_loss,val_mean_speed,lr\n";
            for (const auto& e : report.epochs)
                csv.stream() << e.epoch << "," << e.val_loss << "," << e.val_mean_speed_dps
                             << "," << e.lr << "\n";
            csv.commit();
            write_sidecar(train_csv_path(cfg, gp, seed), cfg,
                          {{"model_id", gp.model_id()},
                           {"seed", seed},
                           {"collapsed", report.collapsed},
                           {"gt_val_mean_speed_dps", report.gt_val_mean_speed_dps}});
        }
    }
}

// ---- shared prediction helpers ---------------------------------------

struct LoadedModel {
    GridPoint gp;
    int seed;
    ModelParams params;
};

inline std::vector<LoadedModel> load_models(const ExperimentConfig& cfg) {
    std::vector<LoadedModel> out;
    for (const auto& gp : grid_points(cfg))
        for (int seed : cfg.seeds) {
            std::string path = checkpoint_path(cfg, gp, seed);
            if (!std::filesystem::exists(path))
                throw MissingPrerequisite("checkpoint not found: " + path + " (run train first)");
            out.push_back({gp, seed, load_checkpoint(path)});
        }
    return out;
}

inline std::vector<double> model_predict(ModelParams& model, const Window& w, Task task,
                                         OutputParam output_param) {
    InferenceGuard guard(model);
    Tape tape;
    Tensor emg = Tensor::from({w.channels, w.samples}, w.emg);
    RolloutSpec spec{task, output_param, model.cfg.hybrid_warm_start_ms};
    Tensor init = task == Task::Tracking ? Tensor::from({w.joints}, w.y0) : *model.init_pose;
    Tensor pred = predict_window(tape, model, emg, init, spec);
    return pred.data();
}

inline std::vector<Task> tasks_for_mode(TaskMode mode) {
    switch (mode) {
        case TaskMode::SingleTracking: return {Task::Tracking};
        case TaskMode::SingleRegression: return {Task::Regression};
        default: return {Task::Tracking, Task::Regression};
    }
}

inline const std::vector<std::pair<Condition, const char*>>& eval_conditions() {
    static const std::vector<std::pair<Condition, const char*>> conds = {
        {Condition::UserStage, "test_user_stage"},
        {Condition::User, "test_user"},
        {Condition::Stage, "test_stage"},
        {Condition::Val, "val"}};
    return conds;
}

// ---- eval -------------------------------------------------------------

inline std::string metrics_csv_path(const ExperimentConfig& cfg) {
    return cfg.out_dir + "/eval/metrics.csv";
}

inline void cmd_eval(const ExperimentConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir + "/eval");
    auto models = load_models(cfg);
    HandModel hand = HandModel::canonical();

    // training-set medians for the Regression static baseline
    auto train_w = split_windows(load_split(cfg, "train"), cfg.window_s, cfg.window_s);
    if (train_w.empty()) throw MissingPrerequisite("no training windows in manifest");
    std::vector<const std::vector<double>*> poses;
    std::vector<const std::vector<std::uint8_t>*> masks;
    for (const auto& w : train_w) {
        poses.push_back(&w.pose);
        masks.push_back(&w.mask);
    }
    std::vector<double> medians =
        per_joint_medians(poses, masks, train_w[0].joints, train_w[0].samples);

    std::vector<MetricsRecord> records;
    for (const auto& [cond, split_name] : eval_conditions()) {
        auto sessions = load_split(cfg, split_name);
        auto ws = split_windows(sessions, cfg.window_s, cfg.window_s);
        if (ws.empty()) continue;

        // group windows by user
        std::map<std::string, std::vector<const Window*>> by_user;
        for (const auto& w : ws) by_user[w.user_id].push_back(&w);

        for (auto& lm : models) {
            for (Task task : tasks_for_mode(lm.gp.task_mode)) {
                for (const auto& [user, uws] : by_user) {
                    double ae = 0.0, ld = 0.0, sp = 0.0;
                    for (const Window* w : uws) {
                        auto pred = model_predict(lm.params, *w, task, lm.gp.output_param);
                        ae += angular_error(pred, w->pose, w->mask, w->joints, w->samples);
                        ld += landmark_error(hand, pred, w->pose, w->mask, w->joints, w->samples);
                        sp += mean_speed(pred, w->joints, w->samples, w->sample_rate_hz);
                    }
                    double n = static_cast<double>(uws.size());
                    records.push_back({lm.gp.model_id(), lm.seed, user, cond, task, ae / n,
                                       ld / n, sp / n});
                }
            }
        }

        // static baselines
        for (const auto& [user, uws] : by_user) {
            double ae_t = 0.0, ld_t = 0.0, ae_r = 0.0, ld_r = 0.0;
            for (const Window* w : uws) {
                auto pt = static_tracking_baseline(w->y0, w->samples);
                ae_t += angular_error(pt, w->pose, w->mask, w->joints, w->samples);
                ld_t += landmark_error(hand, pt, w->pose, w->mask, w->joints, w->samples);
                auto pr = static_regression_baseline(medians, w->samples);
                ae_r += angular_error(pr, w->pose, w->mask, w->joints, w->samples);
                ld_r += landmark_error(hand, pr, w->pose, w->mask, w->joints, w->samples);
            }
            double n = static_cast<double>(uws.size());
            records.push_back({"static", 0, user, cond, Task::Tracking, ae_t / n, ld_t / n, 0.0});
            records.push_back({"static", 0, user, cond, Task::Regression, ae_r / n, ld_r / n, 0.0});
        }
    }

    AtomicCsv csv(metrics_csv_path(cfg));
    csv.stream() << "model,seed,user,condition,task,AE_deg,LD_mm,mean_speed_dps\n";
    for (const auto& r : records)
        csv.stream() << r.model_id << "," << r.seed << "," << r.user_id << ","
                     << to_string(r.condition) << "," << to_string(r.task) << "," << r.ae_deg
                     << "," << r.ld_mm << "," << r.mean_speed_dps << "\n";
    csv.commit();
    write_sidecar(metrics_csv_path(cfg), cfg, {{"medians", medians}});
}

// ---- filter-sweep -----------------------------------------------------

inline std::string frontier_csv_path(const ExperimentConfig& cfg) {
    return cfg.out_dir + "/sweep/frontier.csv";
}

inline void cmd_filter_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir + "/sweep");
    auto models = load_models(cfg);
    HandModel hand = HandModel::canonical();

    AtomicCsv csv(frontier_csv_path(cfg));
    csv.stream() << "model,seed,condition,task,beta,mean_speed_dps,AE_deg,LD_mm\n";
    for (const auto& [cond, split_name] : eval_conditions()) {
        if (cond == Condition::Val) continue;
        auto sessions = load_split(cfg, split_name);
        auto ws = split_windows(sessions, cfg.window_s, cfg.window_s);
        if (ws.empty()) continue;

        for (auto& lm : models) {
            for (Task task : tasks_for_mode(lm.gp.task_mode)) {
                std::vector<std::vector<double>> preds;
                preds.reserve(ws.size());
                for (const auto& w : ws)
                    preds.push_back(model_predict(lm.params, w, task, lm.gp.output_param));

                auto emit = [&](const std::string& beta_label,
                                const std::vector<std::vector<double>>& trajs) {
                    double ae = 0.0, ld = 0.0, sp = 0.0;
                    for (size_t i = 0; i < ws.size(); ++i) {
                        const Window& w = ws[i];
                        ae += angular_error(trajs[i], w.pose, w.mask, w.joints, w.samples);
                        ld += landmark_error(hand, trajs[i], w.pose, w.mask, w.joints, w.samples);
                        sp += mean_speed(trajs[i], w.joints, w.samples, w.sample_rate_hz);
                    }
                    double n = static_cast<double>(ws.size());
                    csv.stream() << lm.gp.model_id() << "," << lm.seed << "," << to_string(cond)
                                 << "," << to_string(task) << "," << beta_label << "," << sp / n
                                 << "," << ae / n << "," << ld / n << "\n";
                };
                emit("unfiltered", preds);  // star row
                for (double beta : cfg.betas) {
                    FilterParams fp{beta, 1.0 / ws[0].sample_rate_hz};
                    std::vector<std::vector<double>> filtered;
                    filtered.reserve(preds.size());
                    for (size_t i = 0; i < preds.size(); ++i)
                        filtered.push_back(
                            filter_trajectory(preds[i], ws[i].joints, ws[i].samples, fp));
                    std::ostringstream bl;
                    bl << beta;
                    emit(bl.str(), filtered);
                }
            }
        }
    }
    csv.commit();
    write_sidecar(frontier_csv_path(cfg), cfg);
}

// ---- analyze ----------------------------------------------------------

inline std::string curves_csv_path(const ExperimentConfig& cfg) {
    return cfg.out_dir + "/analyze/per_timestep.csv";
}
inline std::string spectra_csv_path(const ExperimentConfig& cfg) {
    return cfg.out_dir + "/analyze/spectra.csv";
}
inline std::string spectrum_diff_csv_path(const ExperimentConfig& cfg) {
    return cfg.out_dir + "/analyze/spectrum_diffs.csv";
}

inline void cmd_analyze(const ExperimentConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir + "/analyze");
    auto models = load_models(cfg);

    AtomicCsv curves(curves_csv_path(cfg));
    curves.stream() << "model,seed,condition,task,t_index,mean_AE\n";
    AtomicCsv spectra(spectra_csv_path(cfg));
    spectra.stream() << "model,seed,condition,task,freq_hz,mag\n";
    AtomicCsv diffs(spectrum_diff_csv_path(cfg));
    diffs.stream() << "pair,condition,task,freq_hz,mag_diff\n";

    // spectrum display truncated at 25 Hz; full spectrum kept in memory
    const double display_max_hz = 25.0;

    for (const auto& [cond, split_name] : eval_conditions()) {
        if (cond == Condition::Val) continue;
        auto sessions = load_split(cfg, split_name);
        auto ws = split_windows(sessions, cfg.window_s, cfg.window_s);
        if (ws.empty()) continue;
        std::vector<std::vector<double>> gts;
        std::vector<std::vector<std::uint8_t>> masks;
        for (const auto& w : ws) {
            gts.push_back(w.pose);
            masks.push_back(w.mask);
        }
        const int J = ws[0].joints, T = ws[0].samples;
        const double rate = ws[0].sample_rate_hz;

        std::map<std::string, ResidualSpectrum> spectra_by_key;
        for (auto& lm : models) {
            for (Task task : tasks_for_mode(lm.gp.task_mode)) {
                std::vector<std::vector<double>> preds;
                preds.reserve(ws.size());
                for (const auto& w : ws)
                    preds.push_back(model_predict(lm.params, w, task, lm.gp.output_param));
                auto curve = per_timestep_error(preds, gts, masks, J, T);
                for (int t = 0; t < T; ++t)
                    curves.stream() << lm.gp.model_id() << "," << lm.seed << ","
                                    << to_string(cond) << "," << to_string(task) << "," << t
                                    << "," << curve[t] << "\n";
                auto spec = residual_spectrum(preds, gts, masks, J, T, rate);
                for (size_t k = 0; k < spec.freq_hz.size(); ++k) {
                    if (spec.freq_hz[k] > display_max_hz) break;
                    spectra.stream() << lm.gp.model_id() << "," << lm.seed << ","
                                     << to_string(cond) << "," << to_string(task) << ","
                                     << spec.freq_hz[k] << "," << spec.magnitude[k] << "\n";
                }
                spectra_by_key[lm.gp.model_id() + "#" + std::to_string(lm.seed) + "#" +
                               to_string(task)] = spec;
            }
        }
        // pairwise diffs: velocity vs position (same mode/scalar/seed/task)
        // and single vs multitask (same parameterization/scalar/seed/task)
        for (auto& a : models)
            for (auto& b : models) {
                if (a.seed != b.seed || a.gp.scalar != b.gp.scalar) continue;
                bool vel_vs_pos = a.gp.output_param == OutputParam::Velocity &&
                                  b.gp.output_param == OutputParam::Position &&
                                  a.gp.task_mode == b.gp.task_mode;
                bool st_vs_mt = a.gp.output_param == b.gp.output_param &&
                                a.gp.task_mode != TaskMode::Multitask &&
                                b.gp.task_mode == TaskMode::Multitask;
                if (!vel_vs_pos && !st_vs_mt) continue;
                for (Task task : tasks_for_mode(a.gp.task_mode)) {
                    auto ka = a.gp.model_id() + "#" + std::to_string(a.seed) + "#" + to_string(task);
                    auto kb = b.gp.model_id() + "#" + std::to_string(b.seed) + "#" + to_string(task);
                    if (!spectra_by_key.count(ka) || !spectra_by_key.count(kb)) continue;
                    auto d = spectrum_diff(spectra_by_key[ka], spectra_by_key[kb]);
                    const auto& freqs = spectra_by_key[ka].freq_hz;
                    for (size_t k = 0; k < freqs.size(); ++k) {
                        if (freqs[k] > display_max_hz) break;
                        diffs.stream() << a.gp.model_id() << "_vs_" << b.gp.model_id() << "#seed"
                                       << a.seed << "," << to_string(cond) << ","
                                       << to_string(task) << "," << freqs[k] << "," << d[k]
                                       << "\n";
                    }
                }
            }
    }
    curves.commit();
    spectra.commit();
    diffs.commit();
    write_sidecar(curves_csv_path(cfg), cfg);
    write_sidecar(spectra_csv_path(cfg), cfg);
    write_sidecar(spectrum_diff_csv_path(cfg), cfg);
}

// ---- report -----------------------------------------------------------

inline std::string summary_csv_path(const ExperimentConfig& cfg) {
    return cfg.out_dir + "/report/summary.csv";
}

inline std::vector<MetricsRecord> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingPrerequisite("metrics not found: " + path + " (run eval first)");
    std::vector<MetricsRecord> records;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        MetricsRecord r;
        std::getline(ss, r.model_id, ',');
        std::getline(ss, field, ',');
        r.seed = std::stoi(field);
        std::getline(ss, r.user_id, ',');
        std::getline(ss, field, ',');
        if (field == "user_stage") r.condition = Condition::UserStage;
        else if (field == "user") r.condition = Condition::User;
        else if (field == "stage") r.condition = Condition::Stage;
        else r.condition = Condition::Val;
        std::getline(ss, field, ',');
        r.task = field == "tracking" ? Task::Tracking : Task::Regression;
        std::getline(ss, field, ',');
        r.ae_deg = std::stod(field);
        std::getline(ss, field, ',');
        r.ld_mm = std::stod(field);
        std::getline(ss, field, ',');
        r.mean_speed_dps = std::stod(field);
        records.push_back(r);
    }
    return records;
}

inline void cmd_report(const ExperimentConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir + "/report");
    auto records = read_metrics_csv(metrics_csv_path(cfg));
    auto rows = aggregate(records);

    AtomicCsv csv(summary_csv_path(cfg));
    csv.stream() << "model,condition,task,n_users,AE_mean,AE_sd,LD_mean,LD_sd,"
                    "speed_mean,speed_sd,single_user\n";
    for (const auto& r : rows)
        csv.stream() << r.model_id << "," << to_string(r.condition) << "," << to_string(r.task)
                     << "," << r.n_users << "," << r.ae_mean << "," << r.ae_sd << ","
                     << r.ld_mean << "," << r.ld_sd << "," << r.speed_mean << "," << r.speed_sd
                     << "," << (r.single_user ? 1 : 0) << "\n";
    csv.commit();
    write_sidecar(summary_csv_path(cfg), cfg);
}

} // namespace emgdec
