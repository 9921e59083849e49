#pragma once

#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emgdec/analysis.hpp"
#include "emgdec/data.hpp"
#include "emgdec/kinematics.hpp"
#include "emgdec/model.hpp"

namespace emgdec {

struct TrainConfig {
    int epochs_total = 150;
    int warmup_epochs = 10;
    double lr_start = 1e-8;
    double lr_peak = 1e-3;
    double lr_end = 1e-6;
    double weight_decay = 1e-2;  // excluded for layer-norm parameters
    double clip_norm = 1.0;
    double lambda_tip = 0.01;
    int fingertip_subsample = 25;  // every k-th valid frame
    int batch_size = 8;
    int rotation_max = 1;  // channel-rotation augmentation range, 0 disables
    double w_track = 0.875;
    double w_reg = 0.125;

    void validate() const {
        if (warmup_epochs >= epochs_total || warmup_epochs < 0)
            throw std::invalid_argument("TrainConfig: warmup must be < total epochs");
        if (w_track < 0.0 || w_reg < 0.0 || std::abs(w_track + w_reg - 1.0) > 1e-12)
            throw std::invalid_argument("TrainConfig: task weights must be nonnegative and sum to 1");
        if (lambda_tip < 0.0) throw std::invalid_argument("TrainConfig: lambda_tip must be >= 0");
        if (batch_size <= 0) throw std::invalid_argument("TrainConfig: bad batch size");
        if (rotation_max < 0) throw std::invalid_argument("TrainConfig: bad rotation range");
    }

    static TrainConfig paper_scale() { return TrainConfig{}; }

    // Same schedule shape and endpoint LRs at tractable runtime.
    static TrainConfig desk_scale() {
        TrainConfig c;
        c.epochs_total = 30;
        c.warmup_epochs = 3;
        c.batch_size = 2;  // small datasets need the extra optimizer steps
        return c;
    }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"epochs_total", c.epochs_total},
         {"warmup_epochs", c.warmup_epochs},
         {"lr_start", c.lr_start},
         {"lr_peak", c.lr_peak},
         {"lr_end", c.lr_end},
         {"weight_decay", c.weight_decay},
         {"clip_norm", c.clip_norm},
         {"lambda_tip", c.lambda_tip},
         {"fingertip_subsample", c.fingertip_subsample},
         {"batch_size", c.batch_size},
         {"rotation_max", c.rotation_max},
         {"w_track", c.w_track},
         {"w_reg", c.w_reg}};
}
inline void from_json(const nlohmann::json& j, TrainConfig& c) {
    j.at("epochs_total").get_to(c.epochs_total);
    j.at("warmup_epochs").get_to(c.warmup_epochs);
    j.at("lr_start").get_to(c.lr_start);
    j.at("lr_peak").get_to(c.lr_peak);
    j.at("lr_end").get_to(c.lr_end);
    j.at("weight_decay").get_to(c.weight_decay);
    j.at("clip_norm").get_to(c.clip_norm);
    j.at("lambda_tip").get_to(c.lambda_tip);
    j.at("fingertip_subsample").get_to(c.fingertip_subsample);
    j.at("batch_size").get_to(c.batch_size);
    j.at("rotation_max").get_to(c.rotation_max);
    j.at("w_track").get_to(c.w_track);
    j.at("w_reg").get_to(c.w_reg);
}

// Linear warmup on [0, warmup], half-cosine decay from lr_peak to lr_end
// on [warmup, total]. Continuous at the warmup boundary.
inline double lr_at(int epoch, const TrainConfig& cfg) {
    if (epoch < 0 || epoch > cfg.epochs_total)
        throw std::invalid_argument("lr_at: epoch out of range");
    if (epoch <= cfg.warmup_epochs) {
        if (cfg.warmup_epochs == 0) return cfg.lr_peak;
        return cfg.lr_start +
               (cfg.lr_peak - cfg.lr_start) * epoch / static_cast<double>(cfg.warmup_epochs);
    }
    double progress = (epoch - cfg.warmup_epochs) /
                      static_cast<double>(cfg.epochs_total - cfg.warmup_epochs);
    return cfg.lr_end + (cfg.lr_peak - cfg.lr_end) *
                            0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

// Masked joint-angle MAE plus the fingertip forward-kinematics term on a
// temporally subsampled set of valid frames.
inline Tensor training_loss(Tape& tape, const HandModel& hand, const Tensor& pred,
                            const std::vector<double>& gt,
                            const std::vector<std::uint8_t>& frame_mask, double lambda_tip,
                            int fingertip_subsample) {
    Tensor l1 = masked_abs_mean(tape, pred, gt, frame_mask);
    if (lambda_tip == 0.0) return l1;
    std::vector<int> frames;
    int valid_seen = 0;
    for (int t = 0; t < pred.dim(1); ++t) {
        if (!frame_mask[t]) continue;
        if (valid_seen % fingertip_subsample == 0) frames.push_back(t);
        ++valid_seen;
    }
    Tensor tip = fingertip_distance_term(tape, hand, pred, gt, frames);
    return add_scaled(tape, l1, tip, 1.0, lambda_tip);
}

// ---- AdamW with decoupled weight decay (beta1 0.9, beta2 0.999,
// eps 1e-8); decay skipped for layer-norm parameters.

struct AdamWState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    long step = 0;
};

// Scales all grads so the global L2 norm is <= max_norm; returns the
// pre-clip norm.
inline double clip_grad_norm(std::vector<NamedParam>& params, double max_norm) {
    double sq = 0.0;
    for (auto& p : params) {
        if (!p.tensor.has_grad()) continue;
        for (double g : p.tensor.grad()) sq += g * g;
    }
    double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        double scale = max_norm / norm;
        for (auto& p : params) {
            if (!p.tensor.has_grad()) continue;
            for (double& g : p.tensor.grad()) g *= scale;
        }
    }
    return norm;
}

inline void adamw_step(std::vector<NamedParam>& params, AdamWState& state, double lr,
                       double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
                       double eps = 1e-8) {
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params[i].tensor.numel(), 0.0);
            state.v[i].assign(params[i].tensor.numel(), 0.0);
        }
    }
    if (state.m.size() != params.size())
        throw std::invalid_argument("adamw_step: state/parameter count mismatch");
    ++state.step;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (size_t i = 0; i < params.size(); ++i) {
        auto& t = params[i].tensor;
        if (state.m[i].size() != t.numel())
            throw std::invalid_argument("adamw_step: state dimension mismatch");
        const std::vector<double>* grad = t.has_grad() ? &t.grad() : nullptr;
        for (size_t k = 0; k < t.numel(); ++k) {
            double g = grad ? (*grad)[k] : 0.0;
            if (!std::isfinite(g))
                throw std::runtime_error("adamw_step: non-finite gradient in " + params[i].name);
            state.m[i][k] = beta1 * state.m[i][k] + (1.0 - beta1) * g;
            state.v[i][k] = beta2 * state.v[i][k] + (1.0 - beta2) * g * g;
            double mhat = state.m[i][k] / bc1;
            double vhat = state.v[i][k] / bc2;
            t.data()[k] -= lr * mhat / (std::sqrt(vhat) + eps);
            if (!params[i].layer_norm) t.data()[k] -= lr * weight_decay * t.data()[k];
        }
    }
}

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_mean_speed_dps = 0.0;
    double lr = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    bool collapsed = false;
    double gt_val_mean_speed_dps = 0.0;
};

class TrainingDivergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Collapse diagnostic: predicted validation speed below this fraction of
// the ground-truth speed for this many consecutive epochs.
inline constexpr double kCollapseSpeedFraction = 0.1;
inline constexpr int kCollapseEpochs = 5;

namespace train_detail {

inline Tensor window_loss(Tape& tape, ModelParams& model, const HandModel& hand,
                          const std::vector<double>& emg, const Window& w,
                          OutputParam output_param, TaskMode mode, const TrainConfig& cfg) {
    Tensor emg_t = Tensor::from({w.channels, w.samples}, emg);
    auto task_loss = [&](Task task) {
        RolloutSpec spec{task, output_param, model.cfg.hybrid_warm_start_ms};
        Tensor init = task == Task::Tracking
                          ? Tensor::from({w.joints}, w.y0)
                          : *model.init_pose;
        Tensor pred = predict_window(tape, model, emg_t, init, spec);
        return training_loss(tape, hand, pred, w.pose, w.mask, cfg.lambda_tip,
                             cfg.fingertip_subsample);
    };
    switch (mode) {
        case TaskMode::SingleTracking: return task_loss(Task::Tracking);
        case TaskMode::SingleRegression: return task_loss(Task::Regression);
        default: {
            Tensor lt = task_loss(Task::Tracking);
            Tensor lr_ = task_loss(Task::Regression);
            return add_scaled(tape, lt, lr_, cfg.w_track, cfg.w_reg);
        }
    }
}

} // namespace train_detail

// One deterministic single-threaded run. on_epoch fires after each epoch
// with the fresh record.
inline TrainReport train(ModelParams& model, const std::vector<Window>& train_windows,
                         const std::vector<Window>& val_windows, const TrainConfig& cfg,
                         OutputParam output_param, TaskMode mode, std::uint64_t seed,
                         const std::function<void(const EpochRecord&)>& on_epoch = nullptr) {
    cfg.validate();
    if (train_windows.empty()) throw std::invalid_argument("train: no training windows");
    const bool needs_regression = mode != TaskMode::SingleTracking;
    if (needs_regression && !model.has_init_pose())
        throw std::invalid_argument("train: regression mode needs a learned init pose");

    HandModel hand = HandModel::canonical();
    auto params = model.all();
    AdamWState opt;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> rot(-cfg.rotation_max, cfg.rotation_max);

    TrainReport report;
    {
        double acc = 0.0;
        for (const auto& w : val_windows)
            acc += mean_speed(w.pose, w.joints, w.samples, w.sample_rate_hz);
        report.gt_val_mean_speed_dps = val_windows.empty() ? 0.0 : acc / val_windows.size();
    }

    int slow_epochs = 0;
    std::vector<size_t> order(train_windows.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs_total; ++epoch) {
        double lr = lr_at(epoch, cfg);
        std::shuffle(order.begin(), order.end(), rng);
        double train_loss_acc = 0.0;
        size_t n_loss = 0;
        for (size_t b = 0; b < order.size(); b += cfg.batch_size) {
            size_t batch_end = std::min(order.size(), b + static_cast<size_t>(cfg.batch_size));
            double inv_batch = 1.0 / static_cast<double>(batch_end - b);
            model.zero_grads();
            for (size_t k = b; k < batch_end; ++k) {
                const Window& w = train_windows[order[k]];
                std::vector<double> emg = rotate_channels(w.emg, w.channels, w.samples, rot(rng));
                Tape tape;
                Tensor loss;
                try {
                    loss = train_detail::window_loss(tape, model, hand, emg, w, output_param,
                                                     mode, cfg);
                    Tensor scaled = scale(tape, loss, inv_batch);
                    tape.backward(scaled);
                } catch (const std::runtime_error& e) {
                    throw TrainingDivergence("training diverged at epoch " +
                                             std::to_string(epoch) + ", window " +
                                             w.session_id + ": " + e.what());
                }
                train_loss_acc += loss.value();
                ++n_loss;
            }
            clip_grad_norm(params, cfg.clip_norm);
            adamw_step(params, opt, lr, cfg.weight_decay);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = lr;
        rec.train_loss = n_loss ? train_loss_acc / static_cast<double>(n_loss) : 0.0;

        // validation pass, closed-loop rollouts, no augmentation
        try {
            InferenceGuard guard(model);
            double vloss = 0.0, vspeed = 0.0;
            for (const auto& w : val_windows) {
                Tape tape;
                Tensor emg_t = Tensor::from({w.channels, w.samples}, w.emg);
                RolloutSpec track_spec{Task::Tracking, output_param, model.cfg.hybrid_warm_start_ms};
                RolloutSpec reg_spec{Task::Regression, output_param, model.cfg.hybrid_warm_start_ms};
                Tensor speed_pred;
                if (mode == TaskMode::SingleRegression) {
                    Tensor pred = predict_window(tape, model, emg_t, *model.init_pose, reg_spec);
                    vloss += training_loss(tape, hand, pred, w.pose, w.mask, cfg.lambda_tip,
                                           cfg.fingertip_subsample).value();
                    speed_pred = pred;
                } else {
                    Tensor pred = predict_window(tape, model, emg_t, Tensor::from({w.joints}, w.y0),
                                                 track_spec);
                    double lt = training_loss(tape, hand, pred, w.pose, w.mask, cfg.lambda_tip,
                                              cfg.fingertip_subsample).value();
                    speed_pred = pred;
                    if (mode == TaskMode::Multitask) {
                        Tensor rpred = predict_window(tape, model, emg_t, *model.init_pose, reg_spec);
                        double lrg = training_loss(tape, hand, rpred, w.pose, w.mask,
                                                   cfg.lambda_tip, cfg.fingertip_subsample).value();
                        vloss += cfg.w_track * lt + cfg.w_reg * lrg;
                    } else {
                        vloss += lt;
                    }
                }
                vspeed += mean_speed(speed_pred.data(), w.joints, w.samples, w.sample_rate_hz);
            }
            rec.val_loss = val_windows.empty() ? 0.0 : vloss / val_windows.size();
            rec.val_mean_speed_dps = val_windows.empty() ? 0.0 : vspeed / val_windows.size();
        } catch (const std::runtime_error& e) {
            throw TrainingDivergence("training diverged at epoch " + std::to_string(epoch) +
                                     " during validation: " + e.what());
        }

        if (!val_windows.empty() && report.gt_val_mean_speed_dps > 0.0 &&
            rec.val_mean_speed_dps < kCollapseSpeedFraction * report.gt_val_mean_speed_dps) {
            if (++slow_epochs >= kCollapseEpochs) report.collapsed = true;
        } else {
            slow_epochs = 0;
        }

        report.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }
    return report;
}

} // namespace emgdec
