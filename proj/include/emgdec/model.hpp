#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "emgdec/ops.hpp"
#include "emgdec/tensor.hpp"

namespace emgdec {

struct ConvSpec {
    int out_channels;
    int kernel;
    int stride;
};

struct TdsStageSpec {
    int channels;
    int subsample_kernel;
    int subsample_stride;
    int dw_kernel;
    int mlp_hidden;
};

struct ModelConfig {
    int emg_channels = 16;
    int joints = 20;
    double emg_rate_hz = 2000.0;
    std::vector<ConvSpec> conv_specs = {{256, 11, 5}, {256, 5, 2}};
    std::vector<TdsStageSpec> tds_stages = {{256, 17, 4, 5, 256}, {64, 9, 2, 5, 64}};
    int feature_dim = 64;
    double feature_rate_hz = 25.0;
    double rollout_rate_hz = 50.0;
    int lstm_layers = 2;
    int lstm_hidden = 512;
    int head_hidden = 512;
    double leaky_slope = 0.01;
    double output_scalar_s = 0.1;
    double hybrid_warm_start_ms = 250.0;
    double pose_input_scale = 0.02;  // degrees -> decoder input units

    int total_stride() const {
        int s = 1;
        for (const auto& c : conv_specs) s *= c.stride;
        for (const auto& t : tds_stages) s *= t.subsample_stride;
        return s;
    }

    void validate() const {
        if (emg_channels <= 0 || joints <= 0) throw std::invalid_argument("ModelConfig: bad sizes");
        if (output_scalar_s <= 0.0) throw std::invalid_argument("ModelConfig: output scalar must be > 0");
        if (tds_stages.empty() || tds_stages.back().channels != feature_dim)
            throw std::invalid_argument("ModelConfig: last stage channels must equal feature_dim");
        double fr = emg_rate_hz / total_stride();
        if (std::abs(fr - feature_rate_hz) > 1e-9)
            throw std::invalid_argument("ModelConfig: emg_rate / total stride != feature_rate");
        double ratio = rollout_rate_hz / feature_rate_hz;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0)
            throw std::invalid_argument("ModelConfig: rollout rate must be an integer multiple of feature rate");
    }

    static ModelConfig paper_scale() { return ModelConfig{}; }

    // Same stride structure and 25/50 Hz rates at 2 kHz, smaller widths.
    static ModelConfig desk_scale() {
        ModelConfig c;
        c.emg_channels = 8;
        c.joints = 8;
        c.conv_specs = {{32, 11, 5}, {32, 5, 2}};
        c.tds_stages = {{32, 9, 4, 5, 32}, {32, 5, 2, 5, 32}};
        c.feature_dim = 32;
        c.lstm_hidden = 64;
        c.head_hidden = 64;
        return c;
    }

    // 400 Hz EMG, total stride 16, still 25 Hz features / 50 Hz rollout.
    static ModelConfig tiny() {
        ModelConfig c;
        c.emg_channels = 4;
        c.joints = 4;
        c.emg_rate_hz = 400.0;
        c.conv_specs = {{16, 5, 2}, {16, 3, 2}};
        c.tds_stages = {{16, 5, 2, 3, 16}, {16, 3, 2, 3, 16}};
        c.feature_dim = 16;
        c.lstm_hidden = 32;
        c.head_hidden = 32;
        return c;
    }
};

inline void to_json(nlohmann::json& j, const ConvSpec& c) {
    j = {{"out_channels", c.out_channels}, {"kernel", c.kernel}, {"stride", c.stride}};
}
inline void from_json(const nlohmann::json& j, ConvSpec& c) {
    j.at("out_channels").get_to(c.out_channels);
    j.at("kernel").get_to(c.kernel);
    j.at("stride").get_to(c.stride);
}
inline void to_json(nlohmann::json& j, const TdsStageSpec& t) {
    j = {{"channels", t.channels},
         {"subsample_kernel", t.subsample_kernel},
         {"subsample_stride", t.subsample_stride},
         {"dw_kernel", t.dw_kernel},
         {"mlp_hidden", t.mlp_hidden}};
}
inline void from_json(const nlohmann::json& j, TdsStageSpec& t) {
    j.at("channels").get_to(t.channels);
    j.at("subsample_kernel").get_to(t.subsample_kernel);
    j.at("subsample_stride").get_to(t.subsample_stride);
    j.at("dw_kernel").get_to(t.dw_kernel);
    j.at("mlp_hidden").get_to(t.mlp_hidden);
}
inline void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = {{"emg_channels", c.emg_channels},
         {"joints", c.joints},
         {"emg_rate_hz", c.emg_rate_hz},
         {"conv_specs", c.conv_specs},
         {"tds_stages", c.tds_stages},
         {"feature_dim", c.feature_dim},
         {"feature_rate_hz", c.feature_rate_hz},
         {"rollout_rate_hz", c.rollout_rate_hz},
         {"lstm_layers", c.lstm_layers},
         {"lstm_hidden", c.lstm_hidden},
         {"head_hidden", c.head_hidden},
         {"leaky_slope", c.leaky_slope},
         {"output_scalar_s", c.output_scalar_s},
         {"hybrid_warm_start_ms", c.hybrid_warm_start_ms},
         {"pose_input_scale", c.pose_input_scale}};
}
inline void from_json(const nlohmann::json& j, ModelConfig& c) {
    j.at("emg_channels").get_to(c.emg_channels);
    j.at("joints").get_to(c.joints);
    j.at("emg_rate_hz").get_to(c.emg_rate_hz);
    j.at("conv_specs").get_to(c.conv_specs);
    j.at("tds_stages").get_to(c.tds_stages);
    j.at("feature_dim").get_to(c.feature_dim);
    j.at("feature_rate_hz").get_to(c.feature_rate_hz);
    j.at("rollout_rate_hz").get_to(c.rollout_rate_hz);
    j.at("lstm_layers").get_to(c.lstm_layers);
    j.at("lstm_hidden").get_to(c.lstm_hidden);
    j.at("head_hidden").get_to(c.head_hidden);
    j.at("leaky_slope").get_to(c.leaky_slope);
    j.at("output_scalar_s").get_to(c.output_scalar_s);
    j.at("hybrid_warm_start_ms").get_to(c.hybrid_warm_start_ms);
    j.at("pose_input_scale").get_to(c.pose_input_scale);
}

enum class Task { Tracking, Regression };
enum class OutputParam { Position, Velocity };
enum class TaskMode { SingleTracking, SingleRegression, Multitask };

inline std::string to_string(Task t) { return t == Task::Tracking ? "tracking" : "regression"; }
inline std::string to_string(OutputParam p) { return p == OutputParam::Position ? "position" : "velocity"; }
inline std::string to_string(TaskMode m) {
    switch (m) {
        case TaskMode::SingleTracking: return "single_tracking";
        case TaskMode::SingleRegression: return "single_regression";
        default: return "multitask";
    }
}

struct RolloutSpec {
    Task task = Task::Tracking;
    OutputParam output_param = OutputParam::Position;
    double hybrid_warm_start_ms = 250.0;

    bool hybrid_active() const {
        return task == Task::Regression && output_param == OutputParam::Velocity &&
               hybrid_warm_start_ms > 0.0;
    }
};

struct NamedParam {
    std::string name;
    Tensor tensor;
    bool layer_norm = false;
};

struct ConvBlockParams {
    Tensor w, b, ln_gain, ln_offset;
};

struct TdsBlockParams {
    Tensor dw_w, dw_b, ln1_gain, ln1_offset;
    Tensor mlp_w1, mlp_b1, mlp_w2, mlp_b2, ln2_gain, ln2_offset;
};

struct TdsStageParams {
    ConvBlockParams subsample;
    std::vector<TdsBlockParams> blocks;
};

struct HeadParams {
    Tensor w1, b1, w2, b2;
};

// All learnable weights. Parameter enumeration order is fixed so that
// checkpoints and optimizer state line up; the optional regression-only
// parameters (g_pos, p_init) come last so that shared weights receive
// identical seeded draws with or without them.
struct ModelParams {
    ModelConfig cfg;
    std::vector<ConvBlockParams> conv_blocks;
    std::vector<TdsStageParams> tds_stages;
    std::vector<LstmCellParams> lstm;
    HeadParams head;                    // g, shared output head
    std::optional<HeadParams> pos_head; // g_pos, hybrid warm-start head
    std::optional<Tensor> init_pose;    // p_init, learned regression start

    bool has_pos_head() const { return pos_head.has_value(); }
    bool has_init_pose() const { return init_pose.has_value(); }

    std::vector<NamedParam> all() {
        std::vector<NamedParam> out;
        auto add = [&](const std::string& name, const Tensor& t, bool ln = false) {
            out.push_back({name, t, ln});
        };
        for (size_t i = 0; i < conv_blocks.size(); ++i) {
            auto& cb = conv_blocks[i];
            std::string p = "encoder.conv" + std::to_string(i);
            add(p + ".w", cb.w);
            add(p + ".b", cb.b);
            add(p + ".ln_gain", cb.ln_gain, true);
            add(p + ".ln_offset", cb.ln_offset, true);
        }
        for (size_t i = 0; i < tds_stages.size(); ++i) {
            auto& st = tds_stages[i];
            std::string p = "encoder.tds" + std::to_string(i);
            add(p + ".sub.w", st.subsample.w);
            add(p + ".sub.b", st.subsample.b);
            add(p + ".sub.ln_gain", st.subsample.ln_gain, true);
            add(p + ".sub.ln_offset", st.subsample.ln_offset, true);
            for (size_t k = 0; k < st.blocks.size(); ++k) {
                auto& bl = st.blocks[k];
                std::string q = p + ".block" + std::to_string(k);
                add(q + ".dw_w", bl.dw_w);
                add(q + ".dw_b", bl.dw_b);
                add(q + ".ln1_gain", bl.ln1_gain, true);
                add(q + ".ln1_offset", bl.ln1_offset, true);
                add(q + ".mlp_w1", bl.mlp_w1);
                add(q + ".mlp_b1", bl.mlp_b1);
                add(q + ".mlp_w2", bl.mlp_w2);
                add(q + ".mlp_b2", bl.mlp_b2);
                add(q + ".ln2_gain", bl.ln2_gain, true);
                add(q + ".ln2_offset", bl.ln2_offset, true);
            }
        }
        for (size_t i = 0; i < lstm.size(); ++i) {
            std::string p = "decoder.lstm" + std::to_string(i);
            add(p + ".w_input", lstm[i].w_input);
            add(p + ".w_hidden", lstm[i].w_hidden);
            add(p + ".bias", lstm[i].bias);
        }
        add("head.w1", head.w1);
        add("head.b1", head.b1);
        add("head.w2", head.w2);
        add("head.b2", head.b2);
        if (pos_head) {
            add("pos_head.w1", pos_head->w1);
            add("pos_head.b1", pos_head->b1);
            add("pos_head.w2", pos_head->w2);
            add("pos_head.b2", pos_head->b2);
        }
        if (init_pose) add("init_pose", *init_pose);
        return out;
    }

    void zero_grads() {
        for (auto& p : all()) p.tensor.zero_grad();
    }
};

namespace model_detail {

inline Tensor uniform_init(std::vector<int> shape, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t(std::move(shape), true);
    for (auto& v : t.data()) v = dist(rng);
    return t;
}

inline Tensor zeros(std::vector<int> shape, bool requires_grad = true) {
    return Tensor(std::move(shape), requires_grad);
}

inline Tensor ones(std::vector<int> shape) {
    Tensor t(std::move(shape), true);
    std::fill(t.data().begin(), t.data().end(), 1.0);
    return t;
}

inline ConvBlockParams init_conv_block(int cin, int cout, int kernel, std::mt19937_64& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(cin) * kernel);
    ConvBlockParams p;
    p.w = uniform_init({cout, cin, kernel}, bound, rng);
    p.b = zeros({cout});
    p.ln_gain = ones({cout});
    p.ln_offset = zeros({cout});
    return p;
}

inline TdsBlockParams init_tds_block(int channels, int dw_kernel, int mlp_hidden,
                                     std::mt19937_64& rng) {
    TdsBlockParams p;
    p.dw_w = uniform_init({channels, dw_kernel}, 1.0 / std::sqrt(static_cast<double>(dw_kernel)), rng);
    p.dw_b = zeros({channels});
    p.ln1_gain = ones({channels});
    p.ln1_offset = zeros({channels});
    p.mlp_w1 = uniform_init({mlp_hidden, channels}, 1.0 / std::sqrt(static_cast<double>(channels)), rng);
    p.mlp_b1 = zeros({mlp_hidden});
    p.mlp_w2 = uniform_init({channels, mlp_hidden}, 1.0 / std::sqrt(static_cast<double>(mlp_hidden)), rng);
    p.mlp_b2 = zeros({channels});
    p.ln2_gain = ones({channels});
    p.ln2_offset = zeros({channels});
    return p;
}

inline HeadParams init_head(int in_dim, int hidden, int out_dim, std::mt19937_64& rng) {
    HeadParams h;
    h.w1 = uniform_init({hidden, in_dim}, 1.0 / std::sqrt(static_cast<double>(in_dim)), rng);
    h.b1 = zeros({hidden});
    h.w2 = uniform_init({out_dim, hidden}, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
    h.b2 = zeros({out_dim});
    return h;
}

inline LstmCellParams init_lstm_layer(int in_dim, int hidden, std::mt19937_64& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    LstmCellParams p;
    p.w_input = uniform_init({4 * hidden, in_dim}, bound, rng);
    p.w_hidden = uniform_init({4 * hidden, hidden}, bound, rng);
    p.bias = zeros({4 * hidden});
    // forget-gate bias 1.0
    for (int i = hidden; i < 2 * hidden; ++i) p.bias.data()[i] = 1.0;
    return p;
}

} // namespace model_detail

// Fan-in uniform init; pass with_pos_head/with_init_pose when the model
// will ever run a Regression rollout.
inline ModelParams init_model(const ModelConfig& cfg, uint64_t seed,
                              bool with_pos_head = false, bool with_init_pose = false) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    ModelParams m;
    m.cfg = cfg;
    int cin = cfg.emg_channels;
    for (const auto& cs : cfg.conv_specs) {
        m.conv_blocks.push_back(model_detail::init_conv_block(cin, cs.out_channels, cs.kernel, rng));
        cin = cs.out_channels;
    }
    for (const auto& ts : cfg.tds_stages) {
        TdsStageParams stage;
        stage.subsample = model_detail::init_conv_block(cin, ts.channels, ts.subsample_kernel, rng);
        cin = ts.channels;
        stage.blocks.push_back(model_detail::init_tds_block(ts.channels, ts.dw_kernel, ts.mlp_hidden, rng));
        m.tds_stages.push_back(std::move(stage));
    }
    int dec_in = cfg.feature_dim + cfg.joints;
    for (int l = 0; l < cfg.lstm_layers; ++l) {
        m.lstm.push_back(model_detail::init_lstm_layer(l == 0 ? dec_in : cfg.lstm_hidden,
                                                       cfg.lstm_hidden, rng));
    }
    m.head = model_detail::init_head(cfg.lstm_hidden, cfg.head_hidden, cfg.joints, rng);
    if (with_pos_head)
        m.pos_head = model_detail::init_head(cfg.lstm_hidden, cfg.head_hidden, cfg.joints, rng);
    if (with_init_pose) m.init_pose = model_detail::zeros({cfg.joints});
    return m;
}

// Conv -> per-frame layer norm -> LeakyReLU.
inline Tensor conv_block(Tape& tape, const Tensor& x, const ConvBlockParams& p, int stride,
                         double slope) {
    Tensor y = conv1d_causal(tape, x, p.w, p.b, stride);
    y = layer_norm(tape, y, p.ln_gain, p.ln_offset);
    return leaky_relu(tape, y, slope);
}

// Depthwise causal conv with residual + layer norm, then pointwise MLP
// with residual + layer norm.
inline Tensor tds_block(Tape& tape, const Tensor& x, const TdsBlockParams& p, double slope) {
    Tensor t = dw_conv1d_causal(tape, x, p.dw_w, p.dw_b);
    Tensor y = layer_norm(tape, add(tape, x, t), p.ln1_gain, p.ln1_offset);
    Tensor h = leaky_relu(tape, linear(tape, y, p.mlp_w1, p.mlp_b1), slope);
    Tensor f = linear(tape, h, p.mlp_w2, p.mlp_b2);
    return layer_norm(tape, add(tape, y, f), p.ln2_gain, p.ln2_offset);
}

// EMG [C x T] -> features [feature_dim x K], K = T / total stride
// (ceiling). Fully causal.
inline Tensor encode(Tape& tape, ModelParams& m, const Tensor& emg) {
    if (emg.shape().size() != 2 || emg.dim(0) != m.cfg.emg_channels)
        throw std::invalid_argument("encode: EMG channel count mismatch");
    if (emg.dim(1) < m.cfg.total_stride() * 2)
        throw std::invalid_argument("encode: window too short for the encoder stack");
    Tensor x = emg;
    for (size_t i = 0; i < m.conv_blocks.size(); ++i)
        x = conv_block(tape, x, m.conv_blocks[i], m.cfg.conv_specs[i].stride, m.cfg.leaky_slope);
    for (size_t i = 0; i < m.tds_stages.size(); ++i) {
        x = conv_block(tape, x, m.tds_stages[i].subsample, m.cfg.tds_stages[i].subsample_stride,
                       m.cfg.leaky_slope);
        for (auto& bl : m.tds_stages[i].blocks) x = tds_block(tape, x, bl, m.cfg.leaky_slope);
    }
    return x;
}

inline Tensor apply_head(Tape& tape, const HeadParams& h, const Tensor& x, double slope) {
    Tensor t = leaky_relu(tape, linear(tape, x, h.w1, h.b1), slope);
    return linear(tape, t, h.w2, h.b2);
}

// Autoregressive rollout at the rollout rate. Features are interpolated
// 25 -> 50 Hz internally (M = K * rollout/feature). Velocity rollouts
// emit the initial pose as step 0 and integrate from step 1; position
// rollouts emit head outputs at every step. The previous-pose input is
// always the model's own previous output (closed loop).
inline Tensor rollout(Tape& tape, ModelParams& m, const Tensor& features,
                      const Tensor& init_pose, const RolloutSpec& spec) {
    const int K = features.dim(1);
    const int ratio = static_cast<int>(std::round(m.cfg.rollout_rate_hz / m.cfg.feature_rate_hz));
    const int M = K * ratio;
    const int J = m.cfg.joints;
    if (init_pose.numel() != static_cast<size_t>(J))
        throw std::invalid_argument("rollout: init pose size mismatch");
    if (spec.hybrid_active() && !m.has_pos_head())
        throw std::invalid_argument("rollout: hybrid spec but model has no position head");
    if (spec.task == Task::Regression && !m.has_init_pose())
        throw std::invalid_argument("rollout: regression task but model has no learned init pose");

    Tensor feats = interpolate_linear_time(tape, features, M);
    std::vector<Tensor> hs(m.lstm.size()), cs(m.lstm.size());
    for (size_t l = 0; l < m.lstm.size(); ++l) {
        hs[l] = Tensor({m.cfg.lstm_hidden});
        cs[l] = Tensor({m.cfg.lstm_hidden});
    }
    const bool velocity = spec.output_param == OutputParam::Velocity;
    const double warm_s = spec.hybrid_active() ? spec.hybrid_warm_start_ms / 1000.0 : -1.0;

    std::vector<Tensor> outputs;
    outputs.reserve(M);
    Tensor y_prev = init_pose;
    if (velocity) outputs.push_back(y_prev);  // anchored first supervised step
    for (int t = velocity ? 1 : 0; t < M; ++t) {
        // previous pose fed back in decoder units so it does not saturate
        // the gates
        Tensor z = concat_vec(tape, column(tape, feats, t),
                              scale(tape, y_prev, m.cfg.pose_input_scale));
        Tensor x = z;
        for (size_t l = 0; l < m.lstm.size(); ++l) {
            auto st = lstm_cell(tape, x, hs[l], cs[l], m.lstm[l]);
            hs[l] = st.h;
            cs[l] = st.c;
            x = st.h;
        }
        Tensor y_t;
        if (velocity && warm_s >= 0.0 && t / m.cfg.rollout_rate_hz <= warm_s) {
            y_t = apply_head(tape, *m.pos_head, x, m.cfg.leaky_slope);
        } else {
            Tensor o = scale(tape, apply_head(tape, m.head, x, m.cfg.leaky_slope),
                             m.cfg.output_scalar_s);
            y_t = velocity ? add(tape, y_prev, o) : o;
        }
        outputs.push_back(y_t);
        y_prev = y_t;
    }
    return stack_columns(tape, outputs);
}

// encode -> rollout -> linear upsample back to the EMG sample rate.
inline Tensor predict_window(Tape& tape, ModelParams& m, const Tensor& emg,
                             const Tensor& init_pose, const RolloutSpec& spec) {
    Tensor features = encode(tape, m, emg);
    Tensor traj = rollout(tape, m, features, init_pose, spec);
    return interpolate_linear_time(tape, traj, emg.dim(1));
}

// Temporarily flips requires_grad off for inference so ops skip tape
// recording. Restores on destruction.
class InferenceGuard {
public:
    explicit InferenceGuard(ModelParams& m) {
        for (auto& p : m.all()) {
            params_.push_back(p.tensor);
            p.tensor.set_requires_grad(false);
        }
    }
    ~InferenceGuard() {
        for (auto& t : params_) t.set_requires_grad(true);
    }
    InferenceGuard(const InferenceGuard&) = delete;
    InferenceGuard& operator=(const InferenceGuard&) = delete;

private:
    std::vector<Tensor> params_;
};

// ---- checkpoint format: 8-byte magic, u64 LE header length, JSON
// header (config + parameter names/shapes in block order), then raw
// little-endian float64 blocks.

inline constexpr char kCheckpointMagic[8] = {'E', 'M', 'G', 'C', 'K', 'P', 'T', '1'};

inline void save_checkpoint(ModelParams& m, const std::string& path) {
    nlohmann::json header;
    header["config"] = m.cfg;
    header["has_pos_head"] = m.has_pos_head();
    header["has_init_pose"] = m.has_init_pose();
    header["block_structure"] =
        "conv_block = causal conv, per-frame layer norm, leaky relu; "
        "tds_block = depthwise causal conv + residual + layer norm, "
        "pointwise 2-layer MLP + residual + layer norm";
    nlohmann::json plist = nlohmann::json::array();
    auto params = m.all();
    for (auto& p : params)
        plist.push_back({{"name", p.name}, {"shape", p.tensor.shape()}, {"layer_norm", p.layer_norm}});
    header["params"] = plist;
    std::string hs = header.dump();

    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("save_checkpoint: cannot open " + tmp);
        out.write(kCheckpointMagic, 8);
        uint64_t len = hs.size();
        out.write(reinterpret_cast<const char*>(&len), 8);
        out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
        for (auto& p : params)
            out.write(reinterpret_cast<const char*>(p.tensor.data().data()),
                      static_cast<std::streamsize>(p.tensor.numel() * sizeof(double)));
        if (!out) throw std::runtime_error("save_checkpoint: write failed for " + tmp);
    }
    std::remove(path.c_str());
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("save_checkpoint: rename failed for " + path);
}

inline ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != std::string(kCheckpointMagic, 8))
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 8);
    std::string hs(len, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(len));
    nlohmann::json header = nlohmann::json::parse(hs);
    ModelConfig cfg = header.at("config").get<ModelConfig>();
    ModelParams m = init_model(cfg, 0, header.at("has_pos_head").get<bool>(),
                               header.at("has_init_pose").get<bool>());
    auto params = m.all();
    const auto& plist = header.at("params");
    if (plist.size() != params.size())
        throw std::runtime_error("load_checkpoint: parameter count mismatch in " + path);
    for (size_t i = 0; i < params.size(); ++i) {
        auto shape = plist[i].at("shape").get<std::vector<int>>();
        if (shape != params[i].tensor.shape())
            throw std::runtime_error("load_checkpoint: shape mismatch for " +
                                     plist[i].at("name").get<std::string>());
        in.read(reinterpret_cast<char*>(params[i].tensor.data().data()),
                static_cast<std::streamsize>(params[i].tensor.numel() * sizeof(double)));
    }
    if (!in) throw std::runtime_error("load_checkpoint: truncated file " + path);
    return m;
}

} // namespace emgdec
