#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include "emgdec/model.hpp"

using namespace emgdec;

namespace {

// small config for end-to-end gradient checks: 2 channels, 3 joints,
// total stride 16 so a 160-sample window gives 10 feature frames
ModelConfig micro_config() {
    ModelConfig c;
    c.emg_channels = 2;
    c.joints = 3;
    c.emg_rate_hz = 400.0;
    c.conv_specs = {{3, 3, 2}, {4, 3, 2}};
    c.tds_stages = {{4, 3, 2, 3, 4}, {4, 3, 2, 3, 4}};
    c.feature_dim = 4;
    c.lstm_layers = 2;
    c.lstm_hidden = 8;
    c.head_hidden = 8;
    return c;
}

void set_constant_head(HeadParams& h, double value) {
    std::fill(h.w2.data().begin(), h.w2.data().end(), 0.0);
    std::fill(h.b2.data().begin(), h.b2.data().end(), value);
}

} // namespace

TEST_CASE("stride arithmetic: 2 kHz windows produce 25 Hz features") {
    REQUIRE(ModelConfig::paper_scale().total_stride() == 80);
    REQUIRE(ModelConfig::desk_scale().total_stride() == 80);
    REQUIRE(ModelConfig::tiny().total_stride() == 16);
    ModelConfig::paper_scale().validate();
    ModelConfig::desk_scale().validate();
    ModelConfig::tiny().validate();

    // 10000 samples (5 s at 2 kHz) -> 125 feature frames -> 250 rollout
    // steps -> upsampled back to 10000
    ModelConfig cfg = ModelConfig::desk_scale();
    ModelParams m = init_model(cfg, 42);
    Tape tape;
    Tensor emg(std::vector<int>{cfg.emg_channels, 10000});
    Tensor feats = encode(tape, m, emg);
    REQUIRE(feats.dim(0) == cfg.feature_dim);
    REQUIRE(feats.dim(1) == 125);
    RolloutSpec spec{Task::Tracking, OutputParam::Velocity, cfg.hybrid_warm_start_ms};
    Tensor traj = rollout(tape, m, feats, Tensor(std::vector<int>{cfg.joints}), spec);
    REQUIRE(traj.dim(0) == cfg.joints);
    REQUIRE(traj.dim(1) == 250);
    Tensor pred = interpolate_linear_time(tape, traj, 10000);
    REQUIRE(pred.dim(1) == 10000);
}

TEST_CASE("config validation rejects inconsistent rates") {
    ModelConfig bad = ModelConfig::tiny();
    bad.emg_rate_hz = 500.0;  // 500 / 16 != 25
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    ModelConfig bad2 = ModelConfig::tiny();
    bad2.rollout_rate_hz = 60.0;  // not an integer multiple of 25
    REQUIRE_THROWS_AS(bad2.validate(), std::invalid_argument);
    ModelConfig bad3 = ModelConfig::tiny();
    bad3.output_scalar_s = 0.0;
    REQUIRE_THROWS_AS(bad3.validate(), std::invalid_argument);
    ModelConfig bad4 = ModelConfig::tiny();
    bad4.feature_dim = 8;  // last stage emits 16 channels
    REQUIRE_THROWS_AS(bad4.validate(), std::invalid_argument);
}

TEST_CASE("zero EMG input yields exactly zero features") {
    ModelConfig cfg = micro_config();
    ModelParams m = init_model(cfg, 7);
    Tape tape;
    Tensor emg(std::vector<int>{cfg.emg_channels, 160});
    InferenceGuard guard(m);
    Tensor feats = encode(tape, m, emg);
    for (double v : feats.data()) REQUIRE(v == 0.0);
}

TEST_CASE("velocity rollout with a zero head holds the initial pose") {
    ModelConfig cfg = micro_config();
    ModelParams m = init_model(cfg, 11);
    set_constant_head(m.head, 0.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Tensor emg(std::vector<int>{cfg.emg_channels, 160});
    for (auto& v : emg.data()) v = dist(rng);
    Tensor init = Tensor::from({3}, {5.0, -2.0, 11.0});
    InferenceGuard guard(m);
    Tape tape;
    Tensor traj = rollout(tape, m, encode(tape, m, emg), init,
                          {Task::Tracking, OutputParam::Velocity, 0.0});
    const int M = traj.dim(1);
    REQUIRE(M == 20);
    for (int j = 0; j < 3; ++j)
        for (int t = 0; t < M; ++t)
            REQUIRE(traj.data()[static_cast<size_t>(j) * M + t] == init.data()[j]);
}

TEST_CASE("velocity rollout with a constant head is an exact ramp") {
    ModelConfig cfg = micro_config();
    cfg.output_scalar_s = 0.25;
    ModelParams m = init_model(cfg, 13);
    const double delta = 0.6;
    set_constant_head(m.head, delta / cfg.output_scalar_s);  // s * g = delta
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Tensor emg(std::vector<int>{cfg.emg_channels, 160});
    for (auto& v : emg.data()) v = dist(rng);
    Tensor init = Tensor::from({3}, {1.0, 2.0, 3.0});
    InferenceGuard guard(m);
    Tape tape;
    Tensor traj = rollout(tape, m, encode(tape, m, emg), init,
                          {Task::Tracking, OutputParam::Velocity, 0.0});
    const int M = traj.dim(1);
    for (int j = 0; j < 3; ++j)
        for (int t = 0; t < M; ++t)
            REQUIRE_THAT(traj.data()[static_cast<size_t>(j) * M + t],
                         Catch::Matchers::WithinAbs(init.data()[j] + t * delta, 1e-12));
}

TEST_CASE("position rollout emits scaled head outputs at every step") {
    ModelConfig cfg = micro_config();
    cfg.output_scalar_s = 0.5;
    ModelParams m = init_model(cfg, 17);
    set_constant_head(m.head, 3.0);
    Tensor emg(std::vector<int>{cfg.emg_channels, 160});
    Tensor init = Tensor::from({3}, {9.0, 9.0, 9.0});
    InferenceGuard guard(m);
    Tape tape;
    Tensor traj = rollout(tape, m, encode(tape, m, emg), init,
                          {Task::Tracking, OutputParam::Position, 0.0});
    // init pose feeds the first step's input but is not emitted
    for (double v : traj.data()) REQUIRE(v == 0.5 * 3.0);
}

TEST_CASE("hybrid warm start switches heads at the configured boundary") {
    ModelConfig cfg = micro_config();
    cfg.output_scalar_s = 1.0;
    ModelParams m = init_model(cfg, 19, /*with_pos_head=*/true, /*with_init_pose=*/true);
    const double warm_val = 40.0, delta = 0.5;
    set_constant_head(*m.pos_head, warm_val);
    set_constant_head(m.head, delta);
    m.init_pose->data() = {7.0, 7.0, 7.0};
    Tensor emg(std::vector<int>{cfg.emg_channels, 160});
    InferenceGuard guard(m);
    Tape tape;
    Tensor traj = rollout(tape, m, encode(tape, m, emg), *m.init_pose,
                          {Task::Regression, OutputParam::Velocity, 250.0});
    const int M = traj.dim(1);
    // 250 ms at 50 Hz: steps 1..12 satisfy t/50 <= 0.25 and use the
    // unscaled position head; integration takes over at step 13
    for (int j = 0; j < 3; ++j) {
        REQUIRE(traj.data()[static_cast<size_t>(j) * M + 0] == 7.0);  // learned init pose
        for (int t = 1; t <= 12; ++t)
            REQUIRE(traj.data()[static_cast<size_t>(j) * M + t] == warm_val);
        for (int t = 13; t < M; ++t)
            REQUIRE_THAT(traj.data()[static_cast<size_t>(j) * M + t],
                         Catch::Matchers::WithinAbs(warm_val + (t - 12) * delta, 1e-12));
    }
}

TEST_CASE("rollout requirements are enforced") {
    ModelConfig cfg = micro_config();
    ModelParams plain = init_model(cfg, 23);
    Tensor emg(std::vector<int>{cfg.emg_channels, 160});
    Tensor init(std::vector<int>{3});
    Tape tape;
    Tensor feats = encode(tape, plain, emg);
    REQUIRE_THROWS_AS(rollout(tape, plain, feats, init,
                              {Task::Regression, OutputParam::Position, 0.0}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(rollout(tape, plain, feats, init,
                              {Task::Regression, OutputParam::Velocity, 250.0}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(encode(tape, plain, Tensor(std::vector<int>{cfg.emg_channels, 8})),
                      std::invalid_argument);
}

TEST_CASE("halving the output scalar while doubling the head is invariant") {
    // the output scalar s only ever multiplies the tracking head, so
    // (s, W) and (s/2, 2W) define the same function
    ModelConfig a_cfg = micro_config();
    a_cfg.output_scalar_s = 0.2;
    ModelConfig b_cfg = micro_config();
    b_cfg.output_scalar_s = 0.1;
    ModelParams a = init_model(a_cfg, 29);
    ModelParams b = init_model(b_cfg, 29);  // same seed: identical weights
    for (size_t i = 0; i < b.head.w2.numel(); ++i) b.head.w2.data()[i] *= 2.0;
    for (size_t i = 0; i < b.head.b2.numel(); ++i) b.head.b2.data()[i] *= 2.0;

    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Tensor emg(std::vector<int>{a_cfg.emg_channels, 160});
    for (auto& v : emg.data()) v = dist(rng);
    Tensor init = Tensor::from({3}, {0.5, -0.5, 1.0});
    InferenceGuard ga(a);
    InferenceGuard gb(b);
    for (auto param : {OutputParam::Position, OutputParam::Velocity}) {
        Tape tape;
        Tensor ya = predict_window(tape, a, emg, init, {Task::Tracking, param, 0.0});
        Tensor yb = predict_window(tape, b, emg, init, {Task::Tracking, param, 0.0});
        for (size_t i = 0; i < ya.numel(); ++i)
            REQUIRE_THAT(ya.data()[i], Catch::Matchers::WithinAbs(yb.data()[i], 1e-9));
    }
}

TEST_CASE("predict_window upsamples a rollout ramp exactly") {
    ModelConfig cfg = micro_config();
    cfg.output_scalar_s = 1.0;
    ModelParams m = init_model(cfg, 37);
    set_constant_head(m.head, 1.0);
    Tensor emg(std::vector<int>{cfg.emg_channels, 160});
    Tensor init = Tensor::from({3}, {0.0, 0.0, 0.0});
    InferenceGuard guard(m);
    Tape tape;
    Tensor pred = predict_window(tape, m, emg, init, {Task::Tracking, OutputParam::Velocity, 0.0});
    REQUIRE(pred.dim(1) == 160);
    // rollout is the ramp t (M = 20 steps); linear upsampling of a ramp
    // is the ramp i * (M-1) / (T-1)
    for (int i = 0; i < 160; ++i)
        REQUIRE_THAT(pred.data()[i], Catch::Matchers::WithinAbs(i * 19.0 / 159.0, 1e-12));
}

TEST_CASE("end-to-end gradients pass finite differences on a micro model") {
    ModelConfig cfg = micro_config();
    ModelParams m = init_model(cfg, 41, true, true);
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Tensor emg(std::vector<int>{cfg.emg_channels, 160});
    for (auto& v : emg.data()) v = dist(rng);
    std::vector<double> target(static_cast<size_t>(cfg.joints) * 160);
    for (auto& v : target) v = dist(rng);
    std::vector<std::uint8_t> mask(160, 1);
    mask[40] = 0;

    auto f = [&](Tape& t) {
        Tensor pred = predict_window(t, m, emg, *m.init_pose,
                                     {Task::Regression, OutputParam::Velocity, 250.0});
        return masked_abs_mean(t, pred, target, mask);
    };
    std::vector<Tensor> params;
    for (auto& p : m.all()) params.push_back(p.tensor);
    auto rep = grad_check(f, params);
    INFO("rel " << rep.max_rel_err << " abs " << rep.max_abs_err);
    REQUIRE(rep.pass);
}

TEST_CASE("encoder outputs are causal end to end") {
    ModelConfig cfg = micro_config();
    ModelParams m = init_model(cfg, 47);
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Tensor emg(std::vector<int>{cfg.emg_channels, 160});
    for (auto& v : emg.data()) v = dist(rng);
    InferenceGuard guard(m);
    Tape tape;
    Tensor ref = encode(tape, m, emg);

    Tensor emg2 = Tensor::from(emg.shape(), emg.data());
    const int t_mod = 100;
    for (int c = 0; c < cfg.emg_channels; ++c)
        for (int t = t_mod; t < 160; ++t) emg2.data()[static_cast<size_t>(c) * 160 + t] += 5.0;
    Tensor mod = encode(tape, m, emg2);
    const int K = ref.dim(1), stride = cfg.total_stride();
    for (int f = 0; f < cfg.feature_dim; ++f)
        for (int k = 0; k < K; ++k)
            if (k * stride < t_mod)
                REQUIRE(mod.data()[static_cast<size_t>(f) * K + k] ==
                        ref.data()[static_cast<size_t>(f) * K + k]);
}

TEST_CASE("checkpoints round-trip weights, config, and predictions") {
    ModelConfig cfg = micro_config();
    ModelParams m = init_model(cfg, 59, true, true);
    std::string path =
        (std::filesystem::temp_directory_path() / "emgdec_ckpt_roundtrip.ckpt").string();
    save_checkpoint(m, path);
    ModelParams r = load_checkpoint(path);

    auto pa = m.all();
    auto pb = r.all();
    REQUIRE(pa.size() == pb.size());
    for (size_t i = 0; i < pa.size(); ++i) {
        REQUIRE(pa[i].name == pb[i].name);
        REQUIRE(pa[i].layer_norm == pb[i].layer_norm);
        REQUIRE(pa[i].tensor.data() == pb[i].tensor.data());
    }
    REQUIRE(r.cfg.output_scalar_s == cfg.output_scalar_s);
    REQUIRE(r.has_pos_head());
    REQUIRE(r.has_init_pose());

    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Tensor emg(std::vector<int>{cfg.emg_channels, 160});
    for (auto& v : emg.data()) v = dist(rng);
    InferenceGuard ga(m);
    InferenceGuard gb(r);
    Tape tape;
    Tensor ya = predict_window(tape, m, emg, *m.init_pose,
                               {Task::Regression, OutputParam::Velocity, 250.0});
    Tensor yb = predict_window(tape, r, emg, *r.init_pose,
                               {Task::Regression, OutputParam::Velocity, 250.0});
    REQUIRE(ya.data() == yb.data());
    std::filesystem::remove(path);
}
