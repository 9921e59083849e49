#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace emgdec {

// One synthetic recording. Row-major C x T / J x T, angles in degrees.
struct Session {
    std::vector<double> emg;           // C x T
    std::vector<double> joint_angles;  // J x T
    std::vector<std::uint8_t> valid_mask;
    int channels = 0;
    int joints = 0;
    int samples = 0;
    double sample_rate_hz = 0.0;
    std::string user_id;
    std::string stage_id;
    std::string session_id;
};

struct SyntheticConfig {
    int n_users = 4;
    int n_stages = 4;
    int sessions_per_pair = 2;
    double duration_s = 30.0;
    double sample_rate_hz = 2000.0;
    int joints = 8;
    int channels = 8;
    // trajectory process
    int n_sinusoids = 3;
    double freq_lo_hz = 0.3;
    double freq_hi_hz = 2.0;
    double amp_lo_deg = 8.0;
    double amp_hi_deg = 25.0;
    double joint_limit_deg = 60.0;
    double traj_noise_deg = 1.0;
    // EMG envelope model. Position-dominant drive with a substantial
    // deterministic carrier component keeps the mapping decodable at
    // desk-scale data budgets.
    double envelope_speed_gain = 0.002;  // on |dq/dt| in deg/s
    double envelope_pos_gain = 0.15;     // on q in deg
    double envelope_dc = 2.0;            // deterministic fraction of the carrier
    double envelope_bias = 1.0;          // resting muscle tone added to the drive
    double user_mixing_jitter = 0.2;     // per-user log-scale spread of the mixing
    double sensor_noise = 0.05;
    // mask dropout
    double mask_dropout_rate = 0.02;
    int mask_burst_len = 100;
    // split structure
    int n_held_users = 1;
    int n_held_stages = 1;
    std::uint64_t base_seed = 1234;

    void validate() const {
        if (n_users <= 0 || n_stages <= 0 || sessions_per_pair <= 0 || joints <= 0 ||
            channels <= 0 || duration_s <= 0.0 || sample_rate_hz <= 0.0 || n_sinusoids <= 0)
            throw std::invalid_argument("SyntheticConfig: counts and sizes must be positive");
        if (freq_lo_hz <= 0.0 || freq_hi_hz < freq_lo_hz)
            throw std::invalid_argument("SyntheticConfig: bad frequency band");
        if (freq_hi_hz >= 25.0)
            throw std::invalid_argument("SyntheticConfig: band must stay below the rollout Nyquist");
        if (mask_dropout_rate < 0.0 || mask_dropout_rate >= 1.0 || mask_burst_len <= 0)
            throw std::invalid_argument("SyntheticConfig: bad mask parameters");
        if (amp_lo_deg < 0.0 || amp_hi_deg < amp_lo_deg)
            throw std::invalid_argument("SyntheticConfig: bad amplitude range");
    }

    static SyntheticConfig desk_scale() { return SyntheticConfig{}; }

    static SyntheticConfig tiny() {
        SyntheticConfig c;
        c.sample_rate_hz = 400.0;
        c.joints = 4;
        c.channels = 4;
        c.duration_s = 20.0;
        c.sessions_per_pair = 3;  // short sessions need more of them to train on
        c.amp_lo_deg = 12.0;  // larger motions keep the decode target well above
        c.amp_hi_deg = 35.0;  // the hold-initial-pose baseline at this data budget
        return c;
    }
};

inline void to_json(nlohmann::json& j, const SyntheticConfig& c) {
    j = {{"n_users", c.n_users},
         {"n_stages", c.n_stages},
         {"sessions_per_pair", c.sessions_per_pair},
         {"duration_s", c.duration_s},
         {"sample_rate_hz", c.sample_rate_hz},
         {"joints", c.joints},
         {"channels", c.channels},
         {"n_sinusoids", c.n_sinusoids},
         {"freq_lo_hz", c.freq_lo_hz},
         {"freq_hi_hz", c.freq_hi_hz},
         {"amp_lo_deg", c.amp_lo_deg},
         {"amp_hi_deg", c.amp_hi_deg},
         {"joint_limit_deg", c.joint_limit_deg},
         {"traj_noise_deg", c.traj_noise_deg},
         {"envelope_speed_gain", c.envelope_speed_gain},
         {"envelope_pos_gain", c.envelope_pos_gain},
         {"envelope_dc", c.envelope_dc},
         {"envelope_bias", c.envelope_bias},
         {"user_mixing_jitter", c.user_mixing_jitter},
         {"sensor_noise", c.sensor_noise},
         {"mask_dropout_rate", c.mask_dropout_rate},
         {"mask_burst_len", c.mask_burst_len},
         {"n_held_users", c.n_held_users},
         {"n_held_stages", c.n_held_stages},
         {"base_seed", c.base_seed}};
}
inline void from_json(const nlohmann::json& j, SyntheticConfig& c) {
    j.at("n_users").get_to(c.n_users);
    j.at("n_stages").get_to(c.n_stages);
    j.at("sessions_per_pair").get_to(c.sessions_per_pair);
    j.at("duration_s").get_to(c.duration_s);
    j.at("sample_rate_hz").get_to(c.sample_rate_hz);
    j.at("joints").get_to(c.joints);
    j.at("channels").get_to(c.channels);
    j.at("n_sinusoids").get_to(c.n_sinusoids);
    j.at("freq_lo_hz").get_to(c.freq_lo_hz);
    j.at("freq_hi_hz").get_to(c.freq_hi_hz);
    j.at("amp_lo_deg").get_to(c.amp_lo_deg);
    j.at("amp_hi_deg").get_to(c.amp_hi_deg);
    j.at("joint_limit_deg").get_to(c.joint_limit_deg);
    j.at("traj_noise_deg").get_to(c.traj_noise_deg);
    j.at("envelope_speed_gain").get_to(c.envelope_speed_gain);
    j.at("envelope_pos_gain").get_to(c.envelope_pos_gain);
    j.at("envelope_dc").get_to(c.envelope_dc);
    j.at("envelope_bias").get_to(c.envelope_bias);
    j.at("user_mixing_jitter").get_to(c.user_mixing_jitter);
    j.at("sensor_noise").get_to(c.sensor_noise);
    j.at("mask_dropout_rate").get_to(c.mask_dropout_rate);
    j.at("mask_burst_len").get_to(c.mask_burst_len);
    j.at("n_held_users").get_to(c.n_held_users);
    j.at("n_held_stages").get_to(c.n_held_stages);
    j.at("base_seed").get_to(c.base_seed);
}

namespace data_detail {

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    a ^= b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2);
    return a;
}

inline double softplus(double x) {
    if (x > 30.0) return x;
    return std::log1p(std::exp(x));
}

} // namespace data_detail

// Joint trajectories: per-stage band-limited sums of sinusoids plus
// second-order-filtered noise, clipped to joint limits. EMG: per-user
// mixed rectified kinematics driving a softplus envelope that modulates
// white noise. Fully determined by (cfg, ids, seed).
inline Session generate_session(const SyntheticConfig& cfg, const std::string& user_id,
                                const std::string& stage_id, std::uint64_t seed) {
    cfg.validate();
    using data_detail::fnv1a;
    using data_detail::mix;

    const int T = static_cast<int>(std::llround(cfg.duration_s * cfg.sample_rate_hz));
    const int J = cfg.joints;
    const int C = cfg.channels;
    const double dt = 1.0 / cfg.sample_rate_hz;

    // stage-specific trajectory statistics (shared across users/seeds)
    std::mt19937_64 stage_rng(mix(fnv1a(stage_id), cfg.base_seed));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double band_center = cfg.freq_lo_hz +
                         unit(stage_rng) * (cfg.freq_hi_hz - cfg.freq_lo_hz);
    double band_lo = std::max(cfg.freq_lo_hz * 0.5, band_center * 0.75);
    double band_hi = band_center * 1.25;
    double stage_amp = cfg.amp_lo_deg + unit(stage_rng) * (cfg.amp_hi_deg - cfg.amp_lo_deg);

    // mixing matrix: a base shared by all users, scaled per user. Users
    // stay distinct while held-out users remain decodable.
    std::mt19937_64 base_rng(mix(fnv1a("mixing"), cfg.base_seed + 2));
    std::mt19937_64 user_rng(mix(fnv1a(user_id), cfg.base_seed + 1));
    std::vector<double> mixing(static_cast<size_t>(C) * J);
    for (auto& v : mixing)
        v = (0.25 + 1.5 * unit(base_rng)) *
            std::exp(cfg.user_mixing_jitter * (2.0 * unit(user_rng) - 1.0));

    std::mt19937_64 rng(mix(mix(fnv1a(user_id), fnv1a(stage_id)), mix(cfg.base_seed, seed)));
    std::normal_distribution<double> gauss(0.0, 1.0);

    Session s;
    s.channels = C;
    s.joints = J;
    s.samples = T;
    s.sample_rate_hz = cfg.sample_rate_hz;
    s.user_id = user_id;
    s.stage_id = stage_id;
    s.session_id = user_id + "_" + stage_id + "_" + std::to_string(seed);
    s.joint_angles.assign(static_cast<size_t>(J) * T, 0.0);
    s.emg.assign(static_cast<size_t>(C) * T, 0.0);
    s.valid_mask.assign(static_cast<size_t>(T), 1);

    const double amp_span = cfg.amp_hi_deg > cfg.amp_lo_deg
                                ? (cfg.amp_hi_deg - cfg.amp_lo_deg)
                                : 0.0;
    for (int j = 0; j < J; ++j) {
        double mean_angle = (unit(rng) * 2.0 - 1.0) * cfg.joint_limit_deg * 0.3;
        std::vector<double> amp(static_cast<size_t>(cfg.n_sinusoids));
        std::vector<double> freq(amp.size()), phase(amp.size());
        for (size_t n = 0; n < amp.size(); ++n) {
            double a = stage_amp + (unit(rng) * 2.0 - 1.0) * 0.25 * amp_span;
            amp[n] = std::max(0.0, a) / static_cast<double>(cfg.n_sinusoids);
            if (cfg.amp_hi_deg == 0.0) amp[n] = 0.0;
            freq[n] = band_lo + unit(rng) * (band_hi - band_lo);
            phase[n] = unit(rng) * 2.0 * 3.14159265358979323846;
        }
        // second-order low-pass on white noise (two cascaded EMAs)
        double lp1 = 0.0, lp2 = 0.0;
        const double alpha = 0.01;
        for (int t = 0; t < T; ++t) {
            double q = mean_angle;
            for (size_t n = 0; n < amp.size(); ++n)
                q += amp[n] * std::sin(2.0 * 3.14159265358979323846 * freq[n] * t * dt + phase[n]);
            lp1 += alpha * (gauss(rng) - lp1);
            lp2 += alpha * (lp1 - lp2);
            q += cfg.traj_noise_deg * lp2 * 10.0;
            q = std::clamp(q, -cfg.joint_limit_deg, cfg.joint_limit_deg);
            s.joint_angles[static_cast<size_t>(j) * T + t] = q;
        }
    }

    for (int t = 0; t < T; ++t) {
        for (int c = 0; c < C; ++c) {
            double drive = cfg.envelope_bias;
            for (int j = 0; j < J; ++j) {
                double q = s.joint_angles[static_cast<size_t>(j) * T + t];
                double q_prev = s.joint_angles[static_cast<size_t>(j) * T + std::max(0, t - 1)];
                double speed = std::abs(q - q_prev) * cfg.sample_rate_hz;
                if (t == 0) speed = 0.0;
                drive += mixing[static_cast<size_t>(c) * J + j] *
                         (cfg.envelope_speed_gain * speed + cfg.envelope_pos_gain * q);
            }
            double envelope = data_detail::softplus(drive);
            // mostly amplitude-modulated noise, plus a deterministic
            // envelope component so the mapping stays learnable at small
            // data scales
            s.emg[static_cast<size_t>(c) * T + t] =
                envelope * (cfg.envelope_dc + gauss(rng)) + cfg.sensor_noise * gauss(rng);
        }
    }

    if (cfg.mask_dropout_rate > 0.0) {
        double p_start = cfg.mask_dropout_rate / cfg.mask_burst_len;
        int burst_left = 0;
        for (int t = 0; t < T; ++t) {
            if (burst_left == 0 && unit(rng) < p_start) burst_left = cfg.mask_burst_len;
            if (burst_left > 0) {
                s.valid_mask[t] = 0;
                --burst_left;
            }
        }
    }
    return s;
}

// One training/evaluation window cut out of a session.
struct Window {
    std::vector<double> emg;   // C x T
    std::vector<double> pose;  // J x T, degrees
    std::vector<std::uint8_t> mask;
    std::vector<double> y0;    // pose at the first mask-true index
    int channels = 0;
    int joints = 0;
    int samples = 0;
    double sample_rate_hz = 0.0;
    std::string user_id;
    std::string stage_id;
    std::string session_id;
    int start_sample = 0;
};

// Cuts full windows at the given hop; y0 is the pose at the first
// mask-true index of the window; all-false windows are skipped.
inline std::vector<Window> windows(const Session& s, double window_s = 5.0,
                                   double hop_s = 5.0) {
    const int Tw = static_cast<int>(std::llround(window_s * s.sample_rate_hz));
    const int hop = static_cast<int>(std::llround(hop_s * s.sample_rate_hz));
    if (Tw <= 0 || hop <= 0) throw std::invalid_argument("windows: bad window/hop");
    if (Tw > s.samples) throw std::invalid_argument("windows: window longer than session");

    std::vector<Window> out;
    for (int start = 0; start + Tw <= s.samples; start += hop) {
        int first_valid = -1;
        for (int t = 0; t < Tw; ++t)
            if (s.valid_mask[start + t]) {
                first_valid = t;
                break;
            }
        if (first_valid < 0) continue;
        Window w;
        w.channels = s.channels;
        w.joints = s.joints;
        w.samples = Tw;
        w.sample_rate_hz = s.sample_rate_hz;
        w.user_id = s.user_id;
        w.stage_id = s.stage_id;
        w.session_id = s.session_id;
        w.start_sample = start;
        w.emg.resize(static_cast<size_t>(s.channels) * Tw);
        for (int c = 0; c < s.channels; ++c)
            std::copy_n(s.emg.begin() + static_cast<size_t>(c) * s.samples + start, Tw,
                        w.emg.begin() + static_cast<size_t>(c) * Tw);
        w.pose.resize(static_cast<size_t>(s.joints) * Tw);
        for (int j = 0; j < s.joints; ++j)
            std::copy_n(s.joint_angles.begin() + static_cast<size_t>(j) * s.samples + start, Tw,
                        w.pose.begin() + static_cast<size_t>(j) * Tw);
        w.mask.assign(s.valid_mask.begin() + start, s.valid_mask.begin() + start + Tw);
        w.y0.resize(static_cast<size_t>(s.joints));
        for (int j = 0; j < s.joints; ++j)
            w.y0[j] = w.pose[static_cast<size_t>(j) * Tw + first_valid];
        out.push_back(std::move(w));
    }
    return out;
}

// Circular shift of the channel axis: channel c moves to (c + offset) mod C.
inline std::vector<double> rotate_channels(const std::vector<double>& emg, int channels,
                                           int samples, int offset) {
    std::vector<double> out(emg.size());
    for (int c = 0; c < channels; ++c) {
        int dst = ((c + offset) % channels + channels) % channels;
        std::copy_n(emg.begin() + static_cast<size_t>(c) * samples, samples,
                    out.begin() + static_cast<size_t>(dst) * samples);
    }
    return out;
}

struct SplitSet {
    std::vector<Session> train;
    std::vector<Session> val;
    std::vector<Session> test_user;
    std::vector<Session> test_stage;
    std::vector<Session> test_user_stage;
};

inline std::string user_name(int i) { return "user" + std::to_string(i); }
inline std::string stage_name(int i) { return "stage" + std::to_string(i); }

// Held-out users x train stages -> test_user; train users x held-out
// stages -> test_stage; held x held -> test_user_stage. Train/val share
// users and stages but never sessions (the last session index of each
// pair is validation).
inline SplitSet split(const SyntheticConfig& cfg, const std::vector<Session>& sessions) {
    if (cfg.n_held_users <= 0 || cfg.n_held_stages <= 0)
        throw std::invalid_argument("split: held-out sets must be non-empty");
    if (cfg.n_users - cfg.n_held_users < 1 || cfg.n_stages - cfg.n_held_stages < 1)
        throw std::invalid_argument("split: need at least one training user and stage");
    if (cfg.n_users < 2 || cfg.n_stages < 2)
        throw std::invalid_argument("split: need at least 2 users and 2 stages");
    if (cfg.sessions_per_pair < 2)
        throw std::invalid_argument("split: need >= 2 sessions per (user, stage) for validation");

    auto held_user = [&](const std::string& u) {
        for (int i = cfg.n_users - cfg.n_held_users; i < cfg.n_users; ++i)
            if (u == user_name(i)) return true;
        return false;
    };
    auto held_stage = [&](const std::string& st) {
        for (int i = cfg.n_stages - cfg.n_held_stages; i < cfg.n_stages; ++i)
            if (st == stage_name(i)) return true;
        return false;
    };
    auto is_val_session = [&](const Session& s) {
        // seed index is the suffix of the session id
        auto pos = s.session_id.rfind('_');
        int idx = std::stoi(s.session_id.substr(pos + 1));
        return idx % cfg.sessions_per_pair == cfg.sessions_per_pair - 1;
    };

    SplitSet out;
    for (const auto& s : sessions) {
        bool hu = held_user(s.user_id);
        bool hs = held_stage(s.stage_id);
        if (hu && hs) out.test_user_stage.push_back(s);
        else if (hu) out.test_user.push_back(s);
        else if (hs) out.test_stage.push_back(s);
        else if (is_val_session(s)) out.val.push_back(s);
        else out.train.push_back(s);
    }
    return out;
}

// ---- session file format: 8-byte magic, u64 LE header length, JSON
// header, raw little-endian float64 EMG then joint blocks, bit-packed
// mask (LSB first).

inline constexpr char kSessionMagic[8] = {'E', 'M', 'G', 'S', 'E', 'S', '1', '\n'};

inline void write_session(const Session& s, const std::string& path) {
    nlohmann::json header = {{"user_id", s.user_id},
                             {"stage_id", s.stage_id},
                             {"session_id", s.session_id},
                             {"channels", s.channels},
                             {"joints", s.joints},
                             {"samples", s.samples},
                             {"sample_rate_hz", s.sample_rate_hz}};
    std::string hs = header.dump();
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("write_session: cannot open " + tmp);
        out.write(kSessionMagic, 8);
        uint64_t len = hs.size();
        out.write(reinterpret_cast<const char*>(&len), 8);
        out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
        out.write(reinterpret_cast<const char*>(s.emg.data()),
                  static_cast<std::streamsize>(s.emg.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(s.joint_angles.data()),
                  static_cast<std::streamsize>(s.joint_angles.size() * sizeof(double)));
        std::vector<std::uint8_t> packed((s.valid_mask.size() + 7) / 8, 0);
        for (size_t i = 0; i < s.valid_mask.size(); ++i)
            if (s.valid_mask[i]) packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
        out.write(reinterpret_cast<const char*>(packed.data()),
                  static_cast<std::streamsize>(packed.size()));
        if (!out) throw std::runtime_error("write_session: write failed for " + tmp);
    }
    std::remove(path.c_str());
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("write_session: rename failed for " + path);
}

inline Session read_session(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_session: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != std::string(kSessionMagic, 8))
        throw std::runtime_error("read_session: bad magic in " + path);
    uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 8);
    std::string hs(len, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(len));
    nlohmann::json header = nlohmann::json::parse(hs);

    Session s;
    header.at("user_id").get_to(s.user_id);
    header.at("stage_id").get_to(s.stage_id);
    header.at("session_id").get_to(s.session_id);
    header.at("channels").get_to(s.channels);
    header.at("joints").get_to(s.joints);
    header.at("samples").get_to(s.samples);
    header.at("sample_rate_hz").get_to(s.sample_rate_hz);
    s.emg.resize(static_cast<size_t>(s.channels) * s.samples);
    s.joint_angles.resize(static_cast<size_t>(s.joints) * s.samples);
    in.read(reinterpret_cast<char*>(s.emg.data()),
            static_cast<std::streamsize>(s.emg.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(s.joint_angles.data()),
            static_cast<std::streamsize>(s.joint_angles.size() * sizeof(double)));
    std::vector<std::uint8_t> packed((static_cast<size_t>(s.samples) + 7) / 8);
    in.read(reinterpret_cast<char*>(packed.data()),
            static_cast<std::streamsize>(packed.size()));
    if (!in) throw std::runtime_error("read_session: truncated file " + path);
    s.valid_mask.resize(static_cast<size_t>(s.samples));
    for (int i = 0; i < s.samples; ++i)
        s.valid_mask[i] = (packed[i / 8] >> (i % 8)) & 1u;
    return s;
}

// Adapter seam for external recordings: anything that can produce a
// Session participates in the pipeline downstream of this point.
class SessionSource {
public:
    virtual ~SessionSource() = default;
    virtual std::vector<Session> load() = 0;
};

class FileSessionSource final : public SessionSource {
public:
    explicit FileSessionSource(std::vector<std::string> paths) : paths_(std::move(paths)) {}
    std::vector<Session> load() override {
        std::vector<Session> out;
        out.reserve(paths_.size());
        for (const auto& p : paths_) out.push_back(read_session(p));
        return out;
    }

private:
    std::vector<std::string> paths_;
};

} // namespace emgdec
