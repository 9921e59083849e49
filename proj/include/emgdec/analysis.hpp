#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <fftw3.h>

#include "emgdec/kinematics.hpp"
#include "emgdec/model.hpp"

namespace emgdec {

// Mean |pred - gt| over valid frames and joints, degrees.
inline double angular_error(const std::vector<double>& pred, const std::vector<double>& gt,
                            const std::vector<std::uint8_t>& mask, int joints, int samples) {
    if (pred.size() != gt.size() || pred.size() != static_cast<size_t>(joints) * samples ||
        mask.size() != static_cast<size_t>(samples))
        throw std::invalid_argument("angular_error: shape mismatch");
    double acc = 0.0;
    size_t n = 0;
    for (int t = 0; t < samples; ++t) {
        if (!mask[t]) continue;
        for (int j = 0; j < joints; ++j) {
            size_t i = static_cast<size_t>(j) * samples + t;
            acc += std::abs(pred[i] - gt[i]);
            ++n;
        }
    }
    if (n == 0) throw std::invalid_argument("angular_error: no valid frames");
    return acc / static_cast<double>(n);
}

// Mean landmark distance over valid frames, mm.
inline double landmark_error(const HandModel& model, const std::vector<double>& pred,
                             const std::vector<double>& gt,
                             const std::vector<std::uint8_t>& mask, int joints, int samples) {
    double acc = 0.0;
    size_t n = 0;
    std::vector<double> p(joints), g(joints);
    for (int t = 0; t < samples; ++t) {
        if (!mask[t]) continue;
        for (int j = 0; j < joints; ++j) {
            p[j] = pred[static_cast<size_t>(j) * samples + t];
            g[j] = gt[static_cast<size_t>(j) * samples + t];
        }
        acc += landmark_distance(model, p, g);
        ++n;
    }
    if (n == 0) throw std::invalid_argument("landmark_error: no valid frames");
    return acc / static_cast<double>(n);
}

// Mean absolute per-step change times the sample rate, deg/s. Computed
// on predictions over the whole window, mask-independent.
inline double mean_speed(const std::vector<double>& traj, int joints, int samples,
                         double rate_hz) {
    if (samples < 2) throw std::invalid_argument("mean_speed: need at least 2 samples");
    if (traj.size() != static_cast<size_t>(joints) * samples)
        throw std::invalid_argument("mean_speed: shape mismatch");
    double acc = 0.0;
    for (int j = 0; j < joints; ++j)
        for (int t = 1; t < samples; ++t)
            acc += std::abs(traj[static_cast<size_t>(j) * samples + t] -
                            traj[static_cast<size_t>(j) * samples + t - 1]);
    return acc / (static_cast<double>(joints) * (samples - 1)) * rate_hz;
}

// Tracking static baseline: the window's ground-truth initial pose held
// constant.
inline std::vector<double> static_tracking_baseline(const std::vector<double>& y0, int samples) {
    std::vector<double> out(y0.size() * static_cast<size_t>(samples));
    for (size_t j = 0; j < y0.size(); ++j)
        std::fill_n(out.begin() + j * samples, samples, y0[j]);
    return out;
}

// Regression static baseline: training-set per-joint median angle held
// constant.
inline std::vector<double> per_joint_medians(const std::vector<const std::vector<double>*>& poses,
                                             const std::vector<const std::vector<std::uint8_t>*>& masks,
                                             int joints, int samples) {
    if (poses.empty()) throw std::invalid_argument("per_joint_medians: no training windows");
    std::vector<double> medians(static_cast<size_t>(joints));
    std::vector<double> vals;
    for (int j = 0; j < joints; ++j) {
        vals.clear();
        for (size_t w = 0; w < poses.size(); ++w)
            for (int t = 0; t < samples; ++t)
                if ((*masks[w])[t])
                    vals.push_back((*poses[w])[static_cast<size_t>(j) * samples + t]);
        if (vals.empty()) throw std::invalid_argument("per_joint_medians: no valid frames");
        std::sort(vals.begin(), vals.end());
        size_t n = vals.size();
        medians[j] = n % 2 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
    }
    return medians;
}

inline std::vector<double> static_regression_baseline(const std::vector<double>& medians,
                                                      int samples) {
    return static_tracking_baseline(medians, samples);
}

// Mean AE at each within-window index across windows and joints,
// counting only valid frames.
inline std::vector<double> per_timestep_error(
    const std::vector<std::vector<double>>& preds, const std::vector<std::vector<double>>& gts,
    const std::vector<std::vector<std::uint8_t>>& masks, int joints, int samples) {
    std::vector<double> acc(static_cast<size_t>(samples), 0.0);
    std::vector<size_t> count(static_cast<size_t>(samples), 0);
    for (size_t w = 0; w < preds.size(); ++w) {
        for (int t = 0; t < samples; ++t) {
            if (!masks[w][t]) continue;
            for (int j = 0; j < joints; ++j) {
                size_t i = static_cast<size_t>(j) * samples + t;
                acc[t] += std::abs(preds[w][i] - gts[w][i]);
            }
            count[t] += static_cast<size_t>(joints);
        }
    }
    for (int t = 0; t < samples; ++t)
        acc[t] = count[t] ? acc[t] / static_cast<double>(count[t]) : 0.0;
    return acc;
}

struct ResidualSpectrum {
    std::vector<double> freq_hz;   // (0, Nyquist]
    std::vector<double> magnitude; // mean |FFT coefficient| per bin
};

// Per-window, per-joint real FFT of the residual (masked frames
// zero-filled), magnitudes averaged over windows and joints.
inline ResidualSpectrum residual_spectrum(const std::vector<std::vector<double>>& preds,
                                          const std::vector<std::vector<double>>& gts,
                                          const std::vector<std::vector<std::uint8_t>>& masks,
                                          int joints, int samples, double rate_hz) {
    if (preds.empty()) throw std::invalid_argument("residual_spectrum: no windows");
    const int n_bins = samples / 2;  // k = 1 .. N/2
    ResidualSpectrum spec;
    spec.freq_hz.resize(static_cast<size_t>(n_bins));
    spec.magnitude.assign(static_cast<size_t>(n_bins), 0.0);
    for (int k = 1; k <= n_bins; ++k)
        spec.freq_hz[k - 1] = k * rate_hz / samples;

    std::vector<double> in(static_cast<size_t>(samples));
    std::vector<fftw_complex> out(static_cast<size_t>(samples / 2 + 1));
    fftw_plan plan = fftw_plan_dft_r2c_1d(samples, in.data(), out.data(), FFTW_ESTIMATE);
    size_t n_series = 0;
    for (size_t w = 0; w < preds.size(); ++w) {
        if (preds[w].size() != gts[w].size() ||
            preds[w].size() != static_cast<size_t>(joints) * samples)
            throw std::invalid_argument("residual_spectrum: length mismatch");
        for (int j = 0; j < joints; ++j) {
            for (int t = 0; t < samples; ++t) {
                size_t i = static_cast<size_t>(j) * samples + t;
                in[t] = masks[w][t] ? preds[w][i] - gts[w][i] : 0.0;
            }
            fftw_execute(plan);
            for (int k = 1; k <= n_bins; ++k)
                spec.magnitude[k - 1] += std::hypot(out[k][0], out[k][1]);
            ++n_series;
        }
    }
    fftw_destroy_plan(plan);
    for (auto& m : spec.magnitude) m /= static_cast<double>(n_series);
    return spec;
}

// diff(a, b) = |FFT(res_a)| - |FFT(res_b)| per bin; positive values mean
// the second model has the lower residual magnitude.
inline std::vector<double> spectrum_diff(const ResidualSpectrum& a, const ResidualSpectrum& b) {
    if (a.magnitude.size() != b.magnitude.size())
        throw std::invalid_argument("spectrum_diff: bin count mismatch");
    std::vector<double> d(a.magnitude.size());
    for (size_t i = 0; i < d.size(); ++i) d[i] = a.magnitude[i] - b.magnitude[i];
    return d;
}

enum class Condition { UserStage, User, Stage, Val };

inline std::string to_string(Condition c) {
    switch (c) {
        case Condition::UserStage: return "user_stage";
        case Condition::User: return "user";
        case Condition::Stage: return "stage";
        default: return "val";
    }
}

struct MetricsRecord {
    std::string model_id;
    int seed = 0;
    std::string user_id;
    Condition condition = Condition::UserStage;
    Task task = Task::Tracking;
    double ae_deg = 0.0;
    double ld_mm = 0.0;
    double mean_speed_dps = 0.0;
};

struct AggregateRow {
    std::string model_id;
    Condition condition;
    Task task;
    int n_users = 0;
    double ae_mean = 0.0, ae_sd = 0.0;
    double ld_mean = 0.0, ld_sd = 0.0;
    double speed_mean = 0.0, speed_sd = 0.0;
    bool single_user = false;  // sd undefined, reported as 0
};

// Two-stage aggregation: average across seeds per user first, then mean
// and sample sd (n-1) across users.
inline std::vector<AggregateRow> aggregate(const std::vector<MetricsRecord>& records) {
    if (records.empty()) throw std::invalid_argument("aggregate: no records");
    std::map<std::tuple<std::string, Condition, Task>,
             std::map<std::string, std::vector<const MetricsRecord*>>>
        groups;
    for (const auto& r : records)
        groups[{r.model_id, r.condition, r.task}][r.user_id].push_back(&r);

    std::vector<AggregateRow> rows;
    for (const auto& [key, users] : groups) {
        if (users.empty()) throw std::invalid_argument("aggregate: zero users");
        AggregateRow row;
        row.model_id = std::get<0>(key);
        row.condition = std::get<1>(key);
        row.task = std::get<2>(key);
        std::vector<double> ae, ld, sp;
        for (const auto& [user, recs] : users) {
            double a = 0.0, l = 0.0, s = 0.0;
            for (const auto* r : recs) {
                a += r->ae_deg;
                l += r->ld_mm;
                s += r->mean_speed_dps;
            }
            ae.push_back(a / recs.size());
            ld.push_back(l / recs.size());
            sp.push_back(s / recs.size());
        }
        auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
            mean = 0.0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            if (v.size() < 2) {
                sd = 0.0;
                return;
            }
            double acc = 0.0;
            for (double x : v) acc += (x - mean) * (x - mean);
            sd = std::sqrt(acc / static_cast<double>(v.size() - 1));
        };
        row.n_users = static_cast<int>(ae.size());
        row.single_user = ae.size() < 2;
        mean_sd(ae, row.ae_mean, row.ae_sd);
        mean_sd(ld, row.ld_mean, row.ld_sd);
        mean_sd(sp, row.speed_mean, row.speed_sd);
        rows.push_back(row);
    }
    return rows;
}

} // namespace emgdec
