#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace emgdec {

// Causal speed-adaptive low-pass filter, one parameter. Small motions
// are strongly suppressed, large motions pass with little attenuation.
struct FilterParams {
    double beta = 1.0;          // smoothness-accuracy knob, >= 0
    double sample_period_s;     // T_e

    void validate() const {
        if (beta < 0.0) throw std::invalid_argument("FilterParams: beta must be >= 0");
        if (sample_period_s <= 0.0)
            throw std::invalid_argument("FilterParams: sample period must be > 0");
    }
};

struct FilterState {
    double prev_output = 0.0;  // x_hat_{t-1}
    bool initialized = false;
};

// v_t = |x_t - x_hat_{t-1}| / T_e
// alpha_t = 2*pi*beta*v_t*T_e / (1 + 2*pi*beta*v_t*T_e)
// x_hat_t = alpha_t * x_t + (1 - alpha_t) * x_hat_{t-1}
// The state initializes to the first input, so the first output equals
// the first input for any beta.
inline double filter_step(double x_t, FilterState& state, const FilterParams& params) {
    if (!std::isfinite(x_t)) throw std::invalid_argument("filter_step: non-finite input");
    if (!state.initialized) {
        state.prev_output = x_t;
        state.initialized = true;
        return x_t;
    }
    constexpr double two_pi = 2.0 * 3.14159265358979323846;
    double v = std::abs(x_t - state.prev_output) / params.sample_period_s;
    double k = two_pi * params.beta * v * params.sample_period_s;
    double alpha = k / (1.0 + k);
    double out = alpha * x_t + (1.0 - alpha) * state.prev_output;
    state.prev_output = out;
    return out;
}

// Per-joint independent application over a [J x T] trajectory.
inline std::vector<double> filter_trajectory(const std::vector<double>& traj, int joints,
                                             int samples, const FilterParams& params) {
    params.validate();
    if (samples < 1 || traj.size() != static_cast<size_t>(joints) * samples)
        throw std::invalid_argument("filter_trajectory: empty or mis-sized trajectory");
    std::vector<double> out(traj.size());
    for (int j = 0; j < joints; ++j) {
        FilterState st;
        for (int t = 0; t < samples; ++t)
            out[static_cast<size_t>(j) * samples + t] =
                filter_step(traj[static_cast<size_t>(j) * samples + t], st, params);
    }
    return out;
}

inline const std::vector<double>& default_beta_grid() {
    static const std::vector<double> grid = {0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0};
    return grid;
}

// Filters each trajectory in the set once per beta.
inline std::vector<std::vector<std::vector<double>>>
beta_sweep(const std::vector<std::vector<double>>& trajs, int joints, int samples,
           const std::vector<double>& betas, double sample_period_s) {
    std::vector<std::vector<std::vector<double>>> out;
    out.reserve(betas.size());
    for (double beta : betas) {
        FilterParams p{beta, sample_period_s};
        std::vector<std::vector<double>> filtered;
        filtered.reserve(trajs.size());
        for (const auto& tr : trajs)
            filtered.push_back(filter_trajectory(tr, joints, samples, p));
        out.push_back(std::move(filtered));
    }
    return out;
}

} // namespace emgdec
