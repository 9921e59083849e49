#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>

#include "emgdec/tensor.hpp"

namespace emgdec {
namespace detail {

inline Tensor make_output(Tape& tape, std::vector<int> shape,
                          std::vector<double> values, bool requires_grad,
                          const char* op_name) {
    (void)tape;
    Tensor out = Tensor::from(std::move(shape), std::move(values), requires_grad);
    check_finite_forward(out, op_name);
    return out;
}

inline const std::vector<double>* out_grad(Tensor out) {
    return out.has_grad() ? &out.grad() : nullptr;
}

} // namespace detail

// out = ca*a + cb*b, elementwise, same shape.
inline Tensor add_scaled(Tape& tape, Tensor a, Tensor b,
                         double ca = 1.0, double cb = 1.0) {
    if (a.shape() != b.shape())
        throw std::invalid_argument("add_scaled: shape mismatch");
    std::vector<double> y(a.numel());
    for (size_t i = 0; i < y.size(); ++i)
        y[i] = ca * a.data()[i] + cb * b.data()[i];
    bool rg = a.requires_grad() || b.requires_grad();
    Tensor out = detail::make_output(tape, a.shape(), std::move(y), rg, "add_scaled");
    if (rg) tape.record([a, b, out, ca, cb]() mutable {
        const auto* g = detail::out_grad(out);
        if (!g) return;
        if (a.requires_grad()) {
            auto& ga = a.grad();
            for (size_t i = 0; i < ga.size(); ++i) ga[i] += ca * (*g)[i];
        }
        if (b.requires_grad()) {
            auto& gb = b.grad();
            for (size_t i = 0; i < gb.size(); ++i) gb[i] += cb * (*g)[i];
        }
    });
    return out;
}

inline Tensor add(Tape& tape, Tensor a, Tensor b) {
    return add_scaled(tape, a, b, 1.0, 1.0);
}
inline Tensor sub(Tape& tape, Tensor a, Tensor b) {
    return add_scaled(tape, a, b, 1.0, -1.0);
}

inline Tensor mul(Tape& tape, Tensor a, Tensor b) {
    if (a.shape() != b.shape())
        throw std::invalid_argument("mul: shape mismatch");
    std::vector<double> y(a.numel());
    for (size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] * b.data()[i];
    bool rg = a.requires_grad() || b.requires_grad();
    Tensor out = detail::make_output(tape, a.shape(), std::move(y), rg, "mul");
    if (rg) tape.record([a, b, out]() mutable {
        const auto* g = detail::out_grad(out);
        if (!g) return;
        if (a.requires_grad()) {
            auto& ga = a.grad();
            for (size_t i = 0; i < ga.size(); ++i) ga[i] += b.data()[i] * (*g)[i];
        }
        if (b.requires_grad()) {
            auto& gb = b.grad();
            for (size_t i = 0; i < gb.size(); ++i) gb[i] += a.data()[i] * (*g)[i];
        }
    });
    return out;
}

inline Tensor scale(Tape& tape, Tensor a, double c) {
    std::vector<double> y(a.numel());
    for (size_t i = 0; i < y.size(); ++i) y[i] = c * a.data()[i];
    bool rg = a.requires_grad();
    Tensor out = detail::make_output(tape, a.shape(), std::move(y), rg, "scale");
    if (rg) tape.record([a, out, c]() mutable {
        const auto* g = detail::out_grad(out);
        if (!g) return;
        auto& ga = a.grad();
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += c * (*g)[i];
    });
    return out;
}

inline Tensor sigmoid(Tape& tape, Tensor a) {
    std::vector<double> y(a.numel());
    for (size_t i = 0; i < y.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-a.data()[i]));
    bool rg = a.requires_grad();
    Tensor out = detail::make_output(tape, a.shape(), std::move(y), rg, "sigmoid");
    if (rg) tape.record([a, out]() mutable {
        const auto* g = detail::out_grad(out);
        if (!g) return;
        auto& ga = a.grad();
        for (size_t i = 0; i < ga.size(); ++i) {
            double s = out.data()[i];
            ga[i] += s * (1.0 - s) * (*g)[i];
        }
    });
    return out;
}

inline Tensor tanh_op(Tape& tape, Tensor a) {
    std::vector<double> y(a.numel());
    for (size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(a.data()[i]);
    bool rg = a.requires_grad();
    Tensor out = detail::make_output(tape, a.shape(), std::move(y), rg, "tanh");
    if (rg) tape.record([a, out]() mutable {
        const auto* g = detail::out_grad(out);
        if (!g) return;
        auto& ga = a.grad();
        for (size_t i = 0; i < ga.size(); ++i) {
            double t = out.data()[i];
            ga[i] += (1.0 - t * t) * (*g)[i];
        }
    });
    return out;
}

inline Tensor leaky_relu(Tape& tape, Tensor a, double slope = 0.01) {
    std::vector<double> y(a.numel());
    for (size_t i = 0; i < y.size(); ++i) {
        double v = a.data()[i];
        y[i] = v >= 0.0 ? v : slope * v;
    }
    bool rg = a.requires_grad();
    Tensor out = detail::make_output(tape, a.shape(), std::move(y), rg, "leaky_relu");
    if (rg) tape.record([a, out, slope]() mutable {
        const auto* g = detail::out_grad(out);
        if (!g) return;
        auto& ga = a.grad();
        for (size_t i = 0; i < ga.size(); ++i)
            ga[i] += (a.data()[i] >= 0.0 ? 1.0 : slope) * (*g)[i];
    });
    return out;
}

// y = W x + b. x is [D] -> [O], or [D x T] -> [O x T] (per-frame).
inline Tensor linear(Tape& tape, Tensor x, Tensor weight,
                     Tensor bias) {
    if (weight.shape().size() != 2)
        throw std::invalid_argument("linear: weight must be 2-D");
    const int O = weight.dim(0);
    const int D = weight.dim(1);
    if (bias.numel() != static_cast<size_t>(O))
        throw std::invalid_argument("linear: bias size mismatch");
    const bool vec = x.shape().size() == 1;
    const int T = vec ? 1 : x.dim(1);
    if ((vec ? x.dim(0) : x.dim(0)) != D)
        throw std::invalid_argument("linear: input dimension mismatch");

    std::vector<double> y(static_cast<size_t>(O) * T);
    for (int t = 0; t < T; ++t)
        for (int o = 0; o < O; ++o) {
            double acc = bias.data()[o];
            for (int d = 0; d < D; ++d)
                acc += weight.data()[static_cast<size_t>(o) * D + d] *
                       x.data()[static_cast<size_t>(d) * T + t];
            y[static_cast<size_t>(o) * T + t] = acc;
        }
    bool rg = x.requires_grad() || weight.requires_grad() || bias.requires_grad();
    std::vector<int> out_shape = vec ? std::vector<int>{O} : std::vector<int>{O, T};
    Tensor out = detail::make_output(tape, out_shape, std::move(y), rg, "linear");
    if (rg) tape.record([x, weight, bias, out, O, D, T]() mutable {
        const auto* g = detail::out_grad(out);
        if (!g) return;
        for (int t = 0; t < T; ++t)
            for (int o = 0; o < O; ++o) {
                double go = (*g)[static_cast<size_t>(o) * T + t];
                if (go == 0.0) continue;
                if (bias.requires_grad()) bias.grad()[o] += go;
                for (int d = 0; d < D; ++d) {
                    if (weight.requires_grad())
                        weight.grad()[static_cast<size_t>(o) * D + d] +=
                            go * x.data()[static_cast<size_t>(d) * T + t];
                    if (x.requires_grad())
                        x.grad()[static_cast<size_t>(d) * T + t] +=
                            go * weight.data()[static_cast<size_t>(o) * D + d];
                }
            }
    });
    return out;
}

// Causal strided 1-D convolution. Input is left-padded with K-1 zeros so
// output frame i depends only on input samples <= i*stride.
inline Tensor conv1d_causal(Tape& tape, Tensor input, Tensor weight,
                            Tensor bias, int stride) {
    if (stride <= 0) throw std::invalid_argument("conv1d_causal: non-positive stride");
    if (input.shape().size() != 2 || weight.shape().size() != 3)
        throw std::invalid_argument("conv1d_causal: input must be 2-D, weight 3-D");
    const int Cin = input.dim(0), T = input.dim(1);
    const int Cout = weight.dim(0), K = weight.dim(2);
    if (weight.dim(1) != Cin)
        throw std::invalid_argument("conv1d_causal: channel mismatch");
    if (bias.numel() != static_cast<size_t>(Cout))
        throw std::invalid_argument("conv1d_causal: bias size mismatch");
    const int Tout = (T + stride - 1) / stride;

    std::vector<double> y(static_cast<size_t>(Cout) * Tout);
    for (int o = 0; o < Cout; ++o)
        for (int i = 0; i < Tout; ++i) {
            double acc = bias.data()[o];
            const int base = i * stride - (K - 1);
            for (int ci = 0; ci < Cin; ++ci)
                for (int k = 0; k < K; ++k) {
                    const int idx = base + k;
                    if (idx < 0 || idx >= T) continue;
                    acc += weight.data()[(static_cast<size_t>(o) * Cin + ci) * K + k] *
                           input.data()[static_cast<size_t>(ci) * T + idx];
                }
            y[static_cast<size_t>(o) * Tout + i] = acc;
        }
    bool rg = input.requires_grad() || weight.requires_grad() || bias.requires_grad();
    Tensor out = detail::make_output(tape, {Cout, Tout}, std::move(y), rg, "conv1d_causal");
    if (rg) tape.record([input, weight, bias, out, Cin, Cout, T, Tout, K, stride]() mutable {
        const auto* g = detail::out_grad(out);
        if (!g) return;
        for (int o = 0; o < Cout; ++o)
            for (int i = 0; i < Tout; ++i) {
                double go = (*g)[static_cast<size_t>(o) * Tout + i];
                if (go == 0.0) continue;
                if (bias.requires_grad()) bias.grad()[o] += go;
                const int base = i * stride - (K - 1);
                for (int ci = 0; ci < Cin; ++ci)
                    for (int k = 0; k < K; ++k) {
                        const int idx = base + k;
                        if (idx < 0 || idx >= T) continue;
                        if (weight.requires_grad())
                            weight.grad()[(static_cast<size_t>(o) * Cin + ci) * K + k] +=
                                go * input.data()[static_cast<size_t>(ci) * T + idx];
                        if (input.requires_grad())
                            input.grad()[static_cast<size_t>(ci) * T + idx] +=
                                go * weight.data()[(static_cast<size_t>(o) * Cin + ci) * K + k];
                    }
            }
    });
    return out;
}

// Depthwise causal temporal convolution, stride 1. weight is [C x K].
inline Tensor dw_conv1d_causal(Tape& tape, Tensor input, Tensor weight,
                               Tensor bias) {
    if (input.shape().size() != 2 || weight.shape().size() != 2)
        throw std::invalid_argument("dw_conv1d_causal: bad ranks");
    const int C = input.dim(0), T = input.dim(1), K = weight.dim(1);
    if (weight.dim(0) != C || bias.numel() != static_cast<size_t>(C))
        throw std::invalid_argument("dw_conv1d_causal: channel mismatch");

    std::vector<double> y(static_cast<size_t>(C) * T);
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < T; ++i) {
            double acc = bias.data()[c];
            const int base = i - (K - 1);
            for (int k = 0; k < K; ++k) {
                const int idx = base + k;
                if (idx < 0) continue;
                acc += weight.data()[static_cast<size_t>(c) * K + k] *
                       input.data()[static_cast<size_t>(c) * T + idx];
            }
            y[static_cast<size_t>(c) * T + i] = acc;
        }
    bool rg = input.requires_grad() || weight.requires_grad() || bias.requires_grad();
    Tensor out = detail::make_output(tape, {C, T}, std::move(y), rg, "dw_conv1d_causal");
    if (rg) tape.record([input, weight, bias, out, C, T, K]() mutable {
        const auto* g = detail::out_grad(out);
        if (!g) return;
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < T; ++i) {
                double go = (*g)[static_cast<size_t>(c) * T + i];
                if (go == 0.0) continue;
                if (bias.requires_grad()) bias.grad()[c] += go;
                const int base = i - (K - 1);
                for (int k = 0; k < K; ++k) {
                    const int idx = base + k;
                    if (idx < 0) continue;
                    if (weight.requires_grad())
                        weight.grad()[static_cast<size_t>(c) * K + k] +=
                            go * input.data()[static_cast<size_t>(c) * T + idx];
                    if (input.requires_grad())
                        input.grad()[static_cast<size_t>(c) * T + idx] +=
                            go * weight.data()[static_cast<size_t>(c) * K + k];
                }
            }
    });
    return out;
}

// Normalizes over the channel dimension per frame; gain/offset are per
// channel. Accepts [C] or [C x T].
inline Tensor layer_norm(Tape& tape, Tensor x, Tensor gain,
                         Tensor offset, double eps = 1e-5) {
    const bool vec = x.shape().size() == 1;
    const int C = x.dim(0);
    const int T = vec ? 1 : x.dim(1);
    if (gain.numel() != static_cast<size_t>(C) || offset.numel() != static_cast<size_t>(C))
        throw std::invalid_argument("layer_norm: gain/offset size mismatch");

    std::vector<double> y(x.numel());
    std::vector<double> mu(T), inv_sigma(T);
    for (int t = 0; t < T; ++t) {
        double m = 0.0;
        for (int c = 0; c < C; ++c) m += x.data()[static_cast<size_t>(c) * T + t];
        m /= C;
        double v = 0.0;
        for (int c = 0; c < C; ++c) {
            double d = x.data()[static_cast<size_t>(c) * T + t] - m;
            v += d * d;
        }
        v /= C;
        mu[t] = m;
        inv_sigma[t] = 1.0 / std::sqrt(v + eps);
        for (int c = 0; c < C; ++c) {
            double xh = (x.data()[static_cast<size_t>(c) * T + t] - m) * inv_sigma[t];
            y[static_cast<size_t>(c) * T + t] = gain.data()[c] * xh + offset.data()[c];
        }
    }
    bool rg = x.requires_grad() || gain.requires_grad() || offset.requires_grad();
    Tensor out = detail::make_output(tape, x.shape(), std::move(y), rg, "layer_norm");
    if (rg) tape.record([x, gain, offset, out, C, T, mu, inv_sigma]() mutable {
        const auto* g = detail::out_grad(out);
        if (!g) return;
        for (int t = 0; t < T; ++t) {
            double sum_dxh = 0.0, sum_dxh_xh = 0.0;
            std::vector<double> dxh(C), xh(C);
            for (int c = 0; c < C; ++c) {
                size_t i = static_cast<size_t>(c) * T + t;
                xh[c] = (x.data()[i] - mu[t]) * inv_sigma[t];
                dxh[c] = (*g)[i] * gain.data()[c];
                sum_dxh += dxh[c];
                sum_dxh_xh += dxh[c] * xh[c];
                if (gain.requires_grad()) gain.grad()[c] += (*g)[i] * xh[c];
                if (offset.requires_grad()) offset.grad()[c] += (*g)[i];
            }
            if (x.requires_grad())
                for (int c = 0; c < C; ++c) {
                    size_t i = static_cast<size_t>(c) * T + t;
                    x.grad()[i] += inv_sigma[t] *
                                   (dxh[c] - sum_dxh / C - xh[c] * sum_dxh_xh / C);
                }
        }
    });
    return out;
}

// Piecewise-linear resampling along the time axis with preserved
// endpoints: output index i reads source position i*(K-1)/(L-1).
inline Tensor interpolate_linear_time(Tape& tape, Tensor seq, int out_len) {
    if (seq.shape().size() != 2)
        throw std::invalid_argument("interpolate_linear_time: expected [C x K]");
    const int C = seq.dim(0), K = seq.dim(1);
    if (K < 2) throw std::invalid_argument("interpolate_linear_time: K must be >= 2");
    if (out_len < 1) throw std::invalid_argument("interpolate_linear_time: out_len must be >= 1");
    const int L = out_len;

    std::vector<int> i0(L), i1(L);
    std::vector<double> w1(L);
    for (int i = 0; i < L; ++i) {
        double src = (L == 1) ? 0.0
                              : static_cast<double>(i) * (K - 1) / (L - 1);
        int lo = std::min(static_cast<int>(src), K - 2);
        i0[i] = lo;
        i1[i] = lo + 1;
        w1[i] = src - lo;
    }
    std::vector<double> y(static_cast<size_t>(C) * L);
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < L; ++i)
            y[static_cast<size_t>(c) * L + i] =
                (1.0 - w1[i]) * seq.data()[static_cast<size_t>(c) * K + i0[i]] +
                w1[i] * seq.data()[static_cast<size_t>(c) * K + i1[i]];
    bool rg = seq.requires_grad();
    Tensor out = detail::make_output(tape, {C, L}, std::move(y), rg,
                                     "interpolate_linear_time");
    if (rg) tape.record([seq, out, C, K, L, i0, i1, w1]() mutable {
        const auto* g = detail::out_grad(out);
        if (!g) return;
        auto& gs = seq.grad();
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < L; ++i) {
                double go = (*g)[static_cast<size_t>(c) * L + i];
                gs[static_cast<size_t>(c) * K + i0[i]] += (1.0 - w1[i]) * go;
                gs[static_cast<size_t>(c) * K + i1[i]] += w1[i] * go;
            }
    });
    return out;
}

inline Tensor concat_vec(Tape& tape, Tensor a, Tensor b) {
    if (a.shape().size() != 1 || b.shape().size() != 1)
        throw std::invalid_argument("concat_vec: expected vectors");
    const int A = a.dim(0), B = b.dim(0);
    std::vector<double> y;
    y.reserve(static_cast<size_t>(A + B));
    y.insert(y.end(), a.data().begin(), a.data().end());
    y.insert(y.end(), b.data().begin(), b.data().end());
    bool rg = a.requires_grad() || b.requires_grad();
    Tensor out = detail::make_output(tape, {A + B}, std::move(y), rg, "concat_vec");
    if (rg) tape.record([a, b, out, A, B]() mutable {
        const auto* g = detail::out_grad(out);
        if (!g) return;
        if (a.requires_grad())
            for (int i = 0; i < A; ++i) a.grad()[i] += (*g)[i];
        if (b.requires_grad())
            for (int i = 0; i < B; ++i) b.grad()[i] += (*g)[A + i];
    });
    return out;
}

inline Tensor slice_vec(Tape& tape, Tensor x, int start, int len) {
    if (x.shape().size() != 1) throw std::invalid_argument("slice_vec: expected vector");
    if (start < 0 || len <= 0 || start + len > x.dim(0))
        throw std::invalid_argument("slice_vec: out of range");
    std::vector<double> y(x.data().begin() + start, x.data().begin() + start + len);
    bool rg = x.requires_grad();
    Tensor out = detail::make_output(tape, {len}, std::move(y), rg, "slice_vec");
    if (rg) tape.record([x, out, start, len]() mutable {
        const auto* g = detail::out_grad(out);
        if (!g) return;
        for (int i = 0; i < len; ++i) x.grad()[start + i] += (*g)[i];
    });
    return out;
}

// Extracts frame t of a [C x T] matrix as a [C] vector.
inline Tensor column(Tape& tape, Tensor m, int t) {
    if (m.shape().size() != 2) throw std::invalid_argument("column: expected matrix");
    const int C = m.dim(0), T = m.dim(1);
    if (t < 0 || t >= T) throw std::invalid_argument("column: index out of range");
    std::vector<double> y(C);
    for (int c = 0; c < C; ++c) y[c] = m.data()[static_cast<size_t>(c) * T + t];
    bool rg = m.requires_grad();
    Tensor out = detail::make_output(tape, {C}, std::move(y), rg, "column");
    if (rg) tape.record([m, out, C, T, t]() mutable {
        const auto* g = detail::out_grad(out);
        if (!g) return;
        for (int c = 0; c < C; ++c) m.grad()[static_cast<size_t>(c) * T + t] += (*g)[c];
    });
    return out;
}

// Stacks M same-length vectors as the columns of a [C x M] matrix.
inline Tensor stack_columns(Tape& tape, std::vector<Tensor> cols) {
    if (cols.empty()) throw std::invalid_argument("stack_columns: empty");
    const int C = cols[0].dim(0);
    const int M = static_cast<int>(cols.size());
    std::vector<double> y(static_cast<size_t>(C) * M);
    bool rg = false;
    for (int m = 0; m < M; ++m) {
        if (cols[m].shape().size() != 1 || cols[m].dim(0) != C)
            throw std::invalid_argument("stack_columns: ragged columns");
        rg = rg || cols[m].requires_grad();
        for (int c = 0; c < C; ++c)
            y[static_cast<size_t>(c) * M + m] = cols[m].data()[c];
    }
    Tensor out = detail::make_output(tape, {C, M}, std::move(y), rg, "stack_columns");
    if (rg) tape.record([cols, out, C, M]() mutable {
        const auto* g = detail::out_grad(out);
        if (!g) return;
        for (int m = 0; m < M; ++m) {
            if (!cols[m].requires_grad()) continue;
            auto& gc = cols[m].grad();
            for (int c = 0; c < C; ++c) gc[c] += (*g)[static_cast<size_t>(c) * M + m];
        }
    });
    return out;
}

// Mean of |pred - target| over entries whose frame is mask-true. Target
// and mask are constants. mask has one entry per frame (column).
inline Tensor masked_abs_mean(Tape& tape, Tensor pred,
                              const std::vector<double>& target,
                              const std::vector<std::uint8_t>& frame_mask) {
    if (pred.shape().size() != 2)
        throw std::invalid_argument("masked_abs_mean: expected [J x T]");
    const int J = pred.dim(0), T = pred.dim(1);
    if (target.size() != pred.numel())
        throw std::invalid_argument("masked_abs_mean: target size mismatch");
    if (frame_mask.size() != static_cast<size_t>(T))
        throw std::invalid_argument("masked_abs_mean: mask length mismatch");
    size_t n_valid = 0;
    double acc = 0.0;
    for (int t = 0; t < T; ++t) {
        if (!frame_mask[t]) continue;
        ++n_valid;
        for (int j = 0; j < J; ++j) {
            size_t i = static_cast<size_t>(j) * T + t;
            acc += std::abs(pred.data()[i] - target[i]);
        }
    }
    if (n_valid == 0)
        throw std::invalid_argument("masked_abs_mean: all frames masked");
    const double denom = static_cast<double>(n_valid) * J;
    bool rg = pred.requires_grad();
    Tensor out = detail::make_output(tape, {1}, {acc / denom}, rg, "masked_abs_mean");
    if (rg) tape.record([pred, out, target, frame_mask, J, T, denom]() mutable {
        const auto* g = detail::out_grad(out);
        if (!g) return;
        double go = (*g)[0] / denom;
        auto& gp = pred.grad();
        for (int t = 0; t < T; ++t) {
            if (!frame_mask[t]) continue;
            for (int j = 0; j < J; ++j) {
                size_t i = static_cast<size_t>(j) * T + t;
                double d = pred.data()[i] - target[i];
                gp[i] += go * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0));
            }
        }
    });
    return out;
}

// One LSTM cell step, composed from primitive ops. Gate order in the
// stacked weights is input/forget/cell/output.
struct LstmCellParams {
    Tensor w_input;   // [4H x D]
    Tensor w_hidden;  // [4H x H]
    Tensor bias;      // [4H]
};

struct LstmCellState {
    Tensor h;
    Tensor c;
};

inline LstmCellState lstm_cell(Tape& tape, Tensor x, Tensor h_prev,
                               Tensor c_prev, const LstmCellParams& p) {
    const int H4 = p.w_input.dim(0);
    if (H4 % 4 != 0) throw std::invalid_argument("lstm_cell: weight rows not 4*H");
    const int H = H4 / 4;
    if (h_prev.dim(0) != H || c_prev.dim(0) != H)
        throw std::invalid_argument("lstm_cell: state dimension mismatch");
    if (p.w_hidden.dim(0) != H4 || p.w_hidden.dim(1) != H)
        throw std::invalid_argument("lstm_cell: hidden weight dimension mismatch");
    if (p.w_input.dim(1) != x.dim(0))
        throw std::invalid_argument("lstm_cell: input dimension mismatch");

    Tensor zero_bias = Tensor({H4});
    Tensor pre = add(tape, linear(tape, x, p.w_input, p.bias),
                     linear(tape, h_prev, p.w_hidden, zero_bias));
    Tensor gi = sigmoid(tape, slice_vec(tape, pre, 0, H));
    Tensor gf = sigmoid(tape, slice_vec(tape, pre, H, H));
    Tensor gg = tanh_op(tape, slice_vec(tape, pre, 2 * H, H));
    Tensor go = sigmoid(tape, slice_vec(tape, pre, 3 * H, H));
    Tensor c = add(tape, mul(tape, gf, c_prev), mul(tape, gi, gg));
    Tensor h = mul(tape, go, tanh_op(tape, c));
    return {h, c};
}

} // namespace emgdec
