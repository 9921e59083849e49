#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "emgdec/ops.hpp"
#include "emgdec/tensor.hpp"

namespace emgdec {

// Simplified 20-DOF hand: 5 fingers x 4 revolute joints (MCP flexion,
// MCP abduction, PIP, DIP) on a rigid palm. Angles are degrees at the
// API boundary, millimetres throughout. Landmarks: palm base + per
// finger MCP, PIP, DIP, fingertip = 21.
struct HandModel {
    static constexpr int kFingers = 5;
    static constexpr int kJointsPerFinger = 4;
    static constexpr int kNumJoints = 20;
    static constexpr int kNumLandmarks = 21;

    // [finger][xyz], knuckle positions on the palm
    std::array<std::array<double, 3>, kFingers> base;
    // [finger][proximal, middle, distal]
    std::array<std::array<double, 3>, kFingers> bone_mm;

    static HandModel canonical() {
        HandModel m;
        // thumb, index, middle, ring, pinky spread along x; bones along +y
        const double spread[kFingers] = {-34.0, -17.0, 0.0, 17.0, 34.0};
        const double reach[kFingers] = {50.0, 78.0, 82.0, 76.0, 62.0};
        const double scale[kFingers] = {0.9, 1.0, 1.05, 0.95, 0.8};
        for (int f = 0; f < kFingers; ++f) {
            m.base[f] = {spread[f], reach[f], 0.0};
            m.bone_mm[f] = {45.0 * scale[f], 25.0 * scale[f], 20.0 * scale[f]};
        }
        return m;
    }
};

namespace kin_detail {

// Forward-mode dual number carrying derivatives w.r.t. the 4 angles of
// one finger chain.
struct Dual4 {
    double v = 0.0;
    std::array<double, 4> d{0.0, 0.0, 0.0, 0.0};

    Dual4() = default;
    Dual4(double value) : v(value) {}
    static Dual4 var(double value, int index) {
        Dual4 x(value);
        x.d[static_cast<size_t>(index)] = 1.0;
        return x;
    }
};

inline Dual4 operator+(const Dual4& a, const Dual4& b) {
    Dual4 r(a.v + b.v);
    for (int i = 0; i < 4; ++i) r.d[i] = a.d[i] + b.d[i];
    return r;
}
inline Dual4 operator-(const Dual4& a, const Dual4& b) {
    Dual4 r(a.v - b.v);
    for (int i = 0; i < 4; ++i) r.d[i] = a.d[i] - b.d[i];
    return r;
}
inline Dual4 operator*(const Dual4& a, const Dual4& b) {
    Dual4 r(a.v * b.v);
    for (int i = 0; i < 4; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
}
inline Dual4 sin(const Dual4& a) {
    Dual4 r(std::sin(a.v));
    double c = std::cos(a.v);
    for (int i = 0; i < 4; ++i) r.d[i] = c * a.d[i];
    return r;
}
inline Dual4 cos(const Dual4& a) {
    Dual4 r(std::cos(a.v));
    double s = -std::sin(a.v);
    for (int i = 0; i < 4; ++i) r.d[i] = s * a.d[i];
    return r;
}
inline double sin(double a) { return std::sin(a); }
inline double cos(double a) { return std::cos(a); }

template <typename S>
using Mat3 = std::array<std::array<S, 3>, 3>;
template <typename S>
using Vec3 = std::array<S, 3>;

template <typename S>
Mat3<S> rot_x(const S& a) {
    S c = cos(a), s = sin(a);
    return {{{S(1.0), S(0.0), S(0.0)}, {S(0.0), c, S(0.0) - s}, {S(0.0), s, c}}};
}
template <typename S>
Mat3<S> rot_z(const S& a) {
    S c = cos(a), s = sin(a);
    return {{{c, S(0.0) - s, S(0.0)}, {s, c, S(0.0)}, {S(0.0), S(0.0), S(1.0)}}};
}
template <typename S>
Mat3<S> mat_mul(const Mat3<S>& a, const Mat3<S>& b) {
    Mat3<S> r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
    return r;
}
template <typename S>
Vec3<S> mat_vec(const Mat3<S>& a, const Vec3<S>& v) {
    Vec3<S> r;
    for (int i = 0; i < 3; ++i) r[i] = a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2];
    return r;
}
template <typename S>
Vec3<S> vec_add(const Vec3<S>& a, const Vec3<S>& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

// One finger chain: base -> (abduction about z, flexion about x) ->
// proximal bone -> PIP flexion -> middle bone -> DIP flexion -> distal
// bone. Emits PIP, DIP, tip positions.
// angles: {mcp_flex, mcp_abd, pip, dip} in radians.
template <typename S>
std::array<Vec3<S>, 3> finger_chain(const HandModel& m, int finger,
                                    const std::array<S, 4>& angles) {
    Vec3<S> p = {S(m.base[finger][0]), S(m.base[finger][1]), S(m.base[finger][2])};
    Mat3<S> r = mat_mul(rot_z(angles[1]), rot_x(angles[0]));
    std::array<Vec3<S>, 3> out;
    const double* bones = m.bone_mm[finger].data();
    p = vec_add(p, mat_vec(r, Vec3<S>{S(0.0), S(bones[0]), S(0.0)}));
    out[0] = p;
    r = mat_mul(r, rot_x(angles[2]));
    p = vec_add(p, mat_vec(r, Vec3<S>{S(0.0), S(bones[1]), S(0.0)}));
    out[1] = p;
    r = mat_mul(r, rot_x(angles[3]));
    p = vec_add(p, mat_vec(r, Vec3<S>{S(0.0), S(bones[2]), S(0.0)}));
    out[2] = p;
    return out;
}

inline void check_pose_finite(const std::vector<double>& pose) {
    for (double a : pose)
        if (!std::isfinite(a)) throw std::invalid_argument("kinematics: non-finite angle");
}

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

// Poses shorter than 20 DOFs drive the first J joints; the rest stay at
// the flat-hand zero.
inline std::array<double, HandModel::kNumJoints> pad_pose(const std::vector<double>& pose_deg) {
    if (pose_deg.size() > HandModel::kNumJoints)
        throw std::invalid_argument("kinematics: pose has more than 20 angles");
    check_pose_finite(pose_deg);
    std::array<double, HandModel::kNumJoints> full{};
    for (size_t i = 0; i < pose_deg.size(); ++i) full[i] = pose_deg[i] * kDegToRad;
    return full;
}

} // namespace kin_detail

using Landmarks = std::array<std::array<double, 3>, HandModel::kNumLandmarks>;

// Landmark layout: index 0 is the palm base (origin); finger f occupies
// indices 1+4f .. 4+4f as MCP, PIP, DIP, tip.
inline Landmarks fk_landmarks(const HandModel& m, const std::vector<double>& pose_deg) {
    auto full = kin_detail::pad_pose(pose_deg);
    Landmarks lm{};
    lm[0] = {0.0, 0.0, 0.0};
    for (int f = 0; f < HandModel::kFingers; ++f) {
        std::array<double, 4> a = {full[4 * f], full[4 * f + 1], full[4 * f + 2],
                                   full[4 * f + 3]};
        lm[1 + 4 * f] = m.base[f];
        auto chain = kin_detail::finger_chain<double>(m, f, a);
        lm[2 + 4 * f] = chain[0];
        lm[3 + 4 * f] = chain[1];
        lm[4 + 4 * f] = chain[2];
    }
    return lm;
}

inline std::array<std::array<double, 3>, HandModel::kFingers>
fingertip_positions(const HandModel& m, const std::vector<double>& pose_deg) {
    Landmarks lm = fk_landmarks(m, pose_deg);
    std::array<std::array<double, 3>, HandModel::kFingers> tips;
    for (int f = 0; f < HandModel::kFingers; ++f) tips[f] = lm[4 + 4 * f];
    return tips;
}

// Mean Euclidean distance over corresponding landmarks, in mm.
inline double landmark_distance(const HandModel& m, const std::vector<double>& pred_deg,
                                const std::vector<double>& gt_deg) {
    Landmarks a = fk_landmarks(m, pred_deg);
    Landmarks b = fk_landmarks(m, gt_deg);
    double acc = 0.0;
    for (int i = 0; i < HandModel::kNumLandmarks; ++i) {
        double dx = a[i][0] - b[i][0];
        double dy = a[i][1] - b[i][1];
        double dz = a[i][2] - b[i][2];
        acc += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    return acc / HandModel::kNumLandmarks;
}

// Fingertips plus their Jacobian w.r.t. the first n_joints pose angles
// (in degrees). tips[f][xyz]; jac[f][xyz][joint].
struct FingertipJacobian {
    std::array<std::array<double, 3>, HandModel::kFingers> tips;
    // derivative of tip coordinate w.r.t. pose angle, only the 4 angles
    // of the owning finger are nonzero
    std::array<std::array<std::array<double, 4>, 3>, HandModel::kFingers> jac;
};

inline FingertipJacobian fingertip_jacobian(const HandModel& m,
                                            const std::vector<double>& pose_deg) {
    using kin_detail::Dual4;
    auto full = kin_detail::pad_pose(pose_deg);
    FingertipJacobian out{};
    for (int f = 0; f < HandModel::kFingers; ++f) {
        std::array<Dual4, 4> a;
        for (int k = 0; k < 4; ++k) a[k] = Dual4::var(full[4 * f + k], k);
        auto chain = kin_detail::finger_chain<Dual4>(m, f, a);
        for (int x = 0; x < 3; ++x) {
            out.tips[f][x] = chain[2][x].v;
            for (int k = 0; k < 4; ++k)
                out.jac[f][x][k] = chain[2][x].d[k] * kin_detail::kDegToRad;
        }
    }
    return out;
}

// Differentiable fingertip loss term: mean over the given frames of the
// per-frame mean fingertip Euclidean distance between pred and gt poses.
// pred is [J x T] in degrees; gt is the flat row-major target.
inline Tensor fingertip_distance_term(Tape& tape, const HandModel& model,
                                      Tensor pred, const std::vector<double>& gt,
                                      const std::vector<int>& frames) {
    if (pred.shape().size() != 2)
        throw std::invalid_argument("fingertip_distance_term: expected [J x T]");
    const int J = pred.dim(0), T = pred.dim(1);
    if (gt.size() != pred.numel())
        throw std::invalid_argument("fingertip_distance_term: target size mismatch");
    if (frames.empty())
        throw std::invalid_argument("fingertip_distance_term: no frames selected");
    const int n_used = std::min(J, HandModel::kNumJoints);

    struct FrameCache {
        int t;
        FingertipJacobian fj;
        std::array<std::array<double, 3>, HandModel::kFingers> diff;
        std::array<double, HandModel::kFingers> norm;
    };
    auto caches = std::make_shared<std::vector<FrameCache>>();
    caches->reserve(frames.size());

    double acc = 0.0;
    std::vector<double> pose(n_used), gt_pose(n_used);
    for (int t : frames) {
        if (t < 0 || t >= T)
            throw std::invalid_argument("fingertip_distance_term: frame out of range");
        for (int j = 0; j < n_used; ++j) {
            pose[j] = pred.data()[static_cast<size_t>(j) * T + t];
            gt_pose[j] = gt[static_cast<size_t>(j) * T + t];
        }
        FrameCache fc;
        fc.t = t;
        fc.fj = fingertip_jacobian(model, pose);
        auto gt_tips = fingertip_positions(model, gt_pose);
        for (int f = 0; f < HandModel::kFingers; ++f) {
            double n2 = 0.0;
            for (int x = 0; x < 3; ++x) {
                fc.diff[f][x] = fc.fj.tips[f][x] - gt_tips[f][x];
                n2 += fc.diff[f][x] * fc.diff[f][x];
            }
            fc.norm[f] = std::sqrt(n2);
            acc += fc.norm[f];
        }
        caches->push_back(fc);
    }
    const double denom = static_cast<double>(frames.size()) * HandModel::kFingers;
    bool rg = pred.requires_grad();
    Tensor out = detail::make_output(tape, {1}, {acc / denom}, rg,
                                     "fingertip_distance_term");
    if (rg) tape.record([pred, out, caches, denom, T, n_used]() mutable {
        const auto* g = detail::out_grad(out);
        if (!g) return;
        double go = (*g)[0] / denom;
        auto& gp = pred.grad();
        for (const auto& fc : *caches) {
            for (int f = 0; f < HandModel::kFingers; ++f) {
                if (fc.norm[f] == 0.0) continue;  // subgradient 0 at coincidence
                for (int k = 0; k < 4; ++k) {
                    int joint = 4 * f + k;
                    if (joint >= n_used) break;
                    double d = 0.0;
                    for (int x = 0; x < 3; ++x)
                        d += fc.diff[f][x] / fc.norm[f] * fc.fj.jac[f][x][k];
                    gp[static_cast<size_t>(joint) * T + fc.t] += go * d;
                }
            }
        }
    });
    return out;
}

} // namespace emgdec
