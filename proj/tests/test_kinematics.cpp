#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>
#include <sstream>

#include "emgdec/kinematics.hpp"

using namespace emgdec;

namespace {

std::vector<std::array<double, 3>> read_golden() {
    std::ifstream in(std::string(EMGDEC_DATA_DIR) + "/flat_hand_landmarks.csv");
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::array<double, 3>> pts;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string name, x, y, z;
        std::getline(ss, name, ',');
        std::getline(ss, x, ',');
        std::getline(ss, y, ',');
        std::getline(ss, z, ',');
        pts.push_back({std::stod(x), std::stod(y), std::stod(z)});
    }
    return pts;
}

std::vector<double> random_pose(int joints, std::mt19937_64& rng, double range_deg = 60.0) {
    std::uniform_real_distribution<double> dist(-range_deg, range_deg);
    std::vector<double> p(static_cast<size_t>(joints));
    for (auto& v : p) v = dist(rng);
    return p;
}

} // namespace

TEST_CASE("flat hand matches the golden landmark table") {
    auto golden = read_golden();
    REQUIRE(golden.size() == static_cast<size_t>(HandModel::kNumLandmarks));
    HandModel m = HandModel::canonical();
    Landmarks lm = fk_landmarks(m, std::vector<double>(20, 0.0));
    for (int i = 0; i < HandModel::kNumLandmarks; ++i)
        for (int x = 0; x < 3; ++x)
            REQUIRE_THAT(lm[i][x], Catch::Matchers::WithinAbs(golden[i][x], 1e-12));
}

TEST_CASE("short poses pad with the flat-hand zero") {
    HandModel m = HandModel::canonical();
    std::mt19937_64 rng(3);
    auto pose8 = random_pose(8, rng);
    std::vector<double> pose20(pose8);
    pose20.resize(20, 0.0);
    Landmarks a = fk_landmarks(m, pose8);
    Landmarks b = fk_landmarks(m, pose20);
    for (int i = 0; i < HandModel::kNumLandmarks; ++i)
        for (int x = 0; x < 3; ++x) REQUIRE(a[i][x] == b[i][x]);
    // fingers 3..5 (joints 8..19) stay at the golden flat positions
    auto golden = read_golden();
    for (int i = 9; i < HandModel::kNumLandmarks; ++i)
        for (int x = 0; x < 3; ++x)
            REQUIRE_THAT(a[i][x], Catch::Matchers::WithinAbs(golden[i][x], 1e-12));
    REQUIRE_THROWS_AS(fk_landmarks(m, std::vector<double>(21, 0.0)), std::invalid_argument);
}

TEST_CASE("landmarks are 360-degree periodic in every joint") {
    HandModel m = HandModel::canonical();
    std::mt19937_64 rng(5);
    auto pose = random_pose(20, rng);
    auto shifted = pose;
    for (auto& v : shifted) v += 360.0;
    Landmarks a = fk_landmarks(m, pose);
    Landmarks b = fk_landmarks(m, shifted);
    for (int i = 0; i < HandModel::kNumLandmarks; ++i)
        for (int x = 0; x < 3; ++x)
            REQUIRE_THAT(a[i][x], Catch::Matchers::WithinAbs(b[i][x], 1e-9));
}

TEST_CASE("joint locality: distal joints move only distal landmarks") {
    HandModel m = HandModel::canonical();
    std::mt19937_64 rng(7);
    auto pose = random_pose(20, rng);
    const int finger = 2;
    auto moved = pose;
    moved[4 * finger + 3] += 25.0;  // DIP
    Landmarks a = fk_landmarks(m, pose);
    Landmarks b = fk_landmarks(m, moved);
    for (int i = 0; i < HandModel::kNumLandmarks; ++i) {
        bool is_tip_of_finger = i == 4 + 4 * finger;
        for (int x = 0; x < 3; ++x) {
            if (is_tip_of_finger) continue;
            REQUIRE(a[i][x] == b[i][x]);
        }
    }
    // PIP moves DIP and tip, nothing else
    auto moved_pip = pose;
    moved_pip[4 * finger + 2] += 25.0;
    Landmarks c = fk_landmarks(m, moved_pip);
    for (int i = 0; i < HandModel::kNumLandmarks; ++i) {
        bool distal = i == 3 + 4 * finger || i == 4 + 4 * finger;
        if (distal) continue;
        for (int x = 0; x < 3; ++x) REQUIRE(a[i][x] == c[i][x]);
    }
}

TEST_CASE("a 90-degree index DIP bend gives the closed-form distance") {
    // Only the index fingertip moves; its distal bone is 20 mm, so the
    // tip travels 20*sqrt(2) and the 21-landmark mean is (20*sqrt(2))/21.
    HandModel m = HandModel::canonical();
    std::vector<double> flat(8, 0.0), bent(8, 0.0);
    bent[7] = 90.0;  // index finger DIP within an 8-joint pose
    double d = landmark_distance(m, bent, flat);
    REQUIRE_THAT(d, Catch::Matchers::WithinAbs(20.0 * std::sqrt(2.0) / 21.0, 1e-12));
}

TEST_CASE("landmark distance is a symmetric premetric") {
    HandModel m = HandModel::canonical();
    std::mt19937_64 rng(11);
    auto a = random_pose(20, rng);
    auto b = random_pose(20, rng);
    REQUIRE(landmark_distance(m, a, a) == 0.0);
    REQUIRE_THAT(landmark_distance(m, a, b),
                 Catch::Matchers::WithinAbs(landmark_distance(m, b, a), 1e-12));
    REQUIRE(landmark_distance(m, a, b) >= 0.0);
}

TEST_CASE("fingertip motion is bounded by total chain length times angle change") {
    HandModel m = HandModel::canonical();
    std::mt19937_64 rng(13);
    constexpr double deg = 3.14159265358979323846 / 180.0;
    for (int trial = 0; trial < 20; ++trial) {
        auto a = random_pose(20, rng);
        auto b = random_pose(20, rng);
        auto ta = fingertip_positions(m, a);
        auto tb = fingertip_positions(m, b);
        for (int f = 0; f < HandModel::kFingers; ++f) {
            double chain = m.bone_mm[f][0] + m.bone_mm[f][1] + m.bone_mm[f][2];
            double dtheta = 0.0;
            for (int k = 0; k < 4; ++k) dtheta += std::abs(a[4 * f + k] - b[4 * f + k]) * deg;
            double moved = 0.0;
            for (int x = 0; x < 3; ++x) moved += (ta[f][x] - tb[f][x]) * (ta[f][x] - tb[f][x]);
            REQUIRE(std::sqrt(moved) <= chain * dtheta + 1e-9);
        }
    }
}

TEST_CASE("fingertip jacobian matches central finite differences") {
    HandModel m = HandModel::canonical();
    std::mt19937_64 rng(17);
    auto pose = random_pose(20, rng, 40.0);
    auto fj = fingertip_jacobian(m, pose);
    const double eps = 1e-4;  // degrees
    for (int f = 0; f < HandModel::kFingers; ++f)
        for (int k = 0; k < 4; ++k) {
            auto up = pose, dn = pose;
            up[4 * f + k] += eps;
            dn[4 * f + k] -= eps;
            auto tu = fingertip_positions(m, up);
            auto td = fingertip_positions(m, dn);
            for (int x = 0; x < 3; ++x) {
                double fd = (tu[f][x] - td[f][x]) / (2.0 * eps);
                REQUIRE_THAT(fj.jac[f][x][k], Catch::Matchers::WithinAbs(fd, 1e-6));
            }
        }
}

TEST_CASE("differentiable fingertip term matches finite differences") {
    HandModel m = HandModel::canonical();
    std::mt19937_64 rng(19);
    const int J = 8, T = 3;
    std::uniform_real_distribution<double> dist(-40.0, 40.0);
    Tensor pred(std::vector<int>{J, T}, true);
    std::vector<double> gt(static_cast<size_t>(J) * T);
    for (auto& v : pred.data()) v = dist(rng);
    for (auto& v : gt) v = dist(rng);
    std::vector<int> frames = {0, 2};

    auto f = [&](Tape& t) { return fingertip_distance_term(t, m, pred, gt, frames); };
    auto rep = grad_check(f, {pred}, 1e-4, 1e-4, 1e-6, 1e-7);
    INFO("rel " << rep.max_rel_err << " abs " << rep.max_abs_err);
    REQUIRE(rep.pass);
}

TEST_CASE("fingertip term value equals the plain mean tip distance") {
    HandModel m = HandModel::canonical();
    std::mt19937_64 rng(23);
    const int J = 20, T = 2;
    std::uniform_real_distribution<double> dist(-30.0, 30.0);
    Tensor pred(std::vector<int>{J, T});
    std::vector<double> gt(static_cast<size_t>(J) * T);
    for (auto& v : pred.data()) v = dist(rng);
    for (auto& v : gt) v = dist(rng);
    Tape tape;
    Tensor term = fingertip_distance_term(tape, m, pred, gt, {0, 1});

    double expect = 0.0;
    for (int t = 0; t < T; ++t) {
        std::vector<double> p(J), g(J);
        for (int j = 0; j < J; ++j) {
            p[j] = pred.data()[static_cast<size_t>(j) * T + t];
            g[j] = gt[static_cast<size_t>(j) * T + t];
        }
        auto tp = fingertip_positions(m, p);
        auto tg = fingertip_positions(m, g);
        for (int f = 0; f < HandModel::kFingers; ++f) {
            double n2 = 0.0;
            for (int x = 0; x < 3; ++x) n2 += (tp[f][x] - tg[f][x]) * (tp[f][x] - tg[f][x]);
            expect += std::sqrt(n2);
        }
    }
    expect /= 2.0 * HandModel::kFingers;
    REQUIRE_THAT(term.value(), Catch::Matchers::WithinAbs(expect, 1e-12));
}

TEST_CASE("non-finite poses are rejected") {
    HandModel m = HandModel::canonical();
    std::vector<double> bad(20, 0.0);
    bad[3] = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(fk_landmarks(m, bad), std::invalid_argument);
}
