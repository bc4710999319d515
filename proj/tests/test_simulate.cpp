#include <algorithm>
#include <cmath>

#include "attbench/dataset.hpp"
#include "attbench/simulate.hpp"
#include "doctest.h"

using namespace attbench;

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

bool same_samples(const Recording& a, const Recording& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if ((a.acc[k] - b.acc[k]).norm() != 0.0) return false;
        if ((a.gyr[k] - b.gyr[k]).norm() != 0.0) return false;
        if (a.q_ref[k].w != b.q_ref[k].w || a.q_ref[k].x != b.q_ref[k].x ||
            a.q_ref[k].y != b.q_ref[k].y || a.q_ref[k].z != b.q_ref[k].z)
            return false;
    }
    return true;
}

} // namespace

TEST_CASE("simulate_recording is deterministic per seed and labels its output") {
    const MotionLabel label{MotionKind::arbitrary, MotionSpeed::medium, MotionPausing::nonstop};
    const Recording a = simulate_recording(label, 5.0, 286.0, ImuModel{}, 42);
    const Recording b = simulate_recording(label, 5.0, 286.0, ImuModel{}, 42);
    const Recording c = simulate_recording(label, 5.0, 286.0, ImuModel{}, 43);
    CHECK(same_samples(a, b));
    CHECK(!same_samples(a, c));
    CHECK(a.name == "arbitrary-medium-nonstop-s42");
    CHECK(a.label.kind == MotionKind::arbitrary);
    CHECK(a.size() == static_cast<std::size_t>(5.0 * 286.0) + 1);
    a.validate();
}

TEST_CASE("gyro readings integrate back to the reference orientation") {
    const MotionLabel label{MotionKind::rotation, MotionSpeed::slow, MotionPausing::nonstop};
    const Recording rec = simulate_recording(label, 60.0, 286.0, ImuModel::ideal(), 7);
    Quat q = rec.q_ref[0];
    const double ts = rec.ts();
    double worst = 0.0;
    for (std::size_t k = 1; k < rec.size(); ++k) {
        q = gyro_step(q, rec.gyr[k], ts);
        worst = std::max(worst, quat_angle(q, rec.q_ref[k]));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("paused recordings rest between 30 and 40 seconds") {
    const MotionLabel label{MotionKind::arbitrary, MotionSpeed::fast, MotionPausing::paused};
    const Recording rec = simulate_recording(label, 300.0, 286.0, ImuModel{}, 11);
    const double ts = rec.ts();
    std::size_t checked = 0;
    for (std::size_t k = 0; k < rec.size(); ++k) {
        const double t = static_cast<double>(k) * ts;
        const double u = std::fmod(t, 40.0);
        if (u < 30.5 || u > 39.5) continue;
        CHECK(rec.gyr[k].norm() < 0.05);
        CHECK(std::abs(rec.acc[k].norm() - 9.81) < 0.3);
        ++checked;
    }
    CHECK(checked > 1000);

    // during motion the fast signals are much larger than rest-level noise
    double peak = 0.0;
    for (std::size_t k = 0; k < rec.size(); ++k) peak = std::max(peak, rec.gyr[k].norm());
    CHECK(peak > 2.0);
}

TEST_CASE("translation recordings do not rotate, rotation recordings do not translate") {
    const Recording tr = simulate_recording({MotionKind::translation, MotionSpeed::fast, MotionPausing::nonstop},
                                            10.0, 286.0, ImuModel::ideal(), 3);
    for (std::size_t k = 0; k < tr.size(); ++k) {
        CHECK(tr.gyr[k].norm() == 0.0);
        CHECK(quat_angle(tr.q_ref[k], tr.q_ref[0]) < 1e-12);
    }
    // translation shows itself in the accelerometer norm
    double dev = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k)
        dev = std::max(dev, std::abs(tr.acc[k].norm() - 9.81));
    CHECK(dev > 1.0);

    const Recording ro = simulate_recording({MotionKind::rotation, MotionSpeed::fast, MotionPausing::nonstop},
                                            10.0, 286.0, ImuModel::ideal(), 3);
    double rot_seen = 0.0;
    for (std::size_t k = 0; k < ro.size(); ++k) {
        // no linear acceleration: specific force norm is exactly gravity
        CHECK(std::abs(ro.acc[k].norm() - 9.81) < 1e-9);
        rot_seen = std::max(rot_seen, quat_angle(ro.q_ref[k], ro.q_ref[0]));
    }
    CHECK(rot_seen > 0.5);
}

TEST_CASE("speed levels order the signal magnitudes") {
    std::vector<double> gyr_med, acc_med;
    for (auto speed : {MotionSpeed::slow, MotionSpeed::medium, MotionSpeed::fast}) {
        const Recording ro = simulate_recording({MotionKind::rotation, speed, MotionPausing::nonstop}, 30.0,
                                                286.0, ImuModel::ideal(), 9);
        std::vector<double> w;
        for (const auto& g : ro.gyr) w.push_back(g.norm());
        gyr_med.push_back(median(w));

        const Recording tr = simulate_recording({MotionKind::translation, speed, MotionPausing::nonstop}, 30.0,
                                                286.0, ImuModel::ideal(), 9);
        std::vector<double> a;
        for (std::size_t k = 0; k < tr.size(); ++k) {
            // recover earth-frame linear acceleration via the known attitude
            const Vec3 lin = rotate_vec(tr.q_ref[k], tr.acc[k]) - Vec3{0, 0, 9.81};
            a.push_back(lin.norm());
        }
        acc_med.push_back(median(a));
    }
    CHECK(gyr_med[0] < gyr_med[1]);
    CHECK(gyr_med[1] < gyr_med[2]);
    CHECK(acc_med[0] < acc_med[1]);
    CHECK(acc_med[1] < acc_med[2]);

    // peak angular rate lands near the configured target for each level
    const Recording fast = simulate_recording({MotionKind::rotation, MotionSpeed::fast, MotionPausing::nonstop},
                                              30.0, 286.0, ImuModel::ideal(), 9);
    double peak = 0.0;
    for (const auto& g : fast.gyr) peak = std::max(peak, g.norm());
    CHECK(peak == doctest::Approx(8.0).epsilon(0.05));
}

TEST_CASE("reference orientation is continuous") {
    for (auto kind : {MotionKind::rotation, MotionKind::arbitrary}) {
        const Recording rec = simulate_recording({kind, MotionSpeed::fast, MotionPausing::paused}, 45.0, 286.0,
                                                 ImuModel::ideal(), 21);
        const double ts = rec.ts();
        for (std::size_t k = 1; k < rec.size(); ++k) {
            const double step = quat_angle(rec.q_ref[k], rec.q_ref[k - 1]);
            CHECK(step <= rec.gyr[k].norm() * ts * 1.5 + 1e-12);
        }
    }
}

TEST_CASE("bias and noise obey the model") {
    ImuModel quiet = ImuModel::ideal();
    quiet.gyr_bias = Vec3{0.02, 0, 0};
    const Recording rec = simulate_recording({MotionKind::translation, MotionSpeed::slow, MotionPausing::nonstop},
                                             5.0, 286.0, quiet, 5);
    for (std::size_t k = 0; k < rec.size(); ++k) {
        CHECK(rec.gyr[k].x == doctest::Approx(0.02).epsilon(1e-12));
        CHECK(rec.gyr[k].y == 0.0);
    }

    // random bias draws stay within the configured bound
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        ImuModel m;
        m.acc_noise_std = 0.0;
        m.gyr_noise_std = 0.0;
        const Recording r = simulate_recording({MotionKind::translation, MotionSpeed::slow, MotionPausing::nonstop},
                                               0.5, 286.0, m, seed);
        CHECK(r.gyr[0].norm() <= m.gyr_bias_bound + 1e-12);
    }
}

TEST_CASE("pre-rotated mount equals augmentation of the identity-mount run") {
    Rng rng(77);
    for (auto kind : {MotionKind::rotation, MotionKind::translation, MotionKind::arbitrary}) {
        const Quat r = random_unit_quat(rng);
        const MotionLabel label{kind, MotionSpeed::medium, MotionPausing::nonstop};
        const Recording base = simulate_recording(label, 10.0, 286.0, ImuModel::ideal(), 31);
        const Recording mounted = simulate_recording(label, 10.0, 286.0, ImuModel::ideal(), 31, r);
        const Recording aug = augment_rotation(base, r);
        REQUIRE(mounted.size() == aug.size());
        for (std::size_t k = 0; k < aug.size(); ++k) {
            CHECK((mounted.acc[k] - aug.acc[k]).norm() < 1e-8);
            CHECK((mounted.gyr[k] - aug.gyr[k]).norm() < 1e-8);
            CHECK(quat_angle(mounted.q_ref[k], aug.q_ref[k]) < 1e-8);
        }
    }
}
