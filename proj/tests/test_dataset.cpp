#include <cmath>
#include <numeric>

#include "attbench/dataset.hpp"
#include "attbench/rng.hpp"
#include "doctest.h"

using namespace attbench;

namespace {

Recording random_recording(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    Recording rec;
    rec.sample_rate_hz = 100.0;
    for (std::size_t k = 0; k < n; ++k) {
        rec.acc.push_back({rng.gauss(1, 2), rng.gauss(-3, 1), rng.gauss(9, 4)});
        rec.gyr.push_back({rng.gauss(0, 0.5), rng.gauss(2, 3), rng.gauss(-1, 2)});
        rec.q_ref.push_back(random_unit_quat(rng));
    }
    return rec;
}

} // namespace

TEST_CASE("extract_windows arithmetic") {
    const auto disjoint = extract_windows(10, 5, 5, 3);
    REQUIRE(disjoint.size() == 2);
    CHECK(disjoint[0].start == 0);
    CHECK(disjoint[1].start == 5);
    CHECK(disjoint[0].rec == 3);
    CHECK(disjoint[0].len == 5);

    const auto overlapping = extract_windows(10, 5, 2);
    REQUIRE(overlapping.size() == 3);
    CHECK(overlapping[0].start == 0);
    CHECK(overlapping[1].start == 2);
    CHECK(overlapping[2].start == 4);

    CHECK_THROWS(extract_windows(4, 5, 1));
    CHECK_THROWS(extract_windows(10, 0, 1));
    CHECK_THROWS(extract_windows(10, 5, 0));

    // stride == window: consecutive windows tile the covered samples exactly
    const auto tiling = extract_windows(23, 4, 4);
    std::size_t covered = 0;
    for (std::size_t i = 0; i < tiling.size(); ++i) {
        CHECK(tiling[i].start == static_cast<int>(i * 4));
        covered += static_cast<std::size_t>(tiling[i].len);
    }
    CHECK(covered == 20);
}

TEST_CASE("augment_rotation identity and analytic frame change") {
    const Recording rec = random_recording(55, 16);
    const Recording same = augment_rotation(rec, Quat{});
    for (std::size_t k = 0; k < rec.size(); ++k) {
        CHECK((same.acc[k] - rec.acc[k]).norm() < 1e-15);
        CHECK((same.gyr[k] - rec.gyr[k]).norm() < 1e-15);
        CHECK(quat_angle(same.q_ref[k], rec.q_ref[k]) < 1e-12);
    }

    // static sample: gravity reading moves with the remounted sensor axes
    Recording still;
    still.sample_rate_hz = 100.0;
    still.acc = {{0, 0, 9.81}};
    still.gyr = {{0, 0, 0}};
    still.q_ref = {Quat{}};
    const Quat r = from_axis_angle(Vec3{1, 0, 0}, M_PI / 2);
    const Recording rot = augment_rotation(still, r);
    CHECK(std::abs(rot.acc[0].x) < 1e-12);
    CHECK(rot.acc[0].y == doctest::Approx(9.81).epsilon(1e-12));
    CHECK(std::abs(rot.acc[0].z) < 1e-12);

    // the transformed reference still maps the transformed reading upright
    const Vec3 up = rotate_vec(rot.q_ref[0], rot.acc[0]);
    CHECK(std::abs(up.x) < 1e-9);
    CHECK(std::abs(up.y) < 1e-9);
    CHECK(up.z == doctest::Approx(9.81).epsilon(1e-9));

    CHECK_THROWS(augment_rotation(rec, Quat{0.9, 0, 0, 0}));
}

TEST_CASE("augment_rotation preserves the attitude-error metric") {
    Rng rng(56);
    const Recording rec = random_recording(57, 32);
    for (int trial = 0; trial < 10; ++trial) {
        const Quat r = random_unit_quat(rng);
        const Recording aug = augment_rotation(rec, r);
        for (std::size_t k = 0; k < rec.size(); ++k) {
            const Quat est = random_unit_quat(rng);
            const double before = attitude_error(rec.q_ref[k], est).angle_rad;
            const double after = attitude_error(aug.q_ref[k], quat_mul(est, r)).angle_rad;
            CHECK(std::abs(before - after) < 1e-9);
        }
    }
}

TEST_CASE("standardizer normalizes and matches concatenation oracle") {
    const Recording a = random_recording(60, 400);
    const Recording b = random_recording(61, 300);

    // single recording: applying its own statistics yields mean 0, std 1
    const Standardizer s1 = fit_standardizer({a});
    const Recording an = apply_standardizer(s1, a);
    for (int c = 0; c < 6; ++c) {
        double sum = 0, sumsq = 0;
        for (std::size_t k = 0; k < an.size(); ++k) {
            const double v = c < 3 ? (c == 0 ? an.acc[k].x : c == 1 ? an.acc[k].y : an.acc[k].z)
                                   : (c == 3 ? an.gyr[k].x : c == 4 ? an.gyr[k].y : an.gyr[k].z);
            sum += v;
            sumsq += v * v;
        }
        const double mean = sum / static_cast<double>(an.size());
        const double var = sumsq / static_cast<double>(an.size()) - mean * mean;
        CHECK(std::abs(mean) < 1e-9);
        CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-6));
    }

    // pooled statistics equal brute-force statistics of the concatenation
    const Standardizer s2 = fit_standardizer({a, b});
    std::vector<double> chan[6];
    for (const Recording* r : {&a, &b})
        for (std::size_t k = 0; k < r->size(); ++k) {
            chan[0].push_back(r->acc[k].x);
            chan[1].push_back(r->acc[k].y);
            chan[2].push_back(r->acc[k].z);
            chan[3].push_back(r->gyr[k].x);
            chan[4].push_back(r->gyr[k].y);
            chan[5].push_back(r->gyr[k].z);
        }
    for (int c = 0; c < 6; ++c) {
        const double n = static_cast<double>(chan[c].size());
        const double mean = std::accumulate(chan[c].begin(), chan[c].end(), 0.0) / n;
        double var = 0;
        for (double v : chan[c]) var += (v - mean) * (v - mean);
        var /= n;
        CHECK(s2.mean[c] == doctest::Approx(mean).epsilon(1e-12));
        CHECK(s2.stddev[c] == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
    }

    // validation data gets the training statistics, not its own
    const Recording bn = apply_standardizer(s1, b);
    CHECK(bn.acc[0].x == doctest::Approx((b.acc[0].x - s1.mean[0]) / s1.stddev[0]).epsilon(1e-12));

    // constant channel refuses to fit
    Recording flat = a;
    for (auto& v : flat.gyr) v.y = 2.0;
    CHECK_THROWS(fit_standardizer({flat}));
    CHECK_THROWS(fit_standardizer({}));
}
