#include "attbench/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "attbench/rng.hpp"

namespace attbench {

namespace {

constexpr int kSinesPerAxis = 4;

// Band-limited random signal: per axis a small sum of sinusoids with random
// frequency, phase and relative amplitude, later rescaled jointly so the peak
// vector norm hits the requested target.
struct SumOfSines3 {
    double amp[3][kSinesPerAxis];
    double freq[3][kSinesPerAxis];
    double phase[3][kSinesPerAxis];
    double scale = 1.0;

    static SumOfSines3 draw(Rng& rng, double f_lo, double f_hi) {
        SumOfSines3 s;
        for (int a = 0; a < 3; ++a)
            for (int i = 0; i < kSinesPerAxis; ++i) {
                s.amp[a][i] = rng.uniform(0.3, 1.0);
                s.freq[a][i] = rng.uniform(f_lo, f_hi);
                s.phase[a][i] = rng.uniform(0.0, 2.0 * M_PI);
            }
        return s;
    }

    Vec3 eval(double t) const {
        Vec3 v{};
        for (int i = 0; i < kSinesPerAxis; ++i) {
            v.x += amp[0][i] * std::sin(2.0 * M_PI * freq[0][i] * t + phase[0][i]);
            v.y += amp[1][i] * std::sin(2.0 * M_PI * freq[1][i] * t + phase[1][i]);
            v.z += amp[2][i] * std::sin(2.0 * M_PI * freq[2][i] * t + phase[2][i]);
        }
        return v * scale;
    }

    void rescale_to_peak(double target_peak, double duration, double dt) {
        double peak = 0.0;
        for (double t = 0.0; t <= duration; t += dt) peak = std::max(peak, eval(t).norm());
        scale = peak > 0.0 ? target_peak / peak : 0.0;
    }
};

struct SpeedProfile {
    double f_lo, f_hi;       // Hz content band
    double peak_rate;        // rad/s
    double peak_lin_acc;     // m/s^2
};

SpeedProfile profile_for(MotionSpeed s) {
    switch (s) {
        case MotionSpeed::slow: return {0.05, 0.3, 0.5, 0.5};
        case MotionSpeed::medium: return {0.1, 1.0, 2.0, 2.0};
        case MotionSpeed::fast: return {0.2, 2.0, 5.0, 6.0};
    }
    return {0.1, 1.0, 2.0, 2.0};
}

// Motion gate for paused recordings: 30 s of motion, 10 s static, with 0.5 s
// cosine ramps inside the motion segment so all signals stay continuous.
double pause_envelope(double t) {
    constexpr double kCycle = 40.0, kMotion = 30.0, kRamp = 0.5;
    const double u = std::fmod(t, kCycle);
    if (u < kRamp) return 0.5 * (1.0 - std::cos(M_PI * u / kRamp));
    if (u < kMotion - kRamp) return 1.0;
    if (u < kMotion) return 0.5 * (1.0 + std::cos(M_PI * (u - (kMotion - kRamp)) / kRamp));
    return 0.0;
}

Vec3 draw_bias(Rng& rng, double bound) {
    // uniform direction, magnitude uniform in [0, bound]
    Vec3 dir;
    double n;
    do {
        dir = {rng.gauss(), rng.gauss(), rng.gauss()};
        n = dir.norm();
    } while (n < 1e-12);
    return dir * (rng.uniform(0.0, bound) / n);
}

} // namespace

Recording simulate_recording(const MotionLabel& label, double duration_s, double sample_rate_hz,
                             const ImuModel& imu, std::uint64_t seed, const Quat& mount) {
    if (duration_s <= 0.0) throw std::invalid_argument("simulate_recording: duration must be positive");
    if (sample_rate_hz <= 0.0) throw std::invalid_argument("simulate_recording: rate must be positive");

    const double ts = 1.0 / sample_rate_hz;
    const auto n = static_cast<std::size_t>(std::floor(duration_s * sample_rate_hz)) + 1;
    const SpeedProfile prof = profile_for(label.speed);

    Rng rng(seed);
    Rng traj_rng = rng.fork(1);
    Rng noise_rng = rng.fork(2);

    // All random draws happen before and independent of the mount rotation.
    SumOfSines3 rate_sig = SumOfSines3::draw(traj_rng, prof.f_lo, prof.f_hi);
    SumOfSines3 lin_sig = SumOfSines3::draw(traj_rng, prof.f_lo, prof.f_hi);
    rate_sig.rescale_to_peak(prof.peak_rate, duration_s, 0.5 * ts);
    lin_sig.rescale_to_peak(prof.peak_lin_acc, duration_s, 0.5 * ts);
    const Quat q0 = random_unit_quat(traj_rng);
    const Vec3 acc_bias = imu.acc_bias ? *imu.acc_bias : draw_bias(traj_rng, imu.acc_bias_bound);
    const Vec3 gyr_bias = imu.gyr_bias ? *imu.gyr_bias : draw_bias(traj_rng, imu.gyr_bias_bound);

    const bool rotates = label.kind != MotionKind::translation;
    const bool translates = label.kind != MotionKind::rotation;
    const bool paused = label.pausing == MotionPausing::paused;

    const Quat mount_inv = quat_normalize(mount).conjugate();
    const auto omega_at = [&](double t) -> Vec3 {
        if (!rotates) return {};
        const double env = paused ? pause_envelope(t) : 1.0;
        return rotate_vec(mount_inv, rate_sig.eval(t) * env);
    };
    const auto lin_acc_earth_at = [&](double t) -> Vec3 {
        if (!translates) return {};
        const double env = paused ? pause_envelope(t) : 1.0;
        return lin_sig.eval(t) * env;
    };

    Recording rec;
    rec.name = to_string(label.kind) + "-" + to_string(label.speed) + "-" + to_string(label.pausing) +
               "-s" + std::to_string(seed);
    rec.sample_rate_hz = sample_rate_hz;
    rec.label = label;
    rec.acc.resize(n);
    rec.gyr.resize(n);
    rec.q_ref.resize(n);

    const Vec3 g_earth{0.0, 0.0, kGravity};
    Quat q = quat_mul(q0, quat_normalize(mount));
    rec.q_ref[0] = q;

    std::vector<Vec3> gyr_true(n);
    gyr_true[0] = omega_at(0.0);
    for (std::size_t k = 1; k < n; ++k) {
        // rate over (t_{k-1}, t_k], sampled at the interval midpoint
        const Vec3 w = omega_at((static_cast<double>(k) - 0.5) * ts);
        q = gyro_step(q, w, ts);
        rec.q_ref[k] = q;
        gyr_true[k] = w;
    }

    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * ts;
        const Vec3 f_earth = lin_acc_earth_at(t) + g_earth;
        Vec3 acc = rotate_vec(rec.q_ref[k].conjugate(), f_earth) + acc_bias;
        Vec3 gyr = gyr_true[k] + gyr_bias;
        acc = acc + Vec3{noise_rng.gauss(0, imu.acc_noise_std), noise_rng.gauss(0, imu.acc_noise_std),
                         noise_rng.gauss(0, imu.acc_noise_std)};
        gyr = gyr + Vec3{noise_rng.gauss(0, imu.gyr_noise_std), noise_rng.gauss(0, imu.gyr_noise_std),
                         noise_rng.gauss(0, imu.gyr_noise_std)};
        if (imu.acc_clip > 0.0) {
            acc.x = std::clamp(acc.x, -imu.acc_clip, imu.acc_clip);
            acc.y = std::clamp(acc.y, -imu.acc_clip, imu.acc_clip);
            acc.z = std::clamp(acc.z, -imu.acc_clip, imu.acc_clip);
        }
        rec.acc[k] = acc;
        rec.gyr[k] = gyr;
    }

    return rec;
}

} // namespace attbench
