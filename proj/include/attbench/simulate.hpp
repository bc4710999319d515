#pragma once

#include <cstdint>
#include <optional>

#include "attbench/recording.hpp"

namespace attbench {

// Sensor error model. Defaults are plausible consumer-MEMS stand-ins; the
// target device's noise and bias figures are not published, so treat these as
// configurable placeholders, not calibrated values.
struct ImuModel {
    double acc_noise_std = 0.05;   // m/s^2, white
    double gyr_noise_std = 0.005;  // rad/s, white
    double acc_bias_bound = 0.05;  // m/s^2, |bias| drawn uniformly in [0, bound]
    double gyr_bias_bound = 0.01;  // rad/s
    std::optional<Vec3> acc_bias;  // overrides the random draw when set
    std::optional<Vec3> gyr_bias;
    double acc_clip = 0.0;         // m/s^2 per axis, 0 disables clipping

    static ImuModel ideal() {
        ImuModel m;
        m.acc_noise_std = m.gyr_noise_std = 0.0;
        m.acc_bias = Vec3{0, 0, 0};
        m.gyr_bias = Vec3{0, 0, 0};
        return m;
    }
};

// Synthetic motion with ground truth. The trajectory is a band-limited
// sum-of-sinusoids per axis, scaled so the peak rate / peak linear
// acceleration hits the speed target (0.5 / 2 / 8 rad/s resp. m/s^2).
// `paused` gates the motion with a smooth envelope: 30 s of motion, 10 s
// static, repeating. Earth frame z is up, gravity magnitude 9.81.
//
// Conventions the rest of the pipeline relies on:
//   q_ref(k) = q_ref(k-1) * exp(gyr_true(k) * ts)   (strapdown-exact, k >= 1)
//   acc(k)   = R(q_ref(k))^T (lin_acc_E(t_k) + g_E) + bias + noise
//
// `mount`, when given, pre-rotates the sensor frame by that quaternion while
// leaving the underlying motion and all random draws unchanged; with an ideal
// ImuModel the result equals augment_rotation(simulate(..., identity), mount).
Recording simulate_recording(const MotionLabel& label, double duration_s, double sample_rate_hz,
                             const ImuModel& imu, std::uint64_t seed,
                             const Quat& mount = Quat{});

constexpr double kGravity = 9.81;

} // namespace attbench
