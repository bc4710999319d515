#pragma once

#include <string>
#include <vector>

#include "attbench/quat.hpp"

namespace attbench {

enum class MotionKind { rotation, translation, arbitrary };
enum class MotionSpeed { slow, medium, fast };
enum class MotionPausing { paused, nonstop };

struct MotionLabel {
    MotionKind kind = MotionKind::arbitrary;
    MotionSpeed speed = MotionSpeed::medium;
    MotionPausing pausing = MotionPausing::nonstop;
};

std::string to_string(MotionKind k);
std::string to_string(MotionSpeed s);
std::string to_string(MotionPausing p);
MotionKind kind_from_string(const std::string& s);
MotionSpeed speed_from_string(const std::string& s);
MotionPausing pausing_from_string(const std::string& s);

// A time-aligned IMU recording with ground-truth orientation. t(k) = k/rate.
// gyr(k), for k >= 1, is the mean body rate over (t(k-1), t(k)]; acc(k) is the
// specific force at t(k) in sensor axes. Immutable after construction by
// convention: nothing in the library mutates a Recording it did not create.
struct Recording {
    std::string name;
    double sample_rate_hz = 286.0;
    std::vector<Vec3> acc;   // m/s^2
    std::vector<Vec3> gyr;   // rad/s
    std::vector<Quat> q_ref; // sensor-to-earth
    MotionLabel label{};

    std::size_t size() const { return acc.size(); }
    double ts() const { return 1.0 / sample_rate_hz; }

    // Throws if lengths mismatch, the recording is empty, the rate is not
    // positive, or any reference quaternion is off the unit sphere by > 1e-6.
    void validate() const;
};

// CSV schema: header `t,ax,ay,az,gx,gy,gz,qw,qx,qy,qz`, one sample per line.
// A sidecar JSON (same path with extension replaced by .json) carries
// sample_rate_hz and the motion label; without it the rate is inferred from
// the first two t values and the label defaults to arbitrary/medium/nonstop.
Recording load_recording(const std::string& path);
void save_recording(const Recording& rec, const std::string& path);

// Estimate CSV (filter / network output): header `t,qw,qx,qy,qz`.
void save_estimates(const std::vector<Quat>& est, double sample_rate_hz, const std::string& path);
std::vector<Quat> load_estimates(const std::string& path);

} // namespace attbench
