#pragma once

#include <cmath>
#include <stdexcept>

#include "attbench/rng.hpp"

namespace attbench {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

// Unit quaternion, scalar first. Hamilton product. q maps sensor-frame
// coordinates to earth-frame coordinates: v_E = q * v_S * q^-1.
struct Quat {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    Quat conjugate() const { return {w, -x, -y, -z}; }
    Quat operator-() const { return {-w, -x, -y, -z}; }
};

inline Quat quat_mul(const Quat& a, const Quat& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

inline Quat quat_normalize(const Quat& q) {
    const double n = q.norm();
    if (n <= 0.0) throw std::domain_error("cannot normalize zero quaternion");
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

inline Quat quat_inv(const Quat& q) {
    const double n2 = q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z;
    if (n2 <= 0.0) throw std::domain_error("cannot invert zero quaternion");
    return {q.w / n2, -q.x / n2, -q.y / n2, -q.z / n2};
}

inline Vec3 rotate_vec(const Quat& q, const Vec3& v) {
    // v' = q (0,v) q^-1, expanded to avoid the full double product.
    const Vec3 u{q.x, q.y, q.z};
    const Vec3 t = u.cross(v) * 2.0;
    return v + t * q.w + u.cross(t);
}

inline Quat from_axis_angle(const Vec3& axis, double angle) {
    const double n = axis.norm();
    if (n <= 0.0) throw std::domain_error("rotation axis must be nonzero");
    const double half = 0.5 * angle;
    const double s = std::sin(half) / n;
    return {std::cos(half), axis.x * s, axis.y * s, axis.z * s};
}

// One strapdown step: exact quaternion exponential of the body rate over ts.
// omega = 0 leaves q unchanged.
inline Quat gyro_step(const Quat& q, const Vec3& omega, double ts) {
    if (ts <= 0.0) throw std::domain_error("gyro_step requires ts > 0");
    const double w = omega.norm();
    const double half = 0.5 * w * ts;
    double c, k;
    if (half < 1e-8) {
        // sin(h)/h to second order; keeps the step exact for omega -> 0
        c = 1.0 - 0.5 * half * half;
        k = (1.0 - half * half / 6.0) * 0.5 * ts;
    } else {
        c = std::cos(half);
        k = std::sin(half) / w;
    }
    const Quat dq{c, omega.x * k, omega.y * k, omega.z * k};
    const Quat r = quat_mul(q, dq);
    const double n = r.norm();
    return {r.w / n, r.x / n, r.y / n, r.z / n};
}

// Attitude error between a true and an estimated orientation: the smallest
// rotation angle about a horizontal axis that would zero the inclination
// error. Heading (vertical-axis) differences do not contribute.
struct AttitudeError {
    double cos_half = 1.0;   // sqrt(w_err^2 + z_err^2), clamped to [0,1]
    double angle_rad = 0.0;  // 2*acos(cos_half), in [0, pi]
};

inline AttitudeError attitude_error(const Quat& q_true, const Quat& q_est) {
    if (std::fabs(q_true.norm() - 1.0) > 1e-6 || std::fabs(q_est.norm() - 1.0) > 1e-6)
        throw std::domain_error("attitude_error requires unit quaternions");
    const Quat e = quat_mul(q_true, q_est.conjugate());
    const double d = std::sqrt(e.w * e.w + e.z * e.z);
    // equal to 2*acos(d) on the unit sphere; the atan2 form keeps full
    // precision at both ends, where acos near 1 floors out around 1e-8
    const double s = std::sqrt(e.x * e.x + e.y * e.y);
    return {d > 1.0 ? 1.0 : d, 2.0 * std::atan2(s, d)};
}

// Uniform over SO(3): a 4d gaussian normalized to the unit sphere.
inline Quat random_unit_quat(Rng& rng) {
    Quat q;
    double n;
    do {
        q = {rng.gauss(), rng.gauss(), rng.gauss(), rng.gauss()};
        n = q.norm();
    } while (n < 1e-12);
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

// Shortest rotation taking direction `from` onto direction `to`.
inline Quat shortest_arc(const Vec3& from, const Vec3& to) {
    const double nf = from.norm(), nt = to.norm();
    if (nf <= 0.0 || nt <= 0.0) throw std::domain_error("shortest_arc needs nonzero vectors");
    const Vec3 f = from * (1.0 / nf), t = to * (1.0 / nt);
    const double d = f.dot(t);
    if (d < -1.0 + 1e-12) {
        // antipodal: 180 degrees about any axis orthogonal to f
        Vec3 axis = f.cross(Vec3{1, 0, 0});
        if (axis.norm() < 1e-6) axis = f.cross(Vec3{0, 1, 0});
        return from_axis_angle(axis, M_PI);
    }
    const Vec3 c = f.cross(t);
    return quat_normalize({1.0 + d, c.x, c.y, c.z});
}

// Total rotation angle between two orientations (sign-invariant), in [0, pi].
inline double quat_angle(const Quat& a, const Quat& b) {
    const Quat e = quat_mul(a, b.conjugate());
    const double s = std::sqrt(e.x * e.x + e.y * e.y + e.z * e.z);
    return 2.0 * std::atan2(s, std::fabs(e.w));
}

} // namespace attbench
