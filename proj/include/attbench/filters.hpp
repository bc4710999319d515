#pragma once

#include <vector>

#include "attbench/quat.hpp"
#include "attbench/recording.hpp"

namespace attbench {

// Adaptive complementary filter: gyro strapdown prediction plus an
// accelerometer inclination correction whose time constant grows while the
// accelerometer norm is far from 1 g and relaxes back after a quiet period.
struct FilterParams {
    double tau_base = 1.0;       // s, accelerometer-correction time constant
    double adapt_gain = 0.1;     // multiplicative tau adaptation per step
    double norm_threshold = 0.981; // m/s^2 deviation from g0 that triggers de-weighting
    int hold_steps = 286;        // consecutive near-static samples before re-weighting
    double g0 = 9.81;            // m/s^2 static accelerometer norm
};

struct FilterState {
    Quat q_est;                  // sensor-to-earth, unit
    double tau_eff = 1.0;        // s, >= tau_base
    int static_counter = 0;
};

enum class FilterVariant { baseline, fixed_gain, strapdown };

FilterVariant filter_variant_from_string(const std::string& s);
std::string to_string(FilterVariant v);

// Attitude that maps acc onto the earth vertical with zero heading.
// Throws std::domain_error on zero accelerometer input.
FilterState init_from_accel(const Vec3& acc, const FilterParams& params = {});

// Residual tilt of the measured specific force after rotating it into the
// earth frame by q_est. The correction axis is horizontal by construction
// (axis.z is exactly 0), so applying it never changes heading. A zero axis
// means acc is already vertical (angle 0) or anti-vertical (angle pi, the
// caller picks any horizontal axis).
struct Inclination {
    Vec3 axis;    // unnormalized, z component exactly 0
    double angle; // rad, in [0, pi]
};
Inclination inclination_of(const Quat& q_est, const Vec3& acc);

// Rotates q_est by `fraction` of the inclination residual about the
// horizontal axis. fraction in [0, 1]; ||acc|| = 0 is a silent no-op.
void apply_inclination_correction(Quat& q_est, const Vec3& acc, double fraction);

// One sample of the adaptive filter: predict with gyr over Ts, adapt tau_eff
// from the accelerometer norm, then correct inclination by
// lambda = 1 - exp(-Ts/tau_eff).
void baseline_step(FilterState& s, const FilterParams& p, const Vec3& acc, const Vec3& gyr, double ts);

// Same prediction/correction but with a constant correction fraction and no
// adaptation. gain = 0 degenerates to pure strapdown.
void fixed_gain_step(FilterState& s, double gain, const Vec3& acc, const Vec3& gyr, double ts);

// Runs a variant over a whole recording. The estimate at index 0 comes from
// the first accelerometer sample; sample k >= 1 consumes (acc(k), gyr(k))
// where gyr(k) is the mean rate over the preceding interval. Returns N
// quaternions for N samples.
std::vector<Quat> run_filter(const Recording& rec, FilterVariant variant, const FilterParams& params = {},
                             double fixed_gain = 0.005);

// Exhaustive search minimizing mean e_RMS over the given recordings with the
// baseline variant. Ties go to smaller tau_base, then smaller adapt_gain.
// settle_skip_s seconds are discarded at the start of each recording.
FilterParams tune_filter(const std::vector<Recording>& recs, const std::vector<FilterParams>& grid,
                         double settle_skip_s = 0.0);

// Same search for the fixed-gain variant's correction fraction.
double tune_fixed_gain(const std::vector<Recording>& recs, const std::vector<double>& gains,
                       double settle_skip_s = 0.0);

// Default tuning grid: tau_base x adapt_gain around the stock values.
std::vector<FilterParams> make_param_grid();

// Default candidate gains for the fixed-gain variant.
std::vector<double> make_gain_grid();

} // namespace attbench
