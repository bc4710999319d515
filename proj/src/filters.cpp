#include "attbench/filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "attbench/metric.hpp"

namespace attbench {

FilterVariant filter_variant_from_string(const std::string& s) {
    if (s == "baseline") return FilterVariant::baseline;
    if (s == "fixed") return FilterVariant::fixed_gain;
    if (s == "strapdown") return FilterVariant::strapdown;
    throw std::invalid_argument("unknown filter variant: " + s);
}

std::string to_string(FilterVariant v) {
    switch (v) {
        case FilterVariant::baseline: return "baseline";
        case FilterVariant::fixed_gain: return "fixed";
        case FilterVariant::strapdown: return "strapdown";
    }
    return "?";
}

FilterState init_from_accel(const Vec3& acc, const FilterParams& params) {
    const double n = acc.norm();
    if (n <= 0.0) throw std::domain_error("init_from_accel: zero accelerometer sample");
    FilterState s;
    // q maps sensor to earth, so the measured up-direction must land on +z.
    s.q_est = shortest_arc(acc * (1.0 / n), Vec3{0.0, 0.0, 1.0});
    s.tau_eff = params.tau_base;
    s.static_counter = 0;
    return s;
}

Inclination inclination_of(const Quat& q_est, const Vec3& acc) {
    const Vec3 up = rotate_vec(q_est, acc);
    const double n = up.norm();
    if (n <= 0.0) return {Vec3{}, 0.0};
    // cross(up, z) = (up.y, -up.x, 0): the z component vanishes identically.
    const Vec3 axis{up.y, -up.x, 0.0};
    const double angle = std::atan2(axis.norm(), up.z);
    return {axis, angle};
}

void apply_inclination_correction(Quat& q_est, const Vec3& acc, double fraction) {
    if (fraction <= 0.0) return;
    const Inclination inc = inclination_of(q_est, acc);
    if (inc.angle <= 0.0) return;
    const double an = inc.axis.norm();
    // anti-vertical residual: any horizontal axis works, pick x.
    const Vec3 axis = an > 1e-12 ? inc.axis * (1.0 / an) : Vec3{1.0, 0.0, 0.0};
    q_est = quat_normalize(quat_mul(from_axis_angle(axis, fraction * inc.angle), q_est));
}

void baseline_step(FilterState& s, const FilterParams& p, const Vec3& acc, const Vec3& gyr, double ts) {
    s.q_est = gyro_step(s.q_est, gyr, ts);

    const double tau_max = 100.0 * p.tau_base;
    if (std::abs(acc.norm() - p.g0) > p.norm_threshold) {
        s.tau_eff = std::min(s.tau_eff * (1.0 + p.adapt_gain), tau_max);
        s.static_counter = 0;
    } else {
        if (s.static_counter < p.hold_steps) ++s.static_counter;
        if (s.static_counter >= p.hold_steps)
            s.tau_eff = std::max(s.tau_eff / (1.0 + p.adapt_gain), p.tau_base);
    }

    const double lambda = 1.0 - std::exp(-ts / s.tau_eff);
    apply_inclination_correction(s.q_est, acc, lambda);
}

void fixed_gain_step(FilterState& s, double gain, const Vec3& acc, const Vec3& gyr, double ts) {
    s.q_est = gyro_step(s.q_est, gyr, ts);
    apply_inclination_correction(s.q_est, acc, gain);
}

std::vector<Quat> run_filter(const Recording& rec, FilterVariant variant, const FilterParams& params,
                             double fixed_gain) {
    if (rec.size() == 0) throw std::invalid_argument("run_filter: empty recording");
    const double ts = rec.ts();
    FilterState s = init_from_accel(rec.acc[0], params);
    std::vector<Quat> est(rec.size());
    est[0] = s.q_est;
    for (std::size_t k = 1; k < rec.size(); ++k) {
        switch (variant) {
            case FilterVariant::baseline: baseline_step(s, params, rec.acc[k], rec.gyr[k], ts); break;
            case FilterVariant::fixed_gain: fixed_gain_step(s, fixed_gain, rec.acc[k], rec.gyr[k], ts); break;
            case FilterVariant::strapdown: s.q_est = gyro_step(s.q_est, rec.gyr[k], ts); break;
        }
        est[k] = s.q_est;
    }
    return est;
}

namespace {

double mean_rmse(const std::vector<Recording>& recs, FilterVariant variant, const FilterParams& p,
                 double fixed_gain, double settle_skip_s) {
    double sum = 0.0;
    for (const auto& rec : recs) {
        const auto skip = static_cast<std::size_t>(settle_skip_s * rec.sample_rate_hz);
        const auto est = run_filter(rec, variant, p, fixed_gain);
        sum += compute_rmse(rec.q_ref, est, skip);
    }
    return sum / static_cast<double>(recs.size());
}

} // namespace

FilterParams tune_filter(const std::vector<Recording>& recs, const std::vector<FilterParams>& grid,
                         double settle_skip_s) {
    if (recs.empty() || grid.empty()) throw std::invalid_argument("tune_filter: empty input");
    FilterParams best = grid.front();
    double best_score = std::numeric_limits<double>::infinity();
    for (const auto& p : grid) {
        const double score = mean_rmse(recs, FilterVariant::baseline, p, 0.0, settle_skip_s);
        const bool better = score < best_score ||
                            (score == best_score &&
                             (p.tau_base < best.tau_base ||
                              (p.tau_base == best.tau_base && p.adapt_gain < best.adapt_gain)));
        if (better) {
            best = p;
            best_score = score;
        }
    }
    return best;
}

double tune_fixed_gain(const std::vector<Recording>& recs, const std::vector<double>& gains,
                       double settle_skip_s) {
    if (recs.empty() || gains.empty()) throw std::invalid_argument("tune_fixed_gain: empty input");
    double best = gains.front();
    double best_score = std::numeric_limits<double>::infinity();
    for (double g : gains) {
        const double score = mean_rmse(recs, FilterVariant::fixed_gain, {}, g, settle_skip_s);
        if (score < best_score || (score == best_score && g < best)) {
            best = g;
            best_score = score;
        }
    }
    return best;
}

std::vector<FilterParams> make_param_grid() {
    std::vector<FilterParams> grid;
    for (double tau : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0})
        for (double gain : {0.0, 0.05, 0.1, 0.2, 0.5}) {
            FilterParams p;
            p.tau_base = tau;
            p.adapt_gain = gain;
            grid.push_back(p);
        }
    return grid;
}

std::vector<double> make_gain_grid() { return {0.001, 0.002, 0.005, 0.01, 0.02, 0.05}; }

} // namespace attbench
