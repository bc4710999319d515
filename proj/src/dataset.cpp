#include "attbench/dataset.hpp"

#include <cmath>
#include <stdexcept>

namespace attbench {

std::vector<WindowRef> extract_windows(int n_samples, int window_len, int stride, int rec_id) {
    if (window_len < 1 || stride < 1) throw std::invalid_argument("extract_windows: window_len and stride must be >= 1");
    if (window_len > n_samples) throw std::invalid_argument("extract_windows: window_len exceeds sequence length");
    std::vector<WindowRef> out;
    for (int start = 0; start + window_len <= n_samples; start += stride)
        out.push_back({rec_id, start, window_len});
    return out;
}

Recording augment_rotation(const Recording& rec, const Quat& r) {
    if (std::fabs(r.norm() - 1.0) > 1e-9) throw std::domain_error("augment_rotation: r must be unit");
    Recording out = rec;
    const Quat r_inv = r.conjugate();
    for (std::size_t k = 0; k < rec.size(); ++k) {
        out.acc[k] = rotate_vec(r_inv, rec.acc[k]);
        out.gyr[k] = rotate_vec(r_inv, rec.gyr[k]);
        out.q_ref[k] = quat_mul(rec.q_ref[k], r);
    }
    return out;
}

Standardizer fit_standardizer(const std::vector<Recording>& recs) {
    if (recs.empty()) throw std::invalid_argument("fit_standardizer: no recordings");
    std::array<double, 6> sum{}, sumsq{};
    std::size_t n = 0;
    for (const Recording& rec : recs) {
        for (std::size_t k = 0; k < rec.size(); ++k) {
            const std::array<double, 6> v{rec.acc[k].x, rec.acc[k].y, rec.acc[k].z,
                                          rec.gyr[k].x, rec.gyr[k].y, rec.gyr[k].z};
            for (int c = 0; c < 6; ++c) {
                sum[c] += v[c];
                sumsq[c] += v[c] * v[c];
            }
            ++n;
        }
    }
    Standardizer s;
    for (int c = 0; c < 6; ++c) {
        s.mean[c] = sum[c] / static_cast<double>(n);
        const double var = sumsq[c] / static_cast<double>(n) - s.mean[c] * s.mean[c];
        if (var <= 1e-24)
            throw std::runtime_error("fit_standardizer: channel " + std::to_string(c) + " has zero variance");
        s.stddev[c] = std::sqrt(var);
    }
    return s;
}

Recording apply_standardizer(const Standardizer& s, const Recording& rec) {
    Recording out = rec;
    for (std::size_t k = 0; k < rec.size(); ++k) {
        out.acc[k] = {(rec.acc[k].x - s.mean[0]) / s.stddev[0], (rec.acc[k].y - s.mean[1]) / s.stddev[1],
                      (rec.acc[k].z - s.mean[2]) / s.stddev[2]};
        out.gyr[k] = {(rec.gyr[k].x - s.mean[3]) / s.stddev[3], (rec.gyr[k].y - s.mean[4]) / s.stddev[4],
                      (rec.gyr[k].z - s.mean[5]) / s.stddev[5]};
    }
    return out;
}

} // namespace attbench
