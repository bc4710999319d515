#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "attbench/quat.hpp"

namespace attbench {

constexpr double kRadToDeg = 180.0 / M_PI;
constexpr double kDegToRad = M_PI / 180.0;

// Root-mean-square attitude error over a recording, in degrees. Samples
// before settle_skip are excluded (0 = headline convention: keep everything).
inline double compute_rmse(const std::vector<Quat>& q_ref, const std::vector<Quat>& q_est,
                           std::size_t settle_skip = 0) {
    if (q_ref.size() != q_est.size())
        throw std::invalid_argument("compute_rmse: sequence length mismatch");
    if (settle_skip >= q_ref.size())
        throw std::invalid_argument("compute_rmse: settle_skip leaves no samples");
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t k = settle_skip; k < q_ref.size(); ++k) {
        const double e = attitude_error(q_ref[k], q_est[k]).angle_rad;
        acc += e * e;
        ++n;
    }
    return std::sqrt(acc / static_cast<double>(n)) * kRadToDeg;
}

} // namespace attbench
