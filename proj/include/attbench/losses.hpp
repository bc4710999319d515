#pragma once

#include <string>
#include <vector>

#include "attbench/autodiff.hpp"
#include "attbench/quat.hpp"

namespace attbench {

enum class LossKind { mse_elementwise, arccos_att, linear_att_smoothl1 };

std::string to_string(LossKind k);
LossKind loss_from_string(const std::string& s);

// Scalar loss node for stacked estimates est [R x 4] (unit rows, order
// w,x,y,z) against the reference quaternion per row. The attitude losses act
// on d = sqrt(w_err^2 + z_err^2) of the error rotation q_ref * conj(q_est),
// so they ignore heading and quaternion sign by construction; the elementwise
// MSE sign-aligns the constant reference to the current estimate instead.
int build_loss(Tape& t, int est, const std::vector<Quat>& ref, LossKind kind,
               double smoothl1_beta = 0.01);

// Loss tails from a raw d column [N x 1], for gradient-boundedness analysis.
int build_arccos_tail(Tape& t, int d);
int build_linear_tail(Tape& t, int d, double smoothl1_beta);

// Closed-form |d loss_sample / d d| of the two attitude losses.
double arccos_loss_slope(double d);
double linear_loss_slope(double d, double smoothl1_beta);

// The d-clamp keeping arccos differentiable at perfect estimates.
inline constexpr double kDClamp = 1.0 - 1e-7;

} // namespace attbench
