#include "attbench/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace attbench {

std::string to_string(LossKind k) {
    switch (k) {
        case LossKind::mse_elementwise: return "mse";
        case LossKind::arccos_att: return "arccos";
        case LossKind::linear_att_smoothl1: return "linear";
    }
    throw std::logic_error("unreachable");
}

LossKind loss_from_string(const std::string& s) {
    if (s == "mse") return LossKind::mse_elementwise;
    if (s == "arccos") return LossKind::arccos_att;
    if (s == "linear") return LossKind::linear_att_smoothl1;
    throw std::invalid_argument("unknown loss: " + s);
}

int build_arccos_tail(Tape& t, int d) {
    return t.mean_all(t.scale(t.acos_op(t.clamp_max(d, kDClamp)), 2.0));
}

int build_linear_tail(Tape& t, int d, double smoothl1_beta) {
    return t.mean_all(t.smooth_l1(t.add_scalar(t.scale(d, -1.0), 1.0), smoothl1_beta));
}

int build_loss(Tape& t, int est, const std::vector<Quat>& ref, LossKind kind,
               double smoothl1_beta) {
    const Tensor& E = t.val(est);
    const int R = E.rows;
    if (E.cols != 4 || static_cast<std::size_t>(R) != ref.size())
        throw std::invalid_argument("loss: estimate rows must be [N x 4] matching reference");

    if (kind == LossKind::mse_elementwise) {
        Tensor refM(R, 4);
        for (int r = 0; r < R; ++r) {
            const Quat& q = ref[static_cast<std::size_t>(r)];
            const double* e = E.row(r);
            const double dot = e[0] * q.w + e[1] * q.x + e[2] * q.y + e[3] * q.z;
            const double s = dot < 0.0 ? -1.0 : 1.0;
            double* dst = refM.row(r);
            dst[0] = s * q.w;
            dst[1] = s * q.x;
            dst[2] = s * q.y;
            dst[3] = s * q.z;
        }
        return t.mean_all(t.square(t.sub(est, t.input(std::move(refM)))));
    }

    // bilinear forms picking out w and z of q_ref * conj(q_est) per row
    Tensor A(R, 4), B(R, 4);
    for (int r = 0; r < R; ++r) {
        const Quat& q = ref[static_cast<std::size_t>(r)];
        double* a = A.row(r);
        a[0] = q.w;
        a[1] = q.x;
        a[2] = q.y;
        a[3] = q.z;
        double* b = B.row(r);
        b[0] = q.z;
        b[1] = q.y;
        b[2] = -q.x;
        b[3] = -q.w;
    }
    const int werr = t.row_sum(t.mul(est, t.input(std::move(A))));
    const int zerr = t.row_sum(t.mul(est, t.input(std::move(B))));
    const int d = t.sqrt_floor(t.add(t.square(werr), t.square(zerr)), 1e-14);
    return kind == LossKind::arccos_att ? build_arccos_tail(t, d)
                                        : build_linear_tail(t, d, smoothl1_beta);
}

double arccos_loss_slope(double d) {
    if (d > kDClamp) return 0.0; // constant on the clamped region
    return 2.0 / std::sqrt(1.0 - d * d);
}

double linear_loss_slope(double d, double smoothl1_beta) {
    const double r = 1.0 - d;
    return std::fabs(r) < smoothl1_beta ? std::fabs(r) / smoothl1_beta : 1.0;
}

} // namespace attbench
