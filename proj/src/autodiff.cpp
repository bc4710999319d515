#include "attbench/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace attbench {

Tensor Tensor::full(int r, int c, double x) {
    Tensor t(r, c);
    std::fill(t.v.begin(), t.v.end(), x);
    return t;
}

Tensor Tensor::randu(int r, int c, Rng& rng, double lo, double hi) {
    Tensor t(r, c);
    for (auto& x : t.v) x = rng.uniform(lo, hi);
    return t;
}

bool Tensor::all_finite() const {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

namespace {

[[noreturn]] void shape_fail(const char* op) {
    throw std::invalid_argument(std::string("tape: shape mismatch in ") + op);
}

// C = A * B, C pre-zeroed
void gemm_nn(const Tensor& A, const Tensor& B, Tensor& C) {
    const int R = A.rows, K = A.cols, N = B.cols;
    for (int i = 0; i < R; ++i) {
        const double* arow = A.row(i);
        double* crow = C.row(i);
        for (int k = 0; k < K; ++k) {
            const double a = arow[k];
            const double* brow = B.row(k);
            for (int j = 0; j < N; ++j) crow[j] += a * brow[j];
        }
    }
}

// dA += dC * B^T
void gemm_nt_acc(const Tensor& dC, const Tensor& B, Tensor& dA) {
    const int R = dC.rows, N = dC.cols, K = dA.cols;
    for (int i = 0; i < R; ++i) {
        const double* drow = dC.row(i);
        double* arow = dA.row(i);
        for (int k = 0; k < K; ++k) {
            const double* brow = B.row(k);
            double s = 0.0;
            for (int j = 0; j < N; ++j) s += drow[j] * brow[j];
            arow[k] += s;
        }
    }
}

// dB += A^T * dC
void gemm_tn_acc(const Tensor& A, const Tensor& dC, Tensor& dB) {
    const int R = A.rows, K = A.cols, N = dC.cols;
    for (int i = 0; i < R; ++i) {
        const double* arow = A.row(i);
        const double* drow = dC.row(i);
        for (int k = 0; k < K; ++k) {
            const double a = arow[k];
            double* brow = dB.row(k);
            for (int j = 0; j < N; ++j) brow[j] += a * drow[j];
        }
    }
}

double softplus(double x) { return x > 20.0 ? x : std::log1p(std::exp(x)); }

} // namespace

int Tape::push(Node&& n) {
#ifndef NDEBUG
    if (!n.val.all_finite()) throw std::runtime_error("tape: non-finite value produced");
#endif
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

bool Tape::any_rg(const std::vector<int>& ids) const {
    for (int id : ids)
        if (nodes_[static_cast<std::size_t>(id)].rg) return true;
    return false;
}

Tensor& Tape::grad_buf(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.rows == 0) n.grad = Tensor::zeros(n.val.rows, n.val.cols);
    return n.grad;
}

const Tensor& Tape::grad(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.rows == 0 && n.val.rows != 0) {
        // never touched by backward: expose a zero tensor of the right shape
        const_cast<Node&>(n).grad = Tensor::zeros(n.val.rows, n.val.cols);
    }
    return n.grad;
}

int Tape::input(Tensor val, bool requires_grad) {
    Node n;
    n.op = Op::input;
    n.val = std::move(val);
    n.rg = requires_grad;
    return push(std::move(n));
}

int Tape::matmul(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (A.cols != B.rows) shape_fail("matmul");
    Node n;
    n.op = Op::matmul;
    n.in = {a, b};
    n.rg = any_rg(n.in);
    n.val = Tensor::zeros(A.rows, B.cols);
    gemm_nn(A, B, n.val);
    return push(std::move(n));
}

int Tape::add(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (!A.same_shape(B)) shape_fail("add");
    Node n;
    n.op = Op::add;
    n.in = {a, b};
    n.rg = any_rg(n.in);
    n.val = A;
    for (std::size_t i = 0; i < n.val.size(); ++i) n.val.v[i] += B.v[i];
    return push(std::move(n));
}

int Tape::add_rowvec(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (B.rows != 1 || B.cols != A.cols) shape_fail("add_rowvec");
    Node n;
    n.op = Op::add_rowvec;
    n.in = {a, b};
    n.rg = any_rg(n.in);
    n.val = A;
    for (int r = 0; r < A.rows; ++r) {
        double* out = n.val.row(r);
        for (int c = 0; c < A.cols; ++c) out[c] += B.v[static_cast<std::size_t>(c)];
    }
    return push(std::move(n));
}

int Tape::sub(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (!A.same_shape(B)) shape_fail("sub");
    Node n;
    n.op = Op::sub;
    n.in = {a, b};
    n.rg = any_rg(n.in);
    n.val = A;
    for (std::size_t i = 0; i < n.val.size(); ++i) n.val.v[i] -= B.v[i];
    return push(std::move(n));
}

int Tape::mul(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (!A.same_shape(B)) shape_fail("mul");
    Node n;
    n.op = Op::mul;
    n.in = {a, b};
    n.rg = any_rg(n.in);
    n.val = A;
    for (std::size_t i = 0; i < n.val.size(); ++i) n.val.v[i] *= B.v[i];
    return push(std::move(n));
}

int Tape::scale(int a, double s) {
    Node n;
    n.op = Op::scale;
    n.in = {a};
    n.rg = any_rg(n.in);
    n.p0 = s;
    n.val = val(a);
    for (auto& x : n.val.v) x *= s;
    return push(std::move(n));
}

int Tape::add_scalar(int a, double s) {
    Node n;
    n.op = Op::add_scalar;
    n.in = {a};
    n.rg = any_rg(n.in);
    n.val = val(a);
    for (auto& x : n.val.v) x += s;
    return push(std::move(n));
}

int Tape::sigmoid(int a) {
    Node n;
    n.op = Op::sigmoid;
    n.in = {a};
    n.rg = any_rg(n.in);
    n.val = val(a);
    for (auto& x : n.val.v) x = 1.0 / (1.0 + std::exp(-x));
    return push(std::move(n));
}

int Tape::tanh_op(int a) {
    Node n;
    n.op = Op::tanh_op;
    n.in = {a};
    n.rg = any_rg(n.in);
    n.val = val(a);
    for (auto& x : n.val.v) x = std::tanh(x);
    return push(std::move(n));
}

int Tape::mish(int a) {
    Node n;
    n.op = Op::mish;
    n.in = {a};
    n.rg = any_rg(n.in);
    n.val = val(a);
    for (auto& x : n.val.v) x = x * std::tanh(softplus(x));
    return push(std::move(n));
}

int Tape::square(int a) {
    Node n;
    n.op = Op::square;
    n.in = {a};
    n.rg = any_rg(n.in);
    n.val = val(a);
    for (auto& x : n.val.v) x *= x;
    return push(std::move(n));
}

int Tape::sqrt_floor(int a, double floor_val) {
    Node n;
    n.op = Op::sqrt_floor;
    n.in = {a};
    n.rg = any_rg(n.in);
    n.p0 = floor_val;
    n.val = val(a);
    for (auto& x : n.val.v) x = std::sqrt(x < floor_val ? floor_val : x);
    return push(std::move(n));
}

int Tape::acos_op(int a) {
    Node n;
    n.op = Op::acos_op;
    n.in = {a};
    n.rg = any_rg(n.in);
    n.val = val(a);
    for (auto& x : n.val.v) {
        if (x > 1.0) x = 1.0;
        if (x < -1.0) x = -1.0;
        x = std::acos(x);
    }
    return push(std::move(n));
}

int Tape::clamp_max(int a, double hi) {
    Node n;
    n.op = Op::clamp_max;
    n.in = {a};
    n.rg = any_rg(n.in);
    n.p0 = hi;
    n.val = val(a);
    for (auto& x : n.val.v)
        if (x > hi) x = hi;
    return push(std::move(n));
}

int Tape::smooth_l1(int a, double beta) {
    if (beta <= 0.0) throw std::invalid_argument("tape: smooth_l1 beta must be positive");
    Node n;
    n.op = Op::smooth_l1;
    n.in = {a};
    n.rg = any_rg(n.in);
    n.p0 = beta;
    n.val = val(a);
    for (auto& x : n.val.v) {
        const double r = std::fabs(x);
        x = r < beta ? x * x / (2.0 * beta) : r - 0.5 * beta;
    }
    return push(std::move(n));
}

int Tape::slice_cols(int a, int c0, int c1) {
    const Tensor& A = val(a);
    if (c0 < 0 || c1 <= c0 || c1 > A.cols) shape_fail("slice_cols");
    Node n;
    n.op = Op::slice_cols;
    n.in = {a};
    n.rg = any_rg(n.in);
    n.i0 = c0;
    n.i1 = c1;
    n.val = Tensor::zeros(A.rows, c1 - c0);
    for (int r = 0; r < A.rows; ++r) {
        const double* src = A.row(r);
        double* dst = n.val.row(r);
        for (int c = c0; c < c1; ++c) dst[c - c0] = src[c];
    }
    return push(std::move(n));
}

int Tape::concat_cols(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (A.rows != B.rows) shape_fail("concat_cols");
    Node n;
    n.op = Op::concat_cols;
    n.in = {a, b};
    n.rg = any_rg(n.in);
    n.val = Tensor::zeros(A.rows, A.cols + B.cols);
    for (int r = 0; r < A.rows; ++r) {
        double* dst = n.val.row(r);
        const double* pa = A.row(r);
        const double* pb = B.row(r);
        for (int c = 0; c < A.cols; ++c) dst[c] = pa[c];
        for (int c = 0; c < B.cols; ++c) dst[A.cols + c] = pb[c];
    }
    n.i0 = A.cols;
    return push(std::move(n));
}

int Tape::concat_rows(const std::vector<int>& parts) {
    if (parts.empty()) throw std::invalid_argument("tape: concat_rows needs at least one part");
    const int cols = val(parts[0]).cols;
    int rows = 0;
    for (int id : parts) {
        if (val(id).cols != cols) shape_fail("concat_rows");
        rows += val(id).rows;
    }
    Node n;
    n.op = Op::concat_rows;
    n.in = parts;
    n.rg = any_rg(n.in);
    n.val = Tensor::zeros(rows, cols);
    int r0 = 0;
    for (int id : parts) {
        const Tensor& P = val(id);
        std::copy(P.v.begin(), P.v.end(), n.val.v.begin() + static_cast<std::size_t>(r0) * cols);
        r0 += P.rows;
    }
    return push(std::move(n));
}

int Tape::shift_rows(int a, int k) {
    if (k < 0) throw std::invalid_argument("tape: shift_rows needs k >= 0");
    const Tensor& A = val(a);
    Node n;
    n.op = Op::shift_rows;
    n.in = {a};
    n.rg = any_rg(n.in);
    n.i0 = k;
    n.val = Tensor::zeros(A.rows, A.cols);
    for (int r = k; r < A.rows; ++r) {
        const double* src = A.row(r - k);
        double* dst = n.val.row(r);
        for (int c = 0; c < A.cols; ++c) dst[c] = src[c];
    }
    return push(std::move(n));
}

int Tape::row_sum(int a) {
    const Tensor& A = val(a);
    Node n;
    n.op = Op::row_sum;
    n.in = {a};
    n.rg = any_rg(n.in);
    n.val = Tensor::zeros(A.rows, 1);
    for (int r = 0; r < A.rows; ++r) {
        const double* src = A.row(r);
        double s = 0.0;
        for (int c = 0; c < A.cols; ++c) s += src[c];
        n.val.v[static_cast<std::size_t>(r)] = s;
    }
    return push(std::move(n));
}

int Tape::mean_all(int a) {
    const Tensor& A = val(a);
    if (A.size() == 0) shape_fail("mean_all");
    Node n;
    n.op = Op::mean_all;
    n.in = {a};
    n.rg = any_rg(n.in);
    n.val = Tensor::zeros(1, 1);
    double s = 0.0;
    for (double x : A.v) s += x;
    n.val.v[0] = s / static_cast<double>(A.size());
    return push(std::move(n));
}

int Tape::normalize_rows(int a, double eps) {
    const Tensor& A = val(a);
    Node n;
    n.op = Op::normalize_rows;
    n.in = {a};
    n.rg = any_rg(n.in);
    n.p0 = eps;
    n.val = Tensor::zeros(A.rows, A.cols);
    n.aux0 = Tensor::zeros(A.rows, 1); // effective divisor per row
    for (int r = 0; r < A.rows; ++r) {
        const double* src = A.row(r);
        double s = 0.0;
        for (int c = 0; c < A.cols; ++c) s += src[c] * src[c];
        double m = std::sqrt(s);
        if (m < eps) {
            m = eps;
            ++guard_events_;
        }
        n.aux0.v[static_cast<std::size_t>(r)] = m;
        double* dst = n.val.row(r);
        for (int c = 0; c < A.cols; ++c) dst[c] = src[c] / m;
    }
    return push(std::move(n));
}

int Tape::batchnorm(int x, int gamma, int beta, BnStats* stats, bool training, double momentum,
                    double eps) {
    const Tensor& X = val(x);
    const Tensor& G = val(gamma);
    const Tensor& B = val(beta);
    const int C = X.cols;
    if (G.rows != 1 || G.cols != C || B.rows != 1 || B.cols != C) shape_fail("batchnorm");
    if (stats == nullptr || stats->mean.cols != C) shape_fail("batchnorm running stats");
    if (training && X.rows < 2)
        throw std::invalid_argument("tape: batchnorm training mode needs a batch of at least 2");

    Node n;
    n.op = Op::batchnorm;
    n.in = {x, gamma, beta};
    n.rg = any_rg(n.in);
    n.flag = training;
    n.val = Tensor::zeros(X.rows, C);
    n.aux0 = Tensor::zeros(X.rows, C); // xhat
    n.aux1 = Tensor::zeros(1, C);      // invstd

    const double R = static_cast<double>(X.rows);
    for (int c = 0; c < C; ++c) {
        double mu, var;
        if (training) {
            double s = 0.0;
            for (int r = 0; r < X.rows; ++r) s += X.at(r, c);
            mu = s / R;
            double q = 0.0;
            for (int r = 0; r < X.rows; ++r) {
                const double d = X.at(r, c) - mu;
                q += d * d;
            }
            var = q / R;
            stats->mean.v[static_cast<std::size_t>(c)] =
                (1.0 - momentum) * stats->mean.v[static_cast<std::size_t>(c)] + momentum * mu;
            stats->var.v[static_cast<std::size_t>(c)] =
                (1.0 - momentum) * stats->var.v[static_cast<std::size_t>(c)] + momentum * var;
        } else {
            mu = stats->mean.v[static_cast<std::size_t>(c)];
            var = stats->var.v[static_cast<std::size_t>(c)];
        }
        const double invstd = 1.0 / std::sqrt(var + eps);
        n.aux1.v[static_cast<std::size_t>(c)] = invstd;
        const double g = G.v[static_cast<std::size_t>(c)];
        const double b = B.v[static_cast<std::size_t>(c)];
        for (int r = 0; r < X.rows; ++r) {
            const double xh = (X.at(r, c) - mu) * invstd;
            n.aux0.at(r, c) = xh;
            n.val.at(r, c) = g * xh + b;
        }
    }
    if (training) ++stats->batches;
    return push(std::move(n));
}

int Tape::dropout(int a, double rate, bool training, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("tape: dropout rate must be in [0, 1)");
    if (!training || rate == 0.0) return a;
    const Tensor& A = val(a);
    Node n;
    n.op = Op::dropout;
    n.in = {a};
    n.rg = any_rg(n.in);
    n.aux0 = Tensor::zeros(A.rows, A.cols); // keep mask, pre-scaled
    n.val = A;
    const double keep = 1.0 - rate;
    for (std::size_t i = 0; i < n.val.size(); ++i) {
        const double m = rng.uniform(0.0, 1.0) < keep ? 1.0 / keep : 0.0;
        n.aux0.v[i] = m;
        n.val.v[i] *= m;
    }
    return push(std::move(n));
}

void Tape::backward(int root) {
    Node& rn = nodes_[static_cast<std::size_t>(root)];
    if (rn.val.rows != 1 || rn.val.cols != 1)
        throw std::invalid_argument("tape: backward root must be scalar");
    if (!rn.rg) return;

    for (std::size_t i = 0; i <= static_cast<std::size_t>(root); ++i) {
        Node& n = nodes_[i];
        if (n.rg) n.grad = Tensor::zeros(n.val.rows, n.val.cols);
    }
    grad_buf(root).v[0] = 1.0;

    for (int id = root; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.rg || n.grad.rows == 0) continue;
        const Tensor& g = n.grad;
        auto rg_in = [&](int k) { return nodes_[static_cast<std::size_t>(n.in[static_cast<std::size_t>(k)])].rg; };
        auto gin = [&](int k) -> Tensor& { return grad_buf(n.in[static_cast<std::size_t>(k)]); };
        auto vin = [&](int k) -> const Tensor& { return val(n.in[static_cast<std::size_t>(k)]); };

        switch (n.op) {
            case Op::input:
                break;
            case Op::matmul: {
                if (rg_in(0)) gemm_nt_acc(g, vin(1), gin(0));
                if (rg_in(1)) gemm_tn_acc(vin(0), g, gin(1));
                break;
            }
            case Op::add: {
                for (int k = 0; k < 2; ++k)
                    if (rg_in(k)) {
                        Tensor& d = gin(k);
                        for (std::size_t i = 0; i < g.size(); ++i) d.v[i] += g.v[i];
                    }
                break;
            }
            case Op::add_rowvec: {
                if (rg_in(0)) {
                    Tensor& d = gin(0);
                    for (std::size_t i = 0; i < g.size(); ++i) d.v[i] += g.v[i];
                }
                if (rg_in(1)) {
                    Tensor& d = gin(1);
                    for (int r = 0; r < g.rows; ++r) {
                        const double* src = g.row(r);
                        for (int c = 0; c < g.cols; ++c) d.v[static_cast<std::size_t>(c)] += src[c];
                    }
                }
                break;
            }
            case Op::sub: {
                if (rg_in(0)) {
                    Tensor& d = gin(0);
                    for (std::size_t i = 0; i < g.size(); ++i) d.v[i] += g.v[i];
                }
                if (rg_in(1)) {
                    Tensor& d = gin(1);
                    for (std::size_t i = 0; i < g.size(); ++i) d.v[i] -= g.v[i];
                }
                break;
            }
            case Op::mul: {
                if (rg_in(0)) {
                    Tensor& d = gin(0);
                    const Tensor& other = vin(1);
                    for (std::size_t i = 0; i < g.size(); ++i) d.v[i] += g.v[i] * other.v[i];
                }
                if (rg_in(1)) {
                    Tensor& d = gin(1);
                    const Tensor& other = vin(0);
                    for (std::size_t i = 0; i < g.size(); ++i) d.v[i] += g.v[i] * other.v[i];
                }
                break;
            }
            case Op::scale: {
                if (rg_in(0)) {
                    Tensor& d = gin(0);
                    for (std::size_t i = 0; i < g.size(); ++i) d.v[i] += g.v[i] * n.p0;
                }
                break;
            }
            case Op::add_scalar: {
                if (rg_in(0)) {
                    Tensor& d = gin(0);
                    for (std::size_t i = 0; i < g.size(); ++i) d.v[i] += g.v[i];
                }
                break;
            }
            case Op::sigmoid: {
                if (rg_in(0)) {
                    Tensor& d = gin(0);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        const double y = n.val.v[i];
                        d.v[i] += g.v[i] * y * (1.0 - y);
                    }
                }
                break;
            }
            case Op::tanh_op: {
                if (rg_in(0)) {
                    Tensor& d = gin(0);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        const double y = n.val.v[i];
                        d.v[i] += g.v[i] * (1.0 - y * y);
                    }
                }
                break;
            }
            case Op::mish: {
                if (rg_in(0)) {
                    Tensor& d = gin(0);
                    const Tensor& x = vin(0);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        const double xi = x.v[i];
                        const double t = std::tanh(softplus(xi));
                        const double sig = 1.0 / (1.0 + std::exp(-xi));
                        d.v[i] += g.v[i] * (t + xi * (1.0 - t * t) * sig);
                    }
                }
                break;
            }
            case Op::square: {
                if (rg_in(0)) {
                    Tensor& d = gin(0);
                    const Tensor& x = vin(0);
                    for (std::size_t i = 0; i < g.size(); ++i) d.v[i] += g.v[i] * 2.0 * x.v[i];
                }
                break;
            }
            case Op::sqrt_floor: {
                if (rg_in(0)) {
                    Tensor& d = gin(0);
                    const Tensor& x = vin(0);
                    for (std::size_t i = 0; i < g.size(); ++i)
                        if (x.v[i] > n.p0) d.v[i] += g.v[i] * 0.5 / n.val.v[i];
                }
                break;
            }
            case Op::acos_op: {
                if (rg_in(0)) {
                    Tensor& d = gin(0);
                    const Tensor& x = vin(0);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        double xi = x.v[i];
                        if (xi > 1.0 - 1e-12) xi = 1.0 - 1e-12;
                        if (xi < -1.0 + 1e-12) xi = -1.0 + 1e-12;
                        d.v[i] -= g.v[i] / std::sqrt(1.0 - xi * xi);
                    }
                }
                break;
            }
            case Op::clamp_max: {
                if (rg_in(0)) {
                    Tensor& d = gin(0);
                    const Tensor& x = vin(0);
                    for (std::size_t i = 0; i < g.size(); ++i)
                        if (x.v[i] <= n.p0) d.v[i] += g.v[i];
                }
                break;
            }
            case Op::smooth_l1: {
                if (rg_in(0)) {
                    Tensor& d = gin(0);
                    const Tensor& x = vin(0);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        const double r = x.v[i];
                        const double slope = std::fabs(r) < n.p0 ? r / n.p0 : (r > 0 ? 1.0 : -1.0);
                        d.v[i] += g.v[i] * slope;
                    }
                }
                break;
            }
            case Op::slice_cols: {
                if (rg_in(0)) {
                    Tensor& d = gin(0);
                    for (int r = 0; r < g.rows; ++r) {
                        const double* src = g.row(r);
                        double* dst = d.row(r);
                        for (int c = 0; c < g.cols; ++c) dst[n.i0 + c] += src[c];
                    }
                }
                break;
            }
            case Op::concat_cols: {
                const int ca = n.i0;
                if (rg_in(0)) {
                    Tensor& d = gin(0);
                    for (int r = 0; r < g.rows; ++r) {
                        const double* src = g.row(r);
                        double* dst = d.row(r);
                        for (int c = 0; c < ca; ++c) dst[c] += src[c];
                    }
                }
                if (rg_in(1)) {
                    Tensor& d = gin(1);
                    for (int r = 0; r < g.rows; ++r) {
                        const double* src = g.row(r);
                        double* dst = d.row(r);
                        for (int c = 0; c < g.cols - ca; ++c) dst[c] += src[ca + c];
                    }
                }
                break;
            }
            case Op::concat_rows: {
                int r0 = 0;
                for (std::size_t k = 0; k < n.in.size(); ++k) {
                    const Tensor& part = vin(static_cast<int>(k));
                    if (rg_in(static_cast<int>(k))) {
                        Tensor& d = gin(static_cast<int>(k));
                        for (std::size_t i = 0; i < part.size(); ++i)
                            d.v[i] += g.v[static_cast<std::size_t>(r0) * g.cols + i];
                    }
                    r0 += part.rows;
                }
                break;
            }
            case Op::shift_rows: {
                if (rg_in(0)) {
                    Tensor& d = gin(0);
                    for (int r = n.i0; r < g.rows; ++r) {
                        const double* src = g.row(r);
                        double* dst = d.row(r - n.i0);
                        for (int c = 0; c < g.cols; ++c) dst[c] += src[c];
                    }
                }
                break;
            }
            case Op::row_sum: {
                if (rg_in(0)) {
                    Tensor& d = gin(0);
                    for (int r = 0; r < d.rows; ++r) {
                        const double gr = g.v[static_cast<std::size_t>(r)];
                        double* dst = d.row(r);
                        for (int c = 0; c < d.cols; ++c) dst[c] += gr;
                    }
                }
                break;
            }
            case Op::mean_all: {
                if (rg_in(0)) {
                    Tensor& d = gin(0);
                    const double gr = g.v[0] / static_cast<double>(d.size());
                    for (auto& x : d.v) x += gr;
                }
                break;
            }
            case Op::normalize_rows: {
                if (rg_in(0)) {
                    Tensor& d = gin(0);
                    for (int r = 0; r < g.rows; ++r) {
                        const double m = n.aux0.v[static_cast<std::size_t>(r)];
                        const double* y = n.val.row(r);
                        const double* gr = g.row(r);
                        double* dst = d.row(r);
                        const double* x = vin(0).row(r);
                        double xn = 0.0;
                        for (int c = 0; c < g.cols; ++c) xn += x[c] * x[c];
                        if (std::sqrt(xn) < n.p0) {
                            // floored divisor is a constant
                            for (int c = 0; c < g.cols; ++c) dst[c] += gr[c] / m;
                        } else {
                            double dot = 0.0;
                            for (int c = 0; c < g.cols; ++c) dot += y[c] * gr[c];
                            for (int c = 0; c < g.cols; ++c) dst[c] += (gr[c] - y[c] * dot) / m;
                        }
                    }
                }
                break;
            }
            case Op::batchnorm: {
                const Tensor& xhat = n.aux0;
                const Tensor& invstd = n.aux1;
                const Tensor& G = vin(1);
                const int C = g.cols;
                const double R = static_cast<double>(g.rows);
                if (rg_in(1)) {
                    Tensor& dG = gin(1);
                    for (int c = 0; c < C; ++c) {
                        double s = 0.0;
                        for (int r = 0; r < g.rows; ++r) s += g.at(r, c) * xhat.at(r, c);
                        dG.v[static_cast<std::size_t>(c)] += s;
                    }
                }
                if (rg_in(2)) {
                    Tensor& dB = gin(2);
                    for (int c = 0; c < C; ++c) {
                        double s = 0.0;
                        for (int r = 0; r < g.rows; ++r) s += g.at(r, c);
                        dB.v[static_cast<std::size_t>(c)] += s;
                    }
                }
                if (rg_in(0)) {
                    Tensor& dX = gin(0);
                    for (int c = 0; c < C; ++c) {
                        const double gam = G.v[static_cast<std::size_t>(c)];
                        const double is = invstd.v[static_cast<std::size_t>(c)];
                        if (n.flag) {
                            double sum_d = 0.0, sum_dx = 0.0;
                            for (int r = 0; r < g.rows; ++r) {
                                const double dxh = g.at(r, c) * gam;
                                sum_d += dxh;
                                sum_dx += dxh * xhat.at(r, c);
                            }
                            for (int r = 0; r < g.rows; ++r) {
                                const double dxh = g.at(r, c) * gam;
                                dX.at(r, c) +=
                                    (dxh - sum_d / R - xhat.at(r, c) * sum_dx / R) * is;
                            }
                        } else {
                            for (int r = 0; r < g.rows; ++r) dX.at(r, c) += g.at(r, c) * gam * is;
                        }
                    }
                }
                break;
            }
            case Op::dropout: {
                if (rg_in(0)) {
                    Tensor& d = gin(0);
                    for (std::size_t i = 0; i < g.size(); ++i) d.v[i] += g.v[i] * n.aux0.v[i];
                }
                break;
            }
        }
    }
}

} // namespace attbench
