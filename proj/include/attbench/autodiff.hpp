#pragma once

#include <cstddef>
#include <vector>

#include "attbench/rng.hpp"

namespace attbench {

// Dense row-major matrix of doubles. Rows usually index batch elements or
// stacked time steps, columns index features.
struct Tensor {
    int rows = 0, cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

    static Tensor zeros(int r, int c) { return Tensor(r, c); }
    static Tensor full(int r, int c, double x);
    static Tensor randu(int r, int c, Rng& rng, double lo, double hi);

    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
    double* row(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
    const double* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }

    std::size_t size() const { return v.size(); }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
    bool all_finite() const;
};

// Per-feature running statistics owned by the network, updated by training
// forward passes and consumed by eval-mode batchnorm.
struct BnStats {
    Tensor mean; // 1 x C
    Tensor var;  // 1 x C
    long long batches = 0;

    explicit BnStats(int c = 0) : mean(1, c), var(Tensor::full(1, c, 1.0)) {}
};

// Eager reverse-mode tape over a fixed op vocabulary. Each call computes the
// value immediately and records how to push gradients back. One tape per
// forward/backward pass; node ids are indices into the tape.
class Tape {
public:
    // Leaf holding a value. Only requires_grad leaves (and nodes built from
    // them) receive gradients; everything else is treated as a constant,
    // which is also how carried TBPTT state gets detached.
    int input(Tensor val, bool requires_grad = false);

    int matmul(int a, int b);
    int add(int a, int b);          // same shape
    int add_rowvec(int a, int b);   // b: 1 x C broadcast over rows of a
    int sub(int a, int b);
    int mul(int a, int b);          // elementwise
    int scale(int a, double s);
    int add_scalar(int a, double s);
    int sigmoid(int a);
    int tanh_op(int a);
    int mish(int a);
    int square(int a);
    // sqrt(max(x, floor)); gradient is zero on the floored region
    int sqrt_floor(int a, double floor_val);
    int acos_op(int a);
    // min(x, hi); gradient passes where x <= hi
    int clamp_max(int a, double hi);
    // elementwise SmoothL1 of the residual already in `a`
    int smooth_l1(int a, double beta);
    int slice_cols(int a, int c0, int c1);
    int concat_cols(int a, int b);
    int concat_rows(const std::vector<int>& parts);
    // rows shifted down by k, zero fill on top: row r reads a's row r-k.
    // With time-major stacking of batches, k = dilation * batch implements a
    // causal shift by `dilation` samples.
    int shift_rows(int a, int k);
    int row_sum(int a);  // R x C -> R x 1
    int mean_all(int a); // -> 1 x 1
    // rows scaled to unit length; rows with norm < eps divide by eps instead
    // and bump guard_events
    int normalize_rows(int a, double eps = 1e-8);
    int batchnorm(int x, int gamma, int beta, BnStats* stats, bool training,
                  double momentum = 0.1, double eps = 1e-5);
    int dropout(int a, double rate, bool training, Rng& rng);

    const Tensor& val(int id) const { return nodes_[static_cast<std::size_t>(id)].val; }
    // zero tensor if the node never received gradient
    const Tensor& grad(int id) const;
    bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].rg; }

    // Reverse sweep from a scalar (1 x 1) node.
    void backward(int root);

    std::size_t node_count() const { return nodes_.size(); }
    long long guard_events() const { return guard_events_; }

private:
    enum class Op {
        input, matmul, add, add_rowvec, sub, mul, scale, add_scalar, sigmoid,
        tanh_op, mish, square, sqrt_floor, acos_op, clamp_max, smooth_l1,
        slice_cols, concat_cols, concat_rows, shift_rows, row_sum, mean_all,
        normalize_rows, batchnorm, dropout
    };

    struct Node {
        Op op;
        std::vector<int> in;
        Tensor val;
        Tensor grad;
        bool rg = false;
        double p0 = 0.0, p1 = 0.0; // op scalars (scale factor, beta, eps, ...)
        int i0 = 0, i1 = 0;        // op integers (slice bounds, shift, ...)
        Tensor aux0, aux1;         // op caches (bn invstd/xhat, dropout mask)
        bool flag = false;         // bn training mode
    };

    int push(Node&& n);
    bool any_rg(const std::vector<int>& ids) const;
    Tensor& grad_buf(int id);

    std::vector<Node> nodes_;
    long long guard_events_ = 0;
};

} // namespace attbench
