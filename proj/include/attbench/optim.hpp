#pragma once

#include <map>
#include <string>
#include <vector>

#include "attbench/autodiff.hpp"

namespace attbench {

struct OptimConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    bool rectify = true;      // variance rectification; off degenerates to plain Adam
    int lookahead_k = 5;      // 0 disables the slow-weight outer loop
    double lookahead_alpha = 0.5;
};

// Rectified adaptive-moment inner updates wrapped in a slow-weight outer
// loop. Copyable by value, so callers can checkpoint and restore the whole
// optimizer state around a throwaway sweep.
class Optimizer {
public:
    explicit Optimizer(OptimConfig cfg = {});

    // One update over all parameters; grads must carry every parameter name.
    void step(std::map<std::string, Tensor>& params,
              const std::map<std::string, Tensor>& grads, double lr);

    long long steps() const { return t_; }

private:
    OptimConfig cfg_;
    long long t_ = 0;
    std::map<std::string, Tensor> m_, v_, slow_;
};

// max_lr through the plateau, cosine decay to min_lr afterwards.
double cosine_schedule(int step, int total, double plateau_frac, double max_lr, double min_lr);

// n learning rates spaced exponentially from lr_min to lr_max inclusive.
std::vector<double> lr_ladder(double lr_min, double lr_max, int n);

// lr at the steepest negative slope of the (optionally EMA-smoothed) loss
// curve recorded during an exponential sweep.
double suggest_lr_from_curve(const std::vector<double>& lrs, const std::vector<double>& losses,
                             double smooth = 0.0);

} // namespace attbench
