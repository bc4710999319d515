#include "attbench/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace attbench {

Optimizer::Optimizer(OptimConfig cfg) : cfg_(cfg) {
    if (cfg_.beta1 < 0.0 || cfg_.beta1 >= 1.0 || cfg_.beta2 < 0.0 || cfg_.beta2 >= 1.0 ||
        cfg_.eps <= 0.0 || cfg_.lookahead_k < 0 || cfg_.lookahead_alpha < 0.0 ||
        cfg_.lookahead_alpha > 1.0)
        throw std::invalid_argument("optimizer: bad config");
}

void Optimizer::step(std::map<std::string, Tensor>& params,
                     const std::map<std::string, Tensor>& grads, double lr) {
    if (t_ == 0) {
        for (const auto& [name, p] : params) {
            m_[name] = Tensor::zeros(p.rows, p.cols);
            v_[name] = Tensor::zeros(p.rows, p.cols);
            if (cfg_.lookahead_k > 0) slow_[name] = p;
        }
    }
    ++t_;
    const double b1 = cfg_.beta1, b2 = cfg_.beta2;
    const double b1t = std::pow(b1, static_cast<double>(t_));
    const double b2t = std::pow(b2, static_cast<double>(t_));
    const double bias1 = 1.0 - b1t;
    const double bias2 = 1.0 - b2t;
    const double rho_inf = 2.0 / (1.0 - b2) - 1.0;
    const double rho_t = rho_inf - 2.0 * static_cast<double>(t_) * b2t / bias2;

    double rect = -1.0; // < 0 means unrectified momentum-only update
    if (rho_t > 4.0)
        rect = std::sqrt(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) /
                         ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));

    for (auto& [name, p] : params) {
        const auto git = grads.find(name);
        if (git == grads.end()) throw std::invalid_argument("optimizer: missing gradient " + name);
        const Tensor& g = git->second;
        if (!g.same_shape(p)) throw std::invalid_argument("optimizer: gradient shape " + name);
        Tensor& m = m_.at(name);
        Tensor& v = v_.at(name);
        for (std::size_t i = 0; i < p.size(); ++i) {
            m.v[i] = b1 * m.v[i] + (1.0 - b1) * g.v[i];
            v.v[i] = b2 * v.v[i] + (1.0 - b2) * g.v[i] * g.v[i];
            const double mhat = m.v[i] / bias1;
            double upd;
            if (!cfg_.rectify) {
                upd = lr * mhat / (std::sqrt(v.v[i] / bias2) + cfg_.eps);
            } else if (rect > 0.0) {
                upd = lr * rect * mhat / (std::sqrt(v.v[i] / bias2) + cfg_.eps);
            } else {
                upd = lr * mhat;
            }
            p.v[i] -= upd;
        }
    }

    if (cfg_.lookahead_k > 0 && t_ % cfg_.lookahead_k == 0) {
        for (auto& [name, p] : params) {
            Tensor& s = slow_.at(name);
            for (std::size_t i = 0; i < p.size(); ++i) {
                s.v[i] += cfg_.lookahead_alpha * (p.v[i] - s.v[i]);
                p.v[i] = s.v[i];
            }
        }
    }
}

double cosine_schedule(int step, int total, double plateau_frac, double max_lr, double min_lr) {
    if (total < 1 || step < 0 || step > total)
        throw std::invalid_argument("cosine_schedule: need 0 <= step <= total");
    if (plateau_frac < 0.0 || plateau_frac > 1.0)
        throw std::invalid_argument("cosine_schedule: plateau_frac must be in [0, 1]");
    if (step >= total) return min_lr;
    const double cut = plateau_frac * static_cast<double>(total);
    if (static_cast<double>(step) <= cut) return max_lr;
    const double u = (static_cast<double>(step) - cut) / (static_cast<double>(total) - cut);
    return min_lr + (max_lr - min_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * u));
}

std::vector<double> lr_ladder(double lr_min, double lr_max, int n) {
    if (!(lr_min > 0.0) || !(lr_max > lr_min) || n < 2)
        throw std::invalid_argument("lr_ladder: need 0 < lr_min < lr_max and n >= 2");
    std::vector<double> out(static_cast<std::size_t>(n));
    const double ratio = std::log(lr_max / lr_min);
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] =
            lr_min * std::exp(ratio * static_cast<double>(i) / static_cast<double>(n - 1));
    return out;
}

double suggest_lr_from_curve(const std::vector<double>& lrs, const std::vector<double>& losses,
                             double smooth) {
    if (lrs.size() != losses.size() || lrs.size() < 2)
        throw std::invalid_argument("suggest_lr: need matching curves with >= 2 points");
    if (smooth < 0.0 || smooth >= 1.0)
        throw std::invalid_argument("suggest_lr: smooth must be in [0, 1)");
    std::vector<double> sm(losses.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        acc = smooth * acc + (1.0 - smooth) * losses[i];
        sm[i] = acc / (1.0 - std::pow(smooth, static_cast<double>(i + 1)));
    }
    std::size_t best = 1;
    double best_slope = sm[1] - sm[0];
    for (std::size_t i = 2; i < sm.size(); ++i) {
        const double slope = sm[i] - sm[i - 1];
        if (slope < best_slope) {
            best_slope = slope;
            best = i;
        }
    }
    return lrs[best];
}

} // namespace attbench
