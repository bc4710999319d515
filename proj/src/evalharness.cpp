#include "attbench/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "attbench/csv.hpp"
#include "attbench/metric.hpp"

namespace attbench {

namespace {

// Rows with the per-job slot pattern: each job owns disjoint output indices,
// so the only shared state across workers is the read-only inputs.
void run_jobs(std::vector<std::function<void()>>& jobs, int n_threads) {
    const int n = std::max(1, n_threads);
    if (n == 1 || jobs.size() <= 1) {
        for (auto& j : jobs) j();
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex err_mu;
    const auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                jobs[i]();
            } catch (...) {
                const std::lock_guard<std::mutex> lk(err_mu);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const int spawn = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), jobs.size()));
    pool.reserve(static_cast<std::size_t>(spawn));
    for (int i = 0; i < spawn; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

double filter_rmse(const Recording& rec, FilterVariant variant, const FilterParams& params,
                   double fixed_gain, std::size_t settle_skip) {
    const std::vector<Quat> est = run_filter(rec, variant, params, fixed_gain);
    return compute_rmse(rec.q_ref, est, settle_skip);
}

void sort_rows(std::vector<EvalRow>& rows) {
    std::sort(rows.begin(), rows.end(), [](const EvalRow& a, const EvalRow& b) {
        if (a.method != b.method) return a.method < b.method;
        return a.recording < b.recording;
    });
}

} // namespace

std::vector<Recording> make_taxonomy_set(int n, double duration_s, double sample_rate_hz,
                                         const ImuModel& imu, std::uint64_t seed) {
    if (n != 6 && n != 15)
        throw std::invalid_argument("taxonomy set: supported sizes are 6 and 15");

    std::vector<MotionLabel> labels;
    if (n == 6) {
        labels = {
            {MotionKind::rotation, MotionSpeed::slow, MotionPausing::nonstop},
            {MotionKind::rotation, MotionSpeed::fast, MotionPausing::nonstop},
            {MotionKind::translation, MotionSpeed::medium, MotionPausing::nonstop},
            {MotionKind::translation, MotionSpeed::slow, MotionPausing::paused},
            {MotionKind::arbitrary, MotionSpeed::medium, MotionPausing::nonstop},
            {MotionKind::arbitrary, MotionSpeed::fast, MotionPausing::nonstop},
        };
    } else {
        for (MotionKind k : {MotionKind::rotation, MotionKind::translation, MotionKind::arbitrary})
            for (MotionSpeed s : {MotionSpeed::slow, MotionSpeed::medium, MotionSpeed::fast})
                labels.push_back({k, s, MotionPausing::nonstop});
        for (MotionKind k : {MotionKind::rotation, MotionKind::translation, MotionKind::arbitrary})
            for (MotionSpeed s : {MotionSpeed::slow, MotionSpeed::fast})
                labels.push_back({k, s, MotionPausing::paused});
    }

    std::vector<Recording> recs;
    recs.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::uint64_t rec_seed = derive_seed(seed, 100 + i);
        Recording r = simulate_recording(labels[i], duration_s, sample_rate_hz, imu, rec_seed);
        r.name = to_string(labels[i].kind) + "-" + to_string(labels[i].speed) + "-" +
                 to_string(labels[i].pausing);
        recs.push_back(std::move(r));
    }
    return recs;
}

std::string config_hash(const NetConfig& ncfg, const TrainConfig& tcfg,
                        const HarnessOptions& opt) {
    std::ostringstream s;
    s << to_string(ncfg.arch) << '|' << ncfg.num_layers << '|' << ncfg.hidden << '|'
      << ncfg.grouped_input << '|' << fmt_num(ncfg.weight_dropout) << '|'
      << fmt_num(ncfg.activation_dropout) << '#' << tcfg.window_len << '|' << tcfg.batch_size
      << '|' << tcfg.carry_windows << '|' << fmt_num(tcfg.max_lr) << '|' << fmt_num(tcfg.min_lr)
      << '|' << tcfg.epochs << '|' << fmt_num(tcfg.plateau_frac) << '|' << to_string(tcfg.loss)
      << '|' << fmt_num(tcfg.smoothl1_beta) << '|' << tcfg.augment << '|' << tcfg.find_lr << '|'
      << tcfg.seed << '#' << opt.settle_skip;
    return hex64(fnv1a(s.str()));
}

void split_recordings(const std::vector<Recording>& recs, const EvalSplit& split,
                      std::vector<Recording>& train_out, std::vector<Recording>& val_out) {
    train_out.clear();
    val_out.clear();
    const std::set<std::string> vn(split.val_names.begin(), split.val_names.end());
    std::set<std::string> seen;
    for (const Recording& r : recs) {
        if (vn.count(r.name)) {
            val_out.push_back(r);
            seen.insert(r.name);
        } else {
            train_out.push_back(r);
        }
    }
    for (const std::string& name : vn)
        if (!seen.count(name))
            throw std::invalid_argument("split: unknown validation recording '" + name + "'");
    if (train_out.empty() || val_out.empty())
        throw std::invalid_argument("split: both sides must be nonempty");
}

EvalSplit choose_ablation_split(const std::vector<Recording>& recs, int settle_skip) {
    if (recs.size() < 3)
        throw std::invalid_argument("ablation split: need at least 3 recordings");
    const FilterParams tuned = tune_filter(recs, make_param_grid());
    std::vector<std::pair<double, std::string>> scored;
    for (const Recording& r : recs)
        scored.emplace_back(filter_rmse(r, FilterVariant::baseline, tuned, 0.0,
                                        static_cast<std::size_t>(settle_skip)),
                            r.name);
    std::sort(scored.begin(), scored.end());
    EvalSplit split;
    split.val_names = {scored.back().second, scored[(scored.size() - 1) / 2].second,
                       scored.front().second};
    return split;
}

EvalReport run_loocv(const std::vector<Recording>& recs, const NetConfig& ncfg,
                     const TrainConfig& tcfg, const HarnessOptions& opt) {
    if (recs.size() < 2) throw std::invalid_argument("loocv: need at least 2 recordings");

    EvalReport rep;
    rep.config_hash = config_hash(ncfg, tcfg, opt);
    const std::size_t n = recs.size();

    // filters: the baseline and fixed-gain parameters come from the whole set
    const FilterParams tuned = tune_filter(recs, make_param_grid());
    const double gain = tune_fixed_gain(recs, make_gain_grid());

    rep.rows.resize(4 * n);
    std::vector<std::function<void()>> jobs;
    for (std::size_t k = 0; k < n; ++k) {
        jobs.push_back([&, k] {
            const Recording& held = recs[k];
            const std::size_t skip = static_cast<std::size_t>(opt.settle_skip);

            const auto fstart = std::chrono::steady_clock::now();
            EvalRow base{"baseline", held.name, held.label,
                         filter_rmse(held, FilterVariant::baseline, tuned, 0.0, skip), 0.0, 0};
            if (opt.timing) base.runtime_s = seconds_since(fstart);

            EvalRow fixed{"fixed", held.name, held.label,
                          filter_rmse(held, FilterVariant::fixed_gain, FilterParams{}, gain, skip),
                          0.0, 0};
            EvalRow strap{"strapdown", held.name, held.label,
                          filter_rmse(held, FilterVariant::strapdown, FilterParams{}, 0.0, skip),
                          0.0, 0};

            std::vector<Recording> fold_train;
            for (std::size_t i = 0; i < n; ++i)
                if (i != k) fold_train.push_back(recs[i]);

            const auto nstart = std::chrono::steady_clock::now();
            TrainedModel tm;
            try {
                tm = train(ncfg, tcfg, fold_train, {held});
            } catch (const std::exception& e) {
                throw std::runtime_error("loocv fold '" + held.name + "': " + e.what());
            }
            if (tm.trained_on.count(held.name))
                throw std::logic_error("loocv lineage violation: fold '" + held.name +
                                       "' trained on its validation recording");
            const std::vector<Quat> est = tm.net.predict(held, tm.stand);
            EvalRow nn{"nn", held.name, held.label, compute_rmse(held.q_ref, est, skip), 0.0,
                       tm.net.param_count()};
            if (opt.timing) nn.runtime_s = seconds_since(nstart);

            rep.rows[4 * k + 0] = std::move(nn);
            rep.rows[4 * k + 1] = std::move(base);
            rep.rows[4 * k + 2] = std::move(fixed);
            rep.rows[4 * k + 3] = std::move(strap);
        });
    }
    run_jobs(jobs, opt.jobs);
    sort_rows(rep.rows);
    return rep;
}

std::vector<AblationVariant> ablation_variants(Arch arch, const NetConfig& base_ncfg,
                                               const TrainConfig& base_tcfg) {
    NetConfig n0 = base_ncfg;
    n0.arch = arch;
    n0.num_layers = NetConfig::defaults_for(arch).num_layers;
    n0.grouped_input = false;
    TrainConfig t0 = base_tcfg;
    t0.loss = LossKind::mse_elementwise;
    t0.augment = false;

    const std::string p = to_string(arch);
    std::vector<AblationVariant> v;
    v.push_back({p + "_bm", n0, t0});
    t0.loss = LossKind::linear_att_smoothl1;
    v.push_back({p + "_bm_lo", n0, t0});
    t0.augment = true;
    v.push_back({p + "_bm_lo_da", n0, t0});
    n0.grouped_input = true;
    v.push_back({p + "_bm_lo_da_gi", n0, t0});
    return v;
}

namespace {

// Train one configuration and append a row per validation recording.
// `slot` is the index of this variant's first row inside `rows`.
void eval_variant_into(const AblationVariant& var, const std::vector<Recording>& train_set,
                       const std::vector<Recording>& val_set, const HarnessOptions& opt,
                       std::vector<EvalRow>& rows, std::size_t slot) {
    const auto t0 = std::chrono::steady_clock::now();
    TrainedModel tm;
    try {
        tm = train(var.ncfg, var.tcfg, train_set, val_set);
    } catch (const std::exception& e) {
        throw std::runtime_error("variant '" + var.name + "': " + e.what());
    }
    const double elapsed = opt.timing ? seconds_since(t0) : 0.0;
    for (std::size_t i = 0; i < val_set.size(); ++i) {
        const Recording& vr = val_set[i];
        const std::vector<Quat> est = tm.net.predict(vr, tm.stand);
        rows[slot + i] = EvalRow{var.name, vr.name, vr.label,
                                 compute_rmse(vr.q_ref, est,
                                              static_cast<std::size_t>(opt.settle_skip)),
                                 elapsed, tm.net.param_count()};
    }
}

} // namespace

EvalReport run_ablation(const std::vector<Recording>& recs, const EvalSplit& split,
                        const NetConfig& base_ncfg, const TrainConfig& base_tcfg,
                        const HarnessOptions& opt) {
    std::vector<Recording> train_set, val_set;
    split_recordings(recs, split, train_set, val_set);

    std::vector<AblationVariant> vars;
    for (Arch arch : {Arch::rnn, Arch::tcn})
        for (AblationVariant& v : ablation_variants(arch, base_ncfg, base_tcfg))
            vars.push_back(std::move(v));

    EvalReport rep;
    rep.config_hash = config_hash(base_ncfg, base_tcfg, opt);
    rep.rows.resize(vars.size() * val_set.size());
    std::vector<std::function<void()>> jobs;
    for (std::size_t i = 0; i < vars.size(); ++i)
        jobs.push_back([&, i] {
            eval_variant_into(vars[i], train_set, val_set, opt, rep.rows, i * val_set.size());
        });
    run_jobs(jobs, opt.jobs);
    sort_rows(rep.rows);
    return rep;
}

EvalReport run_size_sweep(const std::vector<Recording>& recs, const EvalSplit& split,
                          const std::vector<int>& sizes, const TrainConfig& base_tcfg,
                          const HarnessOptions& opt) {
    if (sizes.empty()) throw std::invalid_argument("size sweep: need at least one size");
    std::vector<Recording> train_set, val_set;
    split_recordings(recs, split, train_set, val_set);

    // the fully optimized recurrent model, scaled in width
    std::vector<AblationVariant> vars;
    for (const int h : sizes) {
        NetConfig ncfg = NetConfig::defaults_for(Arch::rnn);
        ncfg.hidden = h;
        ncfg.grouped_input = true;
        TrainConfig tcfg = base_tcfg;
        tcfg.loss = LossKind::linear_att_smoothl1;
        tcfg.augment = true;
        vars.push_back({"rnn_h" + std::to_string(h), ncfg, tcfg});
    }

    EvalReport rep;
    rep.config_hash = config_hash(vars.front().ncfg, base_tcfg, opt);
    rep.rows.resize(vars.size() * val_set.size());
    std::vector<std::function<void()>> jobs;
    for (std::size_t i = 0; i < vars.size(); ++i)
        jobs.push_back([&, i] {
            eval_variant_into(vars[i], train_set, val_set, opt, rep.rows, i * val_set.size());
        });
    run_jobs(jobs, opt.jobs);
    sort_rows(rep.rows);
    return rep;
}

double median_of(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median of empty set");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace {

// linear interpolation between closest ranks, the numpy default
double quantile_sorted(const std::vector<double>& v, double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + (v[hi] - v[lo]) * frac;
}

} // namespace

double iqr_of(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("iqr of empty set");
    std::sort(v.begin(), v.end());
    return quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
}

void emit_report(const EvalReport& rep, const std::string& out_dir) {
    if (rep.rows.empty()) throw std::invalid_argument("emit_report: empty report");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    std::vector<EvalRow> rows = rep.rows;
    sort_rows(rows);

    {
        std::ofstream out(dir / "results.csv", std::ios::trunc);
        if (!out) throw std::runtime_error("emit_report: cannot write results.csv");
        out << "method,recording,kind,speed,pausing,rmse_deg,runtime_s\n";
        for (const EvalRow& r : rows)
            out << r.method << ',' << r.recording << ',' << to_string(r.label.kind) << ','
                << to_string(r.label.speed) << ',' << to_string(r.label.pausing) << ','
                << fmt_num(r.rmse_deg) << ',' << fmt_num(r.runtime_s) << '\n';
    }

    {
        std::vector<std::string> methods;
        for (const EvalRow& r : rows)
            if (methods.empty() || methods.back() != r.method) methods.push_back(r.method);
        std::ofstream out(dir / "summary.csv", std::ios::trunc);
        if (!out) throw std::runtime_error("emit_report: cannot write summary.csv");
        out << "method,n,median_rmse_deg,iqr_rmse_deg\n";
        for (const std::string& m : methods) {
            std::vector<double> vals;
            for (const EvalRow& r : rows)
                if (r.method == m) vals.push_back(r.rmse_deg);
            out << m << ',' << vals.size() << ',' << fmt_num(median_of(vals)) << ','
                << fmt_num(iqr_of(vals)) << '\n';
        }
    }

    const bool have_params = std::any_of(rows.begin(), rows.end(),
                                         [](const EvalRow& r) { return r.param_count > 0; });
    if (have_params) {
        std::ofstream out(dir / "params.csv", std::ios::trunc);
        if (!out) throw std::runtime_error("emit_report: cannot write params.csv");
        out << "method,param_count\n";
        std::string last;
        for (const EvalRow& r : rows)
            if (r.param_count > 0 && r.method != last) {
                out << r.method << ',' << r.param_count << '\n';
                last = r.method;
            }
    }

    {
        std::ofstream out(dir / "plot_results.py", std::ios::trunc);
        if (!out) throw std::runtime_error("emit_report: cannot write plot_results.py");
        out << R"PY(#!/usr/bin/env python3
"""Renders boxplot / bar / line views of results.csv next to this script."""
import csv
import os
from statistics import median
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
by_method = defaultdict(list)
with open(os.path.join(here, "results.csv")) as f:
    for row in csv.DictReader(f):
        by_method[row["method"]].append(float(row["rmse_deg"]))

methods = sorted(by_method)
fig, ax = plt.subplots(figsize=(1.2 * len(methods) + 2, 4))
ax.boxplot([by_method[m] for m in methods])
ax.set_xticks(range(1, len(methods) + 1))
ax.set_xticklabels(methods, rotation=30, ha="right")
ax.set_ylabel("attitude RMSE [deg]")
ax.set_title("per-method error distribution")
fig.tight_layout()
fig.savefig(os.path.join(here, "boxplot.png"), dpi=150)

fig, ax = plt.subplots(figsize=(1.2 * len(methods) + 2, 4))
med = [median(by_method[m]) for m in methods]
ax.bar(range(len(methods)), med)
ax.set_xticks(range(len(methods)))
ax.set_xticklabels(methods, rotation=30, ha="right")
ax.set_ylabel("median RMSE [deg]")
ax.set_title("median error per method")
fig.tight_layout()
fig.savefig(os.path.join(here, "bars.png"), dpi=150)

params_path = os.path.join(here, "params.csv")
if os.path.exists(params_path):
    counts = {}
    with open(params_path) as f:
        for row in csv.DictReader(f):
            counts[row["method"]] = int(row["param_count"])
    pts = sorted((counts[m], median(by_method[m])) for m in counts if m in by_method)
    if pts:
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o")
        ax.set_xscale("log")
        ax.set_xlabel("trainable parameters")
        ax.set_ylabel("median RMSE [deg]")
        ax.set_title("error vs model size")
        fig.tight_layout()
        fig.savefig(os.path.join(here, "size_sweep.png"), dpi=150)

print("wrote plots to", here)
)PY";
    }
}

} // namespace attbench
