#include "attbench/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <span>
#include <stdexcept>
#include <string>

#include "attbench/metric.hpp"
#include "attbench/optim.hpp"

namespace attbench {

void TrainConfig::validate() const {
    if (window_len < 2) throw std::invalid_argument("train config: window_len must be >= 2");
    if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
    if (carry_windows < 1) throw std::invalid_argument("train config: carry_windows must be >= 1");
    // 0 is allowed: a frozen run is the cheapest no-op training sanity check
    if (max_lr < 0.0) throw std::invalid_argument("train config: max_lr must be >= 0");
    if (min_lr < 0.0 || min_lr > max_lr)
        throw std::invalid_argument("train config: need 0 <= min_lr <= max_lr");
    if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (plateau_frac < 0.0 || plateau_frac > 1.0)
        throw std::invalid_argument("train config: plateau_frac must be in [0, 1]");
    if (!(smoothl1_beta > 0.0)) throw std::invalid_argument("train config: smoothl1_beta > 0");
}

namespace {

std::vector<Quat> sign_align(const std::vector<Quat>& q) {
    std::vector<Quat> out;
    out.reserve(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        Quat c = q[i];
        if (!out.empty()) {
            const Quat& p = out.back();
            if (c.w * p.w + c.x * p.x + c.y * p.y + c.z * p.z < 0.0) c = -c;
        }
        out.push_back(c);
    }
    return out;
}

// One carry chain of carry_windows consecutive windows: the training unit a
// batch slot follows. Augmentation treats each run as its own virtual
// recording, so the rotation is fixed within the run (carried state needs a
// consistent frame) and independent across runs and epochs.
struct Run {
    Tensor sig;            // [C*T x 6] standardized channels
    std::vector<Quat> ref; // sign-aligned reference
    std::string src;       // parent recording name, for lineage assertions
};

Run prep_run(const Recording& rec, int start, int len, const Standardizer& st, const Quat& rot) {
    Recording slice;
    slice.name = rec.name;
    slice.sample_rate_hz = rec.sample_rate_hz;
    slice.label = rec.label;
    slice.acc.assign(rec.acc.begin() + start, rec.acc.begin() + start + len);
    slice.gyr.assign(rec.gyr.begin() + start, rec.gyr.begin() + start + len);
    slice.q_ref.assign(rec.q_ref.begin() + start, rec.q_ref.begin() + start + len);
    const Recording norm = apply_standardizer(st, augment_rotation(slice, rot));

    Run run;
    run.src = rec.name;
    run.sig = Tensor(len, 6);
    for (int i = 0; i < len; ++i) {
        double* r = run.sig.row(i);
        const Vec3& a = norm.acc[static_cast<std::size_t>(i)];
        const Vec3& g = norm.gyr[static_cast<std::size_t>(i)];
        r[0] = a.x;
        r[1] = a.y;
        r[2] = a.z;
        r[3] = g.x;
        r[4] = g.y;
        r[5] = g.z;
    }
    run.ref = sign_align(norm.q_ref);
    return run;
}

// Full runs of carry_windows*window_len samples tiled from the start of each
// recording; shorter tails are dropped so every batch slot sees a complete
// carry chain.
std::vector<Run> build_pool(const std::vector<Recording>& recs, const Standardizer& st, int T,
                            int C, bool augment, Rng& rng) {
    std::vector<Run> pool;
    for (const Recording& rec : recs) {
        const int n = static_cast<int>(rec.size());
        for (int start = 0; start + C * T <= n; start += C * T) {
            const Quat rot = augment ? random_unit_quat(rng) : Quat{};
            pool.push_back(prep_run(rec, start, C * T, st, rot));
        }
    }
    return pool;
}

void shuffle_runs(std::vector<Run>& runs, Rng& rng) {
    for (std::size_t i = runs.size(); i > 1; --i) {
        const std::size_t j = rng.index(i);
        std::swap(runs[i - 1], runs[j]);
    }
}

// Window w of each run in the group, stacked time-major: row t*gb + b.
Tensor assemble_input(std::span<const Run> group, int w, int T) {
    const int gb = static_cast<int>(group.size());
    Tensor in(T * gb, 6);
    for (int b = 0; b < gb; ++b) {
        const Run& run = group[static_cast<std::size_t>(b)];
        for (int t = 0; t < T; ++t)
            std::memcpy(in.row(t * gb + b), run.sig.row(w * T + t), sizeof(double) * 6);
    }
    return in;
}

std::vector<Quat> assemble_ref(std::span<const Run> group, int w, int T) {
    const int gb = static_cast<int>(group.size());
    std::vector<Quat> ref(static_cast<std::size_t>(T * gb));
    for (int b = 0; b < gb; ++b) {
        const Run& run = group[static_cast<std::size_t>(b)];
        for (int t = 0; t < T; ++t)
            ref[static_cast<std::size_t>(t * gb + b)] = run.ref[static_cast<std::size_t>(w * T + t)];
    }
    return ref;
}

std::map<std::string, Tensor> collect_grads(const Tape& t, const std::map<std::string, int>& pids) {
    std::map<std::string, Tensor> g;
    for (const auto& [name, id] : pids) g[name] = t.grad(id);
    return g;
}

void assert_disjoint(const std::vector<Recording>& train_recs,
                     const std::vector<Recording>& val_recs) {
    std::set<std::string> tn;
    for (const auto& r : train_recs) tn.insert(r.name);
    if (tn.size() != train_recs.size())
        throw std::invalid_argument("training: duplicate training recording names");
    for (const auto& r : val_recs)
        if (tn.count(r.name))
            throw std::invalid_argument("training: validation recording '" + r.name +
                                        "' also present in the training set");
}

} // namespace

double lr_find(const Network& net0, const Standardizer& stand,
               const std::vector<Recording>& train_recs, const TrainConfig& tcfg, double lr_min,
               double lr_max, int steps) {
    tcfg.validate();
    Network net = net0; // throwaway copy; caller's model stays pristine
    Optimizer opt;
    const std::vector<double> lrs = lr_ladder(lr_min, lr_max, steps);
    Rng rng(tcfg.seed);
    Rng sweep_rng = rng.fork(7777);

    std::vector<double> seen_lr, seen_loss;
    const int T = tcfg.window_len, C = tcfg.carry_windows;
    bool diverged = false;
    while (static_cast<int>(seen_lr.size()) < steps && !diverged) {
        std::vector<Run> pool = build_pool(train_recs, stand, T, C, tcfg.augment, sweep_rng);
        if (pool.empty())
            throw std::invalid_argument("lr sweep: window*carry longer than every recording");
        shuffle_runs(pool, sweep_rng);
        for (std::size_t g0 = 0; g0 < pool.size(); g0 += static_cast<std::size_t>(tcfg.batch_size)) {
            const int gb = static_cast<int>(
                std::min<std::size_t>(static_cast<std::size_t>(tcfg.batch_size), pool.size() - g0));
            std::span<const Run> group(pool.data() + g0, static_cast<std::size_t>(gb));
            RnnState state = net.init_state(gb);
            for (int w = 0; w < C; ++w) {
                if (static_cast<int>(seen_lr.size()) >= steps) break;
                const double lr = lrs[seen_lr.size()];
                Tape t;
                const BuiltForward bf = net.forward_window(t, assemble_input(group, w, T), T,
                                                           gb, &state, true, true, sweep_rng);
                const int loss_id =
                    build_loss(t, bf.out, assemble_ref(group, w, T), tcfg.loss,
                               tcfg.smoothl1_beta);
                const double lval = t.val(loss_id).v[0];
                if (!std::isfinite(lval)) {
                    diverged = true; // keep what we have, stop raising lr
                    break;
                }
                seen_lr.push_back(lr);
                seen_loss.push_back(lval);
                t.backward(loss_id);
                opt.step(net.params, collect_grads(t, bf.pids), lr);
            }
            if (diverged || static_cast<int>(seen_lr.size()) >= steps) break;
        }
    }
    if (seen_lr.size() < 2) throw std::runtime_error("lr sweep: diverged before collecting a curve");
    return suggest_lr_from_curve(seen_lr, seen_loss, 0.5);
}

TrainedModel train(const NetConfig& ncfg, const TrainConfig& tcfg,
                   const std::vector<Recording>& train_recs,
                   const std::vector<Recording>& val_recs) {
    ncfg.validate();
    tcfg.validate();
    if (train_recs.empty() || val_recs.empty())
        throw std::invalid_argument("training: need nonempty train and validation sets");
    assert_disjoint(train_recs, val_recs);

    TrainedModel tm;
    tm.stand = fit_standardizer(train_recs);

    Rng root(tcfg.seed);
    Rng init_rng = root.fork(1);
    tm.net = Network::create(ncfg, init_rng);

    tm.history.used_max_lr = tcfg.max_lr;
    if (tcfg.find_lr)
        tm.history.used_max_lr =
            lr_find(tm.net, tm.stand, train_recs, tcfg, 1e-5, 1e-1, 40);

    Optimizer opt;
    const int T = tcfg.window_len, C = tcfg.carry_windows;

    for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
        Rng erng = root.fork(1000 + static_cast<std::uint64_t>(epoch));
        const double lr = cosine_schedule(epoch, tcfg.epochs, tcfg.plateau_frac,
                                          tm.history.used_max_lr, tcfg.min_lr);

        std::vector<Run> pool = build_pool(train_recs, tm.stand, T, C, tcfg.augment, erng);
        if (pool.empty())
            throw std::invalid_argument("training: window*carry longer than every recording");
        if (epoch == 0)
            for (const Run& run : pool) tm.trained_on.insert(run.src);
        shuffle_runs(pool, erng);

        double loss_sum = 0.0;
        int loss_n = 0;
        for (std::size_t g0 = 0; g0 < pool.size(); g0 += static_cast<std::size_t>(tcfg.batch_size)) {
            const int gb = static_cast<int>(
                std::min<std::size_t>(static_cast<std::size_t>(tcfg.batch_size), pool.size() - g0));
            std::span<const Run> group(pool.data() + g0, static_cast<std::size_t>(gb));
            RnnState state = tm.net.init_state(gb);
            for (int w = 0; w < C; ++w) {
                Tape t;
                const BuiltForward bf = tm.net.forward_window(
                    t, assemble_input(group, w, T), T, gb, &state, true, true, erng);
                const int loss_id = build_loss(t, bf.out, assemble_ref(group, w, T),
                                               tcfg.loss, tcfg.smoothl1_beta);
                const double lval = t.val(loss_id).v[0];
                if (!std::isfinite(lval))
                    throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                             std::to_string(epoch) + " window " +
                                             std::to_string(w) + " (lr " + std::to_string(lr) +
                                             ")");
                loss_sum += lval;
                ++loss_n;
                t.backward(loss_id);
                opt.step(tm.net.params, collect_grads(t, bf.pids), lr);
            }
        }
        tm.history.train_loss.push_back(loss_sum / loss_n);

        // validation: eval-mode loss over chunks plus the attitude metric
        double vsum = 0.0;
        int vn = 0;
        double rms_sum = 0.0;
        Rng dummy(0);
        for (const auto& vr : val_recs) {
            const Run pv = prep_run(vr, 0, static_cast<int>(vr.size()), tm.stand, Quat{});
            RnnState state = tm.net.init_state(1);
            const int n = pv.sig.rows;
            for (int s = 0; s < n; s += T) {
                const int rows = std::min(T, n - s);
                Tensor in(rows, 6);
                std::memcpy(in.v.data(), pv.sig.row(s),
                            sizeof(double) * 6 * static_cast<std::size_t>(rows));
                Tape t;
                const BuiltForward bf =
                    tm.net.forward_window(t, in, rows, 1, &state, false, false, dummy);
                std::vector<Quat> ref(pv.ref.begin() + s, pv.ref.begin() + s + rows);
                vsum += t.val(build_loss(t, bf.out, ref, tcfg.loss, tcfg.smoothl1_beta)).v[0];
                ++vn;
            }
            const std::vector<Quat> est = tm.net.predict(vr, tm.stand);
            rms_sum += compute_rmse(vr.q_ref, est, 0);
        }
        tm.history.val_loss.push_back(vsum / vn);
        tm.history.val_rms_deg.push_back(rms_sum / static_cast<double>(val_recs.size()));
    }
    return tm;
}

} // namespace attbench
