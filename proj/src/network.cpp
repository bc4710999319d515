#include "attbench/network.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace attbench {

std::string to_string(Arch a) { return a == Arch::rnn ? "rnn" : "tcn"; }

Arch arch_from_string(const std::string& s) {
    if (s == "rnn") return Arch::rnn;
    if (s == "tcn") return Arch::tcn;
    throw std::invalid_argument("unknown architecture: " + s);
}

NetConfig NetConfig::defaults_for(Arch a) {
    NetConfig c;
    c.arch = a;
    c.num_layers = a == Arch::rnn ? 2 : 10;
    return c;
}

void NetConfig::validate() const {
    if (hidden < 1) throw std::invalid_argument("net config: hidden must be >= 1");
    if (grouped_input && hidden < 2)
        throw std::invalid_argument("net config: grouped input needs hidden >= 2");
    if (num_layers < 1) throw std::invalid_argument("net config: num_layers must be >= 1");
    if (arch == Arch::tcn && num_layers > 20)
        throw std::invalid_argument("net config: tcn deeper than 20 doublings");
    if (weight_dropout < 0.0 || weight_dropout >= 1.0 || activation_dropout < 0.0 ||
        activation_dropout >= 1.0)
        throw std::invalid_argument("net config: dropout rates must be in [0, 1)");
}

std::vector<std::vector<Network::CellSpec>> Network::rnn_layers() const {
    const int H = cfg.hidden;
    std::vector<std::vector<CellSpec>> layers;
    if (cfg.grouped_input) {
        const int ha = (H + 1) / 2;
        layers.push_back({{"rnn0a", 0, 3, ha}, {"rnn0g", 3, 6, H - ha}});
    } else {
        layers.push_back({{"rnn0", 0, 6, H}});
    }
    for (int l = 1; l < cfg.num_layers; ++l)
        layers.push_back({{"rnn" + std::to_string(l), 0, H, H}});
    return layers;
}

std::vector<std::vector<Network::ConvSpec>> Network::tcn_layers() const {
    const int H = cfg.hidden;
    std::vector<std::vector<ConvSpec>> layers;
    if (cfg.grouped_input) {
        const int ha = (H + 1) / 2;
        layers.push_back({{"tcn0a", 0, 3, 3, ha}, {"tcn0g", 3, 6, 3, H - ha}});
    } else {
        layers.push_back({{"tcn0", 0, 6, 6, H}});
    }
    for (int l = 1; l < cfg.num_layers; ++l)
        layers.push_back({{"tcn" + std::to_string(l), 0, H, H, H}});
    return layers;
}

Network Network::create(const NetConfig& cfg, Rng& rng) {
    cfg.validate();
    Network net;
    net.cfg = cfg;

    const auto draw = [&rng](int r, int c, double k) { return Tensor::randu(r, c, rng, -k, k); };

    if (cfg.arch == Arch::rnn) {
        for (const auto& layer : net.rnn_layers()) {
            for (const auto& cs : layer) {
                const int in = cs.c1 - cs.c0;
                const double k = 1.0 / std::sqrt(static_cast<double>(cs.hsz));
                net.params[cs.name + ".W"] = draw(in + cs.hsz, 4 * cs.hsz, k);
                Tensor b = draw(1, 4 * cs.hsz, k);
                // forget gate opens at init so early cell state survives
                for (int j = cs.hsz; j < 2 * cs.hsz; ++j) b.v[static_cast<std::size_t>(j)] += 1.0;
                net.params[cs.name + ".b"] = std::move(b);
            }
        }
    } else {
        const auto layers = net.tcn_layers();
        for (std::size_t l = 0; l < layers.size(); ++l) {
            for (const auto& sp : layers[l]) {
                const double k = 1.0 / std::sqrt(2.0 * sp.cin);
                net.params[sp.name + ".W1"] = draw(sp.cin, sp.cout, k);
                net.params[sp.name + ".W2"] = draw(sp.cin, sp.cout, k);
                net.params[sp.name + ".b"] = draw(1, sp.cout, k);
            }
            const std::string bname = "bn" + std::to_string(l);
            net.params[bname + ".gamma"] = Tensor::full(1, cfg.hidden, 1.0);
            net.params[bname + ".beta"] = Tensor::zeros(1, cfg.hidden);
            net.bn.emplace(bname, BnStats(cfg.hidden));
        }
    }

    const double kh = 1.0 / std::sqrt(static_cast<double>(net.head_in()));
    net.params["head.W"] = draw(net.head_in(), 4, kh);
    net.params["head.b"] = draw(1, 4, kh);
    return net;
}

RnnState Network::init_state(int B) const {
    RnnState s;
    if (cfg.arch != Arch::rnn) return s;
    for (const auto& layer : rnn_layers()) {
        for (const auto& cs : layer) {
            s.h.push_back(Tensor::zeros(B, cs.hsz));
            s.c.push_back(Tensor::zeros(B, cs.hsz));
        }
    }
    return s;
}

long long Network::param_count() const {
    long long n = 0;
    for (const auto& [name, p] : params) n += static_cast<long long>(p.size());
    return n;
}

namespace {

struct StepOut {
    int h, c;
};

// One cell update; z gates ordered [input, forget, candidate, output].
StepOut lstm_step(Tape& t, int x, int h, int c, int W, int b, int H) {
    const int z = t.add_rowvec(t.matmul(t.concat_cols(x, h), W), b);
    const int gi = t.sigmoid(t.slice_cols(z, 0, H));
    const int gf = t.sigmoid(t.slice_cols(z, H, 2 * H));
    const int gg = t.tanh_op(t.slice_cols(z, 2 * H, 3 * H));
    const int go = t.sigmoid(t.slice_cols(z, 3 * H, 4 * H));
    const int cn = t.add(t.mul(gf, c), t.mul(gi, gg));
    const int hn = t.mul(go, t.tanh_op(cn));
    return {hn, cn};
}

} // namespace

BuiltForward Network::forward_window(Tape& t, const Tensor& input, int T, int B, RnnState* state,
                                     bool training, bool params_rg, Rng& drop_rng) {
    cfg.validate();
    if (T < 1 || B < 1 || input.rows != T * B || input.cols != 6)
        throw std::invalid_argument("forward: input must be time-major [T*B x 6]");

    BuiltForward bf;
    for (const auto& [name, p] : params) bf.pids[name] = t.input(p, params_rg);
    const auto P = [&bf](const std::string& n) { return bf.pids.at(n); };
    const auto wdrop = [&](int id) { return t.dropout(id, cfg.weight_dropout, training, drop_rng); };

    int head_src = -1;
    if (cfg.arch == Arch::rnn) {
        if (state == nullptr) throw std::invalid_argument("forward: rnn needs carried state");
        const auto layers = rnn_layers();
        std::size_t ncell = 0;
        for (const auto& l : layers) ncell += l.size();
        if (state->h.size() != ncell || state->c.size() != ncell)
            throw std::invalid_argument("forward: carried state has wrong cell count");

        std::vector<int> hid(ncell), cid(ncell), Wd(ncell), Bi(ncell);
        {
            std::size_t ci = 0;
            for (const auto& layer : layers) {
                for (const auto& cs : layer) {
                    if (state->h[ci].rows != B || state->h[ci].cols != cs.hsz ||
                        !state->c[ci].same_shape(state->h[ci]))
                        throw std::invalid_argument("forward: carried state has wrong shape");
                    hid[ci] = t.input(state->h[ci], false); // detached: TBPTT truncation point
                    cid[ci] = t.input(state->c[ci], false);
                    Wd[ci] = wdrop(P(cs.name + ".W"));
                    Bi[ci] = P(cs.name + ".b");
                    ++ci;
                }
            }
        }

        std::vector<int> step_out;
        step_out.reserve(static_cast<std::size_t>(T));
        for (int st = 0; st < T; ++st) {
            Tensor xt(B, 6);
            std::memcpy(xt.v.data(), input.row(st * B), sizeof(double) * 6 * B);
            int layer_in = t.input(std::move(xt), false);
            std::size_t ci = 0;
            for (std::size_t l = 0; l < layers.size(); ++l) {
                std::vector<int> outs;
                for (const auto& cs : layers[l]) {
                    const int xin = (cs.c0 == 0 && cs.c1 == t.val(layer_in).cols)
                                        ? layer_in
                                        : t.slice_cols(layer_in, cs.c0, cs.c1);
                    const StepOut so = lstm_step(t, xin, hid[ci], cid[ci], Wd[ci], Bi[ci], cs.hsz);
                    hid[ci] = so.h;
                    cid[ci] = so.c;
                    outs.push_back(so.h);
                    ++ci;
                }
                const int lay_out = outs.size() == 1 ? outs[0] : t.concat_cols(outs[0], outs[1]);
                layer_in = l + 1 < layers.size()
                               ? t.dropout(lay_out, cfg.activation_dropout, training, drop_rng)
                               : lay_out;
            }
            step_out.push_back(layer_in);
        }
        head_src = t.concat_rows(step_out); // [T*B x H] time-major
        for (std::size_t ci = 0; ci < ncell; ++ci) {
            state->h[ci] = t.val(hid[ci]);
            state->c[ci] = t.val(cid[ci]);
        }
    } else {
        int x = t.input(input, false);
        const auto layers = tcn_layers();
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const int dil = 1 << l;
            std::vector<int> outs;
            for (const auto& sp : layers[l]) {
                const int xin = (sp.c0 == 0 && sp.c1 == t.val(x).cols)
                                    ? x
                                    : t.slice_cols(x, sp.c0, sp.c1);
                const int cur = t.matmul(xin, wdrop(P(sp.name + ".W1")));
                // row shift of dil*B = dil time steps for every batch element
                const int past = t.matmul(t.shift_rows(xin, dil * B), wdrop(P(sp.name + ".W2")));
                outs.push_back(t.add_rowvec(t.add(cur, past), P(sp.name + ".b")));
            }
            const int conv = outs.size() == 1 ? outs[0] : t.concat_cols(outs[0], outs[1]);
            const std::string bname = "bn" + std::to_string(l);
            const int act = t.mish(t.batchnorm(conv, P(bname + ".gamma"), P(bname + ".beta"),
                                               &bn.at(bname), training));
            x = t.dropout(act, cfg.activation_dropout, training, drop_rng);
        }
        head_src = x;
    }

    // plain linear head: batch statistics here would tie the quaternion scale to
    // whatever motions share the batch, which is pure noise under augmentation
    const int raw = t.add_rowvec(t.matmul(head_src, P("head.W")), P("head.b"));
    bf.out = t.normalize_rows(raw, 1e-8);
    return bf;
}

std::vector<Quat> Network::predict(const Recording& rec, const Standardizer& st, int chunk) {
    cfg.validate();
    if (chunk < 1) throw std::invalid_argument("predict: chunk must be >= 1");
    const Recording norm = apply_standardizer(st, rec);
    const int n = static_cast<int>(norm.size());
    Tensor all(n, 6);
    for (int i = 0; i < n; ++i) {
        double* r = all.row(i);
        r[0] = norm.acc[static_cast<std::size_t>(i)].x;
        r[1] = norm.acc[static_cast<std::size_t>(i)].y;
        r[2] = norm.acc[static_cast<std::size_t>(i)].z;
        r[3] = norm.gyr[static_cast<std::size_t>(i)].x;
        r[4] = norm.gyr[static_cast<std::size_t>(i)].y;
        r[5] = norm.gyr[static_cast<std::size_t>(i)].z;
    }

    std::vector<Quat> out;
    out.reserve(static_cast<std::size_t>(n));
    Rng dummy(0);
    RnnState state = init_state(1);
    const int ctx_max = cfg.arch == Arch::tcn ? cfg.receptive_field() - 1 : 0;

    for (int s = 0; s < n; s += chunk) {
        const int e = std::min(n, s + chunk);
        const int ctx = std::min(s, ctx_max);
        const int rows = e - s + ctx;
        Tensor in(rows, 6);
        std::memcpy(in.v.data(), all.row(s - ctx), sizeof(double) * 6 * static_cast<std::size_t>(rows));
        Tape t;
        const BuiltForward bf = forward_window(t, in, rows, 1, &state, false, false, dummy);
        const Tensor& y = t.val(bf.out);
        for (int r = ctx; r < rows; ++r)
            out.push_back(Quat{y.at(r, 0), y.at(r, 1), y.at(r, 2), y.at(r, 3)});
    }
    return out;
}

} // namespace attbench
