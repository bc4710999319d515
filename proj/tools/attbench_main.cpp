#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "attbench/checkpoint.hpp"
#include "attbench/csv.hpp"
#include "attbench/evalharness.hpp"
#include "attbench/filters.hpp"
#include "attbench/metric.hpp"
#include "attbench/recording.hpp"
#include "attbench/simulate.hpp"
#include "attbench/training.hpp"

namespace {

using namespace attbench;

struct FileConfig {
    NetConfig net;
    TrainConfig train;
    HarnessOptions harness;
    std::vector<std::string> val_names;
};

// Desk-scale smoke defaults: an end-to-end run in minutes, not hours. Scale up
// through --config for serious experiments.
FileConfig desk_defaults() {
    FileConfig c;
    c.net.hidden = 16;
    c.net.grouped_input = true;
    c.train.window_len = 128;
    c.train.batch_size = 8;
    c.train.carry_windows = 2;
    c.train.epochs = 30;
    c.train.max_lr = 2e-2;
    c.train.min_lr = 8e-4;
    c.train.augment = true;
    return c;
}

FileConfig load_file_config(const std::string& path) {
    FileConfig cfg = desk_defaults();
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    nlohmann::json j;
    in >> j;
    if (!j.is_object()) throw std::runtime_error("config: top level must be a JSON object");
    for (const auto& [key, val] : j.items()) {
        if (key == "net") {
            for (const auto& [k, v] : val.items()) {
                if (k == "arch")
                    cfg.net.arch = arch_from_string(v.get<std::string>());
                else if (k == "num_layers")
                    cfg.net.num_layers = v.get<int>();
                else if (k == "hidden")
                    cfg.net.hidden = v.get<int>();
                else if (k == "grouped_input")
                    cfg.net.grouped_input = v.get<bool>();
                else if (k == "weight_dropout")
                    cfg.net.weight_dropout = v.get<double>();
                else if (k == "activation_dropout")
                    cfg.net.activation_dropout = v.get<double>();
                else
                    throw std::runtime_error("config: unknown net key '" + k + "'");
            }
        } else if (key == "train") {
            for (const auto& [k, v] : val.items()) {
                if (k == "window_len")
                    cfg.train.window_len = v.get<int>();
                else if (k == "batch_size")
                    cfg.train.batch_size = v.get<int>();
                else if (k == "carry_windows")
                    cfg.train.carry_windows = v.get<int>();
                else if (k == "max_lr")
                    cfg.train.max_lr = v.get<double>();
                else if (k == "min_lr")
                    cfg.train.min_lr = v.get<double>();
                else if (k == "epochs")
                    cfg.train.epochs = v.get<int>();
                else if (k == "plateau_frac")
                    cfg.train.plateau_frac = v.get<double>();
                else if (k == "loss")
                    cfg.train.loss = loss_from_string(v.get<std::string>());
                else if (k == "smoothl1_beta")
                    cfg.train.smoothl1_beta = v.get<double>();
                else if (k == "augment")
                    cfg.train.augment = v.get<bool>();
                else if (k == "find_lr")
                    cfg.train.find_lr = v.get<bool>();
                else if (k == "seed")
                    cfg.train.seed = v.get<std::uint64_t>();
                else
                    throw std::runtime_error("config: unknown train key '" + k + "'");
            }
        } else if (key == "harness") {
            for (const auto& [k, v] : val.items()) {
                if (k == "settle_skip")
                    cfg.harness.settle_skip = v.get<int>();
                else if (k == "timing")
                    cfg.harness.timing = v.get<bool>();
                else
                    throw std::runtime_error("config: unknown harness key '" + k + "'");
            }
        } else if (key == "val_names") {
            cfg.val_names = val.get<std::vector<std::string>>();
        } else {
            throw std::runtime_error("config: unknown key '" + key + "'");
        }
    }
    cfg.net.validate();
    cfg.train.validate();
    return cfg;
}

std::vector<Recording> load_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw std::runtime_error("data dir not found: " + dir);
    std::vector<fs::path> paths;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".csv") paths.push_back(e.path());
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw std::runtime_error("no .csv recordings in " + dir);
    std::vector<Recording> recs;
    recs.reserve(paths.size());
    for (const auto& p : paths) recs.push_back(load_recording(p.string()));
    return recs;
}

// Flags shared by the set-level commands: either a directory of recordings or
// an on-the-fly synthetic taxonomy set.
struct SetArgs {
    std::string data_dir;
    bool full15 = false;
    bool ideal = false;
    double duration_s = 60.0;
    double rate_hz = 100.0;
};

void add_set_flags(CLI::App* sub, SetArgs& s) {
    auto* dd = sub->add_option("--data-dir", s.data_dir,
                               "Directory of recording CSVs (overrides the synthetic set)");
    sub->add_flag("--full15", s.full15, "Synthetic set: full 15-recording taxonomy instead of 6")
        ->excludes(dd);
    sub->add_flag("--ideal", s.ideal, "Synthetic set: noise- and bias-free sensors")
        ->excludes(dd);
    sub->add_option("--duration", s.duration_s, "Synthetic set: seconds per recording")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--rate", s.rate_hz, "Synthetic set: sample rate in Hz")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

std::vector<Recording> gather_recordings(const SetArgs& s, std::uint64_t seed) {
    if (!s.data_dir.empty()) return load_dir(s.data_dir);
    const ImuModel imu = s.ideal ? ImuModel::ideal() : ImuModel{};
    return make_taxonomy_set(s.full15 ? 15 : 6, s.duration_s, s.rate_hz, imu, seed);
}

void print_report_summary(const EvalReport& rep, const std::string& out_dir) {
    std::cout << "wrote=" << out_dir << " config=" << rep.config_hash << '\n';
    std::vector<std::string> methods;
    for (const EvalRow& r : rep.rows)
        if (methods.empty() || methods.back() != r.method) methods.push_back(r.method);
    for (const std::string& m : methods) {
        std::vector<double> vals;
        for (const EvalRow& r : rep.rows)
            if (r.method == m) vals.push_back(r.rmse_deg);
        std::cout << "method=" << m << " median_rmse_deg=" << fmt_num(median_of(vals)) << '\n';
    }
}

EvalReport parse_results_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("results: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "method,recording,kind,speed,pausing,rmse_deg,runtime_s")
        throw std::runtime_error("results: unexpected header in " + path);
    EvalReport rep;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 7) throw std::runtime_error("results: malformed row '" + line + "'");
        EvalRow r;
        r.method = std::string(f[0]);
        r.recording = std::string(f[1]);
        r.label.kind = kind_from_string(std::string(f[2]));
        r.label.speed = speed_from_string(std::string(f[3]));
        r.label.pausing = pausing_from_string(std::string(f[4]));
        r.rmse_deg = parse_num(f[5]);
        r.runtime_s = parse_num(f[6]);
        rep.rows.push_back(std::move(r));
    }
    if (rep.rows.empty()) throw std::runtime_error("results: no rows in " + path);
    return rep;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"IMU attitude estimation workbench: complementary filters vs trained networks"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    std::string config_path;
    int jobs = 1;
    auto* seed_opt =
        app.add_option("--seed", seed, "Master seed: overrides the config seed and seeds synthetic sets");
    app.add_option("--config", config_path, "JSON config: {net:{...}, train:{...}, harness:{...}, val_names:[...]}")
        ->check(CLI::ExistingFile);
    app.add_option("--jobs", jobs, "Concurrent folds/variants/sizes")->check(CLI::PositiveNumber);

    const auto make_sub = [&](const std::string& name, const std::string& desc) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->fallthrough();
        return sub;
    };

    // assembled by whichever subcommand runs; applied after parse
    const auto effective_config = [&]() {
        FileConfig cfg = load_file_config(config_path);
        if (seed_opt->count()) cfg.train.seed = seed;
        cfg.harness.jobs = jobs;
        return cfg;
    };

    // simulate
    struct {
        std::string kind = "arbitrary", speed = "medium", pausing = "nonstop", out;
        double duration_s = 180.0, rate_hz = 286.0;
        bool ideal = false;
    } sim;
    {
        CLI::App* sub = make_sub("simulate", "Generate one synthetic recording with ground truth");
        sub->add_option("--kind", sim.kind, "rotation|translation|arbitrary")->capture_default_str();
        sub->add_option("--speed", sim.speed, "slow|medium|fast")->capture_default_str();
        sub->add_option("--pausing", sim.pausing, "paused|nonstop")->capture_default_str();
        sub->add_option("--duration", sim.duration_s, "Seconds")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--rate", sim.rate_hz, "Sample rate in Hz")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_flag("--ideal", sim.ideal, "Noise- and bias-free sensors");
        sub->add_option("--out", sim.out, "Output recording CSV (sidecar JSON written next to it)")->required();
        sub->callback([&] {
            const MotionLabel label{kind_from_string(sim.kind), speed_from_string(sim.speed),
                                    pausing_from_string(sim.pausing)};
            const ImuModel imu = sim.ideal ? ImuModel::ideal() : ImuModel{};
            Recording rec = simulate_recording(label, sim.duration_s, sim.rate_hz, imu, seed);
            rec.name = std::filesystem::path(sim.out).stem().string();
            save_recording(rec, sim.out);
            std::cout << "wrote=" << sim.out << " samples=" << rec.size() << '\n';
        });
    }

    // filter
    struct {
        std::string variant = "baseline", in, out;
        double tau = FilterParams{}.tau_base;
        double gain = -1.0; // variant-dependent default
    } fil;
    {
        CLI::App* sub = make_sub("filter", "Run a complementary filter variant over a recording");
        sub->add_option("--variant", fil.variant, "baseline|fixed|strapdown")->capture_default_str();
        sub->add_option("--in", fil.in, "Recording CSV")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", fil.out, "Estimate CSV (t,qw,qx,qy,qz)")->required();
        sub->add_option("--tau", fil.tau, "Base time constant in seconds")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--gain", fil.gain,
                        "baseline: adaptive gain (default 0.1); fixed: correction fraction (default 0.005)");
        sub->callback([&] {
            const FilterVariant v = filter_variant_from_string(fil.variant);
            FilterParams p;
            p.tau_base = fil.tau;
            if (fil.gain >= 0.0) p.adapt_gain = fil.gain;
            const double fixed_gain = fil.gain >= 0.0 ? fil.gain : 0.005;
            const Recording rec = load_recording(fil.in);
            const std::vector<Quat> est = run_filter(rec, v, p, fixed_gain);
            save_estimates(est, rec.sample_rate_hz, fil.out);
            std::cout << "wrote=" << fil.out << " e_rms_deg=" << fmt_num(compute_rmse(rec.q_ref, est)) << '\n';
        });
    }

    // train
    struct {
        std::string data_dir, out;
    } tra;
    {
        CLI::App* sub = make_sub("train", "Train a network on a directory of recordings");
        sub->add_option("--data-dir", tra.data_dir, "Directory of recording CSVs")->required();
        sub->add_option("--out", tra.out, "Checkpoint path; epoch log goes to <out stem>.history.csv")->required();
        sub->callback([&] {
            const FileConfig cfg = effective_config();
            const std::vector<Recording> recs = load_dir(tra.data_dir);
            EvalSplit split;
            split.val_names = cfg.val_names;
            if (split.val_names.empty()) split.val_names = {recs.back().name};
            std::vector<Recording> train_set, val_set;
            split_recordings(recs, split, train_set, val_set);
            const TrainedModel tm = train(cfg.net, cfg.train, train_set, val_set);
            save_checkpoint(tra.out, tm.net, tm.stand);
            std::filesystem::path hist(tra.out);
            hist.replace_extension(".history.csv");
            {
                std::ofstream out(hist, std::ios::trunc);
                if (!out) throw std::runtime_error("train: cannot write " + hist.string());
                out << "epoch,train_loss,val_loss,val_rms_deg\n";
                for (std::size_t e = 0; e < tm.history.train_loss.size(); ++e)
                    out << e << ',' << fmt_num(tm.history.train_loss[e]) << ','
                        << fmt_num(tm.history.val_loss[e]) << ','
                        << fmt_num(tm.history.val_rms_deg[e]) << '\n';
            }
            std::cout << "wrote=" << tra.out << " history=" << hist.string()
                      << " val_rms_deg=" << fmt_num(tm.history.val_rms_deg.back()) << '\n';
        });
    }

    // predict
    struct {
        std::string model, in, out;
    } pre;
    {
        CLI::App* sub = make_sub("predict", "Run a trained network over a recording");
        sub->add_option("--model", pre.model, "Checkpoint path")->required()->check(CLI::ExistingFile);
        sub->add_option("--in", pre.in, "Recording CSV")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", pre.out, "Estimate CSV (t,qw,qx,qy,qz)")->required();
        sub->callback([&] {
            Checkpoint ck = load_checkpoint(pre.model);
            const Recording rec = load_recording(pre.in);
            const std::vector<Quat> est = ck.net.predict(rec, ck.stand);
            save_estimates(est, rec.sample_rate_hz, pre.out);
            std::cout << "wrote=" << pre.out << " e_rms_deg=" << fmt_num(compute_rmse(rec.q_ref, est)) << '\n';
        });
    }

    // tune-filter
    struct {
        SetArgs set;
        std::string out;
        double settle_skip_s = 0.0;
    } tun;
    {
        CLI::App* sub = make_sub("tune-filter", "Grid-search filter parameters on a recording set");
        add_set_flags(sub, tun.set);
        sub->add_option("--out", tun.out, "Tuned parameter CSV (param,value)")->required();
        sub->add_option("--settle-skip-s", tun.settle_skip_s,
                        "Seconds discarded at the start of each recording during tuning")
            ->capture_default_str();
        sub->callback([&] {
            const std::vector<Recording> recs = gather_recordings(tun.set, seed);
            const FilterParams tuned = tune_filter(recs, make_param_grid(), tun.settle_skip_s);
            const double gain = tune_fixed_gain(recs, make_gain_grid(), tun.settle_skip_s);
            std::ofstream out(tun.out, std::ios::trunc);
            if (!out) throw std::runtime_error("tune-filter: cannot write " + tun.out);
            out << "param,value\n";
            out << "tau_base," << fmt_num(tuned.tau_base) << '\n';
            out << "adapt_gain," << fmt_num(tuned.adapt_gain) << '\n';
            out << "fixed_gain," << fmt_num(gain) << '\n';
            std::cout << "wrote=" << tun.out << " tau_base=" << fmt_num(tuned.tau_base)
                      << " adapt_gain=" << fmt_num(tuned.adapt_gain)
                      << " fixed_gain=" << fmt_num(gain) << '\n';
        });
    }

    // loocv
    struct {
        SetArgs set;
        std::string out_dir;
        bool timing = false;
    } loo;
    {
        CLI::App* sub = make_sub("loocv", "Leave-one-out cross-validation: network vs filters");
        add_set_flags(sub, loo.set);
        sub->add_option("--out-dir", loo.out_dir, "Report directory")->required();
        sub->add_flag("--timing", loo.timing, "Record wall-clock runtimes (breaks byte-reproducibility)");
        sub->callback([&] {
            FileConfig cfg = effective_config();
            cfg.harness.timing = cfg.harness.timing || loo.timing;
            const std::vector<Recording> recs = gather_recordings(loo.set, seed);
            const EvalReport rep = run_loocv(recs, cfg.net, cfg.train, cfg.harness);
            emit_report(rep, loo.out_dir);
            print_report_summary(rep, loo.out_dir);
        });
    }

    // ablation
    struct {
        SetArgs set;
        std::string out_dir;
        bool timing = false;
    } abl;
    {
        CLI::App* sub = make_sub("ablation", "Cumulative design ablation for both architectures");
        add_set_flags(sub, abl.set);
        sub->add_option("--out-dir", abl.out_dir, "Report directory")->required();
        sub->add_flag("--timing", abl.timing, "Record wall-clock runtimes (breaks byte-reproducibility)");
        sub->callback([&] {
            FileConfig cfg = effective_config();
            cfg.harness.timing = cfg.harness.timing || abl.timing;
            const std::vector<Recording> recs = gather_recordings(abl.set, seed);
            const EvalSplit split = choose_ablation_split(recs, cfg.harness.settle_skip);
            std::cout << "val_names=";
            for (std::size_t i = 0; i < split.val_names.size(); ++i)
                std::cout << (i ? "," : "") << split.val_names[i];
            std::cout << '\n';
            const EvalReport rep = run_ablation(recs, split, cfg.net, cfg.train, cfg.harness);
            emit_report(rep, abl.out_dir);
            print_report_summary(rep, abl.out_dir);
        });
    }

    // size-sweep
    struct {
        SetArgs set;
        std::string out_dir;
        std::vector<int> sizes{8, 16, 32};
        bool timing = false;
    } swe;
    {
        CLI::App* sub = make_sub("size-sweep", "Validation error across hidden-layer sizes");
        add_set_flags(sub, swe.set);
        sub->add_option("--sizes", swe.sizes, "Hidden sizes to train")
            ->delimiter(',')
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--out-dir", swe.out_dir, "Report directory")->required();
        sub->add_flag("--timing", swe.timing, "Record wall-clock runtimes (breaks byte-reproducibility)");
        sub->callback([&] {
            FileConfig cfg = effective_config();
            cfg.harness.timing = cfg.harness.timing || swe.timing;
            const std::vector<Recording> recs = gather_recordings(swe.set, seed);
            const EvalSplit split = choose_ablation_split(recs, cfg.harness.settle_skip);
            const EvalReport rep = run_size_sweep(recs, split, swe.sizes, cfg.train, cfg.harness);
            emit_report(rep, swe.out_dir);
            print_report_summary(rep, swe.out_dir);
        });
    }

    // report
    struct {
        std::string results, out_dir;
    } repc;
    {
        CLI::App* sub = make_sub("report", "Re-emit summary and plot scripts from a results.csv");
        sub->add_option("--results", repc.results, "Existing results.csv")->required()->check(CLI::ExistingFile);
        sub->add_option("--out-dir", repc.out_dir, "Report directory")->required();
        sub->callback([&] {
            const EvalReport rep = parse_results_csv(repc.results);
            emit_report(rep, repc.out_dir);
            std::cout << "wrote=" << repc.out_dir << '\n';
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // help requested
        std::cerr << nlohmann::json{{"error", std::string(e.what())}}.dump() << '\n';
        return e.get_exit_code();
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", std::string(e.what())}}.dump() << '\n';
        return 1;
    }
    return 0;
}
