#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "attbench/csv.hpp"
#include "attbench/evalharness.hpp"
#include "attbench/metric.hpp"
#include "doctest.h"

using namespace attbench;

namespace {

std::vector<Recording> toy_set(int n, std::uint64_t seed = 7) {
    return make_taxonomy_set(n, 10.0, 40.0, ImuModel::ideal(), seed);
}

NetConfig toy_ncfg() {
    NetConfig n;
    n.arch = Arch::rnn;
    n.num_layers = 2;
    n.hidden = 4;
    return n;
}

TrainConfig toy_tcfg() {
    TrainConfig t;
    t.window_len = 32;
    t.batch_size = 2;
    t.carry_windows = 2;
    t.epochs = 2;
    t.max_lr = 2e-3;
    t.min_lr = 1e-4;
    t.seed = 5;
    return t;
}

int config_diff_count(const AblationVariant& a, const AblationVariant& b) {
    int d = 0;
    d += a.ncfg.arch != b.ncfg.arch;
    d += a.ncfg.num_layers != b.ncfg.num_layers;
    d += a.ncfg.hidden != b.ncfg.hidden;
    d += a.ncfg.grouped_input != b.ncfg.grouped_input;
    d += a.ncfg.weight_dropout != b.ncfg.weight_dropout;
    d += a.ncfg.activation_dropout != b.ncfg.activation_dropout;
    d += a.tcfg.window_len != b.tcfg.window_len;
    d += a.tcfg.batch_size != b.tcfg.batch_size;
    d += a.tcfg.carry_windows != b.tcfg.carry_windows;
    d += a.tcfg.max_lr != b.tcfg.max_lr;
    d += a.tcfg.min_lr != b.tcfg.min_lr;
    d += a.tcfg.epochs != b.tcfg.epochs;
    d += a.tcfg.plateau_frac != b.tcfg.plateau_frac;
    d += a.tcfg.loss != b.tcfg.loss;
    d += a.tcfg.smoothl1_beta != b.tcfg.smoothl1_beta;
    d += a.tcfg.augment != b.tcfg.augment;
    d += a.tcfg.find_lr != b.tcfg.find_lr;
    d += a.tcfg.seed != b.tcfg.seed;
    return d;
}

const EvalRow& row_of(const EvalReport& rep, const std::string& method,
                      const std::string& recording) {
    for (const EvalRow& r : rep.rows)
        if (r.method == method && r.recording == recording) return r;
    throw std::logic_error("missing row " + method + "/" + recording);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> fields_of(const std::string& line) {
    std::vector<std::string> out;
    for (std::string_view v : split_csv_line(line)) out.emplace_back(v);
    return out;
}

} // namespace

TEST_CASE("taxonomy set composition and determinism") {
    const auto six = toy_set(6);
    REQUIRE(six.size() == 6);
    std::set<std::string> names;
    for (const Recording& r : six) {
        CHECK_NOTHROW(r.validate());
        CHECK(r.size() == 401); // samples at t = 0 .. duration inclusive
        CHECK(r.sample_rate_hz == 40.0);
        CHECK(r.name == to_string(r.label.kind) + "-" + to_string(r.label.speed) + "-" +
                            to_string(r.label.pausing));
        names.insert(r.name);
    }
    CHECK(names.size() == 6);
    // the smoke set must span both easy and hard motion for a meaningful split
    CHECK(names.count("rotation-fast-nonstop"));
    CHECK(names.count("arbitrary-fast-nonstop"));
    CHECK(names.count("translation-slow-paused"));

    const auto fifteen = toy_set(15);
    REQUIRE(fifteen.size() == 15);
    std::set<std::string> names15;
    int nonstop = 0, paused = 0;
    for (const Recording& r : fifteen) {
        names15.insert(r.name);
        (r.label.pausing == MotionPausing::nonstop ? nonstop : paused) += 1;
    }
    CHECK(names15.size() == 15);
    CHECK(nonstop == 9);
    CHECK(paused == 6);

    const auto again = toy_set(6);
    for (std::size_t i = 0; i < six.size(); ++i) {
        CHECK(again[i].name == six[i].name);
        CHECK(again[i].acc[100].x == six[i].acc[100].x);
        CHECK(again[i].gyr[200].z == six[i].gyr[200].z);
        CHECK(again[i].q_ref[300].w == six[i].q_ref[300].w);
    }
    const auto other = toy_set(6, 8);
    CHECK(other[0].q_ref[300].w != six[0].q_ref[300].w);

    CHECK_THROWS_AS((void)toy_set(0), std::invalid_argument);
    CHECK_THROWS_AS((void)toy_set(5), std::invalid_argument);
    CHECK_THROWS_AS((void)toy_set(7), std::invalid_argument);
    CHECK_THROWS_AS((void)toy_set(16), std::invalid_argument);
}

TEST_CASE("median and iqr worked values") {
    CHECK(median_of({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median_of({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK(median_of({5.0}) == 5.0);
    CHECK_THROWS_AS((void)median_of({}), std::invalid_argument);

    // linear interpolation between closest ranks: {1,2,3,4} -> q25 1.75, q75 3.25
    CHECK(iqr_of({4.0, 1.0, 3.0, 2.0}) == 1.5);
    CHECK(iqr_of({0.0, 10.0}) == 5.0);
    CHECK(iqr_of({1.0, 1.0, 1.0, 1.0}) == 0.0);
    CHECK(iqr_of({2.0}) == 0.0);
    CHECK(iqr_of({1.0, 2.0, 3.0}) == 1.0);
    CHECK_THROWS_AS((void)iqr_of({}), std::invalid_argument);
}

TEST_CASE("config hash is stable and sensitive") {
    const NetConfig n = toy_ncfg();
    const TrainConfig t = toy_tcfg();
    const HarnessOptions o;
    const std::string h = config_hash(n, t, o);
    CHECK(h.size() == 16);
    CHECK(h.find_first_not_of("0123456789abcdef") == std::string::npos);
    CHECK(config_hash(n, t, o) == h);

    NetConfig n2 = n;
    n2.hidden += 1;
    CHECK(config_hash(n2, t, o) != h);
    n2 = n;
    n2.grouped_input = true;
    CHECK(config_hash(n2, t, o) != h);

    TrainConfig t2 = t;
    t2.loss = LossKind::mse_elementwise;
    CHECK(config_hash(n, t2, o) != h);
    t2 = t;
    t2.augment = true;
    CHECK(config_hash(n, t2, o) != h);
    t2 = t;
    t2.seed += 1;
    CHECK(config_hash(n, t2, o) != h);
    t2 = t;
    t2.max_lr *= 2.0;
    CHECK(config_hash(n, t2, o) != h);

    HarnessOptions o2;
    o2.settle_skip = 100;
    CHECK(config_hash(n, t, o2) != h);
    // jobs and timing change execution, not results: same artifacts, same hash
    o2 = o;
    o2.jobs = 4;
    o2.timing = true;
    CHECK(config_hash(n, t, o2) == h);
}

TEST_CASE("split recordings routes by name and validates") {
    const auto recs = toy_set(6);
    EvalSplit split;
    split.val_names = {recs[1].name, recs[4].name};
    std::vector<Recording> tr, va;
    split_recordings(recs, split, tr, va);
    REQUIRE(tr.size() == 4);
    REQUIRE(va.size() == 2);
    CHECK(va[0].name == recs[1].name);
    CHECK(va[1].name == recs[4].name);
    CHECK(tr[0].name == recs[0].name);
    CHECK(tr[1].name == recs[2].name);

    split.val_names = {"no-such-recording"};
    CHECK_THROWS_AS(split_recordings(recs, split, tr, va), std::invalid_argument);
    split.val_names = {};
    CHECK_THROWS_AS(split_recordings(recs, split, tr, va), std::invalid_argument);
    split.val_names.clear();
    for (const Recording& r : recs) split.val_names.push_back(r.name);
    CHECK_THROWS_AS(split_recordings(recs, split, tr, va), std::invalid_argument);
}

TEST_CASE("ablation chain flips exactly one knob per step") {
    const NetConfig base_n = toy_ncfg();
    const TrainConfig base_t = toy_tcfg();
    for (Arch arch : {Arch::rnn, Arch::tcn}) {
        CAPTURE(to_string(arch));
        const auto vars = ablation_variants(arch, base_n, base_t);
        REQUIRE(vars.size() == 4);
        CHECK(vars[0].name == to_string(arch) + "_bm");
        CHECK(vars[1].name == to_string(arch) + "_bm_lo");
        CHECK(vars[2].name == to_string(arch) + "_bm_lo_da");
        CHECK(vars[3].name == to_string(arch) + "_bm_lo_da_gi");

        CHECK(vars[0].tcfg.loss == LossKind::mse_elementwise);
        CHECK(vars[0].tcfg.augment == false);
        CHECK(vars[0].ncfg.grouped_input == false);
        CHECK(vars[1].tcfg.loss == LossKind::linear_att_smoothl1);
        CHECK(vars[2].tcfg.augment == true);
        CHECK(vars[3].ncfg.grouped_input == true);

        for (std::size_t i = 1; i < vars.size(); ++i) {
            CAPTURE(vars[i].name);
            CHECK(config_diff_count(vars[i - 1], vars[i]) == 1);
        }
        for (const auto& v : vars) {
            CHECK(v.ncfg.arch == arch);
            CHECK(v.ncfg.hidden == base_n.hidden);
            CHECK(v.ncfg.weight_dropout == base_n.weight_dropout);
            CHECK(v.ncfg.activation_dropout == base_n.activation_dropout);
            CHECK(v.tcfg.epochs == base_t.epochs);
            CHECK(v.tcfg.seed == base_t.seed);
            CHECK_NOTHROW(v.ncfg.validate());
            CHECK_NOTHROW(v.tcfg.validate());
        }
    }
}

TEST_CASE("ablation split picks a spread of three distinct recordings") {
    const auto recs = make_taxonomy_set(6, 10.0, 40.0, ImuModel{}, 11);
    const EvalSplit split = choose_ablation_split(recs);
    REQUIRE(split.val_names.size() == 3);
    std::set<std::string> uniq(split.val_names.begin(), split.val_names.end());
    CHECK(uniq.size() == 3);
    std::set<std::string> known;
    for (const Recording& r : recs) known.insert(r.name);
    for (const std::string& n : split.val_names) CHECK(known.count(n));

    const EvalSplit again = choose_ablation_split(recs);
    CHECK(again.val_names == split.val_names);

    std::vector<Recording> two(recs.begin(), recs.begin() + 2);
    CHECK_THROWS_AS((void)choose_ablation_split(two), std::invalid_argument);
}

TEST_CASE("loocv matches the hand-run pipeline and parallel equals serial") {
    auto recs = toy_set(6);
    recs.resize(2); // rotation-slow and rotation-fast: two folds
    const NetConfig ncfg = toy_ncfg();
    const TrainConfig tcfg = toy_tcfg();
    HarnessOptions opt;
    opt.jobs = 1;

    const EvalReport rep = run_loocv(recs, ncfg, tcfg, opt);
    CHECK(rep.config_hash == config_hash(ncfg, tcfg, opt));
    REQUIRE(rep.rows.size() == 8);
    std::set<std::pair<std::string, std::string>> keys;
    for (const EvalRow& r : rep.rows) {
        keys.insert({r.method, r.recording});
        CHECK(std::isfinite(r.rmse_deg));
        CHECK(r.rmse_deg >= 0.0);
        CHECK(r.runtime_s == 0.0); // timing off means no clock reads at all
        if (r.method == "nn")
            CHECK(r.param_count > 0);
        else
            CHECK(r.param_count == 0);
    }
    CHECK(keys.size() == 8);
    for (const char* m : {"nn", "baseline", "fixed", "strapdown"})
        for (const Recording& r : recs) CHECK(keys.count({m, r.name}));

    // fold oracle: hold out recs[0], train on the rest with identical configs
    TrainedModel tm = train(ncfg, tcfg, {recs[1]}, {recs[0]});
    CHECK(!tm.trained_on.count(recs[0].name));
    const double oracle =
        compute_rmse(recs[0].q_ref, tm.net.predict(recs[0], tm.stand), 0);
    CHECK(row_of(rep, "nn", recs[0].name).rmse_deg == oracle);
    CHECK(row_of(rep, "nn", recs[0].name).param_count == tm.net.param_count());

    // filter oracle: parameters tuned once on the whole set
    const FilterParams tuned = tune_filter(recs, make_param_grid());
    const double base_oracle =
        compute_rmse(recs[0].q_ref, run_filter(recs[0], FilterVariant::baseline, tuned), 0);
    CHECK(row_of(rep, "baseline", recs[0].name).rmse_deg == base_oracle);

    HarnessOptions par = opt;
    par.jobs = 2;
    const EvalReport rep2 = run_loocv(recs, ncfg, tcfg, par);
    REQUIRE(rep2.rows.size() == rep.rows.size());
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        CHECK(rep2.rows[i].method == rep.rows[i].method);
        CHECK(rep2.rows[i].recording == rep.rows[i].recording);
        CHECK(rep2.rows[i].rmse_deg == rep.rows[i].rmse_deg);
        CHECK(rep2.rows[i].param_count == rep.rows[i].param_count);
    }

    std::vector<Recording> one(recs.begin(), recs.begin() + 1);
    CHECK_THROWS_AS((void)run_loocv(one, ncfg, tcfg, opt), std::invalid_argument);
}

TEST_CASE("ablation produces one row per variant and validation recording") {
    auto recs = toy_set(6);
    recs.resize(3);
    EvalSplit split;
    split.val_names = {recs[2].name};
    HarnessOptions opt;
    opt.jobs = 2;

    const EvalReport rep = run_ablation(recs, split, toy_ncfg(), toy_tcfg(), opt);
    REQUIRE(rep.rows.size() == 8);
    std::set<std::string> methods;
    for (const EvalRow& r : rep.rows) {
        methods.insert(r.method);
        CHECK(r.recording == recs[2].name);
        CHECK(std::isfinite(r.rmse_deg));
        CHECK(r.param_count > 0);
    }
    CHECK(methods.size() == 8);
    for (const char* arch : {"rnn", "tcn"})
        for (const char* suffix : {"_bm", "_bm_lo", "_bm_lo_da", "_bm_lo_da_gi"})
            CHECK(methods.count(std::string(arch) + suffix));

    // grouped input is the one knob that changes capacity: strictly fewer params
    CHECK(row_of(rep, "rnn_bm_lo_da_gi", recs[2].name).param_count <
          row_of(rep, "rnn_bm_lo_da", recs[2].name).param_count);
    CHECK(row_of(rep, "tcn_bm_lo_da_gi", recs[2].name).param_count <
          row_of(rep, "tcn_bm_lo_da", recs[2].name).param_count);
}

TEST_CASE("size sweep orders parameter counts") {
    auto recs = toy_set(6);
    recs.resize(3);
    EvalSplit split;
    split.val_names = {recs[2].name};
    HarnessOptions opt;
    opt.jobs = 2;

    const EvalReport rep = run_size_sweep(recs, split, {4, 8}, toy_tcfg(), opt);
    REQUIRE(rep.rows.size() == 2);
    const EvalRow& small = row_of(rep, "rnn_h4", recs[2].name);
    const EvalRow& large = row_of(rep, "rnn_h8", recs[2].name);
    CHECK(small.param_count > 0);
    CHECK(small.param_count < large.param_count);
    CHECK(std::isfinite(small.rmse_deg));
    CHECK(std::isfinite(large.rmse_deg));

    CHECK_THROWS_AS((void)run_size_sweep(recs, split, {}, toy_tcfg(), opt),
                    std::invalid_argument);
}

TEST_CASE("report emission round trips and rewrites identically") {
    namespace fs = std::filesystem;
    EvalReport rep;
    rep.config_hash = "fffefdfcfbfaf9f8";
    const MotionLabel la{MotionKind::rotation, MotionSpeed::slow, MotionPausing::nonstop};
    const MotionLabel lb{MotionKind::arbitrary, MotionSpeed::fast, MotionPausing::paused};
    // deliberately unsorted input: emission must order by (method, recording)
    rep.rows.push_back({"zeta", "r2", lb, 3.0, 0.5, 0});
    rep.rows.push_back({"alpha", "r2", lb, 2.0, 0.0, 120});
    rep.rows.push_back({"zeta", "r1", la, 1.0, 0.25, 0});
    rep.rows.push_back({"alpha", "r1", la, 1.0, 0.0, 120});
    rep.rows.push_back({"alpha", "r3", la, 4.0, 0.0, 120});

    const fs::path dir1 = fs::temp_directory_path() / "attbench_report_a";
    const fs::path dir2 = fs::temp_directory_path() / "attbench_report_b";
    fs::remove_all(dir1);
    fs::remove_all(dir2);
    emit_report(rep, dir1.string());
    emit_report(rep, dir2.string());

    const std::string results = slurp(dir1 / "results.csv");
    std::istringstream in(results);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "method,recording,kind,speed,pausing,rmse_deg,runtime_s");
    std::vector<std::vector<std::string>> parsed;
    while (std::getline(in, line)) parsed.push_back(fields_of(line));
    REQUIRE(parsed.size() == 5);
    for (const auto& f : parsed) REQUIRE(f.size() == 7);
    CHECK(parsed[0][0] == "alpha");
    CHECK(parsed[0][1] == "r1");
    CHECK(parsed[1][1] == "r2");
    CHECK(parsed[2][1] == "r3");
    CHECK(parsed[3][0] == "zeta");
    CHECK(parsed[0][2] == "rotation");
    CHECK(parsed[1][3] == "fast");
    CHECK(parsed[1][4] == "paused");
    CHECK(parse_num(parsed[1][5]) == 2.0);
    CHECK(parse_num(parsed[3][6]) == 0.25);

    // summary medians and iqr must equal a brute-force recomputation
    const std::string summary = slurp(dir1 / "summary.csv");
    std::istringstream sin(summary);
    REQUIRE(std::getline(sin, line));
    CHECK(line == "method,n,median_rmse_deg,iqr_rmse_deg");
    REQUIRE(std::getline(sin, line));
    auto f = fields_of(line);
    REQUIRE(f.size() == 4);
    CHECK(f[0] == "alpha");
    CHECK(f[1] == "3");
    CHECK(parse_num(f[2]) == median_of({1.0, 2.0, 4.0}));
    CHECK(parse_num(f[3]) == iqr_of({1.0, 2.0, 4.0}));
    REQUIRE(std::getline(sin, line));
    f = fields_of(line);
    CHECK(f[0] == "zeta");
    CHECK(f[1] == "2");
    CHECK(parse_num(f[2]) == median_of({1.0, 3.0}));
    CHECK(parse_num(f[3]) == iqr_of({1.0, 3.0}));
    CHECK(!std::getline(sin, line));

    // params.csv lists each method with a positive count exactly once
    const std::string params = slurp(dir1 / "params.csv");
    CHECK(params == "method,param_count\nalpha,120\n");

    CHECK(slurp(dir1 / "plot_results.py").substr(0, 2) == "#!");
    CHECK(slurp(dir2 / "results.csv") == results);
    CHECK(slurp(dir2 / "summary.csv") == summary);

    // a report with no trainable methods gets no params.csv
    EvalReport flat;
    flat.rows.push_back({"zeta", "r1", la, 1.0, 0.0, 0});
    const fs::path dir3 = fs::temp_directory_path() / "attbench_report_c";
    fs::remove_all(dir3);
    emit_report(flat, dir3.string());
    CHECK(!fs::exists(dir3 / "params.csv"));

    CHECK_THROWS_AS(emit_report(EvalReport{}, dir3.string()), std::invalid_argument);
    fs::remove_all(dir1);
    fs::remove_all(dir2);
    fs::remove_all(dir3);
}
