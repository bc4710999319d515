#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "attbench/filters.hpp"
#include "attbench/recording.hpp"
#include "attbench/simulate.hpp"
#include "attbench/training.hpp"

namespace attbench {

struct EvalRow {
    std::string method;    // "nn", "baseline", "fixed", "strapdown", or a variant id
    std::string recording; // evaluated (held-out / validation) recording name
    MotionLabel label;
    double rmse_deg = 0.0;
    double runtime_s = 0.0;    // wall time for this row; 0 when timing is off
    long long param_count = 0; // trainable parameters, nn rows only
};

struct EvalReport {
    std::vector<EvalRow> rows; // unique per (method, recording)
    std::string config_hash;   // stable digest of configs + seed
};

struct HarnessOptions {
    int jobs = 1;        // folds / variants / sweep points run concurrently
    bool timing = false; // off by default so emitted files stay byte-stable
    int settle_skip = 0; // samples dropped before the error metric
};

// Deterministic synthetic corpus covering the motion taxonomy. n = 6 gives
// the smoke set (each kind twice, each speed twice, one paused recording);
// n = 15 gives every kind x speed nonstop plus kind x {slow,fast} paused.
std::vector<Recording> make_taxonomy_set(int n, double duration_s, double sample_rate_hz,
                                         const ImuModel& imu, std::uint64_t seed);

// Stable digest used to stamp reports produced by a given configuration.
std::string config_hash(const NetConfig& ncfg, const TrainConfig& tcfg,
                        const HarnessOptions& opt);

// Leave-one-out over the corpus: the network retrains per fold on the other
// recordings, while the filters are tuned once on the entire set. Emits one
// row per method per recording. A lineage check verifies the held-out
// recording never fed the fold's gradients or standardizer.
EvalReport run_loocv(const std::vector<Recording>& recs, const NetConfig& ncfg,
                     const TrainConfig& tcfg, const HarnessOptions& opt = {});

// Validation membership for ablation and size sweeps.
struct EvalSplit {
    std::vector<std::string> val_names;
};

// Splits recs into train/val by name; throws if a name is unknown or the
// split leaves either side empty.
void split_recordings(const std::vector<Recording>& recs, const EvalSplit& split,
                      std::vector<Recording>& train_out, std::vector<Recording>& val_out);

// Validation picks with maximum, median, and minimum tuned-baseline error.
EvalSplit choose_ablation_split(const std::vector<Recording>& recs, int settle_skip = 0);

// One cumulative ablation step: a name plus the exact configs it trains with.
struct AblationVariant {
    std::string name; // e.g. "rnn_bm_lo"
    NetConfig ncfg;
    TrainConfig tcfg;
};

// The cumulative chain bm -> bm_lo -> bm_lo_da -> bm_lo_da_gi for one
// architecture. Successive variants differ in exactly one config field:
// loss (mse -> attitude smooth-l1), then augment, then grouped_input.
std::vector<AblationVariant> ablation_variants(Arch arch, const NetConfig& base_ncfg,
                                               const TrainConfig& base_tcfg);

// Trains every variant of both architectures on the split; one row per
// (variant, validation recording).
EvalReport run_ablation(const std::vector<Recording>& recs, const EvalSplit& split,
                        const NetConfig& base_ncfg, const TrainConfig& base_tcfg,
                        const HarnessOptions& opt = {});

// Trains the fully optimized recurrent model (attitude loss + augmentation +
// grouped input) at each hidden size; rows carry parameter counts.
EvalReport run_size_sweep(const std::vector<Recording>& recs, const EvalSplit& split,
                          const std::vector<int>& sizes, const TrainConfig& base_tcfg,
                          const HarnessOptions& opt = {});

// Writes results.csv, summary.csv (median/IQR per method), params.csv when
// parameter counts are present, and a self-contained plot script. Reruns
// overwrite deterministically.
void emit_report(const EvalReport& rep, const std::string& out_dir);

// Median and interquartile range with linear interpolation between ranks.
double median_of(std::vector<double> v);
double iqr_of(std::vector<double> v);

} // namespace attbench
