#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "attbench/dataset.hpp"
#include "attbench/losses.hpp"
#include "attbench/network.hpp"
#include "attbench/recording.hpp"

namespace attbench {

struct TrainConfig {
    int window_len = 512;
    int batch_size = 32;
    int carry_windows = 4; // consecutive windows chained per run before a state reset
    double max_lr = 2e-3;
    double min_lr = 1e-5;
    int epochs = 100;
    double plateau_frac = 0.2;
    LossKind loss = LossKind::linear_att_smoothl1;
    double smoothl1_beta = 0.01;
    bool augment = false;
    bool find_lr = false; // run the exponential sweep first and adopt its suggestion
    std::uint64_t seed = 1;

    void validate() const;
};

struct TrainHistory {
    std::vector<double> train_loss;  // mean batch loss per epoch
    std::vector<double> val_loss;    // same criterion, eval mode, per epoch
    std::vector<double> val_rms_deg; // mean attitude RMSE over val recordings
    double used_max_lr = 0.0;
};

struct TrainedModel {
    Network net;
    Standardizer stand;
    TrainHistory history;
    std::set<std::string> trained_on; // recordings whose windows fed gradients
};

// Windowed TBPTT training: recurrent state carries across the consecutive
// windows of a run and resets between runs; each batch slot follows one run.
// The standardizer is fitted on train_recs only; with augmentation on, every
// run is re-rotated by a fresh random mount each epoch. Train and validation
// recordings must be disjoint by name. Throws on non-finite loss.
TrainedModel train(const NetConfig& ncfg, const TrainConfig& tcfg,
                   const std::vector<Recording>& train_recs,
                   const std::vector<Recording>& val_recs);

// Exponential lr sweep in a throwaway copy of the model: runs dummy training
// batches at rising lr, returns the steepest-descent suggestion. The passed
// network is left untouched.
double lr_find(const Network& net, const Standardizer& stand,
               const std::vector<Recording>& train_recs, const TrainConfig& tcfg, double lr_min,
               double lr_max, int steps = 40);

} // namespace attbench
