#pragma once

#include <map>
#include <string>
#include <vector>

#include "attbench/autodiff.hpp"
#include "attbench/dataset.hpp"
#include "attbench/quat.hpp"
#include "attbench/recording.hpp"
#include "attbench/rng.hpp"

namespace attbench {

enum class Arch { rnn, tcn };

std::string to_string(Arch a);
Arch arch_from_string(const std::string& s);

// Inputs are always the 6 standardized channels (acc xyz, gyr xyz); the head
// emits 4 values per step, normalized to a unit quaternion.
struct NetConfig {
    Arch arch = Arch::rnn;
    int num_layers = 2; // rnn depth, or tcn block count (dilation 2^l at block l)
    int hidden = 200;
    bool grouped_input = false;
    double weight_dropout = 0.0;
    double activation_dropout = 0.0;

    // samples of past input that can influence the current output; 0 means
    // unbounded (recurrent)
    int receptive_field() const { return arch == Arch::tcn ? 1 << num_layers : 0; }

    static NetConfig defaults_for(Arch a);
    void validate() const;
};

// Carried recurrent state, one entry per LSTM cell in layer order (a grouped
// first layer contributes two cells). Values only: staging them as constant
// leaves each window is what truncates backpropagation at window boundaries.
struct RnnState {
    std::vector<Tensor> h, c;
};

// Everything the training loop needs back from one stacked-window forward.
struct BuiltForward {
    int out = -1;                    // [T*B x 4] unit quaternion rows, time-major
    std::map<std::string, int> pids; // tape leaf id per parameter name
};

class Network {
public:
    NetConfig cfg;
    std::map<std::string, Tensor> params; // trainable, keyed by stable names
    std::map<std::string, BnStats> bn;    // running stats per batchnorm site

    static Network create(const NetConfig& cfg, Rng& rng);

    // Builds the whole stacked-window graph: input is time-major [T*B x 6]
    // (row t*B + b = step t of batch element b). Training mode updates
    // batchnorm running stats and applies dropout from drop_rng. For the rnn
    // arch, state is consumed as constant leaves and overwritten with the
    // final step's values; tcn ignores it.
    BuiltForward forward_window(Tape& t, const Tensor& input, int T, int B, RnnState* state,
                                bool training, bool params_rg, Rng& drop_rng);

    RnnState init_state(int B) const;

    // Eval-mode causal inference over a full recording, chunked to bound tape
    // size. Chunked and single-pass outputs are identical: the rnn carries
    // h/c, the tcn re-feeds the last receptive_field-1 input rows as context.
    std::vector<Quat> predict(const Recording& rec, const Standardizer& st, int chunk = 512);

    long long param_count() const;

private:
    struct CellSpec {
        std::string name;
        int c0, c1; // input column range consumed
        int hsz;
    };
    struct ConvSpec {
        std::string name;
        int c0, c1;
        int cin, cout;
    };

    std::vector<std::vector<CellSpec>> rnn_layers() const;
    std::vector<std::vector<ConvSpec>> tcn_layers() const;
    int head_in() const { return cfg.hidden; }
};

} // namespace attbench
