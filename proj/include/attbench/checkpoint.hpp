#pragma once

#include <string>

#include "attbench/dataset.hpp"
#include "attbench/network.hpp"

namespace attbench {

inline constexpr int kCheckpointVersion = 1;

// Everything needed to run inference: architecture config, trained parameters,
// batchnorm running statistics, and the input standardizer.
struct Checkpoint {
    Network net;
    Standardizer stand;
};

// Self-describing JSON container with a mandatory version field; parameter
// values survive a save/load round trip bit-exactly.
void save_checkpoint(const std::string& path, const Network& net, const Standardizer& stand);
Checkpoint load_checkpoint(const std::string& path);

} // namespace attbench
