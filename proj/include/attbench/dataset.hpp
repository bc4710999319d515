#pragma once

#include <array>
#include <vector>

#include "attbench/recording.hpp"

namespace attbench {

// A window is a view into a parent sequence; rec tags provenance so data
// lineage (train vs validation) can be asserted downstream.
struct WindowRef {
    int rec = 0;
    int start = 0;
    int len = 0;
};

// Windows at starts 0, stride, 2*stride, ... while start+window_len <= n.
// Incomplete tail windows are dropped. Throws if window_len > n.
std::vector<WindowRef> extract_windows(int n_samples, int window_len, int stride, int rec_id = 0);

// Virtually remount the IMU: sensor axes rotated by r. Signals move to the
// new sensor frame, the reference orientation picks up the mount rotation.
Recording augment_rotation(const Recording& rec, const Quat& r);

// Per-channel affine normalization over the six IMU channels
// (ax, ay, az, gx, gy, gz). Fitted once on training data, applied unchanged
// to validation data. Immutable after fit.
struct Standardizer {
    std::array<double, 6> mean{};
    std::array<double, 6> stddev{};
};

// Pooled statistics over all samples of all recordings (population variance).
// Throws if any channel has zero variance.
Standardizer fit_standardizer(const std::vector<Recording>& recs);

Recording apply_standardizer(const Standardizer& s, const Recording& rec);

} // namespace attbench
