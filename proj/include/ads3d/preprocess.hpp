#pragma once

#include "ads3d/eegio.hpp"

#include <cstddef>
#include <string_view>

namespace ads3d::dsp {

/// Per-channel chain: 60 Hz notch, Butterworth bandpass, integer downsampling,
/// then a fixed-length window starting `onset_s` seconds into the trial.
struct PreprocessConfig {
    bool notch = true;
    double band_lo_hz = 4.0;
    double band_hi_hz = 40.0;
    int band_order = 5;
    int downsample_factor = 2;
    double onset_s = 0.5;
    std::size_t epoch_samples = 1001;

    /// 500 Hz -> 250 Hz, 1001 samples from the imagery onset.
    static PreprocessConfig full();
    /// 500 Hz -> 125 Hz, 251 samples starting 1.5 s into the trial (the middle
    /// 2 s of the imagery period).
    static PreprocessConfig reduced();
    /// "full" or "reduced"; throws "bad_config".
    static PreprocessConfig named(std::string_view name);
};

/// Applies the chain to every trial and channel. Throws "out_of_range" when the
/// window does not fit, plus the errors of the individual stages.
eegio::EpochSet preprocess(const eegio::EpochSet& raw, const PreprocessConfig& config);

} // namespace ads3d::dsp
