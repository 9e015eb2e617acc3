#pragma once

#include "ads3d/eegio.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ads3d::synth {

/// Class names in label order.
inline constexpr std::array<std::string_view, 4> kClassNames{"split", "spread out", "fall in", "hovering"};

/// Label of a class name. Underscores match spaces ("spread_out"); throws "unknown_class".
std::size_t class_index(std::string_view name);

/// Narrowband bursts added to `channels` in every trial of the listed classes.
/// Each trial draws its frequency from center_hz +- bandwidth_hz / 2.
struct PlantedEffect {
    std::vector<std::string> classes;
    std::vector<std::string> channels;
    double center_hz = 10.0;
    double bandwidth_hz = 1.0;
    double amplitude_uv = 0.0;
};

struct SynthConfig {
    std::size_t n_trials_per_class = 50;
    double fs = 500.0;
    double pre_s = 0.5;     ///< baseline before the imagery period
    double imagery_s = 4.0; ///< bursts are placed inside this period
    double post_s = 0.5;
    double noise_exponent = 1.0; ///< background spectrum ~ 1/f^exponent
    double noise_rms_uv = 10.0;
    double line_amplitude_uv = 5.0; ///< 60 Hz component on every channel
    double effect_gain = 1.0;       ///< multiplies every planted amplitude
    double ceiling_uv = 500.0;      ///< samples are clipped to +-ceiling
    std::uint64_t seed = 1;
    std::vector<std::string> channel_names; ///< defaults to the montage channels
    std::vector<PlantedEffect> effects;

    /// Samples per trial: pre + imagery + post seconds, endpoints inclusive.
    std::size_t samples() const;
    /// Throws Error("bad_config", ...).
    void validate() const;
};

/// Trial i has label i % 4; background, bursts and line phase come from
/// streams derived from (seed, trial, channel).
eegio::EpochSet generate(const SynthConfig& config);

/// Occipital alpha for the three motion classes, prefrontal beta for the two
/// dispersion classes, a right parieto-occipital component for "split" and
/// prefrontal alpha for "hovering".
SynthConfig reference_template();

/// Channels whose planted effects overlapping [lo_hz, hi_hz] apply to exactly one
/// of the two classes, i.e. the channels a contrast should flag. Sorted by name.
std::vector<std::string> planted_channels(const SynthConfig& config, std::size_t class_a, std::size_t class_b,
                                          double lo_hz, double hi_hz);

} // namespace ads3d::synth
