#include "ads3d/preprocess.hpp"

#include "ads3d/dsp.hpp"
#include "ads3d/error.hpp"

#include <cmath>
#include <string>

namespace ads3d::dsp {

PreprocessConfig PreprocessConfig::full() { return {}; }

PreprocessConfig PreprocessConfig::reduced() {
    PreprocessConfig c;
    c.downsample_factor = 4;
    c.onset_s = 1.5;
    c.epoch_samples = 251;
    return c;
}

PreprocessConfig PreprocessConfig::named(std::string_view name) {
    if (name == "full") return full();
    if (name == "reduced") return reduced();
    throw Error("bad_config", "unknown preprocessing preset '" + std::string(name) + "'");
}

eegio::EpochSet preprocess(const eegio::EpochSet& raw, const PreprocessConfig& config) {
    raw.validate();
    const double fs = raw.fs;
    const BiquadCascade band = design_butter_bandpass(fs, config.band_lo_hz, config.band_hi_hz, config.band_order);
    const double fs_out = fs / config.downsample_factor;
    const auto onset = static_cast<long long>(std::llround(config.onset_s * fs_out));
    if (onset < 0) throw Error("out_of_range", "onset must be >= 0");

    eegio::EpochSet out;
    out.n_trials = raw.n_trials;
    out.n_channels = raw.n_channels;
    out.n_samples = config.epoch_samples;
    out.fs = static_cast<float>(fs_out);
    out.labels = raw.labels;
    out.channel_names = raw.channel_names;
    out.data.resize(out.n_trials * out.n_channels * out.n_samples);

    std::vector<double> trace(raw.n_samples);
    for (std::size_t tr = 0; tr < raw.n_trials; ++tr)
        for (std::size_t ch = 0; ch < raw.n_channels; ++ch) {
            auto src = raw.channel(tr, ch);
            trace.assign(src.begin(), src.end());
            if (config.notch) trace = notch60(trace, fs);
            trace = filtfilt(band, trace);
            trace = downsample(trace, config.downsample_factor);
            const auto epoch = extract_epoch(trace, static_cast<std::size_t>(onset), config.epoch_samples);
            auto dst = out.channel(tr, ch);
            for (std::size_t i = 0; i < epoch.size(); ++i) dst[i] = static_cast<float>(epoch[i]);
        }
    return out;
}

} // namespace ads3d::dsp
