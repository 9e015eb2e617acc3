#include "ads3d/synthgen.hpp"

#include "ads3d/error.hpp"
#include "ads3d/montage.hpp"
#include "ads3d/rng.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <set>

namespace ads3d::synth {
namespace {

constexpr std::uint64_t kNoiseStream = 1;
constexpr std::uint64_t kLineStream = 2;
constexpr std::uint64_t kEffectStream = 3;

std::string normalize(std::string_view s) {
    std::string out;
    for (char c : s) out.push_back(c == '_' ? ' ' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

bool overlaps(const PlantedEffect& e, double lo, double hi) {
    const double elo = e.center_hz - e.bandwidth_hz / 2, ehi = e.center_hz + e.bandwidth_hz / 2;
    return elo <= hi && ehi >= lo;
}

// Owns one c2r plan for a fixed length; FFTW plans are not copyable.
class NoiseSynth {
public:
    NoiseSynth(std::size_t n, double fs, double exponent, double rms) : n_(n), bins_(n / 2 + 1) {
        spec_ = fftw_alloc_complex(bins_);
        out_ = fftw_alloc_real(n_);
        plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(n_), spec_, out_, FFTW_ESTIMATE);
        scale_.assign(bins_, 0.0);
        double var = 0;
        for (std::size_t k = 1; k < bins_; ++k) {
            const double f = static_cast<double>(k) * fs / static_cast<double>(n_);
            scale_[k] = std::pow(f, -exponent / 2);
            const bool nyquist = (n_ % 2 == 0) && k == n_ / 2;
            // A complex bin contributes 2|X|^2 to the variance, the real Nyquist bin |X|^2.
            var += (nyquist ? 1.0 : 4.0) * scale_[k] * scale_[k] * (nyquist ? 1.0 : 0.5);
        }
        const double gain = var > 0 ? rms / std::sqrt(var) : 0.0;
        for (double& s : scale_) s *= gain;
    }
    NoiseSynth(const NoiseSynth&) = delete;
    NoiseSynth& operator=(const NoiseSynth&) = delete;
    ~NoiseSynth() {
        fftw_destroy_plan(plan_);
        fftw_free(spec_);
        fftw_free(out_);
    }

    void fill(CounterRng& rng, double* dst) {
        spec_[0][0] = spec_[0][1] = 0.0;
        for (std::size_t k = 1; k < bins_; ++k) {
            const double re = rng.normal(), im = rng.normal();
            const bool nyquist = (n_ % 2 == 0) && k == n_ / 2;
            spec_[k][0] = scale_[k] * (nyquist ? re : re * std::numbers::sqrt2 / 2);
            spec_[k][1] = nyquist ? 0.0 : scale_[k] * im * std::numbers::sqrt2 / 2;
        }
        fftw_execute(plan_);
        std::copy(out_, out_ + n_, dst);
    }

private:
    std::size_t n_, bins_;
    fftw_complex* spec_ = nullptr;
    double* out_ = nullptr;
    fftw_plan plan_ = nullptr;
    std::vector<double> scale_;
};

} // namespace

std::size_t class_index(std::string_view name) {
    const std::string key = normalize(name);
    for (std::size_t i = 0; i < kClassNames.size(); ++i)
        if (key == kClassNames[i]) return i;
    throw Error("unknown_class", "unknown class '" + std::string(name) + "'");
}

std::size_t SynthConfig::samples() const {
    return static_cast<std::size_t>(std::llround((pre_s + imagery_s + post_s) * fs)) + 1;
}

void SynthConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error("bad_config", msg); };
    if (n_trials_per_class == 0) fail("n_trials_per_class must be positive");
    if (!(fs > 0)) fail("fs must be positive");
    if (pre_s < 0 || post_s < 0 || !(imagery_s > 0)) fail("epoch durations must be non-negative, imagery positive");
    if (samples() < 4) fail("epoch too short");
    if (!(noise_rms_uv >= 0) || !(line_amplitude_uv >= 0) || !(effect_gain >= 0)) fail("amplitudes must be >= 0");
    if (!(ceiling_uv > 0)) fail("ceiling must be positive");
    if (!std::isfinite(noise_exponent)) fail("noise exponent must be finite");
    if (line_amplitude_uv > 0 && 60.0 >= fs / 2) fail("60 Hz line component is above Nyquist");

    const auto& names = channel_names.empty() ? std::vector<std::string>(montage::default_channel_names().begin(),
                                                                         montage::default_channel_names().end())
                                              : channel_names;
    std::set<std::string> known;
    for (const auto& n : names) {
        if (n.empty() || n.size() > eegio::kChannelNameBytes) fail("bad channel name '" + n + "'");
        if (!known.insert(normalize(n)).second) fail("duplicate channel '" + n + "'");
    }
    for (const auto& e : effects) {
        if (!(e.amplitude_uv >= 0)) fail("effect amplitude must be >= 0");
        if (!(e.bandwidth_hz >= 0)) fail("effect bandwidth must be >= 0");
        if (!(e.center_hz - e.bandwidth_hz / 2 > 0) || !(e.center_hz + e.bandwidth_hz / 2 < fs / 2))
            fail("effect band must lie inside (0, fs/2)");
        if (e.classes.empty() || e.channels.empty()) fail("effect needs classes and channels");
        for (const auto& c : e.classes) class_index(c);
        for (const auto& c : e.channels)
            if (!known.count(normalize(c))) fail("effect channel '" + c + "' is not a recording channel");
    }
}

eegio::EpochSet generate(const SynthConfig& config) {
    config.validate();
    eegio::EpochSet set;
    if (config.channel_names.empty())
        set.channel_names.assign(montage::default_channel_names().begin(), montage::default_channel_names().end());
    else
        set.channel_names = config.channel_names;
    const std::size_t C = set.channel_names.size();
    const std::size_t N = config.samples();
    const std::size_t n_classes = kClassNames.size();
    set.n_trials = config.n_trials_per_class * n_classes;
    set.n_channels = C;
    set.n_samples = N;
    set.fs = static_cast<float>(config.fs);
    set.labels.resize(set.n_trials);
    set.data.assign(set.n_trials * C * N, 0.0f);

    // effect_channels[e] = recording channel indices, effect_classes[e][label]
    std::vector<std::vector<std::size_t>> effect_channels;
    std::vector<std::array<bool, 4>> effect_classes;
    for (const auto& e : config.effects) {
        std::vector<std::size_t> idx;
        for (const auto& name : e.channels)
            for (std::size_t c = 0; c < C; ++c)
                if (normalize(set.channel_names[c]) == normalize(name)) idx.push_back(c);
        effect_channels.push_back(idx);
        std::array<bool, 4> cls{};
        for (const auto& c : e.classes) cls[class_index(c)] = true;
        effect_classes.push_back(cls);
    }

    NoiseSynth noise(N, config.fs, config.noise_exponent, config.noise_rms_uv);
    const std::size_t imagery_begin = static_cast<std::size_t>(std::llround(config.pre_s * config.fs));
    const std::size_t imagery_len = static_cast<std::size_t>(std::llround(config.imagery_s * config.fs)) + 1;
    const double two_pi = 2.0 * std::numbers::pi;
    std::vector<double> trace(N);

    for (std::size_t trial = 0; trial < set.n_trials; ++trial) {
        const std::size_t label = trial % n_classes;
        set.labels[trial] = static_cast<std::uint8_t>(label);
        const std::uint64_t trial_key = derive_key(config.seed, trial);

        CounterRng line_rng(derive_key(trial_key, kLineStream));
        const double line_phase = line_rng.uniform(0.0, two_pi);

        for (std::size_t ch = 0; ch < C; ++ch) {
            const std::uint64_t ch_key = derive_key(trial_key, ch);
            std::fill(trace.begin(), trace.end(), 0.0);
            if (config.noise_rms_uv > 0) {
                CounterRng rng(derive_key(ch_key, kNoiseStream));
                noise.fill(rng, trace.data());
            }
            if (config.line_amplitude_uv > 0)
                for (std::size_t i = 0; i < N; ++i)
                    trace[i] += config.line_amplitude_uv *
                                std::sin(two_pi * 60.0 * static_cast<double>(i) / config.fs + line_phase);

            for (std::size_t e = 0; e < config.effects.size(); ++e) {
                const auto& eff = config.effects[e];
                if (!effect_classes[e][label]) continue;
                if (std::find(effect_channels[e].begin(), effect_channels[e].end(), ch) == effect_channels[e].end())
                    continue;
                const double amp = eff.amplitude_uv * config.effect_gain;
                CounterRng rng(derive_key(ch_key, kEffectStream + 16 * e));
                const double freq = eff.center_hz + rng.uniform(-0.5, 0.5) * eff.bandwidth_hz;
                const double phase = rng.uniform(0.0, two_pi);
                const double frac = rng.uniform(0.5, 1.0);
                const std::size_t len = std::max<std::size_t>(
                    2, static_cast<std::size_t>(std::llround(frac * static_cast<double>(imagery_len))));
                const std::size_t start = imagery_begin + rng.below(imagery_len - len + 1);
                if (amp == 0) continue;
                for (std::size_t i = 0; i < len; ++i) {
                    const double w = 0.5 - 0.5 * std::cos(two_pi * static_cast<double>(i) / static_cast<double>(len - 1));
                    const double t = static_cast<double>(start + i) / config.fs;
                    trace[start + i] += amp * w * std::sin(two_pi * freq * t + phase);
                }
            }

            auto dst = set.channel(trial, ch);
            for (std::size_t i = 0; i < N; ++i)
                dst[i] = static_cast<float>(std::clamp(trace[i], -config.ceiling_uv, config.ceiling_uv));
        }
    }
    return set;
}

SynthConfig reference_template() {
    SynthConfig cfg;
    cfg.effects = {
        {{"split", "spread out", "fall in"}, {"O1", "Oz", "O2"}, 10.0, 2.0, 12.0},
        {{"split", "spread out"}, {"Fp1", "Fp2"}, 20.0, 4.0, 8.0},
        {{"split"}, {"PO4", "PO8"}, 11.0, 2.0, 10.0},
        {{"hovering"}, {"AF7", "AF8"}, 9.5, 1.0, 10.0},
    };
    return cfg;
}

std::vector<std::string> planted_channels(const SynthConfig& config, std::size_t class_a, std::size_t class_b,
                                          double lo_hz, double hi_hz) {
    std::set<std::string> a, b;
    for (const auto& e : config.effects) {
        if (!overlaps(e, lo_hz, hi_hz) || e.amplitude_uv * config.effect_gain <= 0) continue;
        for (const auto& cls : e.classes) {
            const std::size_t k = class_index(cls);
            if (k == class_a) a.insert(e.channels.begin(), e.channels.end());
            if (k == class_b) b.insert(e.channels.begin(), e.channels.end());
        }
    }
    std::vector<std::string> out;
    std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

} // namespace ads3d::synth
