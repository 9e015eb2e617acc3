#include "ads3d/montage.hpp"
#include "ads3d/stats.hpp"
#include "ads3d/synthgen.hpp"
#include "helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ads3d;
using namespace ads3d::synth;
using testutil::error_code;

namespace {

SynthConfig small_template(std::size_t per_class = 4) {
    auto cfg = reference_template();
    cfg.n_trials_per_class = per_class;
    return cfg;
}

std::size_t channel_index(const eegio::EpochSet& s, const std::string& name) {
    for (std::size_t c = 0; c < s.n_channels; ++c)
        if (s.channel_names[c] == name) return c;
    throw std::runtime_error("missing channel " + name);
}

double mean_band_power(const eegio::EpochSet& s, std::size_t label, std::size_t ch, const stats::BandSpec& band) {
    double sum = 0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < s.n_trials; ++t) {
        if (s.labels[t] != label) continue;
        const auto x = s.channel(t, ch);
        const std::vector<double> trace(x.begin(), x.end());
        sum += stats::band_power(stats::welch_psd(trace, s.fs), band);
        ++n;
    }
    return sum / static_cast<double>(n);
}

} // namespace

TEST(Synth, ZeroAmplitudesGiveZeros) {
    auto cfg = small_template(2);
    cfg.noise_rms_uv = 0;
    cfg.line_amplitude_uv = 0;
    for (auto& e : cfg.effects) e.amplitude_uv = 0;
    const auto s = generate(cfg);
    for (float v : s.data) ASSERT_EQ(v, 0.0f);
    cfg = small_template(2);
    cfg.noise_rms_uv = 0;
    cfg.line_amplitude_uv = 0;
    cfg.effect_gain = 0;
    for (float v : generate(cfg).data) ASSERT_EQ(v, 0.0f);
}

TEST(Synth, ShapeLabelsAndNames) {
    const auto s = generate(small_template(3));
    EXPECT_EQ(s.n_trials, 12u);
    EXPECT_EQ(s.n_channels, 64u);
    EXPECT_EQ(s.n_samples, 2501u);
    EXPECT_EQ(s.fs, 500.0f);
    for (std::size_t t = 0; t < s.n_trials; ++t) EXPECT_EQ(s.labels[t], t % 4);
    EXPECT_TRUE(std::equal(s.channel_names.begin(), s.channel_names.end(),
                           montage::default_channel_names().begin()));
}

TEST(Synth, DeterministicPerSeed) {
    auto cfg = small_template(2);
    const auto a = generate(cfg), b = generate(cfg);
    EXPECT_EQ(eegio::encode_epochset(a), eegio::encode_epochset(b));
    cfg.seed = 2;
    EXPECT_NE(generate(cfg).data, a.data);
}

TEST(Synth, BoundedByCeiling) {
    auto cfg = small_template(2);
    cfg.ceiling_uv = 6;
    const auto s = generate(cfg);
    std::size_t clipped = 0;
    for (float v : s.data) {
        ASSERT_LE(std::abs(v), 6.0f);
        clipped += std::abs(v) == 6.0f;
    }
    EXPECT_GT(clipped, 0u);
    for (float v : generate(small_template(2)).data) ASSERT_LE(std::abs(v), 500.0f);
}

TEST(Synth, NoiseRmsMatchesConfiguration) {
    auto cfg = small_template(2);
    cfg.effects.clear();
    cfg.line_amplitude_uv = 0;
    const auto s = generate(cfg);
    double ss = 0;
    for (float v : s.data) ss += static_cast<double>(v) * v;
    EXPECT_NEAR(std::sqrt(ss / static_cast<double>(s.data.size())), cfg.noise_rms_uv, 0.05 * cfg.noise_rms_uv);
}

TEST(Synth, OccipitalAlphaRatioMatchesPlantedPower) {
    const auto cfg = reference_template();
    const auto s = generate(cfg);
    const std::size_t o1 = channel_index(s, "O1");
    const auto band = stats::alpha_band();

    // Background: a 1/f spectrum normalized to noise_rms puts rms^2 * ln(hi/lo) / H
    // into [lo, hi], where H is the harmonic sum over the positive frequency bins.
    const std::size_t n = cfg.samples();
    double harmonic = 0;
    for (std::size_t k = 1; k <= n / 2; ++k) harmonic += 1.0 / static_cast<double>(k);
    const double background = cfg.noise_rms_uv * cfg.noise_rms_uv * std::log(band.hi / band.lo) / harmonic;
    // Burst: a Hann-windowed sinusoid of amplitude A over L samples has energy
    // A^2 / 2 * 3/8 * L, and L is uniform over half to all of the imagery period.
    const double amp = cfg.effects[0].amplitude_uv * cfg.effect_gain;
    const double imagery = cfg.imagery_s * cfg.fs + 1;
    const double burst = amp * amp / 2 * 3.0 / 8 * 0.75 * imagery / static_cast<double>(n);
    const double planted_ratio = (background + burst) / background;

    const double measured = mean_band_power(s, class_index("split"), o1, band) /
                            mean_band_power(s, class_index("hovering"), o1, band);
    EXPECT_NEAR(measured, planted_ratio, 0.2 * planted_ratio) << "planted " << planted_ratio;
    EXPECT_GT(planted_ratio, 2.0);
}

TEST(Synth, TemplateContents) {
    const auto cfg = reference_template();
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_EQ(cfg.n_trials_per_class, 50u);
    EXPECT_EQ(kClassNames[0], "split");
    EXPECT_EQ(kClassNames[1], "spread out");
    EXPECT_EQ(kClassNames[2], "fall in");
    EXPECT_EQ(kClassNames[3], "hovering");
    bool occipital_alpha = false;
    for (const auto& e : cfg.effects) {
        const bool occipital = std::find(e.channels.begin(), e.channels.end(), "Oz") != e.channels.end();
        if (occipital && e.center_hz >= 8 && e.center_hz <= 13) {
            occipital_alpha = true;
            EXPECT_EQ(std::find(e.classes.begin(), e.classes.end(), "hovering"), e.classes.end());
        }
    }
    EXPECT_TRUE(occipital_alpha);
    EXPECT_EQ(planted_channels(cfg, 0, 3, 8, 13),
              (std::vector<std::string>{"AF7", "AF8", "O1", "O2", "Oz", "PO4", "PO8"}));
    EXPECT_EQ(planted_channels(cfg, 1, 2, 13, 30), (std::vector<std::string>{"Fp1", "Fp2"}));
}

TEST(Synth, ClassIndexAndValidation) {
    EXPECT_EQ(class_index("spread_out"), 1u);
    EXPECT_EQ(class_index("Fall In"), 2u);
    EXPECT_EQ(error_code([] { class_index("swirl"); }), "unknown_class");

    auto bad = small_template();
    bad.effects[0].center_hz = 300;
    EXPECT_EQ(error_code([&] { generate(bad); }), "bad_config");
    bad = small_template();
    bad.effects[0].channels = {"Xx9"};
    EXPECT_EQ(error_code([&] { generate(bad); }), "bad_config");
    bad = small_template();
    bad.effects[0].amplitude_uv = -1;
    EXPECT_EQ(error_code([&] { generate(bad); }), "bad_config");
    bad = small_template();
    bad.fs = 100;
    EXPECT_EQ(error_code([&] { generate(bad); }), "bad_config");
}
