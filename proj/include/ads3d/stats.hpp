#pragma once

#include "ads3d/eegio.hpp"
#include "ads3d/montage.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ads3d::stats {

struct BandSpec {
    std::string name;
    double lo = 0;
    double hi = 0;

    /// Throws "bad_band" unless 0 < lo < hi <= fs / 2.
    void validate(double fs) const;
};

BandSpec alpha_band(); // 8-13 Hz
BandSpec beta_band();  // 13-30 Hz
BandSpec both_bands(); // 8-30 Hz
/// "alpha", "beta" or "both"; throws "bad_band".
BandSpec band_named(const std::string& name);

struct Spectrum {
    std::vector<double> freqs;
    std::vector<double> psd; ///< one-sided density, units^2 / Hz
};

/// Welch estimate: periodic Hann window of `window` samples, `overlap` samples
/// shared by consecutive segments, per-segment mean removal, density scaling.
/// Throws "window_too_long" when window > x.size().
Spectrum welch_psd(std::span<const double> x, double fs, std::size_t window, std::size_t overlap);
/// One-second segments with 50% overlap.
Spectrum welch_psd(std::span<const double> x, double fs);

/// Trapezoidal integral of the linear interpolant of psd over [band.lo, band.hi].
double band_power(std::span<const double> psd, std::span<const double> freqs, const BandSpec& band);
double band_power(const Spectrum& s, const BandSpec& band);

struct TTest {
    double t = 0;
    double p = 1;
    std::size_t df = 0;
};

/// Two-sided paired t-test on a - b. Throws "too_few" for n < 2, "length_mismatch",
/// and "degenerate_contrast" when every difference is equal (including a == b).
TTest paired_ttest(std::span<const double> a, std::span<const double> b);

/// Two-sided p-value of Student's t with `df` degrees of freedom.
double student_t_two_sided(double t, double df);
/// Upper-tail probability of the F distribution.
double f_upper_tail(double f, double df1, double df2);

/// p'_i = min(1, m * p_i); m defaults to p.size().
std::vector<double> bonferroni(std::span<const double> p, std::size_t m = 0);

struct AnovaEffect {
    double ss = 0;
    double df = 0;
    double ms = 0;
    double f = 0;
    double p = 1;
};

struct AnovaTable {
    AnovaEffect klass, channel, interaction, error;
    double ss_total = 0;
    double df_total = 0;
    /// MS_error == 0: F of a nonzero effect is +inf with p = 0.
    bool degenerate = false;
};

/// Balanced fixed-effects two-way ANOVA with interaction on
/// values[class][channel][replicate]. Throws "unbalanced" or "too_few".
AnovaTable two_way_anova(const std::vector<std::vector<std::vector<double>>>& values);

struct ContrastOptions {
    double alpha = 0.01;
    double window_s = 1.0;
    bool log_power = false;
};

struct StatsReport {
    std::size_t class_a = 0;
    std::size_t class_b = 0;
    BandSpec band;
    double alpha = 0.01;
    std::size_t n_pairs = 0;
    bool log_power = false;
    std::vector<std::string> channel_names;
    std::vector<double> t;           ///< sign convention: class_a - class_b
    std::vector<double> p_raw;
    std::vector<double> p_corrected;
    std::vector<bool> mask;          ///< p_corrected < alpha
    std::vector<bool> degenerate;    ///< constant difference; reported as t = 0, p = 1
    std::vector<double> mean_density_a; ///< mean band power / band width, uV^2/Hz
    std::vector<double> mean_density_b;

    std::vector<std::string> significant_channels() const;
};

/// Band power per trial and channel, layout [trial][channel].
std::vector<double> trial_band_power(const eegio::EpochSet& epochs, const BandSpec& band, double window_s = 1.0,
                                     bool log_power = false);

/// Per-channel paired t-test of band power between two classes with Bonferroni
/// correction over channels. Trials of each class are paired in index order and
/// n = min(count_a, count_b). Throws "class_absent" or "too_few".
StatsReport contrast_topography(const eegio::EpochSet& epochs, std::size_t class_a, std::size_t class_b,
                                const BandSpec& band, const ContrastOptions& options = {});

/// Line-oriented text summary (one row per channel).
std::string format_report(const StatsReport& report);

/// Grey level of t under the linear map [-tmax, tmax] -> [0, 255], clamped.
unsigned char grey_level(double t, double tmax);

struct TopomapFiles {
    std::filesystem::path t_csv, mask_csv, pgm;
};

/// Writes <prefix>_t.csv, <prefix>_mask.csv (grid rows, 9 significant digits)
/// and <prefix>.pgm (P5). tmax <= 0 uses max |t|, or 1 when every t is 0.
TopomapFiles export_topomap(const StatsReport& report, const montage::MontageMap& map,
                            const std::filesystem::path& prefix, double tmax = 0);

/// CSV text of a side x side grid, values printed with %.9g.
std::string grid_csv(std::span<const double> grid, std::size_t side);
std::vector<double> parse_grid_csv(const std::string& text);

} // namespace ads3d::stats
