#include "ads3d/stats.hpp"

#include "ads3d/error.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <fftw3.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

namespace ads3d::stats {

void BandSpec::validate(double fs) const {
    if (!(lo > 0) || !(hi > lo) || !(hi <= fs / 2))
        throw Error("bad_band", "band '" + name + "' must satisfy 0 < lo < hi <= fs/2");
}

BandSpec alpha_band() { return {"alpha", 8.0, 13.0}; }
BandSpec beta_band() { return {"beta", 13.0, 30.0}; }
BandSpec both_bands() { return {"both", 8.0, 30.0}; }

BandSpec band_named(const std::string& name) {
    if (name == "alpha") return alpha_band();
    if (name == "beta") return beta_band();
    if (name == "both") return both_bands();
    throw Error("bad_band", "unknown band '" + name + "' (alpha, beta, both)");
}

Spectrum welch_psd(std::span<const double> x, double fs, std::size_t window, std::size_t overlap) {
    if (window == 0 || window > x.size())
        throw Error("window_too_long", "window of " + std::to_string(window) + " samples for a signal of " +
                                           std::to_string(x.size()));
    if (overlap >= window) throw Error("bad_overlap", "overlap must be smaller than the window");
    const std::size_t step = window - overlap;
    const std::size_t segments = 1 + (x.size() - window) / step;
    const std::size_t bins = window / 2 + 1;

    std::vector<double> w(window);
    double wss = 0;
    for (std::size_t i = 0; i < window; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(window));
        wss += w[i] * w[i];
    }

    double* in = fftw_alloc_real(window);
    fftw_complex* out = fftw_alloc_complex(bins);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(window), in, out, FFTW_ESTIMATE);

    Spectrum s;
    s.freqs.resize(bins);
    s.psd.assign(bins, 0.0);
    for (std::size_t k = 0; k < bins; ++k) s.freqs[k] = static_cast<double>(k) * fs / static_cast<double>(window);
    for (std::size_t seg = 0; seg < segments; ++seg) {
        const double* p = x.data() + seg * step;
        double mean = 0;
        for (std::size_t i = 0; i < window; ++i) mean += p[i];
        mean /= static_cast<double>(window);
        for (std::size_t i = 0; i < window; ++i) in[i] = (p[i] - mean) * w[i];
        fftw_execute(plan);
        for (std::size_t k = 0; k < bins; ++k) s.psd[k] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
    }
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);

    const double norm = 1.0 / (fs * wss * static_cast<double>(segments));
    for (std::size_t k = 0; k < bins; ++k) {
        const bool edge = k == 0 || (window % 2 == 0 && k == bins - 1);
        s.psd[k] *= norm * (edge ? 1.0 : 2.0);
    }
    return s;
}

Spectrum welch_psd(std::span<const double> x, double fs) {
    const auto window = static_cast<std::size_t>(std::llround(fs));
    return welch_psd(x, fs, window, window / 2);
}

double band_power(std::span<const double> psd, std::span<const double> freqs, const BandSpec& band) {
    if (psd.size() != freqs.size() || psd.size() < 2) throw Error("length_mismatch", "psd and freqs must match");
    const double lo = std::max(band.lo, freqs.front());
    const double hi = std::min(band.hi, freqs.back());
    if (!(hi > lo)) return 0.0;
    auto value_at = [&](std::size_t k, double f) {
        const double t = (f - freqs[k]) / (freqs[k + 1] - freqs[k]);
        return psd[k] + t * (psd[k + 1] - psd[k]);
    };
    double total = 0;
    for (std::size_t k = 0; k + 1 < freqs.size(); ++k) {
        const double a = std::max(lo, freqs[k]);
        const double b = std::min(hi, freqs[k + 1]);
        if (b <= a) continue;
        total += 0.5 * (value_at(k, a) + value_at(k, b)) * (b - a);
    }
    return total;
}

double band_power(const Spectrum& s, const BandSpec& band) { return band_power(s.psd, s.freqs, band); }

double student_t_two_sided(double t, double df) {
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return 0.0;
    return boost::math::ibeta(df / 2, 0.5, df / (df + t * t));
}

double f_upper_tail(double f, double df1, double df2) {
    if (std::isinf(f)) return 0.0;
    if (f <= 0) return 1.0;
    return boost::math::ibeta(df2 / 2, df1 / 2, df2 / (df2 + df1 * f));
}

TTest paired_ttest(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error("length_mismatch", "paired samples must have equal length");
    const std::size_t n = a.size();
    if (n < 2) throw Error("too_few", "paired t-test needs n >= 2");
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    if (std::all_of(d.begin(), d.end(), [&](double v) { return v == d[0]; }))
        throw Error("degenerate_contrast", "all paired differences are equal");
    double mean = 0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    TTest r;
    r.df = n - 1;
    r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    r.p = student_t_two_sided(r.t, static_cast<double>(r.df));
    return r;
}

std::vector<double> bonferroni(std::span<const double> p, std::size_t m) {
    if (m == 0) m = p.size();
    std::vector<double> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = std::min(1.0, static_cast<double>(m) * p[i]);
    return out;
}

AnovaTable two_way_anova(const std::vector<std::vector<std::vector<double>>>& values) {
    const std::size_t A = values.size();
    if (A < 2) throw Error("too_few", "ANOVA needs at least two classes");
    const std::size_t B = values[0].size();
    if (B < 2) throw Error("too_few", "ANOVA needs at least two channels");
    const std::size_t R = values[0][0].size();
    for (const auto& row : values) {
        if (row.size() != B) throw Error("unbalanced", "every class needs the same channels");
        for (const auto& cell : row)
            if (cell.size() != R) throw Error("unbalanced", "every cell needs the same number of replicates");
    }
    if (R < 2) throw Error("too_few", "ANOVA needs at least two replicates per cell");

    const double n = static_cast<double>(A * B * R);
    double grand = 0;
    std::vector<double> mean_a(A, 0.0), mean_b(B, 0.0), mean_ab(A * B, 0.0);
    for (std::size_t i = 0; i < A; ++i)
        for (std::size_t j = 0; j < B; ++j)
            for (double v : values[i][j]) {
                grand += v;
                mean_a[i] += v;
                mean_b[j] += v;
                mean_ab[i * B + j] += v;
            }
    grand /= n;
    for (double& m : mean_a) m /= static_cast<double>(B * R);
    for (double& m : mean_b) m /= static_cast<double>(A * R);
    for (double& m : mean_ab) m /= static_cast<double>(R);

    AnovaTable t;
    for (std::size_t i = 0; i < A; ++i) t.klass.ss += static_cast<double>(B * R) * (mean_a[i] - grand) * (mean_a[i] - grand);
    for (std::size_t j = 0; j < B; ++j)
        t.channel.ss += static_cast<double>(A * R) * (mean_b[j] - grand) * (mean_b[j] - grand);
    for (std::size_t i = 0; i < A; ++i)
        for (std::size_t j = 0; j < B; ++j) {
            const double inter = mean_ab[i * B + j] - mean_a[i] - mean_b[j] + grand;
            t.interaction.ss += static_cast<double>(R) * inter * inter;
            for (double v : values[i][j]) {
                t.error.ss += (v - mean_ab[i * B + j]) * (v - mean_ab[i * B + j]);
                t.ss_total += (v - grand) * (v - grand);
            }
        }
    t.klass.df = static_cast<double>(A - 1);
    t.channel.df = static_cast<double>(B - 1);
    t.interaction.df = static_cast<double>((A - 1) * (B - 1));
    t.error.df = static_cast<double>(A * B * (R - 1));
    t.df_total = n - 1;
    for (AnovaEffect* e : {&t.klass, &t.channel, &t.interaction, &t.error}) e->ms = e->ss / e->df;
    t.degenerate = t.error.ms == 0;
    for (AnovaEffect* e : {&t.klass, &t.channel, &t.interaction}) {
        if (e->ss == 0) {
            e->f = 0;
            e->p = 1;
        } else if (t.degenerate) {
            e->f = std::numeric_limits<double>::infinity();
            e->p = 0;
        } else {
            e->f = e->ms / t.error.ms;
            e->p = f_upper_tail(e->f, e->df, t.error.df);
        }
    }
    return t;
}

std::vector<std::string> StatsReport::significant_channels() const {
    std::vector<std::string> out;
    for (std::size_t c = 0; c < mask.size(); ++c)
        if (mask[c]) out.push_back(channel_names[c]);
    return out;
}

std::vector<double> trial_band_power(const eegio::EpochSet& epochs, const BandSpec& band, double window_s,
                                     bool log_power) {
    band.validate(epochs.fs);
    const double fs = epochs.fs;
    const auto window = static_cast<std::size_t>(std::llround(window_s * fs));
    std::vector<double> out(epochs.n_trials * epochs.n_channels);
    std::vector<double> trace(epochs.n_samples);
    for (std::size_t tr = 0; tr < epochs.n_trials; ++tr)
        for (std::size_t ch = 0; ch < epochs.n_channels; ++ch) {
            auto src = epochs.channel(tr, ch);
            std::copy(src.begin(), src.end(), trace.begin());
            const double p = band_power(welch_psd(trace, fs, window, window / 2), band);
            out[tr * epochs.n_channels + ch] = log_power ? std::log(std::max(p, 1e-300)) : p;
        }
    return out;
}

StatsReport contrast_topography(const eegio::EpochSet& epochs, std::size_t class_a, std::size_t class_b,
                                const BandSpec& band, const ContrastOptions& options) {
    epochs.validate();
    std::vector<std::size_t> ta, tb;
    for (std::size_t i = 0; i < epochs.n_trials; ++i) {
        if (epochs.labels[i] == class_a) ta.push_back(i);
        if (epochs.labels[i] == class_b) tb.push_back(i);
    }
    if (ta.empty() || tb.empty()) throw Error("class_absent", "both classes must be present in the epoch set");
    const std::size_t n = std::min(ta.size(), tb.size());
    if (n < 2) throw Error("too_few", "a contrast needs at least two trials per class");
    ta.resize(n);
    tb.resize(n);

    const std::vector<double> power = trial_band_power(epochs, band, options.window_s, options.log_power);
    const std::size_t C = epochs.n_channels;
    StatsReport r;
    r.class_a = class_a;
    r.class_b = class_b;
    r.band = band;
    r.alpha = options.alpha;
    r.n_pairs = n;
    r.log_power = options.log_power;
    r.channel_names = epochs.channel_names;
    r.t.assign(C, 0.0);
    r.p_raw.assign(C, 1.0);
    r.degenerate.assign(C, false);
    r.mean_density_a.assign(C, 0.0);
    r.mean_density_b.assign(C, 0.0);
    std::vector<double> a(n), b(n);
    for (std::size_t ch = 0; ch < C; ++ch) {
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = power[ta[i] * C + ch];
            b[i] = power[tb[i] * C + ch];
            r.mean_density_a[ch] += a[i];
            r.mean_density_b[ch] += b[i];
        }
        const double scale = static_cast<double>(n) * (band.hi - band.lo);
        r.mean_density_a[ch] /= scale;
        r.mean_density_b[ch] /= scale;
        try {
            const TTest tt = paired_ttest(a, b);
            r.t[ch] = tt.t;
            r.p_raw[ch] = tt.p;
        } catch (const Error& e) {
            if (e.code() != "degenerate_contrast") throw;
            r.degenerate[ch] = true;
        }
    }
    r.p_corrected = bonferroni(r.p_raw, C);
    r.mask.resize(C);
    for (std::size_t ch = 0; ch < C; ++ch) r.mask[ch] = r.p_corrected[ch] < options.alpha;
    return r;
}

std::string format_report(const StatsReport& r) {
    std::ostringstream os;
    char buf[256];
    os << "# contrast: class " << r.class_a << " - class " << r.class_b << ", band " << r.band.name << " ("
       << r.band.lo << "-" << r.band.hi << " Hz)\n";
    os << "# replicates: trials of one subject, paired in trial order, n = " << r.n_pairs << "\n";
    os << "# bonferroni over " << r.t.size() << " channels, alpha = " << r.alpha
       << (r.log_power ? ", log band power" : "") << "\n";
    os << "channel,t,p_raw,p_corrected,significant,degenerate,mean_density_a,mean_density_b\n";
    for (std::size_t c = 0; c < r.t.size(); ++c) {
        std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g,%.9g,%d,%d,%.9g,%.9g\n", r.channel_names[c].c_str(), r.t[c],
                      r.p_raw[c], r.p_corrected[c], r.mask[c] ? 1 : 0, r.degenerate[c] ? 1 : 0, r.mean_density_a[c],
                      r.mean_density_b[c]);
        os << buf;
    }
    return os.str();
}

unsigned char grey_level(double t, double tmax) {
    const double v = 127.5 + 127.5 * t / tmax;
    return static_cast<unsigned char>(std::clamp<long long>(std::llround(v), 0, 255));
}

std::string grid_csv(std::span<const double> grid, std::size_t side) {
    std::string out;
    char buf[64];
    for (std::size_t r = 0; r < side; ++r) {
        for (std::size_t c = 0; c < side; ++c) {
            std::snprintf(buf, sizeof buf, "%.9g", grid[r * side + c]);
            if (c) out += ',';
            out += buf;
        }
        out += '\n';
    }
    return out;
}

std::vector<double> parse_grid_csv(const std::string& text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find_first_of(",\n", pos);
        if (end == std::string::npos) end = text.size();
        if (end > pos) {
            double v = 0;
            auto res = std::from_chars(text.data() + pos, text.data() + end, v);
            if (res.ec != std::errc() || res.ptr != text.data() + end)
                throw Error("bad_csv", "cannot parse '" + text.substr(pos, end - pos) + "'");
            out.push_back(v);
        }
        pos = end + 1;
    }
    return out;
}

TopomapFiles export_topomap(const StatsReport& report, const montage::MontageMap& map,
                            const std::filesystem::path& prefix, double tmax) {
    const std::vector<std::size_t> cells = map.resolve(report.channel_names);
    const std::size_t side = map.side();
    std::vector<double> tgrid(cells.size()), mgrid(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        tgrid[i] = report.t[cells[i]];
        mgrid[i] = report.mask[cells[i]] ? 1.0 : 0.0;
    }
    if (!(tmax > 0)) {
        tmax = 0;
        for (double v : tgrid)
            if (std::isfinite(v)) tmax = std::max(tmax, std::abs(v));
        if (tmax == 0) tmax = 1;
    }

    TopomapFiles files;
    files.t_csv = prefix.string() + "_t.csv";
    files.mask_csv = prefix.string() + "_mask.csv";
    files.pgm = prefix.string() + ".pgm";
    eegio::write_text_atomic(files.t_csv, grid_csv(tgrid, side));
    eegio::write_text_atomic(files.mask_csv, grid_csv(mgrid, side));

    const std::string header = "P5\n" + std::to_string(side) + " " + std::to_string(side) + "\n255\n";
    std::vector<std::uint8_t> pgm(header.begin(), header.end());
    for (double v : tgrid) pgm.push_back(grey_level(v, tmax));
    eegio::write_file_atomic(files.pgm, pgm);
    return files;
}

} // namespace ads3d::stats
