#include "ads3d/dsp.hpp"

#include "ads3d/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ads3d::dsp {
namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

cd bilinear(cd s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

Biquad section_from_poles(cd p1, cd p2) {
    // Zeros at z = +1 and z = -1: numerator 1 - z^-2.
    Biquad q;
    q.b0 = 1.0;
    q.b1 = 0.0;
    q.b2 = -1.0;
    q.a1 = -(p1 + p2).real();
    q.a2 = (p1 * p2).real();
    return q;
}

// One direct-form-II-transposed pass over `x` in place. When `steady` is set
// the section states start at the step steady state scaled by x[0].
void sos_pass(const BiquadCascade& f, std::vector<double>& x, bool steady) {
    if (x.empty()) return;
    double scale = steady ? x[0] : 0.0;
    for (const auto& s : f.sections) {
        double z1 = 0, z2 = 0;
        if (steady) {
            const double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
            z2 = (s.b2 - s.a2 * dc) * scale;
            z1 = (dc - s.b0) * scale;
            scale *= dc;
        }
        for (double& v : x) {
            const double in = v;
            const double y = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * y + z2;
            z2 = s.b2 * in - s.a2 * y;
            v = y;
        }
    }
}

std::vector<double> forward_backward(const BiquadCascade& f, std::span<const double> x) {
    const std::size_t n = x.size();
    const std::size_t pad = f.pad_length();
    std::vector<double> ext(n + 2 * pad);
    for (std::size_t i = 0; i < pad; ++i) {
        ext[i] = 2.0 * x[0] - x[pad - i];
        ext[n + pad + i] = 2.0 * x[n - 1] - x[n - 2 - i];
    }
    std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));
    sos_pass(f, ext, true);
    std::reverse(ext.begin(), ext.end());
    sos_pass(f, ext, true);
    std::reverse(ext.begin(), ext.end());
    return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

} // namespace

std::complex<double> Biquad::response(double omega) const {
    const cd zi = std::polar(1.0, -omega);
    const cd zi2 = zi * zi;
    return (b0 + b1 * zi + b2 * zi2) / (1.0 + a1 * zi + a2 * zi2);
}

bool Biquad::stable() const {
    // Roots of z^2 + a1 z + a2 strictly inside the unit circle.
    const cd disc = std::sqrt(cd(a1 * a1 - 4.0 * a2, 0.0));
    const cd r1 = (-a1 + disc) / 2.0;
    const cd r2 = (-a1 - disc) / 2.0;
    return std::abs(r1) < 1.0 && std::abs(r2) < 1.0;
}

std::complex<double> BiquadCascade::response(double hz) const {
    const double omega = 2.0 * kPi * hz / description.fs;
    cd h = 1.0;
    for (const auto& s : sections) h *= s.response(omega);
    return h;
}

BiquadCascade design_butter_bandpass(double fs, double low_hz, double high_hz, int order) {
    if (!(fs > 0) || !(low_hz > 0) || !(low_hz < high_hz) || !(high_hz < fs / 2))
        throw Error("bad_band", "band edges must satisfy 0 < low < high < fs/2");
    if (order < 1) throw Error("bad_band", "filter order must be positive");

    const double w1 = 2.0 * fs * std::tan(kPi * low_hz / fs);
    const double w2 = 2.0 * fs * std::tan(kPi * high_hz / fs);
    const double bw = w2 - w1;
    const double w0sq = w1 * w2;

    BiquadCascade out;
    out.description = {"butter-bandpass", order, low_hz, high_hz, fs};

    // Lowpass prototype poles in the upper half plane (and the real pole for odd order).
    for (int k = 0; k < (order + 1) / 2; ++k) {
        const cd p = std::polar(1.0, kPi * (2.0 * k + order + 1) / (2.0 * order));
        const cd half = p * bw / 2.0;
        const cd root = std::sqrt(half * half - w0sq);
        const cd s1 = half + root;
        const cd s2 = half - root;
        if (2 * k + 1 == order) {
            // Real prototype pole: its two bandpass images form one section.
            out.sections.push_back(section_from_poles(bilinear(s1, fs), bilinear(s2, fs)));
        } else {
            out.sections.push_back(section_from_poles(bilinear(s1, fs), std::conj(bilinear(s1, fs))));
            out.sections.push_back(section_from_poles(bilinear(s2, fs), std::conj(bilinear(s2, fs))));
        }
    }

    // Unit gain at the prewarped geometric center, shared across sections.
    const double center = fs / kPi * std::atan(std::sqrt(w0sq) / (2.0 * fs));
    const double omega = 2.0 * kPi * center / fs;
    for (auto& s : out.sections) {
        const double g = 1.0 / std::abs(s.response(omega));
        s.b0 *= g;
        s.b1 *= g;
        s.b2 *= g;
    }
    return out;
}

BiquadCascade design_notch(double f0_hz, double q, double fs) {
    if (!(fs > 2.0 * f0_hz) || !(f0_hz > 0) || !(q > 0))
        throw Error("bad_notch", "notch frequency must lie in (0, fs/2)");
    const double w0 = 2.0 * kPi * f0_hz / fs;
    const double beta = std::tan(w0 / q / 2.0);
    const double gain = 1.0 / (1.0 + beta);
    Biquad s;
    s.b0 = gain;
    s.b1 = -2.0 * gain * std::cos(w0);
    s.b2 = gain;
    s.a1 = -2.0 * gain * std::cos(w0);
    s.a2 = 2.0 * gain - 1.0;
    BiquadCascade out;
    out.sections.push_back(s);
    out.description = {"notch", 2, f0_hz, f0_hz, fs};
    return out;
}

std::vector<double> lfilter(const BiquadCascade& filter, std::span<const double> x) {
    std::vector<double> y(x.begin(), x.end());
    sos_pass(filter, y, false);
    return y;
}

std::vector<double> filtfilt(const BiquadCascade& filter, std::span<const double> x) {
    const std::size_t n = x.size();
    if (n <= filter.pad_length() + 1)
        throw Error("too_short", "input of " + std::to_string(n) + " samples is too short for filtfilt (needs > " +
                                     std::to_string(filter.pad_length() + 1) + ")");
    std::vector<double> fwd = forward_backward(filter, x);
    std::vector<double> rev(x.rbegin(), x.rend());
    std::vector<double> bwd = forward_backward(filter, rev);
    for (std::size_t i = 0; i < n; ++i) fwd[i] = 0.5 * (fwd[i] + bwd[n - 1 - i]);
    return fwd;
}

std::vector<double> notch60(std::span<const double> x, double fs) {
    if (!(fs > 2.0 * kLineHz))
        throw Error("fs_too_low", "sampling rate must exceed 120 Hz for a 60 Hz notch");
    return filtfilt(design_notch(kLineHz, kNotchQ, fs), x);
}

std::vector<double> downsample(std::span<const double> x, int factor) {
    if (factor < 1) throw Error("bad_factor", "downsampling factor must be >= 1");
    const auto f = static_cast<std::size_t>(factor);
    std::vector<double> out;
    out.reserve((x.size() + f - 1) / f);
    for (std::size_t i = 0; i < x.size(); i += f) out.push_back(x[i]);
    return out;
}

std::vector<double> extract_epoch(std::span<const double> recording, std::size_t onset, std::size_t length) {
    if (onset > recording.size() || length > recording.size() - onset)
        throw Error("out_of_range", "epoch [" + std::to_string(onset) + ", " + std::to_string(onset + length) +
                                        ") exceeds recording of " + std::to_string(recording.size()) + " samples");
    return {recording.begin() + static_cast<std::ptrdiff_t>(onset),
            recording.begin() + static_cast<std::ptrdiff_t>(onset + length)};
}

} // namespace ads3d::dsp
