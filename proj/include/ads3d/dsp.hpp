#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ads3d::dsp {

/// One second-order section, a0 normalized to 1.
struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0;
    double a1 = 0, a2 = 0;

    std::complex<double> response(double omega) const;
    bool stable() const;
};

struct FilterDesign {
    std::string type; // "butter-bandpass" or "notch"
    int order = 0;
    double low_hz = 0;
    double high_hz = 0;
    double fs = 0;
};

struct BiquadCascade {
    std::vector<Biquad> sections;
    FilterDesign description;

    /// Complex frequency response at `hz`.
    std::complex<double> response(double hz) const;
    double magnitude(double hz) const { return std::abs(response(hz)); }
    /// Length of odd-reflection padding used by filtfilt: 3 x 2 x sections.
    std::size_t pad_length() const { return 6 * sections.size(); }
};

/// Digital Butterworth bandpass (bilinear transform, prewarped edges).
/// An order-n design yields n sections.
BiquadCascade design_butter_bandpass(double fs, double low_hz = 4.0, double high_hz = 40.0,
                                     int order = 5);

/// Second-order IIR notch.
BiquadCascade design_notch(double f0_hz, double q, double fs);

/// Causal direct-form-II-transposed filtering from zero state.
std::vector<double> lfilter(const BiquadCascade& filter, std::span<const double> x);

/// Zero-phase forward-backward filtering with odd reflection padding and
/// steady-state initial conditions. The result is the mean of the
/// forward-backward and backward-forward passes, so it commutes exactly
/// with time reversal.
std::vector<double> filtfilt(const BiquadCascade& filter, std::span<const double> x);

/// Zero-phase 60 Hz notch (Q = 30).
std::vector<double> notch60(std::span<const double> x, double fs);

/// output[i] = x[factor * i].
std::vector<double> downsample(std::span<const double> x, int factor = 2);

/// Copies samples [onset, onset + length).
std::vector<double> extract_epoch(std::span<const double> recording, std::size_t onset,
                                  std::size_t length = 1001);

inline constexpr double kNotchQ = 30.0;
inline constexpr double kLineHz = 60.0;

} // namespace ads3d::dsp
