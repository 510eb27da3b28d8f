#pragma once

#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

// Numeric primitives shared by candidate extraction, inversion detection,
// baselines and evaluation. All functions are pure and reentrant.
namespace mobivital::dsp {

using Signal = std::vector<double>;

// Peaks of a 1-D signal with the bookkeeping needed by peak_widths.
// indices are strictly increasing; all arrays have the same length.
struct PeakSet {
  std::vector<std::size_t> indices;
  std::vector<double> prominences;
  std::vector<std::size_t> left_bases;
  std::vector<std::size_t> right_bases;
  // Filled by peak_widths.
  std::vector<double> widths;
  std::vector<double> width_heights;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
};

/// Least-squares polynomial smoothing over a centered window of odd length.
/// The first and last half-windows are taken from the polynomial fitted to
/// the first/last full window, evaluated at the edge offsets.
Signal savitzky_golay(std::span<const double> y, std::size_t poly_order, std::size_t frame_len);

/// Removes the least-squares polynomial of the given order.
Signal detrend_poly(std::span<const double> y, std::size_t order);

/// Running-baseline clutter removal: b0 = x0, b_t = alpha b_{t-1} + (1-alpha) x_t,
/// output x_t - b_t.
Signal loopback_filter(std::span<const double> x, double alpha);

/// Adds multiples of 2*pi so consecutive differences fall in (-pi, pi].
Signal unwrap_phase(std::span<const double> theta, double jump_threshold = std::numbers::pi);

/// Local maxima (plateaus report their midpoint, rounded down) with
/// prominence >= min_prominence.
PeakSet find_peaks(std::span<const double> y, double min_prominence);

/// Widths at y[p] - rel_height * prominence, crossings linearly interpolated
/// and bounded by the prominence bases. Fills peaks.widths / width_heights
/// and returns the widths.
std::vector<double> peak_widths(std::span<const double> y, PeakSet& peaks, double rel_height = 0.5);

/// Pearson correlation. nullopt when either input has zero variance.
/// Throws LengthMismatch on unequal lengths and TooShort below 2 samples.
std::optional<double> pearson_r(std::span<const double> x, std::span<const double> y);

struct PowerSpectrum {
  std::vector<double> freqs_hz;
  std::vector<double> power;  // |X_k|^2, k = 0..N/2
};

/// Hann-windowed (periodic) one-sided power spectrum.
PowerSpectrum power_spectrum(std::span<const double> y, double sample_rate_hz);

/// (y - min) / (max - min); a constant input maps to all 0.5.
Signal min_max_normalize(std::span<const double> y);

double mean(std::span<const double> y);
double variance(std::span<const double> y);

}  // namespace mobivital::dsp
