#include "mobivital/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "mobivital/errors.hpp"

namespace mobivital::dsp {
namespace {

// Vandermonde matrix on offsets scaled into [-1, 1] for conditioning.
Eigen::MatrixXd scaled_vandermonde(std::size_t rows, std::size_t order, double center, double half_span) {
  Eigen::MatrixXd a(rows, order + 1);
  for (std::size_t i = 0; i < rows; ++i) {
    const double u = half_span > 0.0 ? (static_cast<double>(i) - center) / half_span : 0.0;
    double p = 1.0;
    for (std::size_t k = 0; k <= order; ++k) {
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = p;
      p *= u;
    }
  }
  return a;
}

}  // namespace

Signal savitzky_golay(std::span<const double> y, std::size_t poly_order, std::size_t frame_len) {
  if (frame_len % 2 == 0 || frame_len <= poly_order) {
    throw Error(ErrorCode::BadOrder, "frame_len must be odd and exceed poly_order");
  }
  if (y.size() < frame_len) throw Error(ErrorCode::WindowTooLarge, "signal shorter than frame_len");

  const std::size_t half = (frame_len - 1) / 2;
  const auto a = scaled_vandermonde(frame_len, poly_order, static_cast<double>(half), static_cast<double>(half));
  // Hat matrix P = Q Q^T maps a window onto its least-squares fit at every offset.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  const Eigen::MatrixXd hat = q * q.transpose();

  const std::size_t n = y.size();
  Signal out(n);
  const Eigen::Map<const Eigen::VectorXd> head(y.data(), static_cast<Eigen::Index>(frame_len));
  const Eigen::Map<const Eigen::VectorXd> tail(y.data() + n - frame_len, static_cast<Eigen::Index>(frame_len));
  for (std::size_t j = 0; j < half; ++j) {
    out[j] = hat.row(static_cast<Eigen::Index>(j)).dot(head);
    out[n - half + j] = hat.row(static_cast<Eigen::Index>(half + 1 + j)).dot(tail);
  }
  const Eigen::VectorXd center = hat.row(static_cast<Eigen::Index>(half)).transpose();
  for (std::size_t i = half; i + half < n; ++i) {
    double acc = 0.0;
    const double* w = y.data() + i - half;
    for (std::size_t k = 0; k < frame_len; ++k) acc += center[static_cast<Eigen::Index>(k)] * w[k];
    out[i] = acc;
  }
  return out;
}

Signal detrend_poly(std::span<const double> y, std::size_t order) {
  const std::size_t n = y.size();
  if (n <= order) throw Error(ErrorCode::TooShort, "detrend needs more samples than the polynomial order");
  const double half = static_cast<double>(n - 1) / 2.0;
  const auto a = scaled_vandermonde(n, order, half, half);
  const Eigen::Map<const Eigen::VectorXd> b(y.data(), static_cast<Eigen::Index>(n));
  const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
  const Eigen::VectorXd resid = b - a * coef;
  return {resid.data(), resid.data() + n};
}

Signal loopback_filter(std::span<const double> x, double alpha) {
  Signal out(x.size());
  if (x.empty()) return out;
  double baseline = x[0];
  out[0] = 0.0;
  for (std::size_t t = 1; t < x.size(); ++t) {
    baseline = alpha * baseline + (1.0 - alpha) * x[t];
    out[t] = x[t] - baseline;
  }
  return out;
}

Signal unwrap_phase(std::span<const double> theta, double jump_threshold) {
  constexpr double kPi = std::numbers::pi;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  Signal out(theta.begin(), theta.end());
  double correction = 0.0;
  for (std::size_t t = 1; t < theta.size(); ++t) {
    const double d = theta[t] - theta[t - 1];
    double dd = std::fmod(d + kPi, kTwoPi);
    if (dd < 0.0) dd += kTwoPi;
    dd -= kPi;
    if (dd == -kPi && d > 0.0) dd = kPi;
    if (std::abs(d) >= jump_threshold) correction += dd - d;
    out[t] = theta[t] + correction;
  }
  return out;
}

PeakSet find_peaks(std::span<const double> y, double min_prominence) {
  PeakSet peaks;
  const std::size_t n = y.size();
  if (n < 3) return peaks;

  std::vector<std::size_t> candidates;
  std::size_t i = 1;
  while (i + 1 < n) {
    if (y[i - 1] < y[i]) {
      std::size_t ahead = i + 1;
      while (ahead + 1 < n && y[ahead] == y[i]) ++ahead;
      if (y[ahead] < y[i]) {
        candidates.push_back((i + ahead - 1) / 2);
        i = ahead;
        continue;
      }
    }
    ++i;
  }

  for (std::size_t p : candidates) {
    const double h = y[p];
    std::size_t left_base = p;
    double left_min = h;
    for (std::size_t j = p + 1; j-- > 0;) {
      if (y[j] > h) break;
      if (y[j] <= left_min) {
        left_min = y[j];
        left_base = j;
      }
    }
    std::size_t right_base = p;
    double right_min = h;
    for (std::size_t j = p; j < n; ++j) {
      if (y[j] > h) break;
      if (y[j] <= right_min) {
        right_min = y[j];
        right_base = j;
      }
    }
    const double prominence = h - std::max(left_min, right_min);
    if (prominence >= min_prominence && prominence > 0.0) {
      peaks.indices.push_back(p);
      peaks.prominences.push_back(prominence);
      peaks.left_bases.push_back(left_base);
      peaks.right_bases.push_back(right_base);
    }
  }
  return peaks;
}

std::vector<double> peak_widths(std::span<const double> y, PeakSet& peaks, double rel_height) {
  peaks.widths.assign(peaks.size(), 0.0);
  peaks.width_heights.assign(peaks.size(), 0.0);
  for (std::size_t k = 0; k < peaks.size(); ++k) {
    const std::size_t p = peaks.indices[k];
    if (p >= y.size()) throw Error(ErrorCode::InvariantViolation, "peak index outside signal");
    const double height = y[p] - peaks.prominences[k] * rel_height;

    std::size_t i = p;
    while (i > peaks.left_bases[k] && height < y[i]) --i;
    double left = static_cast<double>(i);
    if (y[i] < height) left += (height - y[i]) / (y[i + 1] - y[i]);

    i = p;
    while (i < peaks.right_bases[k] && height < y[i]) ++i;
    double right = static_cast<double>(i);
    if (y[i] < height) right -= (height - y[i]) / (y[i - 1] - y[i]);

    peaks.widths[k] = right - left;
    peaks.width_heights[k] = height;
  }
  return peaks.widths;
}

std::optional<double> pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "pearson_r inputs differ in length");
  if (x.size() < 2) throw Error(ErrorCode::TooShort, "pearson_r needs at least 2 samples");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / (std::sqrt(sxx) * std::sqrt(syy)), -1.0, 1.0);
}

PowerSpectrum power_spectrum(std::span<const double> y, double sample_rate_hz) {
  const std::size_t n = y.size();
  if (n < 8) throw Error(ErrorCode::TooShort, "power_spectrum needs at least 8 samples");
  std::vector<double> windowed(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    windowed[i] = w * y[i];
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, windowed);

  PowerSpectrum ps;
  const std::size_t bins = n / 2 + 1;
  ps.freqs_hz.resize(bins);
  ps.power.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    ps.freqs_hz[k] = static_cast<double>(k) * sample_rate_hz / static_cast<double>(n);
    ps.power[k] = std::norm(spec[k]);
  }
  return ps;
}

Signal min_max_normalize(std::span<const double> y) {
  Signal out(y.size());
  if (y.empty()) return out;
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double span = *hi - *lo;
  if (!(span > 0.0)) {
    std::fill(out.begin(), out.end(), 0.5);
    return out;
  }
  const double low = *lo;
  std::transform(y.begin(), y.end(), out.begin(), [&](double v) { return (v - low) / span; });
  return out;
}

double mean(std::span<const double> y) {
  if (y.empty()) return 0.0;
  double s = 0.0;
  for (double v : y) s += v;
  return s / static_cast<double>(y.size());
}

double variance(std::span<const double> y) {
  if (y.empty()) return 0.0;
  const double m = mean(y);
  double s = 0.0;
  for (double v : y) s += (v - m) * (v - m);
  return s / static_cast<double>(y.size());
}

}  // namespace mobivital::dsp
