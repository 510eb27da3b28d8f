#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mobivital/dsp.hpp"
#include "mobivital/errors.hpp"

using namespace mobivital;
using doctest::Approx;

TEST_CASE("savitzky_golay: 5-point quadratic smoother has the classic center weight") {
  std::vector<double> impulse(11, 0.0);
  impulse[5] = 1.0;
  const auto out = dsp::savitzky_golay(impulse, 2, 5);
  // Convolution coefficients -3, 12, 17, 12, -3 over 35.
  CHECK(out[5] == Approx(17.0 / 35.0).epsilon(1e-12));
  CHECK(out[4] == Approx(12.0 / 35.0).epsilon(1e-12));
  CHECK(out[3] == Approx(-3.0 / 35.0).epsilon(1e-12));
  CHECK(out[2] == Approx(0.0).epsilon(1e-12));
}

TEST_CASE("savitzky_golay: a cubic survives order 3 exactly, edges included") {
  std::vector<double> y(40);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double t = static_cast<double>(i) / 39.0;
    y[i] = 0.3 - t + 2.0 * t * t - 1.5 * t * t * t;
  }
  const auto out = dsp::savitzky_golay(y, 3, 9);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(out[i] == Approx(y[i]).epsilon(1e-10));
}

TEST_CASE("savitzky_golay: argument errors") {
  std::vector<double> y(20, 1.0);
  CHECK_THROWS_AS(dsp::savitzky_golay(y, 2, 4), Error);
  CHECK_THROWS_AS(dsp::savitzky_golay(y, 5, 5), Error);
  try {
    dsp::savitzky_golay(y, 2, 21);
    FAIL("expected WindowTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WindowTooLarge);
  }
}

TEST_CASE("detrend_poly removes a quadratic and keeps the residual") {
  std::vector<double> y(200);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double t = static_cast<double>(i);
    y[i] = 5.0 + 0.02 * t - 1e-4 * t * t;
  }
  for (double v : dsp::detrend_poly(y, 2)) CHECK(std::abs(v) < 1e-9);
  CHECK_THROWS_AS(dsp::detrend_poly(std::vector<double>{1.0, 2.0}, 2), Error);
}

TEST_CASE("loopback_filter starts at zero and removes a constant") {
  const std::vector<double> flat(50, 3.0);
  for (double v : dsp::loopback_filter(flat, 0.95)) CHECK(v == 0.0);

  // A step decays geometrically: out[t] = (x1 - x0) * alpha^(t)
  std::vector<double> step(10, 1.0);
  step[0] = 0.0;
  const auto out = dsp::loopback_filter(step, 0.9);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == Approx(0.9));
  CHECK(out[5] == Approx(std::pow(0.9, 5)));
}

TEST_CASE("unwrap_phase follows the shortest way around the circle") {
  const auto out = dsp::unwrap_phase(std::vector<double>{0.0, 3.0, -3.0});
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 3.0);
  CHECK(out[2] == Approx(-3.0 + 2.0 * std::numbers::pi));
  CHECK(out[2] == Approx(3.28319).epsilon(1e-5));

  // A linear ramp wrapped into (-pi, pi] comes back unchanged.
  std::vector<double> ramp(100), wrapped(100);
  for (std::size_t i = 0; i < ramp.size(); ++i) {
    ramp[i] = 0.4 * static_cast<double>(i);
    wrapped[i] = std::atan2(std::sin(ramp[i]), std::cos(ramp[i]));
  }
  const auto back = dsp::unwrap_phase(wrapped);
  for (std::size_t i = 0; i < ramp.size(); ++i) CHECK(back[i] == Approx(ramp[i]).epsilon(1e-9));
}

TEST_CASE("find_peaks: prominence, bases and plateau midpoint") {
  const std::vector<double> y{0, 2, 1, 3, 3, 3, 0, 1, 0};
  const auto all = dsp::find_peaks(y, 0.0);
  REQUIRE(all.size() == 3);
  CHECK(all.indices[0] == 1);
  CHECK(all.indices[1] == 4);  // plateau 3..5
  CHECK(all.indices[2] == 7);
  CHECK(all.prominences[0] == 1.0);  // higher terrain at index 3 limits the right base to 1
  CHECK(all.prominences[1] == 3.0);
  CHECK(all.prominences[2] == 1.0);

  const auto strong = dsp::find_peaks(y, 1.5);
  REQUIRE(strong.size() == 1);
  CHECK(strong.indices[0] == 4);

  CHECK(dsp::find_peaks(std::vector<double>{1, 2}, 0.0).empty());
  CHECK(dsp::find_peaks(std::vector<double>{1, 1, 1, 1}, 0.0).empty());
}

TEST_CASE("peak_widths: triangle at half prominence") {
  const std::vector<double> y{0, 1, 2, 3, 4, 3, 2, 1, 0};
  auto peaks = dsp::find_peaks(y, 0.0);
  REQUIRE(peaks.size() == 1);
  const auto w = dsp::peak_widths(y, peaks, 0.5);
  CHECK(w[0] == Approx(4.0));
  CHECK(peaks.width_heights[0] == Approx(2.0));
  const auto full = dsp::peak_widths(y, peaks, 1.0);
  CHECK(full[0] == Approx(8.0));
}

TEST_CASE("pearson_r known values and degenerate inputs") {
  CHECK(*dsp::pearson_r(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}) == Approx(0.5));
  CHECK(*dsp::pearson_r(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) == Approx(-1.0));
  CHECK_FALSE(dsp::pearson_r(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}).has_value());
  CHECK_THROWS_AS(dsp::pearson_r(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), Error);
  CHECK_THROWS_AS(dsp::pearson_r(std::vector<double>{1}, std::vector<double>{1}), Error);
}

TEST_CASE("power_spectrum puts a bin-centred tone in its bin") {
  const double fs = 50.0;
  const std::size_t n = 500;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = std::sin(2.0 * std::numbers::pi * 0.5 * static_cast<double>(i) / fs);
  const auto ps = dsp::power_spectrum(y, fs);
  REQUIRE(ps.power.size() == n / 2 + 1);
  const auto k = static_cast<std::size_t>(std::max_element(ps.power.begin(), ps.power.end()) - ps.power.begin());
  CHECK(ps.freqs_hz[k] == Approx(0.5));
  CHECK(ps.freqs_hz[1] == Approx(fs / static_cast<double>(n)));
}

TEST_CASE("power_spectrum of a constant lives at DC and its Hann neighbour") {
  const std::vector<double> y(64, 2.0);
  const auto ps = dsp::power_spectrum(y, 10.0);
  // The periodic Hann window of a constant has energy only at k = 0 and k = 1.
  CHECK(ps.power[0] == Approx(64.0 * 64.0));
  CHECK(ps.power[1] == Approx(32.0 * 32.0));
  for (std::size_t k = 2; k < ps.power.size(); ++k) CHECK(ps.power[k] < 1e-18);
}

TEST_CASE("min_max_normalize and moments") {
  const auto out = dsp::min_max_normalize(std::vector<double>{2, 4, 6});
  CHECK(out == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(dsp::min_max_normalize(std::vector<double>{7, 7}) == std::vector<double>{0.5, 0.5});
  CHECK(dsp::mean(std::vector<double>{1, 2, 3, 6}) == 3.0);
  CHECK(dsp::variance(std::vector<double>{1, 3}) == 1.0);
}
