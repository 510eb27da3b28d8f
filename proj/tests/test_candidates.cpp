#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "mobivital/candidates.hpp"
#include "mobivital/dsp.hpp"
#include "mobivital/errors.hpp"
#include "test_util.hpp"

using namespace mobivital;
using doctest::Approx;

namespace {

// Bin 1 carries a breathing-like phase rotation, bin 2 an amplitude
// modulation, bin 0 is a static reflector.
UwbRecording modulated_recording(std::size_t n = 1000) {
  UwbRecording rec;
  rec.num_bins = 3;
  rec.num_samples = n;
  rec.sample_rate_hz = 50.0;
  rec.range_start_m = 0.5;
  rec.bin_size_m = 0.05;
  rec.iq.resize(3 * n);
  for (std::size_t t = 0; t < n; ++t) {
    const double s = std::sin(2.0 * std::numbers::pi * 0.25 * static_cast<double>(t) / 50.0);
    rec.bin(0)[t] = {2.0f, 1.0f};
    rec.bin(1)[t] = std::polar(1.0f, static_cast<float>(2.5 + 2.0 * s));  // wraps through +-pi
    rec.bin(2)[t] = {static_cast<float>(3.0 + 0.5 * s), 0.0f};
  }
  return rec;
}

std::vector<double> reference_breath(std::size_t n) {
  std::vector<double> y(n);
  for (std::size_t t = 0; t < n; ++t) y[t] = std::sin(2.0 * std::numbers::pi * 0.25 * static_cast<double>(t) / 50.0);
  return y;
}

}  // namespace

TEST_CASE("bank layout: two channels per bin, magnitude first") {
  const auto bank = extract_candidates(modulated_recording());
  REQUIRE(bank.size() == 6);
  for (std::size_t k = 0; k < bank.size(); ++k) {
    CHECK(bank.candidates[k].bin_index == k / 2);
    CHECK(bank.candidates[k].channel == (k % 2 == 0 ? Channel::Magnitude : Channel::Phase));
  }
  CHECK(candidate_key(bank.candidates[3]) == "bin1:ph");
  CHECK(candidate_key(2, Channel::Magnitude) == "bin2:mag");
  CHECK(bank.num_samples == 1000);
  CHECK(bank.sample_rate_hz == 50.0);
}

TEST_CASE("normalized candidates span [0, 1] unless constant") {
  const auto bank = extract_candidates(modulated_recording());
  for (const auto& c : bank.candidates) {
    const auto [lo, hi] = std::minmax_element(c.samples.begin(), c.samples.end());
    if (*hi - *lo > 0.0) {
      CHECK(*lo == 0.0);
      CHECK(*hi == 1.0);
    }
  }
  // The static bin has nothing left after clutter removal.
  for (double v : bank.candidates[0].raw_samples) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("modulated channels recover the motion through phase wrapping") {
  const auto bank = extract_candidates(modulated_recording());
  const auto truth = reference_breath(1000);
  CHECK(*dsp::pearson_r(bank.candidates[3].samples, truth) > 0.95);  // bin1 phase
  CHECK(*dsp::pearson_r(bank.candidates[4].samples, truth) > 0.95);  // bin2 magnitude
}

TEST_CASE("serial and parallel extraction agree exactly") {
  const auto rec = modulated_recording(600);
  const auto a = extract_candidates(rec, {}, Exec::Serial);
  const auto b = extract_candidates(rec, {}, Exec::Parallel);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a.candidates[k].samples == b.candidates[k].samples);
}

TEST_CASE("candidate CSV has one column per candidate") {
  testing::TempDir dir("cand");
  const auto bank = extract_candidates(modulated_recording(50));
  export_candidates_csv(bank, dir / "c.csv");
  std::ifstream in(dir / "c.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "bin0:mag,bin0:ph,bin1:mag,bin1:ph,bin2:mag,bin2:ph");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 50);
}

TEST_CASE("invalid recordings are rejected before extraction") {
  auto rec = modulated_recording(10);
  rec.iq.resize(5);
  CHECK_THROWS_AS(extract_candidates(rec), Error);
}
