#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mobivital/baselines.hpp"
#include "mobivital/dsp.hpp"
#include "mobivital/errors.hpp"
#include "mobivital/simulator.hpp"

using namespace mobivital;
using doctest::Approx;

namespace {

std::vector<double> tone(std::size_t n, double f_hz, double amp, double fs = 50.0) {
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = amp * std::sin(2.0 * std::numbers::pi * f_hz * static_cast<double>(i) / fs);
  return y;
}

std::vector<double> negated(const std::vector<double>& y) {
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = -y[i];
  return dsp::min_max_normalize(out);
}

// Magnitude/phase pairs; raw_samples carry the level, samples the normalized shape.
CandidateBank bank_of(const std::vector<std::vector<double>>& series) {
  CandidateBank bank;
  bank.num_bins = static_cast<std::uint32_t>((series.size() + 1) / 2);
  bank.num_samples = series.front().size();
  bank.sample_rate_hz = 50.0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    CandidateSeries c;
    c.bin_index = k / 2;
    c.channel = k % 2 == 0 ? Channel::Magnitude : Channel::Phase;
    c.raw_samples = series[k];
    c.samples = dsp::min_max_normalize(series[k]);
    bank.candidates.push_back(c);
  }
  return bank;
}

}  // namespace

TEST_CASE("band_snr prefers in-band energy and ignores the mean") {
  const auto in = tone(1000, 0.3, 1.0);
  const auto out = tone(1000, 3.0, 1.0);
  const Band band;
  CHECK(band_snr(in, 50.0, band) > 100.0);
  CHECK(band_snr(out, 50.0, band) < 0.01);
  auto mixed = in;
  const auto hum = tone(1000, 5.0, 0.5);
  for (std::size_t i = 0; i < mixed.size(); ++i) mixed[i] += hum[i];
  auto shifted = mixed;
  for (double& v : shifted) v += 10.0;
  CHECK(band_snr(mixed, 50.0, band) == Approx(4.0).epsilon(0.05));
  CHECK(band_snr(shifted, 50.0, band) == Approx(band_snr(mixed, 50.0, band)).epsilon(1e-6));
  CHECK(band_snr(std::vector<double>(64, 1.0), 50.0, band) == 0.0);
}

TEST_CASE("CA-CFAR scale factor") {
  CHECK(cfar_threshold_factor(16, 1e-3) == Approx(16.0 * (std::pow(1e-3, -1.0 / 16.0) - 1.0)));
  // One cell: the threshold is the cell itself times (1/pfa - 1).
  CHECK(cfar_threshold_factor(1, 0.1) == Approx(9.0));
}

TEST_CASE("CA-CFAR finds a strong cell and clips windows at the edges") {
  Eigen::MatrixXd power = Eigen::MatrixXd::Ones(2, 40);
  power(1, 20) = 500.0;
  const CfarConfig cfg;
  const auto hits = ca_cfar(power, cfg);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].row == 1);
  CHECK(hits[0].cell == 20);
  CHECK(hits[0].threshold == Approx(cfar_threshold_factor(16, cfg.pfa)));

  // At the left edge only the right-hand window is available.
  Eigen::MatrixXd edge = Eigen::MatrixXd::Ones(1, 40);
  edge(0, 0) = 500.0;
  const auto e = ca_cfar(edge, cfg);
  REQUIRE(e.size() == 1);
  CHECK(e[0].threshold == Approx(cfar_threshold_factor(8, cfg.pfa)));
}

TEST_CASE("range FFT map keeps magnitude candidates and in-band rows") {
  const auto bank = bank_of({tone(500, 0.4, 1.0), tone(500, 0.4, 9.0), tone(500, 0.4, 3.0), tone(500, 2.0, 1.0)});
  const auto map = range_fft_map(bank, Band{});
  CHECK(map.magnitude.cols() == 2);
  CHECK(map.magnitude.rows() == static_cast<Eigen::Index>(map.freqs_hz.size()));
  for (double f : map.freqs_hz) {
    CHECK(f >= 0.2);
    CHECK(f <= 0.7);
  }
}

TEST_CASE("variance baseline picks the most active magnitude bin") {
  std::vector<std::vector<double>> s;
  for (double amp : {0.1, 0.1, 0.2, 0.2, 2.0, 0.1, 0.3, 5.0, 0.2, 0.1}) s.push_back(tone(600, 0.3, amp));
  const auto bank = bank_of(s);
  const auto v = select_variance(bank);
  CHECK(v.selected_index == 4);  // phase channels (odd indices) never compete
  CHECK(v.selected_key == "bin2:mag");
  CHECK(v.score_raw == Approx(dsp::variance(s[4])));
}

TEST_CASE("CFAR baseline picks the breathing bin among quiet ones") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 0.05);
  std::vector<std::vector<double>> s;
  for (std::size_t k = 0; k < 40; ++k) {
    auto y = tone(1000, 0.35, k == 22 ? 1.0 : 0.0);
    for (double& v : y) v += g(rng);
    s.push_back(y);
  }
  const auto c = select_cfar(bank_of(s));
  CHECK(c.selected_index == 22);
  CHECK(c.score_raw > 1.0);
  CHECK_THROWS_AS(select_cfar(bank_of({tone(32, 0.3, 1.0), tone(32, 0.3, 1.0)})), Error);
}

TEST_CASE("SNR baseline with and without the inversion prefilter") {
  BreathConfig breath;
  const auto up = breath_waveform(breath, 1500, 50.0, 1);
  const auto down = negated(up);
  std::vector<double> noisy(up.size());
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 0.15);
  for (std::size_t i = 0; i < up.size(); ++i) noisy[i] = up[i] + g(rng);
  const auto bank = bank_of({down, noisy, tone(1500, 4.0, 1.0)});

  BaselineConfig cfg;
  const auto with = select_snr(bank, cfg);
  CHECK(with.selected_index == 1);
  CHECK_FALSE(with.flipped);
  cfg.inversion_detection = false;
  const auto without = select_snr(bank, cfg);
  CHECK(without.selected_index == 0);  // the clean inverted waveform has the best band SNR
}

TEST_CASE("variance baseline flips an inverted pick when detection is on") {
  BreathConfig breath;
  const auto up = breath_waveform(breath, 1500, 50.0, 2);
  auto loud_down = negated(up);
  for (double& v : loud_down) v *= 10.0;
  const auto bank = bank_of({tone(1500, 0.3, 0.1), up, loud_down, up, tone(1500, 0.3, 0.1), up});
  BaselineConfig cfg;
  const auto flipped = select_variance(bank, cfg);
  CHECK(flipped.selected_index == 2);
  CHECK(flipped.flipped);
  CHECK(*dsp::pearson_r(flipped.samples, up) > 0.99);
  cfg.inversion_detection = false;
  CHECK_FALSE(select_variance(bank, cfg).flipped);
}

TEST_CASE("oracle takes the highest correlation and checks alignment") {
  const auto a = tone(300, 0.3, 1.0);
  const auto b = tone(300, 0.5, 1.0);
  const auto bank = bank_of({b, negated(a), a});
  const GroundTruthWaveform truth{50.0, a};
  const auto o = select_oracle(bank, truth);
  CHECK(o.selected_index == 2);
  CHECK(o.score_raw == Approx(1.0));
  CHECK_THROWS_AS(select_oracle(bank, GroundTruthWaveform{50.0, std::vector<double>(10, 0.0)}), Error);
  CHECK_THROWS_AS(select_oracle(CandidateBank{}, truth), Error);
}

TEST_CASE("method names") {
  CHECK(to_string(BaselineMethod::Snr) == "snr");
  CHECK(to_string(BaselineMethod::Cfar) == "cfar");
  CHECK(to_string(BaselineMethod::Variance) == "variance");
  CHECK(to_string(BaselineMethod::Oracle) == "oracle");
}
