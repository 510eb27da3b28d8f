#include <doctest.h>

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "mobivital/errors.hpp"
#include "mobivital/dsp.hpp"
#include "mobivital/inversion.hpp"
#include "mobivital/simulator.hpp"
#include "test_util.hpp"

using namespace mobivital;

namespace {

std::vector<double> breaths(double rate_bpm, double duty, std::uint64_t seed, std::size_t n = 1500) {
  BreathConfig cfg;
  cfg.rate_bpm = rate_bpm;
  cfg.duty = duty;
  return breath_waveform(cfg, n, 50.0, seed);
}

std::vector<double> negated(const std::vector<double>& y) {
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = -y[i];
  return dsp::min_max_normalize(out);
}

CandidateBank bank_of(const std::vector<std::vector<double>>& series) {
  CandidateBank bank;
  bank.num_bins = static_cast<std::uint32_t>(series.size());
  bank.num_samples = series.front().size();
  bank.sample_rate_hz = 50.0;
  bank.bin_size_m = 0.05;
  for (std::size_t i = 0; i < series.size(); ++i) {
    CandidateSeries c;
    c.bin_index = i;
    c.samples = series[i];
    c.raw_samples = series[i];
    bank.candidates.push_back(c);
  }
  return bank;
}

}  // namespace

TEST_CASE("upright short-duty breaths are not inverted; their mirror is") {
  const auto y = breaths(15.0, 0.3, 7);
  const auto up = detect_inversion(y);
  CHECK(up.confident);
  CHECK_FALSE(up.inverted);
  CHECK(up.ratio < 1.0);
  CHECK(up.w_pos < up.w_inv);

  const auto down = detect_inversion(negated(y));
  CHECK(down.confident);
  CHECK(down.inverted);
  CHECK(down.ratio > 1.0);
  // Mirroring swaps the two widths.
  CHECK(down.w_pos == doctest::Approx(up.w_inv).epsilon(1e-9));
}

TEST_CASE("the threshold moves the decision") {
  const auto y = breaths(12.0, 0.3, 3);
  const auto v = detect_inversion(y);
  InversionConfig strict;
  strict.r_th = v.ratio * 0.5;
  CHECK(detect_inversion(y, strict).inverted);
  InversionConfig at;
  at.r_th = v.ratio;
  CHECK(detect_inversion(y, at).inverted);  // ratio >= r_th counts as inverted
}

TEST_CASE("flat or monotone inputs are not confident") {
  const std::vector<double> flat(500, 0.5);
  const auto v = detect_inversion(flat);
  CHECK_FALSE(v.confident);
  CHECK_FALSE(v.inverted);
  CHECK(std::isnan(v.ratio));

  std::vector<double> ramp(500);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i);
  CHECK_FALSE(detect_inversion(ramp).confident);

  CHECK_THROWS_AS(detect_inversion(std::vector<double>(50, 0.0)), Error);
}

TEST_CASE("postflip mirrors only confident inversions") {
  const auto y = breaths(18.0, 0.25, 11);
  CHECK(postflip(y) == y);
  const auto fixed = postflip(negated(y));
  CHECK(*dsp::pearson_r(fixed, y) > 0.999);
}

TEST_CASE("prefilter splits a bank by verdict and keeps positions") {
  const auto y = breaths(15.0, 0.3, 5);
  const auto bank = bank_of({y, negated(y), std::vector<double>(y.size(), 0.5), y});
  const auto pre = prefilter_bank(bank);
  CHECK(pre.kept_indices == std::vector<std::size_t>{0, 2, 3});
  REQUIRE(pre.rejected.size() == 1);
  CHECK(pre.rejected[0].index == 1);
  CHECK(pre.rejected[0].key == "bin1:mag");
  CHECK(pre.kept.size() == 3);
  CHECK(pre.kept.num_samples == bank.num_samples);

  const auto serial = classify_bank(bank, {}, Exec::Serial);
  const auto parallel = classify_bank(bank, {}, Exec::Parallel);
  for (std::size_t k = 0; k < bank.size(); ++k) {
    CHECK(serial[k].inverted == parallel[k].inverted);
    CHECK(serial[k].w_pos == parallel[k].w_pos);
  }
}

TEST_CASE("verdicts export one JSON object per line") {
  testing::TempDir dir("inv");
  const auto y = breaths(15.0, 0.3, 5);
  const auto bank = bank_of({y, negated(y)});
  const auto verdicts = classify_bank(bank);
  export_verdicts_jsonl(bank, verdicts, dir / "v.jsonl");
  std::ifstream in(dir / "v.jsonl");
  std::vector<nlohmann::json> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(nlohmann::json::parse(line));
  REQUIRE(lines.size() == 2);
  CHECK(lines[0]["candidate_key"] == "bin0:mag");
  CHECK(lines[0]["inverted"] == false);
  CHECK(lines[1]["inverted"] == true);
  CHECK(lines[1].contains("ratio"));
  CHECK(lines[1].contains("w_pos"));
  CHECK(lines[1].contains("w_inv"));
  CHECK(lines[1].contains("confident"));
}
