#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "mobivital/errors.hpp"
#include "mobivital/evaluation.hpp"
#include "mobivital/simulator.hpp"
#include "test_util.hpp"

using namespace mobivital;
using doctest::Approx;

namespace {

ArHyperParams small_hp() {
  ArHyperParams hp;
  hp.history_len = 50;
  hp.future_len = 10;
  hp.hidden_size = 4;
  hp.num_layers = 1;
  hp.window_step = 25;
  return hp;
}

std::vector<SimScene> small_corpus(std::size_t n) {
  CorpusSpec spec;
  spec.duration_s = 12.0;
  return make_corpus(n, spec, 99);
}

SceneLoader loader_for(const std::vector<SimScene>& scenes) {
  return [&scenes](std::size_t i) {
    const auto& s = scenes[i];
    return SceneInput{s.scene_id, s.recording, s.truth.as_ground_truth(s.recording.sample_rate_hz)};
  };
}

std::size_t line_count(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST_CASE("respiration rate from a clean breath train") {
  BreathConfig cfg;
  cfg.rate_bpm = 15.0;
  cfg.jitter_frac = 0.0;
  const auto y = breath_waveform(cfg, 3000, 50.0, 4);
  CHECK(estimate_rr(y, 50.0) == Approx(15.0).epsilon(0.5 / 15.0));

  cfg.rate_bpm = 24.0;
  cfg.jitter_frac = 0.1;
  CHECK(std::abs(estimate_rr(breath_waveform(cfg, 3000, 50.0, 5), 50.0) - 24.0) < 1.0);

  try {
    estimate_rr(std::vector<double>(500, 1.0), 50.0);
    FAIL("expected TooFewPeaks");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewPeaks);
  }
  CHECK_THROWS_AS(estimate_rr(std::vector<double>(50, 1.0), 50.0), Error);
}

TEST_CASE("spearman uses average ranks") {
  CHECK(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{10, 20, 30, 40}) == Approx(1.0));
  CHECK(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 8, 27, 64}) == Approx(1.0));
  CHECK(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) == Approx(-1.0));
  // Ranks (1.5, 1.5, 3) against (1, 2, 3).
  CHECK(spearman(std::vector<double>{5, 5, 9}, std::vector<double>{1, 2, 3}) == Approx(std::sqrt(3.0) / 2.0));
  CHECK(spearman(std::vector<double>{1, 1}, std::vector<double>{1, 2}) == 0.0);
  CHECK_THROWS_AS(spearman(std::vector<double>{1}, std::vector<double>{1}), Error);
  CHECK_THROWS_AS(spearman(std::vector<double>{1, 2}, std::vector<double>{1}), Error);
}

TEST_CASE("evaluation report: rows, ordering, CDF and export") {
  const auto scenes = small_corpus(3);
  const auto model = ArModel::initialize(small_hp(), 1);
  auto report = evaluate_methods(scenes.size(), loader_for(scenes), model);
  const auto& names = method_names();
  CHECK(report.num_scenes == 3);
  CHECK(report.methods.size() == names.size());
  CHECK(report.scene_rows.size() == 3 * names.size());
  CHECK(report.rr_rows.size() == 3 * names.size());
  CHECK(report.scene_rows.front().scene_id == "scene_000");
  CHECK(report.scene_rows.back().scene_id == "scene_002");
  CHECK(report.scene_rows[1].method == "snr");

  for (const auto& m : report.methods) {
    CHECK(m.num_scenes == 3);
    REQUIRE(m.cdf.size() == 3);
    for (std::size_t k = 1; k < m.cdf.size(); ++k) {
      CHECK(m.cdf[k].r >= m.cdf[k - 1].r);
      CHECK(m.cdf[k].cumulative > m.cdf[k - 1].cumulative);
    }
    CHECK(m.cdf.back().cumulative == 1.0);
    CHECK(m.fraction_negative_r >= 0.0);
    CHECK(m.fraction_negative_r <= 1.0);
  }
  // The oracle is at least as good as anything else on every scene.
  for (std::size_t s = 0; s < 3; ++s) {
    double oracle = 0.0;
    for (const auto& row : report.scene_rows) {
      if (row.scene_id == scenes[s].scene_id && row.method == "oracle") oracle = row.r_with_truth;
    }
    for (const auto& row : report.scene_rows) {
      if (row.scene_id == scenes[s].scene_id && !row.flipped) CHECK(row.r_with_truth <= oracle + 1e-12);
    }
  }
  for (const auto& row : report.rr_rows) {
    if (row.rr_est_bpm == 0.0) CHECK(row.abs_err_bpm == Approx(row.rr_true_bpm));
  }
  CHECK_FALSE(report.candidate_rows.empty());
  CHECK(std::abs(report.score_spearman) <= 1.0);
  CHECK_THROWS_AS(report.method("nope"), Error);

  testing::TempDir dir("eval");
  report.provenance = {{"seed", 99}};
  export_report(report, dir.path());
  for (const char* f : {"scenes.csv", "rr.csv", "cdf.csv", "candidates.csv", "summary.json"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  CHECK(line_count(dir / "scenes.csv") == 1 + report.scene_rows.size());
  CHECK(line_count(dir / "candidates.csv") == 1 + report.candidate_rows.size());
  std::ifstream js(dir / "summary.json");
  const auto summary = nlohmann::json::parse(js);
  CHECK(summary["num_scenes"] == 3);
  CHECK(summary["config"]["seed"] == 99);
  CHECK(summary["methods"].contains("mobivital_noinv"));
}

TEST_CASE("ablation off drops the _noinv methods; serial equals parallel") {
  const auto scenes = small_corpus(2);
  const auto model = ArModel::initialize(small_hp(), 2);
  EvalConfig cfg;
  cfg.ablation = false;
  const auto a = evaluate_methods(scenes.size(), loader_for(scenes), model, cfg, Exec::Serial);
  const auto b = evaluate_methods(scenes.size(), loader_for(scenes), model, cfg, Exec::Parallel);
  std::set<std::string> names;
  for (const auto& m : a.methods) names.insert(m.method);
  CHECK(names == std::set<std::string>{"mobivital", "snr", "cfar", "variance", "oracle"});
  REQUIRE(a.scene_rows.size() == b.scene_rows.size());
  for (std::size_t i = 0; i < a.scene_rows.size(); ++i) {
    CHECK(a.scene_rows[i].selected_key == b.scene_rows[i].selected_key);
    CHECK(a.scene_rows[i].r_with_truth == b.scene_rows[i].r_with_truth);
  }
  CHECK(a.score_spearman == b.score_spearman);
}

TEST_CASE("an empty corpus is rejected") {
  const auto model = ArModel::initialize(small_hp(), 1);
  CHECK_THROWS_AS(evaluate_methods(0, [](std::size_t) -> SceneInput { return {}; }, model), Error);
}
