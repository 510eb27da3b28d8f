#include "mobivital/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "mobivital/dsp.hpp"
#include "mobivital/errors.hpp"
#include "mobivital/inversion.hpp"

namespace mobivital {
namespace {

std::vector<double> ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> out(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) out[order[k]] = avg;
    i = j + 1;
  }
  return out;
}

double r_with(std::span<const double> y, const GroundTruthWaveform& truth) {
  return dsp::pearson_r(y, truth.samples).value_or(0.0);
}

struct SceneResult {
  std::vector<SceneRow> rows;
  std::vector<RrRow> rr;
  std::vector<CandidateRow> candidates;
};

SceneResult evaluate_scene(const SceneInput& scene, const ArModel& model, const EvalConfig& cfg, Exec exec) {
  const auto bank = extract_candidates(scene.recording, cfg.candidates, exec);
  const auto truth = align_truth(scene.truth, bank.sample_rate_hz, bank.num_samples);
  const double fs = bank.sample_rate_hz;

  SceneResult out;
  double rr_true = std::numeric_limits<double>::quiet_NaN();
  try {
    rr_true = estimate_rr(truth.samples, fs, cfg.rr);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooFewPeaks) throw;
  }

  auto add = [&](const std::string& method, const std::string& key, std::span<const double> samples, bool flipped,
                 double score) {
    out.rows.push_back({scene.scene_id, method, key, r_with(samples, truth), flipped, score});
    double est = 0.0;
    try {
      est = estimate_rr(samples, fs, cfg.rr);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TooFewPeaks) throw;
    }
    out.rr.push_back({scene.scene_id, method, est, rr_true, std::abs(est - rr_true)});
  };

  const auto assessment = assess_bank(bank, model, cfg.select.inversion, exec);
  SelectConfig with_inv = cfg.select;
  with_inv.prefilter = true;
  const auto mv = select_from_assessment(bank, assessment, with_inv);
  add("mobivital", candidate_key(mv.selected), mv.selected.samples, mv.flipped, mv.score);

  BaselineConfig base = cfg.baselines;
  base.inversion = cfg.select.inversion;
  base.inversion_detection = true;
  for (const auto& choice : {select_snr(bank, base), select_cfar(bank, base), select_variance(bank, base)}) {
    add(to_string(choice.method), choice.selected_key, choice.samples, choice.flipped, choice.score_raw);
  }
  const auto oracle = select_oracle(bank, truth);
  add("oracle", oracle.selected_key, oracle.samples, oracle.flipped, oracle.score_raw);

  if (cfg.ablation) {
    SelectConfig no_inv = cfg.select;
    no_inv.prefilter = false;
    const auto mv0 = select_from_assessment(bank, assessment, no_inv);
    add("mobivital_noinv", candidate_key(mv0.selected), mv0.selected.samples, mv0.flipped, mv0.score);
    base.inversion_detection = false;
    for (const auto& choice : {select_snr(bank, base), select_cfar(bank, base), select_variance(bank, base)}) {
      add(to_string(choice.method) + "_noinv", choice.selected_key, choice.samples, choice.flipped,
          choice.score_raw);
    }
  }

  for (std::size_t i = 0; i < bank.size(); ++i) {
    if (!passes_prefilter(assessment.verdicts[i])) continue;
    out.candidates.push_back({scene.scene_id, candidate_key(bank.candidates[i]), assessment.scores[i].score,
                              r_with(bank.candidates[i].samples, truth)});
  }
  return out;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  return out;
}

}  // namespace

double estimate_rr(std::span<const double> y, double sample_rate_hz, const RrConfig& cfg) {
  if (!(sample_rate_hz > 0.0)) throw Error(ErrorCode::InvariantViolation, "sample rate must be positive");
  if (y.size() < cfg.smooth_frame) throw Error(ErrorCode::TooShort, "waveform shorter than the smoothing frame");
  const auto raw = dsp::savitzky_golay(y, cfg.smooth_order, cfg.smooth_frame);
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  if (!(*hi - *lo > 1e-9 * std::max({1.0, std::abs(*lo), std::abs(*hi)}))) {
    throw Error(ErrorCode::TooFewPeaks, "waveform is flat");
  }
  const auto smooth = dsp::min_max_normalize(raw);
  // Within half a frame of either end the smoothed values are extrapolated
  // from the edge polynomial, which can overshoot into a spurious peak.
  const std::size_t half = cfg.smooth_frame / 2;
  std::vector<std::size_t> kept;
  for (std::size_t p : dsp::find_peaks(smooth, cfg.min_prominence).indices) {
    if (p >= half && p + half < smooth.size()) kept.push_back(p);
  }
  if (kept.size() < 2) throw Error(ErrorCode::TooFewPeaks, "need at least two peaks");
  const double span = static_cast<double>(kept.back()) - static_cast<double>(kept.front());
  const double mean_interval = span / static_cast<double>(kept.size() - 1);
  return 60.0 * sample_rate_hz / mean_interval;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "spearman inputs differ in length");
  if (x.size() < 2) throw Error(ErrorCode::TooShort, "spearman needs at least two points");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  return dsp::pearson_r(rx, ry).value_or(0.0);
}

const MethodSummary& EvalReport::method(const std::string& name) const {
  for (const auto& m : methods) {
    if (m.method == name) return m;
  }
  throw Error(ErrorCode::InvariantViolation, "no method '" + name + "' in report");
}

EvalReport evaluate_methods(std::size_t n_scenes, const SceneLoader& load, const ArModel& model,
                            const EvalConfig& cfg, Exec exec) {
  if (n_scenes == 0) throw Error(ErrorCode::EmptyCorpus, "no scenes to evaluate");

  // Scenes run one after another; each one parallelizes internally.
  std::vector<std::pair<std::string, SceneResult>> results;
  results.reserve(n_scenes);
  for (std::size_t i = 0; i < n_scenes; ++i) {
    const SceneInput scene = load(i);
    results.emplace_back(scene.scene_id, evaluate_scene(scene, model, cfg, exec));
  }
  std::stable_sort(results.begin(), results.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  EvalReport report;
  report.num_scenes = n_scenes;
  for (auto& [id, res] : results) {
    report.scene_rows.insert(report.scene_rows.end(), res.rows.begin(), res.rows.end());
    report.rr_rows.insert(report.rr_rows.end(), res.rr.begin(), res.rr.end());
    report.candidate_rows.insert(report.candidate_rows.end(), res.candidates.begin(), res.candidates.end());
  }

  for (const auto& name : method_names()) {
    MethodSummary m;
    m.method = name;
    std::vector<double> rs;
    double err_sum = 0.0;
    std::size_t err_n = 0;
    for (const auto& row : report.scene_rows) {
      if (row.method == name) rs.push_back(row.r_with_truth);
    }
    for (const auto& row : report.rr_rows) {
      if (row.method == name && std::isfinite(row.abs_err_bpm)) {
        err_sum += row.abs_err_bpm;
        ++err_n;
      }
    }
    if (rs.empty()) continue;
    m.num_scenes = rs.size();
    m.mean_r = std::accumulate(rs.begin(), rs.end(), 0.0) / static_cast<double>(rs.size());
    m.fraction_negative_r =
        static_cast<double>(std::count_if(rs.begin(), rs.end(), [](double r) { return r < 0.0; })) /
        static_cast<double>(rs.size());
    m.mean_abs_rr_err_bpm = err_n ? err_sum / static_cast<double>(err_n) : std::numeric_limits<double>::quiet_NaN();
    std::sort(rs.begin(), rs.end());
    for (std::size_t k = 0; k < rs.size(); ++k) {
      m.cdf.push_back({rs[k], static_cast<double>(k + 1) / static_cast<double>(rs.size())});
    }
    report.methods.push_back(std::move(m));
  }

  if (report.candidate_rows.size() >= 2) {
    std::vector<double> scores, rs;
    for (const auto& row : report.candidate_rows) {
      scores.push_back(row.score);
      rs.push_back(row.r_with_truth);
    }
    report.score_spearman = spearman(scores, rs);
  }
  return report;
}

nlohmann::json summary_to_json(const EvalReport& report) {
  nlohmann::json methods = nlohmann::json::object();
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  for (const auto& m : report.methods) {
    methods[m.method] = {{"num_scenes", m.num_scenes},
                         {"mean_r", num(m.mean_r)},
                         {"fraction_negative_r", num(m.fraction_negative_r)},
                         {"mean_abs_rr_err_bpm", num(m.mean_abs_rr_err_bpm)}};
  }
  return {{"num_scenes", report.num_scenes},
          {"methods", methods},
          {"num_scored_candidates", report.candidate_rows.size()},
          {"score_spearman", num(report.score_spearman)},
          {"config", report.provenance}};
}

void export_report(const EvalReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string());

  auto scenes = open_out(dir / "scenes.csv");
  scenes << "scene_id,method,selected_key,r_with_truth,flipped,score\n";
  for (const auto& r : report.scene_rows) {
    scenes << r.scene_id << ',' << r.method << ',' << r.selected_key << ',' << fmt(r.r_with_truth) << ','
           << (r.flipped ? 1 : 0) << ',' << fmt(r.score) << '\n';
  }

  auto rr = open_out(dir / "rr.csv");
  rr << "scene_id,method,rr_est_bpm,rr_true_bpm,abs_err_bpm\n";
  for (const auto& r : report.rr_rows) {
    rr << r.scene_id << ',' << r.method << ',' << fmt(r.rr_est_bpm) << ',' << fmt(r.rr_true_bpm) << ','
       << fmt(r.abs_err_bpm) << '\n';
  }

  auto cdf = open_out(dir / "cdf.csv");
  cdf << "method,r,cumulative\n";
  for (const auto& m : report.methods) {
    for (const auto& p : m.cdf) cdf << m.method << ',' << fmt(p.r) << ',' << fmt(p.cumulative) << '\n';
  }

  auto cand = open_out(dir / "candidates.csv");
  cand << "scene_id,candidate_key,score,r_with_truth\n";
  for (const auto& r : report.candidate_rows) {
    cand << r.scene_id << ',' << r.candidate_key << ',' << fmt(r.score) << ',' << fmt(r.r_with_truth) << '\n';
  }

  auto summary = open_out(dir / "summary.json");
  summary << summary_to_json(report).dump(2) << '\n';
  for (auto* s : {&scenes, &rr, &cdf, &cand, &summary}) {
    s->flush();
    if (!*s) throw Error(ErrorCode::IoFailure, "write failed in " + dir.string());
  }
}

}  // namespace mobivital
