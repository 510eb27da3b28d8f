#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mobivital/armodel.hpp"
#include "mobivital/baselines.hpp"
#include "mobivital/candidates.hpp"
#include "mobivital/ingest.hpp"
#include "mobivital/parallel.hpp"
#include "mobivital/scoring.hpp"

namespace mobivital {

struct RrConfig {
  std::size_t smooth_order = 5;
  std::size_t smooth_frame = 101;
  double min_prominence = 0.1;  // on the min-max normalized smoothed waveform
};

// Respiration rate from the mean inter-peak interval of the smoothed waveform.
// Peaks closer than half a smoothing frame to either end are ignored.
// Throws TooShort when y is shorter than the smoothing frame and TooFewPeaks
// below two peaks.
double estimate_rr(std::span<const double> y, double sample_rate_hz, const RrConfig& cfg = {});

// Rank correlation with average ranks for ties. Throws LengthMismatch or
// TooShort (fewer than 2 points); returns 0 when either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

// Method names in report order. The "_noinv" variants run without the inversion detector.
inline const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {"mobivital",       "snr",       "cfar",      "variance",
                                                 "oracle",          "mobivital_noinv", "snr_noinv", "cfar_noinv",
                                                 "variance_noinv"};
  return names;
}

struct EvalConfig {
  CandidateConfig candidates;
  SelectConfig select;
  BaselineConfig baselines;
  RrConfig rr;
  bool ablation = true;  // include the _noinv variants
};

struct SceneInput {
  std::string scene_id;
  UwbRecording recording;
  GroundTruthWaveform truth;  // any rate; aligned to the recording internally
};

// Scenes are pulled one at a time so a corpus never has to sit in memory.
using SceneLoader = std::function<SceneInput(std::size_t index)>;

struct SceneRow {
  std::string scene_id;
  std::string method;
  std::string selected_key;
  double r_with_truth = 0.0;
  bool flipped = false;
  double score = 0.0;  // the method's own ranking value
};

struct RrRow {
  std::string scene_id;
  std::string method;
  double rr_est_bpm = 0.0;  // 0 when the selected waveform has fewer than two peaks
  double rr_true_bpm = 0.0;
  double abs_err_bpm = 0.0;
};

// One row per candidate that survived the prefilter and was scored.
struct CandidateRow {
  std::string scene_id;
  std::string candidate_key;
  double score = 0.0;
  double r_with_truth = 0.0;
};

struct CdfPoint {
  double r = 0.0;
  double cumulative = 0.0;
};

struct MethodSummary {
  std::string method;
  std::size_t num_scenes = 0;
  double mean_r = 0.0;
  double fraction_negative_r = 0.0;
  double mean_abs_rr_err_bpm = 0.0;
  std::vector<CdfPoint> cdf;  // at the sorted empirical r values
};

struct EvalReport {
  std::size_t num_scenes = 0;
  std::vector<MethodSummary> methods;  // method_names() order
  std::vector<SceneRow> scene_rows;    // sorted by scene_id, then method order
  std::vector<RrRow> rr_rows;
  std::vector<CandidateRow> candidate_rows;
  double score_spearman = 0.0;  // MobiVital score vs true r over candidate_rows
  nlohmann::json provenance = nlohmann::json::object();  // echoed into summary.json

  // Throws InvariantViolation for unknown names.
  const MethodSummary& method(const std::string& name) const;
};

// Runs every method on every scene and aggregates. Throws EmptyCorpus when
// n_scenes is zero.
EvalReport evaluate_methods(std::size_t n_scenes, const SceneLoader& load, const ArModel& model,
                            const EvalConfig& cfg = {}, Exec exec = Exec::Parallel);

nlohmann::json summary_to_json(const EvalReport& report);

// scenes.csv, rr.csv, cdf.csv, candidates.csv and summary.json.
void export_report(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace mobivital
