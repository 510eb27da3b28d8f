#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mobivital/armodel.hpp"
#include "mobivital/candidates.hpp"
#include "mobivital/inversion.hpp"
#include "mobivital/parallel.hpp"

namespace mobivital {

struct ScoreResult {
  double score = 0.0;  // mean per-window correlation, in [-1, 1]
  std::size_t num_windows = 0;
};

// Slides (history, future) windows with the model's window_step, predicts
// each future from its history and averages pearson_r(predicted, actual).
// Windows with an undefined correlation contribute 0.
ScoreResult mobivital_score(const ArModel& model, std::span<const double> y);

// Scores bank.candidates[i] for every i in indices. Candidates are processed
// in fixed groups so Serial and Parallel give identical results.
std::vector<ScoreResult> score_candidates(const ArModel& model, const CandidateBank& bank,
                                          std::span<const std::size_t> indices, Exec exec = Exec::Parallel);

struct ScoredCandidate {
  std::string candidate_key;
  std::size_t index = 0;  // position in the bank
  double mobivital_score = 0.0;
  std::size_t num_windows = 0;
  InversionVerdict inversion;
};

struct SelectionResult {
  CandidateSeries selected;  // flipped waveform when flipped == true
  std::size_t selected_index = 0;
  double score = 0.0;
  bool flipped = false;
  std::vector<ScoredCandidate> diagnostics;  // every scored candidate, bank order
};

struct SelectConfig {
  InversionConfig inversion;
  // false disables the inversion prefilter (ablation): argmax over the whole bank, no flip.
  bool prefilter = true;
};

// Inversion verdicts and scores for every candidate of a bank.
struct BankAssessment {
  std::vector<InversionVerdict> verdicts;
  std::vector<ScoreResult> scores;
};

BankAssessment assess_bank(const CandidateBank& bank, const ArModel& model, const InversionConfig& inv = {},
                           Exec exec = Exec::Parallel);

// Prefilter inversions, score the survivors and keep the best. When every
// candidate is inverted, the best of the full bank is selected and flipped.
// Ties go to the earlier candidate (lower bin, magnitude before phase).
SelectionResult select(const CandidateBank& bank, const ArModel& model, const SelectConfig& cfg = {},
                       Exec exec = Exec::Parallel);

// Same decision rule as select() on precomputed verdicts and scores.
SelectionResult select_from_assessment(const CandidateBank& bank, const BankAssessment& assessment,
                                       const SelectConfig& cfg = {});

// {selected, score, flipped, diagnostics:[{candidate_key, score, inverted, ratio}]}
std::string selection_to_json(const SelectionResult& result, int indent = 2);

void export_waveform_csv(std::span<const double> samples, double sample_rate_hz, const std::filesystem::path& path);

}  // namespace mobivital
