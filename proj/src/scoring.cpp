#include "mobivital/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "mobivital/dsp.hpp"
#include "mobivital/errors.hpp"

namespace mobivital {
namespace {

constexpr std::size_t kScoreGroup = 8;

// Scores a group of sequences with one batched forward pass.
void score_group(const ArModel& model, std::span<const std::span<const double>> seqs, std::span<ScoreResult> out) {
  const auto& hp = model.hyper();
  std::size_t total = 0;
  for (const auto& s : seqs) {
    if (s.size() < hp.window_len()) throw Error(ErrorCode::TooShort, "candidate shorter than history + future");
    total += window_count(s.size(), hp);
  }
  const auto h = static_cast<Eigen::Index>(hp.history_len);
  const auto f = static_cast<Eigen::Index>(hp.future_len);
  Eigen::MatrixXf histories(h, static_cast<Eigen::Index>(total));
  Eigen::VectorXf future_scratch(f);
  Eigen::Index col = 0;
  for (const auto& s : seqs) {
    for (std::size_t w = 0; w < window_count(s.size(), hp); ++w, ++col) {
      normalize_window(s, w * hp.window_step, hp, histories.col(col), future_scratch);
    }
  }
  const Eigen::MatrixXf pred = model.forward_batch(histories);

  col = 0;
  std::vector<double> predicted(hp.future_len);
  for (std::size_t k = 0; k < seqs.size(); ++k) {
    const auto& s = seqs[k];
    const std::size_t windows = window_count(s.size(), hp);
    double sum = 0.0;
    for (std::size_t w = 0; w < windows; ++w, ++col) {
      for (std::size_t i = 0; i < hp.future_len; ++i) predicted[i] = pred(static_cast<Eigen::Index>(i), col);
      const auto actual = s.subspan(w * hp.window_step + hp.history_len, hp.future_len);
      sum += dsp::pearson_r(predicted, actual).value_or(0.0);
    }
    out[k] = {sum / static_cast<double>(windows), windows};
  }
}

std::size_t argmax_score(std::span<const std::size_t> indices, std::span<const ScoreResult> scores) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < indices.size(); ++j) {
    if (scores[j].score > scores[best].score) best = j;
  }
  return best;
}

}  // namespace

ScoreResult mobivital_score(const ArModel& model, std::span<const double> y) {
  ScoreResult out;
  const std::span<const double> seq[1] = {y};
  score_group(model, seq, std::span<ScoreResult>(&out, 1));
  return out;
}

std::vector<ScoreResult> score_candidates(const ArModel& model, const CandidateBank& bank,
                                          std::span<const std::size_t> indices, Exec exec) {
  std::vector<ScoreResult> out(indices.size());
  const std::size_t groups = (indices.size() + kScoreGroup - 1) / kScoreGroup;
  for_each_index(groups, exec, [&](std::size_t g) {
    const std::size_t lo = g * kScoreGroup;
    const std::size_t n = std::min(kScoreGroup, indices.size() - lo);
    std::vector<std::span<const double>> seqs;
    for (std::size_t j = 0; j < n; ++j) seqs.emplace_back(bank.candidates.at(indices[lo + j]).samples);
    score_group(model, seqs, std::span<ScoreResult>(out.data() + lo, n));
  });
  return out;
}

BankAssessment assess_bank(const CandidateBank& bank, const ArModel& model, const InversionConfig& inv, Exec exec) {
  BankAssessment a;
  a.verdicts = classify_bank(bank, inv, exec);
  std::vector<std::size_t> all(bank.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  a.scores = score_candidates(model, bank, all, exec);
  return a;
}

namespace {

SelectionResult finish_selection(const CandidateBank& bank, std::span<const InversionVerdict> verdicts,
                                 std::span<const std::size_t> scored, std::span<const ScoreResult> scores,
                                 bool flip, const InversionConfig& inv) {
  SelectionResult r;
  const std::size_t best = argmax_score(scored, scores);
  r.selected_index = scored[best];
  r.score = scores[best].score;
  r.selected = bank.candidates[r.selected_index];
  if (flip) {
    r.selected.samples = postflip(r.selected.samples, inv);
    r.flipped = true;
  }
  for (std::size_t j = 0; j < scored.size(); ++j) {
    const auto k = scored[j];
    r.diagnostics.push_back(
        {candidate_key(bank.candidates[k]), k, scores[j].score, scores[j].num_windows, verdicts[k]});
  }
  return r;
}

std::vector<std::size_t> surviving(std::span<const InversionVerdict> verdicts) {
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < verdicts.size(); ++k) {
    if (passes_prefilter(verdicts[k])) kept.push_back(k);
  }
  return kept;
}

std::vector<std::size_t> everything(std::size_t n) {
  std::vector<std::size_t> all(n);
  for (std::size_t k = 0; k < n; ++k) all[k] = k;
  return all;
}

}  // namespace

SelectionResult select(const CandidateBank& bank, const ArModel& model, const SelectConfig& cfg, Exec exec) {
  if (bank.empty()) throw Error(ErrorCode::EmptyBank, "nothing to select from");
  const auto verdicts = classify_bank(bank, cfg.inversion, exec);
  auto scored = cfg.prefilter ? surviving(verdicts) : everything(bank.size());
  const bool fallback = scored.empty();
  if (fallback) scored = everything(bank.size());
  const auto scores = score_candidates(model, bank, scored, exec);
  return finish_selection(bank, verdicts, scored, scores, fallback, cfg.inversion);
}

SelectionResult select_from_assessment(const CandidateBank& bank, const BankAssessment& a, const SelectConfig& cfg) {
  if (bank.empty()) throw Error(ErrorCode::EmptyBank, "nothing to select from");
  if (a.verdicts.size() != bank.size() || a.scores.size() != bank.size()) {
    throw Error(ErrorCode::LengthMismatch, "assessment does not cover the bank");
  }
  auto scored = cfg.prefilter ? surviving(a.verdicts) : everything(bank.size());
  const bool fallback = scored.empty();
  if (fallback) scored = everything(bank.size());
  std::vector<ScoreResult> scores;
  scores.reserve(scored.size());
  for (auto k : scored) scores.push_back(a.scores[k]);
  return finish_selection(bank, a.verdicts, scored, scores, fallback, cfg.inversion);
}

std::string selection_to_json(const SelectionResult& result, int indent) {
  nlohmann::json diag = nlohmann::json::array();
  for (const auto& d : result.diagnostics) {
    diag.push_back({{"candidate_key", d.candidate_key},
                    {"score", d.mobivital_score},
                    {"inverted", d.inversion.inverted},
                    {"ratio", std::isfinite(d.inversion.ratio) ? nlohmann::json(d.inversion.ratio)
                                                               : nlohmann::json(nullptr)}});
  }
  nlohmann::json doc = {{"selected", candidate_key(result.selected)},
                        {"score", result.score},
                        {"flipped", result.flipped},
                        {"diagnostics", std::move(diag)}};
  return doc.dump(indent);
}

void export_waveform_csv(std::span<const double> samples, double sample_rate_hz, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
  out.precision(9);
  out << "time_s,value\n";
  for (std::size_t t = 0; t < samples.size(); ++t) {
    out << static_cast<double>(t) / sample_rate_hz << ',' << samples[t] << '\n';
  }
}

}  // namespace mobivital
