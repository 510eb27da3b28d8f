#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mobivital/candidates.hpp"
#include "mobivital/parallel.hpp"

namespace mobivital {

struct InversionConfig {
  double r_th = 1.0;
  std::size_t smooth_order = 5;
  std::size_t smooth_frame = 101;  // nearest odd length to a 2 s window at 50 Hz
  double min_prominence = 0.1;
  double rel_height = 0.5;
};

// ratio = w_pos / w_inv; NaN (and confident = false) when either side has no peaks.
struct InversionVerdict {
  bool inverted = false;
  double ratio = 0.0;
  double w_pos = 0.0;
  double w_inv = 0.0;
  bool confident = false;
};

// Duty-cycle test: a breath spends less than half its cycle expanded, so the
// upward peaks of a correctly oriented waveform are narrower than the
// upward peaks of its mirror. Ratios >= r_th are classified as inverted.
InversionVerdict detect_inversion(std::span<const double> y, const InversionConfig& cfg = {});

std::vector<InversionVerdict> classify_bank(const CandidateBank& bank, const InversionConfig& cfg = {},
                                            Exec exec = Exec::Parallel);

struct RejectedCandidate {
  std::size_t index = 0;  // position in the input bank
  std::string key;
  InversionVerdict verdict;
};

struct PrefilterResult {
  CandidateBank kept;
  std::vector<std::size_t> kept_indices;  // positions in the input bank
  std::vector<RejectedCandidate> rejected;
};

// Keeps candidates that are not confidently inverted.
PrefilterResult prefilter_bank(const CandidateBank& bank, const InversionConfig& cfg = {},
                               Exec exec = Exec::Parallel);

inline bool passes_prefilter(const InversionVerdict& v) { return !(v.inverted && v.confident); }

// Mirrors and re-normalizes y when it is confidently inverted; otherwise returns y.
std::vector<double> postflip(std::span<const double> y, const InversionConfig& cfg = {});

// One JSON object per line: {candidate_key, inverted, ratio, w_pos, w_inv, confident}.
void export_verdicts_jsonl(const CandidateBank& bank, std::span<const InversionVerdict> verdicts,
                           const std::filesystem::path& path);

}  // namespace mobivital
