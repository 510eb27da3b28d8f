#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "mobivital/ingest.hpp"
#include "mobivital/parallel.hpp"

namespace mobivital {

enum class Channel { Magnitude, Phase };

struct CandidateSeries {
  std::size_t bin_index = 0;
  Channel channel = Channel::Magnitude;
  std::vector<double> samples;      // min-max normalized to [0, 1]
  std::vector<double> raw_samples;  // after clutter removal and detrend, before normalization
};

struct CandidateBank {
  std::vector<CandidateSeries> candidates;  // bin-major, magnitude before phase
  std::uint32_t num_bins = 0;
  std::uint64_t num_samples = 0;
  double sample_rate_hz = 0.0;
  double range_start_m = 0.0;
  double bin_size_m = 0.0;

  std::size_t size() const { return candidates.size(); }
  bool empty() const { return candidates.empty(); }
};

struct CandidateConfig {
  double alpha = 0.999;  // loop-back filter coefficient
  std::size_t detrend_order = 2;
};

// Per bin: magnitude -> loop-back -> detrend -> normalize, and
// angle -> unwrap -> loop-back -> detrend -> normalize.
CandidateBank extract_candidates(const UwbRecording& rec, const CandidateConfig& cfg = {},
                                 Exec exec = Exec::Parallel);

// Builds one channel of one bin; extract_candidates is this applied to every (bin, channel).
CandidateSeries extract_candidate(const UwbRecording& rec, std::size_t bin, Channel channel,
                                  const CandidateConfig& cfg);

// "bin{index}:{mag|ph}"
std::string candidate_key(const CandidateSeries& c);
std::string candidate_key(std::size_t bin, Channel channel);

// One column per candidate, header row of candidate keys.
void export_candidates_csv(const CandidateBank& bank, const std::filesystem::path& path);

}  // namespace mobivital
