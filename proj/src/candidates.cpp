#include "mobivital/candidates.hpp"

#include <cmath>
#include <fstream>

#include "mobivital/dsp.hpp"
#include "mobivital/errors.hpp"

namespace mobivital {

CandidateSeries extract_candidate(const UwbRecording& rec, std::size_t bin, Channel channel,
                                  const CandidateConfig& cfg) {
  const auto iq = rec.bin(bin);
  std::vector<double> x(iq.size());
  if (channel == Channel::Magnitude) {
    for (std::size_t t = 0; t < iq.size(); ++t) x[t] = std::abs(std::complex<double>(iq[t]));
  } else {
    for (std::size_t t = 0; t < iq.size(); ++t) x[t] = std::arg(std::complex<double>(iq[t]));
    x = dsp::unwrap_phase(x);
  }
  CandidateSeries c;
  c.bin_index = bin;
  c.channel = channel;
  auto filtered = dsp::loopback_filter(x, cfg.alpha);
  c.raw_samples = filtered.size() > cfg.detrend_order ? dsp::detrend_poly(filtered, cfg.detrend_order) : filtered;
  c.samples = dsp::min_max_normalize(c.raw_samples);
  return c;
}

CandidateBank extract_candidates(const UwbRecording& rec, const CandidateConfig& cfg, Exec exec) {
  rec.validate();
  CandidateBank bank;
  bank.num_bins = rec.num_bins;
  bank.num_samples = rec.num_samples;
  bank.sample_rate_hz = rec.sample_rate_hz;
  bank.range_start_m = rec.range_start_m;
  bank.bin_size_m = rec.bin_size_m;
  bank.candidates.resize(2 * static_cast<std::size_t>(rec.num_bins));
  for_each_index(bank.candidates.size(), exec, [&](std::size_t k) {
    bank.candidates[k] = extract_candidate(rec, k / 2, k % 2 == 0 ? Channel::Magnitude : Channel::Phase, cfg);
  });
  return bank;
}

std::string candidate_key(std::size_t bin, Channel channel) {
  return "bin" + std::to_string(bin) + (channel == Channel::Magnitude ? ":mag" : ":ph");
}

std::string candidate_key(const CandidateSeries& c) { return candidate_key(c.bin_index, c.channel); }

void export_candidates_csv(const CandidateBank& bank, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
  for (std::size_t k = 0; k < bank.size(); ++k) out << (k ? "," : "") << candidate_key(bank.candidates[k]);
  out << '\n';
  out.precision(9);
  for (std::size_t t = 0; t < bank.num_samples; ++t) {
    for (std::size_t k = 0; k < bank.size(); ++k) out << (k ? "," : "") << bank.candidates[k].samples[t];
    out << '\n';
  }
}

}  // namespace mobivital
