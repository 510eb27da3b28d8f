#include "mobivital/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "mobivital/dsp.hpp"
#include "mobivital/errors.hpp"

namespace mobivital {
namespace {

// Mean width of the prominent peaks, or nullopt when there are none.
std::optional<double> mean_peak_width(std::span<const double> y, const InversionConfig& cfg) {
  auto peaks = dsp::find_peaks(y, cfg.min_prominence);
  if (peaks.empty()) return std::nullopt;
  const auto widths = dsp::peak_widths(y, peaks, cfg.rel_height);
  return dsp::mean(widths);
}

}  // namespace

InversionVerdict detect_inversion(std::span<const double> y, const InversionConfig& cfg) {
  if (y.size() < cfg.smooth_frame) throw Error(ErrorCode::TooShort, "candidate shorter than smoothing frame");
  const auto raw = dsp::savitzky_golay(y, cfg.smooth_order, cfg.smooth_frame);
  InversionVerdict v;
  // Rounding ripple on a flat input would otherwise be stretched to full scale.
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  if (!(*hi - *lo > 1e-9 * std::max({1.0, std::abs(*lo), std::abs(*hi)}))) {
    v.ratio = std::numeric_limits<double>::quiet_NaN();
    return v;
  }
  const auto smoothed = dsp::min_max_normalize(raw);
  std::vector<double> mirrored(smoothed.size());
  for (std::size_t i = 0; i < smoothed.size(); ++i) mirrored[i] = -smoothed[i];

  const auto w_pos = mean_peak_width(smoothed, cfg);
  const auto w_inv = mean_peak_width(mirrored, cfg);
  v.w_pos = w_pos.value_or(0.0);
  v.w_inv = w_inv.value_or(0.0);
  if (!w_pos || !w_inv || !(*w_inv > 0.0)) {
    v.ratio = std::numeric_limits<double>::quiet_NaN();
    return v;
  }
  v.confident = true;
  v.ratio = *w_pos / *w_inv;
  v.inverted = !(v.ratio < cfg.r_th);
  return v;
}

std::vector<InversionVerdict> classify_bank(const CandidateBank& bank, const InversionConfig& cfg, Exec exec) {
  std::vector<InversionVerdict> verdicts(bank.size());
  for_each_index(bank.size(), exec,
                 [&](std::size_t k) { verdicts[k] = detect_inversion(bank.candidates[k].samples, cfg); });
  return verdicts;
}

PrefilterResult prefilter_bank(const CandidateBank& bank, const InversionConfig& cfg, Exec exec) {
  const auto verdicts = classify_bank(bank, cfg, exec);
  PrefilterResult out;
  out.kept.num_bins = bank.num_bins;
  out.kept.num_samples = bank.num_samples;
  out.kept.sample_rate_hz = bank.sample_rate_hz;
  out.kept.range_start_m = bank.range_start_m;
  out.kept.bin_size_m = bank.bin_size_m;
  for (std::size_t k = 0; k < bank.size(); ++k) {
    if (passes_prefilter(verdicts[k])) {
      out.kept.candidates.push_back(bank.candidates[k]);
      out.kept_indices.push_back(k);
    } else {
      out.rejected.push_back({k, candidate_key(bank.candidates[k]), verdicts[k]});
    }
  }
  return out;
}

std::vector<double> postflip(std::span<const double> y, const InversionConfig& cfg) {
  const auto v = detect_inversion(y, cfg);
  if (!(v.inverted && v.confident)) return {y.begin(), y.end()};
  std::vector<double> flipped(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) flipped[i] = -y[i];
  return dsp::min_max_normalize(flipped);
}

void export_verdicts_jsonl(const CandidateBank& bank, std::span<const InversionVerdict> verdicts,
                           const std::filesystem::path& path) {
  if (verdicts.size() != bank.size()) throw Error(ErrorCode::LengthMismatch, "one verdict per candidate expected");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
  for (std::size_t k = 0; k < bank.size(); ++k) {
    const auto& v = verdicts[k];
    nlohmann::json line = {{"candidate_key", candidate_key(bank.candidates[k])},
                           {"inverted", v.inverted},
                           {"ratio", std::isfinite(v.ratio) ? nlohmann::json(v.ratio) : nlohmann::json(nullptr)},
                           {"w_pos", v.w_pos},
                           {"w_inv", v.w_inv},
                           {"confident", v.confident}};
    out << line.dump() << '\n';
  }
}

}  // namespace mobivital
