#include "mobivital/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mobivital/dsp.hpp"
#include "mobivital/errors.hpp"

namespace mobivital {
namespace {

void require_nonempty(const CandidateBank& bank) {
  if (bank.empty()) throw Error(ErrorCode::EmptyBank, "baseline needs at least one candidate");
}

std::vector<std::size_t> magnitude_indices(const CandidateBank& bank) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < bank.size(); ++k) {
    if (bank.candidates[k].channel == Channel::Magnitude) idx.push_back(k);
  }
  if (idx.empty()) throw Error(ErrorCode::EmptyBank, "bank has no magnitude candidates");
  return idx;
}

BaselineChoice choose(BaselineMethod method, const CandidateBank& bank, std::size_t index, double score,
                      bool post_invert, const InversionConfig& inv) {
  BaselineChoice c;
  c.method = method;
  c.selected_index = index;
  c.selected_key = candidate_key(bank.candidates[index]);
  c.score_raw = score;
  c.samples = bank.candidates[index].samples;
  if (post_invert) {
    const auto v = detect_inversion(c.samples, inv);
    if (v.inverted && v.confident) {
      c.samples = postflip(c.samples, inv);
      c.flipped = true;
    }
  }
  return c;
}

}  // namespace

std::string to_string(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::Variance: return "variance";
    case BaselineMethod::Cfar: return "cfar";
    case BaselineMethod::Snr: return "snr";
    case BaselineMethod::Oracle: return "oracle";
  }
  return "unknown";
}

BaselineChoice select_variance(const CandidateBank& bank, const BaselineConfig& cfg) {
  require_nonempty(bank);
  const auto mags = magnitude_indices(bank);
  std::vector<double> profile(mags.size());
  for (std::size_t j = 0; j < mags.size(); ++j) profile[j] = dsp::variance(bank.candidates[mags[j]].raw_samples);

  std::size_t best = static_cast<std::size_t>(std::max_element(profile.begin(), profile.end()) - profile.begin());
  if (profile.size() >= 3) {
    const auto normalized = dsp::min_max_normalize(profile);
    const auto peaks = dsp::find_peaks(normalized, cfg.variance_prominence);
    if (!peaks.empty()) {
      best = peaks.indices[0];
      for (auto p : peaks.indices) {
        if (profile[p] > profile[best]) best = p;
      }
    }
  }
  return choose(BaselineMethod::Variance, bank, mags[best], profile[best], cfg.inversion_detection, cfg.inversion);
}

RangeFftMap range_fft_map(const CandidateBank& bank, const Band& band) {
  const auto mags = magnitude_indices(bank);
  RangeFftMap map;
  std::vector<std::size_t> rows;
  for (std::size_t j = 0; j < mags.size(); ++j) {
    const auto ps = dsp::power_spectrum(bank.candidates[mags[j]].raw_samples, bank.sample_rate_hz);
    if (j == 0) {
      for (std::size_t k = 1; k < ps.freqs_hz.size(); ++k) {
        if (ps.freqs_hz[k] >= band.lo_hz && ps.freqs_hz[k] <= band.hi_hz) {
          rows.push_back(k);
          map.freqs_hz.push_back(ps.freqs_hz[k]);
        }
      }
      map.magnitude.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(mags.size()));
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      map.magnitude(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = std::sqrt(ps.power[rows[r]]);
    }
  }
  return map;
}

double cfar_threshold_factor(std::size_t n_train, double pfa) {
  const auto n = static_cast<double>(n_train);
  return n * (std::pow(pfa, -1.0 / n) - 1.0);
}

std::vector<CfarDetection> ca_cfar(const Eigen::MatrixXd& power, const CfarConfig& cfg) {
  std::vector<CfarDetection> hits;
  const Eigen::Index cells = power.cols();
  const auto guard = static_cast<Eigen::Index>(cfg.guard);
  const auto train = static_cast<Eigen::Index>(cfg.train);
  for (Eigen::Index r = 0; r < power.rows(); ++r) {
    for (Eigen::Index c = 0; c < cells; ++c) {
      double sum = 0.0;
      std::size_t n = 0;
      for (Eigen::Index k = c - guard - train; k < c - guard; ++k) {
        if (k >= 0) {
          sum += power(r, k);
          ++n;
        }
      }
      for (Eigen::Index k = c + guard + 1; k <= c + guard + train; ++k) {
        if (k < cells) {
          sum += power(r, k);
          ++n;
        }
      }
      if (n == 0) continue;
      const double threshold = cfar_threshold_factor(n, cfg.pfa) * sum / static_cast<double>(n);
      if (power(r, c) > threshold) hits.push_back({r, c, power(r, c), threshold});
    }
  }
  return hits;
}

BaselineChoice select_cfar(const CandidateBank& bank, const BaselineConfig& cfg) {
  require_nonempty(bank);
  if (bank.num_samples < 64) throw Error(ErrorCode::TooShort, "CFAR needs at least 64 samples");
  const auto mags = magnitude_indices(bank);
  const auto map = range_fft_map(bank, cfg.band);
  if (map.magnitude.size() == 0) throw Error(ErrorCode::TooShort, "band contains no FFT rows");
  const Eigen::MatrixXd power = map.magnitude.array().square();
  const auto hits = ca_cfar(power, cfg.cfar);

  Eigen::Index best_cell = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  if (!hits.empty()) {
    for (const auto& h : hits) {
      const double excess = h.threshold > 0.0 ? h.power / h.threshold : std::numeric_limits<double>::infinity();
      if (excess > best_score) {
        best_score = excess;
        best_cell = h.cell;
      }
    }
  } else {
    // No detections: fall back to the strongest map cell.
    Eigen::Index row = 0;
    best_score = power.maxCoeff(&row, &best_cell);
  }
  return choose(BaselineMethod::Cfar, bank, mags[static_cast<std::size_t>(best_cell)], best_score,
                cfg.inversion_detection, cfg.inversion);
}

double band_snr(std::span<const double> y, double sample_rate_hz, const Band& band) {
  // Remove the mean first so window leakage from DC does not land in the lowest bins.
  std::vector<double> centered(y.begin(), y.end());
  const double mu = dsp::mean(y);
  for (double& v : centered) v -= mu;
  const auto ps = dsp::power_spectrum(centered, sample_rate_hz);
  double in = 0.0, out = 0.0;
  for (std::size_t k = 1; k < ps.power.size(); ++k) {
    if (ps.freqs_hz[k] >= band.lo_hz && ps.freqs_hz[k] <= band.hi_hz) {
      in += ps.power[k];
    } else {
      out += ps.power[k];
    }
  }
  if (out > 0.0) return in / out;
  return in > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

BaselineChoice select_snr(const CandidateBank& bank, const BaselineConfig& cfg) {
  require_nonempty(bank);
  std::vector<std::size_t> pool;
  if (cfg.inversion_detection) {
    const auto verdicts = classify_bank(bank, cfg.inversion, Exec::Serial);
    for (std::size_t k = 0; k < bank.size(); ++k) {
      if (passes_prefilter(verdicts[k])) pool.push_back(k);
    }
  }
  if (pool.empty()) {
    pool.resize(bank.size());
    for (std::size_t k = 0; k < bank.size(); ++k) pool[k] = k;
  }
  std::size_t best = pool[0];
  double best_snr = -1.0;
  for (auto k : pool) {
    const double snr = band_snr(bank.candidates[k].samples, bank.sample_rate_hz, cfg.band);
    if (snr > best_snr) {
      best_snr = snr;
      best = k;
    }
  }
  return choose(BaselineMethod::Snr, bank, best, best_snr, false, cfg.inversion);
}

BaselineChoice select_oracle(const CandidateBank& bank, const GroundTruthWaveform& truth) {
  require_nonempty(bank);
  if (truth.samples.size() != bank.num_samples) {
    throw Error(ErrorCode::LengthMismatch, "truth is not aligned with the bank");
  }
  std::size_t best = 0;
  double best_r = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < bank.size(); ++k) {
    const double r = dsp::pearson_r(bank.candidates[k].samples, truth.samples).value_or(0.0);
    if (r > best_r) {
      best_r = r;
      best = k;
    }
  }
  return choose(BaselineMethod::Oracle, bank, best, best_r, false, {});
}

}  // namespace mobivital
