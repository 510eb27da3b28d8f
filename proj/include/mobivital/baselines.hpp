#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mobivital/candidates.hpp"
#include "mobivital/ingest.hpp"
#include "mobivital/inversion.hpp"

namespace mobivital {

enum class BaselineMethod { Variance, Cfar, Snr, Oracle };

std::string to_string(BaselineMethod m);

struct BaselineChoice {
  BaselineMethod method = BaselineMethod::Variance;
  std::size_t selected_index = 0;  // position in the bank
  std::string selected_key;
  double score_raw = 0.0;       // method-specific: variance, CFAR excess ratio, band SNR, correlation
  std::vector<double> samples;  // selected waveform after the method's inversion policy
  bool flipped = false;
};

struct CfarConfig {
  std::size_t guard = 2;
  std::size_t train = 8;  // training cells on each side
  double pfa = 1e-3;
};

struct Band {
  double lo_hz = 0.2;
  double hi_hz = 0.7;
};

struct BaselineConfig {
  InversionConfig inversion;
  // Variance/CFAR flip their pick afterwards; SNR filters inverted candidates first.
  bool inversion_detection = true;
  CfarConfig cfar;
  Band band;
  double variance_prominence = 0.1;
};

// Bin of the highest peak of the (normalized) per-bin variance of the
// magnitude candidates; the global maximum when the profile has no peak.
BaselineChoice select_variance(const CandidateBank& bank, const BaselineConfig& cfg = {});

// Hann-windowed FFT magnitude of every magnitude candidate, restricted to
// frequency rows inside the band. magnitude is (rows x num_bins).
struct RangeFftMap {
  std::vector<double> freqs_hz;
  Eigen::MatrixXd magnitude;
};
RangeFftMap range_fft_map(const CandidateBank& bank, const Band& band);

// CA-CFAR scale factor for a square-law detector averaging n cells.
double cfar_threshold_factor(std::size_t n_train, double pfa);

struct CfarDetection {
  Eigen::Index row = 0;
  Eigen::Index cell = 0;
  double power = 0.0;
  double threshold = 0.0;
};

// Cell-averaging CFAR along each row of a power map (cells = columns).
// Training windows are clipped at the edges and the factor follows the
// number of cells actually averaged.
std::vector<CfarDetection> ca_cfar(const Eigen::MatrixXd& power, const CfarConfig& cfg);

BaselineChoice select_cfar(const CandidateBank& bank, const BaselineConfig& cfg = {});

// In-band energy over out-of-band energy, DC excluded.
double band_snr(std::span<const double> y, double sample_rate_hz, const Band& band);

BaselineChoice select_snr(const CandidateBank& bank, const BaselineConfig& cfg = {});

// Highest correlation with the ground truth over every candidate.
BaselineChoice select_oracle(const CandidateBank& bank, const GroundTruthWaveform& truth);

}  // namespace mobivital
