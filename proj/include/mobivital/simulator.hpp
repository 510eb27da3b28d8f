#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mobivital/ingest.hpp"
#include "mobivital/parallel.hpp"

namespace mobivital {

struct BreathConfig {
  double rate_bpm = 15.0;
  double duty = 0.3;  // fraction of each cycle spent above half of full expansion
  double depth_m = 0.005;
  double jitter_frac = 0.1;  // per-cycle period jitter, uniform +-jitter_frac
};

// A strong body reflector near the chest (shoulders, torso) that sways
// independently and only partly follows the breath.
struct TorsoConfig {
  double amplitude = 0.0;  // 0 disables the path
  double offset_m = 0.12;  // range offset from the chest
  double sway_m = 0.001;   // RMS of the band-limited sway
  double breath_coupling = 0.2;
};

// Chest breathing: the belly squeezes while the chest expands, so this
// reflector carries the breath with its sign reversed.
struct AbdomenConfig {
  double amplitude = 0.0;  // 0 disables the path
  double offset_m = -0.2;  // range offset from the chest (negative: nearer the radar)
  double coupling = 1.5;   // displacement relative to the chest, moving against it
};

struct ClutterPath {
  double range_m = 0.0;
  double amplitude = 0.0;
};

enum class BadBinMode { Distort, Invert, Noise };

struct BadBin {
  std::size_t bin = 0;
  BadBinMode mode = BadBinMode::Distort;
};

struct SimScenario {
  double duration_s = 30.0;
  double sample_rate_hz = 50.0;
  std::size_t num_bins = 120;
  double bin_size_m = 0.0514;
  double range_start_m = 0.3;
  double carrier_hz = 7.29e9;
  double bandwidth_hz = 1.4e9;
  double subject_range_m = 1.5;
  double subject_amplitude = 1.0;
  BreathConfig breath;
  TorsoConfig torso;
  AbdomenConfig abdomen;
  std::vector<ClutterPath> clutter;
  double noise_snr_db = 20.0;  // chest path peak amplitude vs complex noise RMS
  double distort_gain = 1.5;   // interference level relative to the bin's breathing modulation
  // Range sidelobes of the pulse: an exponential tail under the Gaussian main lobe.
  double sidelobe_level = 0.1;
  double sidelobe_decay_m = 0.8;
  std::vector<BadBin> bad_bins;
  std::uint64_t seed = 0;

  std::size_t num_samples() const;
  // The anti-phase abdomen carries more breathing motion than the chest.
  bool inverted_dominant() const { return abdomen.amplitude * abdomen.coupling > subject_amplitude; }
  // Throws ScenarioInvalid.
  void validate() const;
};

enum class BinLabel { Empty, Clutter, Good, Inverted, Distorted, Noise };

std::string to_string(BinLabel label);

struct SimTruth {
  std::vector<double> chest_waveform;  // metres of chest expansion
  std::vector<BinLabel> labels;
  double rr_bpm = 0.0;

  GroundTruthWaveform as_ground_truth(double sample_rate_hz) const { return {sample_rate_hz, chest_waveform}; }
};

// Train of raised-cosine breaths in [0, 1]. Each cycle's pulse spans
// 2 * duty of its (jittered) period, so the time above half-max is duty.
std::vector<double> breath_waveform(const BreathConfig& cfg, std::size_t n_samples, double sample_rate_hz,
                                    std::uint64_t seed);

struct SimOutput {
  UwbRecording recording;
  SimTruth truth;
};

// Baseband range-time matrix of the chest, torso and clutter paths. Every
// path deposits a Gaussian range envelope (FWHM c / 2B) at its current range
// with carrier phase 4 pi fc R / c; complex white noise and bad-bin
// corruptions are added per bin with per-bin seeded generators.
SimOutput synthesize(const SimScenario& scn, Exec exec = Exec::Parallel);

// Parameter ranges for random scene generation.
struct CorpusSpec {
  double duration_s = 30.0;
  double rate_lo = 8.0, rate_hi = 25.0;
  double duty_lo = 0.2, duty_hi = 0.4;
  double depth_lo = 0.003, depth_hi = 0.008;
  double jitter = 0.1;
  double range_lo = 0.8, range_hi = 4.0;
  double snr_lo = 22.0, snr_hi = 35.0;
  std::size_t clutter_lo = 2, clutter_hi = 6;
  double clutter_amp_lo = 0.3, clutter_amp_hi = 2.0;
  double torso_amp_lo = 1.0, torso_amp_hi = 2.5;
  double anti_phase_fraction = 0.4;  // scenes with an anti-phase abdomen
  double abdomen_amp_lo = 1.0, abdomen_amp_hi = 2.5;
  double abdomen_coupling_lo = 1.0, abdomen_coupling_hi = 2.0;
  std::size_t max_distort = 2;
  std::size_t max_invert = 2;
  std::size_t max_noise = 1;
  std::size_t bad_bin_radius = 3;  // bad bins land within this many bins of the chest
};

struct SimScene {
  std::string scene_id;
  SimScenario scenario;
  UwbRecording recording;
  SimTruth truth;
};

// Draws n random scenarios; scene i uses a seed derived from (seed, i) only.
std::vector<SimScenario> make_scenarios(std::size_t n_scenes, const CorpusSpec& spec, std::uint64_t seed);

std::vector<SimScene> make_corpus(std::size_t n_scenes, const CorpusSpec& spec, std::uint64_t seed,
                                  Exec exec = Exec::Parallel);

// Writes scene_NNN.{json,mvr,mvg} and manifest.json into dir.
std::filesystem::path write_corpus(const std::vector<SimScene>& scenes, const std::filesystem::path& dir);

nlohmann::json to_json(const SimScenario& scn);
// Unknown keys raise ConfigError; missing keys keep their defaults.
SimScenario scenario_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CorpusSpec& spec);
CorpusSpec corpus_spec_from_json(const nlohmann::json& j);

}  // namespace mobivital
