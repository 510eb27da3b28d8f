#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mobivital {

// Complex range x slow-time matrix. Storage is bin-major: sample t of bin d
// lives at iq[d * num_samples + t].
struct UwbRecording {
  std::uint32_t num_bins = 0;
  std::uint64_t num_samples = 0;
  double sample_rate_hz = 0.0;
  double range_start_m = 0.0;
  double bin_size_m = 0.0;
  std::vector<std::complex<float>> iq;

  std::span<const std::complex<float>> bin(std::size_t d) const {
    return {iq.data() + d * num_samples, static_cast<std::size_t>(num_samples)};
  }
  std::span<std::complex<float>> bin(std::size_t d) {
    return {iq.data() + d * num_samples, static_cast<std::size_t>(num_samples)};
  }
  double bin_range_m(std::size_t d) const { return range_start_m + static_cast<double>(d) * bin_size_m; }

  // Throws InvariantViolation when dimensions, rates or samples are invalid.
  void validate() const;

  bool operator==(const UwbRecording&) const = default;
};

struct GroundTruthWaveform {
  double sample_rate_hz = 0.0;
  std::vector<double> samples;

  std::size_t num_samples() const { return samples.size(); }
  void validate() const;
};

struct SessionManifest {
  std::string subject_id;
  std::string session_id;
  std::filesystem::path recording_path;
  std::optional<std::filesystem::path> truth_path;
};

// MVR1 container: 44-byte little-endian header followed by interleaved
// f32 I/Q pairs, bin-major.
inline constexpr std::size_t kRecordingHeaderBytes = 44;
inline constexpr std::size_t kTruthHeaderBytes = 24;

UwbRecording read_recording(const std::filesystem::path& path);
void write_recording(const UwbRecording& rec, const std::filesystem::path& path);

// MVG1 truth container; samples are stored as f32.
GroundTruthWaveform read_truth(const std::filesystem::path& path);
void write_truth(const GroundTruthWaveform& truth, const std::filesystem::path& path);

// Linear-interpolation resampling; output length floor((N-1)*target/source)+1.
GroundTruthWaveform resample_to(const GroundTruthWaveform& truth, double target_hz);

// Resamples to sample_rate_hz and trims (or pads with the last sample) to n samples.
GroundTruthWaveform align_truth(const GroundTruthWaveform& truth, double sample_rate_hz, std::size_t n);

// Manifest paths are stored relative to the manifest file when possible and
// resolved against its directory on read. Missing referenced files raise IoFailure.
std::vector<SessionManifest> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<SessionManifest>& sessions, const std::filesystem::path& path);

}  // namespace mobivital
