#include "mobivital/ingest.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "mobivital/errors.hpp"

namespace mobivital {
namespace {

static_assert(std::endian::native == std::endian::little, "MVR1/MVG1 I/O assumes a little-endian host");

constexpr char kRecordingMagic[4] = {'M', 'V', 'R', '1'};
constexpr char kTruthMagic[4] = {'M', 'V', 'G', '1'};
constexpr std::uint32_t kFormatVersion = 1;

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const char*>(&value);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_bytes(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  const std::vector<char>& bytes() const { return buf_; }
  void reserve(std::size_t n) { buf_.reserve(n); }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<char> data) : data_(std::move(data)) {}

  template <typename T>
  T get() {
    if (remaining() < sizeof(T)) throw Error(ErrorCode::TruncatedFile, "header ends early");
    T value;
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  const char* cursor() const { return data_.data() + pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::vector<char> data_;
  std::size_t pos_ = 0;
};

std::vector<char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

void check_magic(ByteReader& r, const char (&magic)[4]) {
  if (r.remaining() < 4 || std::memcmp(r.cursor(), magic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, std::string("expected ") + std::string(magic, 4));
  }
  (void)r.get<std::uint32_t>();
  if (auto version = r.get<std::uint32_t>(); version != kFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "unsupported version " + std::to_string(version));
  }
}

}  // namespace

void UwbRecording::validate() const {
  if (num_bins < 1 || num_samples < 1) throw Error(ErrorCode::InvariantViolation, "empty recording");
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
    throw Error(ErrorCode::InvariantViolation, "sample_rate_hz must be > 0");
  if (!(bin_size_m > 0.0) || !std::isfinite(bin_size_m))
    throw Error(ErrorCode::InvariantViolation, "bin_size_m must be > 0");
  if (!std::isfinite(range_start_m)) throw Error(ErrorCode::InvariantViolation, "range_start_m not finite");
  if (iq.size() != static_cast<std::size_t>(num_bins) * num_samples)
    throw Error(ErrorCode::InvariantViolation, "iq size does not match num_bins x num_samples");
  for (const auto& z : iq) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw Error(ErrorCode::InvariantViolation, "non-finite I/Q sample");
  }
}

void GroundTruthWaveform::validate() const {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
    throw Error(ErrorCode::InvariantViolation, "sample_rate_hz must be > 0");
  for (double v : samples) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvariantViolation, "non-finite truth sample");
  }
}

UwbRecording read_recording(const std::filesystem::path& path) {
  ByteReader r(slurp(path));
  check_magic(r, kRecordingMagic);

  UwbRecording rec;
  rec.num_bins = r.get<std::uint32_t>();
  rec.num_samples = r.get<std::uint64_t>();
  rec.sample_rate_hz = r.get<double>();
  rec.range_start_m = r.get<double>();
  rec.bin_size_m = r.get<double>();

  const std::uint64_t cells = static_cast<std::uint64_t>(rec.num_bins) * rec.num_samples;
  if (rec.num_samples != 0 && cells / rec.num_samples != rec.num_bins) {
    throw Error(ErrorCode::DimensionOverflow, "num_bins x num_samples overflows");
  }
  constexpr std::uint64_t kPairBytes = 2 * sizeof(float);
  if (cells > std::numeric_limits<std::uint64_t>::max() / kPairBytes || cells * kPairBytes != r.remaining()) {
    throw Error(ErrorCode::DimensionOverflow,
                "declared " + std::to_string(rec.num_bins) + "x" + std::to_string(rec.num_samples) +
                    " does not match payload of " + std::to_string(r.remaining()) + " bytes");
  }
  rec.iq.resize(cells);
  std::memcpy(rec.iq.data(), r.cursor(), cells * kPairBytes);
  rec.validate();
  return rec;
}

void write_recording(const UwbRecording& rec, const std::filesystem::path& path) {
  rec.validate();
  ByteWriter w;
  w.reserve(kRecordingHeaderBytes + rec.iq.size() * 2 * sizeof(float));
  w.put_bytes(kRecordingMagic, 4);
  w.put(kFormatVersion);
  w.put(rec.num_bins);
  w.put(rec.num_samples);
  w.put(rec.sample_rate_hz);
  w.put(rec.range_start_m);
  w.put(rec.bin_size_m);
  static_assert(sizeof(std::complex<float>) == 2 * sizeof(float));
  w.put_bytes(reinterpret_cast<const char*>(rec.iq.data()), rec.iq.size() * sizeof(std::complex<float>));
  dump(path, w.bytes());
}

GroundTruthWaveform read_truth(const std::filesystem::path& path) {
  ByteReader r(slurp(path));
  check_magic(r, kTruthMagic);
  const auto n = r.get<std::uint64_t>();
  GroundTruthWaveform truth;
  truth.sample_rate_hz = r.get<double>();
  if (n > r.remaining() / sizeof(float) || n * sizeof(float) != r.remaining()) {
    throw Error(ErrorCode::DimensionOverflow, "declared sample count does not match payload");
  }
  truth.samples.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) truth.samples[i] = r.get<float>();
  truth.validate();
  return truth;
}

void write_truth(const GroundTruthWaveform& truth, const std::filesystem::path& path) {
  truth.validate();
  ByteWriter w;
  w.put_bytes(kTruthMagic, 4);
  w.put(kFormatVersion);
  w.put(static_cast<std::uint64_t>(truth.samples.size()));
  w.put(truth.sample_rate_hz);
  for (double v : truth.samples) w.put(static_cast<float>(v));
  dump(path, w.bytes());
}

GroundTruthWaveform resample_to(const GroundTruthWaveform& truth, double target_hz) {
  if (!(target_hz > 0.0)) throw Error(ErrorCode::InvariantViolation, "target_hz must be > 0");
  const std::size_t n = truth.samples.size();
  if (n < 2) throw Error(ErrorCode::TooShort, "resampling needs at least 2 samples");
  if (target_hz == truth.sample_rate_hz) return truth;

  const double ratio = truth.sample_rate_hz / target_hz;
  const auto out_len =
      static_cast<std::size_t>(std::floor(static_cast<double>(n - 1) * target_hz / truth.sample_rate_hz)) + 1;
  GroundTruthWaveform out{target_hz, std::vector<double>(out_len)};
  for (std::size_t k = 0; k < out_len; ++k) {
    const double pos = static_cast<double>(k) * ratio;
    auto i = static_cast<std::size_t>(pos);
    if (i >= n - 1) {
      out.samples[k] = truth.samples[n - 1];
      continue;
    }
    const double frac = pos - static_cast<double>(i);
    out.samples[k] = truth.samples[i] + frac * (truth.samples[i + 1] - truth.samples[i]);
  }
  return out;
}

GroundTruthWaveform align_truth(const GroundTruthWaveform& truth, double sample_rate_hz, std::size_t n) {
  GroundTruthWaveform out = resample_to(truth, sample_rate_hz);
  if (n == 0) throw Error(ErrorCode::TooShort, "cannot align truth to an empty recording");
  out.samples.resize(n, out.samples.back());
  return out;
}

std::vector<SessionManifest> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open manifest " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("manifest parse error: ") + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::ConfigError, "manifest must be a JSON array");

  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    if (fp.is_relative()) fp = base / fp;
    if (!std::filesystem::exists(fp)) throw Error(ErrorCode::IoFailure, "missing referenced file " + fp.string());
    return fp;
  };

  std::vector<SessionManifest> sessions;
  for (const auto& entry : doc) {
    SessionManifest s;
    try {
      s.subject_id = entry.at("subject_id").get<std::string>();
      s.session_id = entry.at("session_id").get<std::string>();
      s.recording_path = resolve(entry.at("recording").get<std::string>());
      if (entry.contains("truth") && !entry.at("truth").is_null()) {
        s.truth_path = resolve(entry.at("truth").get<std::string>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ConfigError, std::string("bad manifest entry: ") + e.what());
    }
    sessions.push_back(std::move(s));
  }
  return sessions;
}

void write_manifest(const std::vector<SessionManifest>& sessions, const std::filesystem::path& path) {
  const auto base = path.parent_path();
  auto rel = [&](const std::filesystem::path& p) {
    auto r = std::filesystem::relative(p, base.empty() ? std::filesystem::path(".") : base);
    return (r.empty() ? p : r).generic_string();
  };
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& s : sessions) {
    nlohmann::json entry = {{"subject_id", s.subject_id},
                            {"session_id", s.session_id},
                            {"recording", rel(s.recording_path)}};
    entry["truth"] = s.truth_path ? nlohmann::json(rel(*s.truth_path)) : nlohmann::json(nullptr);
    doc.push_back(std::move(entry));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create manifest " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace mobivital
