#include "mobivital/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "mobivital/errors.hpp"
#include "mobivital/json_util.hpp"

namespace mobivital {
namespace {

constexpr double kSpeedOfLight = 299'792'458.0;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) { return splitmix64(seed ^ splitmix64(stream)); }

// Sum of random sinusoids with frequencies in [lo, hi] Hz, scaled to unit RMS.
std::vector<double> band_limited_noise(std::size_t n, double fs, double lo, double hi, std::mt19937_64& rng) {
  constexpr int kTones = 24;
  std::uniform_real_distribution<double> freq(lo, hi);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::vector<double> out(n, 0.0);
  for (int k = 0; k < kTones; ++k) {
    const double f = freq(rng);
    const double p = phase(rng);
    for (std::size_t t = 0; t < n; ++t) out[t] += std::sin(kTwoPi * f * static_cast<double>(t) / fs + p);
  }
  double power = 0.0;
  for (double v : out) power += v * v;
  const double rms = std::sqrt(power / static_cast<double>(std::max<std::size_t>(n, 1)));
  if (rms > 0.0) {
    for (double& v : out) v /= rms;
  }
  return out;
}

struct RangeProfile {
  double sigma;
  double sidelobe_level;
  double sidelobe_decay_m;

  double main_lobe(double bin_range, double path_range) const {
    const double d = bin_range - path_range;
    return std::exp(-d * d / (2.0 * sigma * sigma));
  }
  double operator()(double bin_range, double path_range) const {
    const double d = std::abs(bin_range - path_range);
    return main_lobe(bin_range, path_range) + sidelobe_level * std::exp(-d / sidelobe_decay_m);
  }
};

const BadBin* find_bad_bin(const SimScenario& scn, std::size_t bin) {
  for (const auto& b : scn.bad_bins) {
    if (b.bin == bin) return &b;
  }
  return nullptr;
}

std::string mode_name(BadBinMode m) {
  switch (m) {
    case BadBinMode::Distort: return "distort";
    case BadBinMode::Invert: return "invert";
    case BadBinMode::Noise: return "noise";
  }
  return "distort";
}

BadBinMode mode_from_name(const std::string& s) {
  if (s == "distort") return BadBinMode::Distort;
  if (s == "invert") return BadBinMode::Invert;
  if (s == "noise") return BadBinMode::Noise;
  throw Error(ErrorCode::ConfigError, "unknown bad-bin mode '" + s + "'");
}

}  // namespace

std::string to_string(BinLabel label) {
  switch (label) {
    case BinLabel::Empty: return "empty";
    case BinLabel::Clutter: return "clutter";
    case BinLabel::Good: return "good";
    case BinLabel::Inverted: return "inverted";
    case BinLabel::Distorted: return "distorted";
    case BinLabel::Noise: return "noise";
  }
  return "empty";
}

std::size_t SimScenario::num_samples() const {
  return static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
}

void SimScenario::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::ScenarioInvalid, why); };
  if (!(duration_s > 0.0) || !(sample_rate_hz > 0.0) || num_samples() < 1) fail("duration and rate must be positive");
  if (num_bins < 1 || !(bin_size_m > 0.0)) fail("range geometry must be positive");
  if (!(carrier_hz > 0.0) || !(bandwidth_hz > 0.0)) fail("carrier and bandwidth must be positive");
  if (!(breath.duty > 0.0) || breath.duty > 0.5) fail("duty must be in (0, 0.5]");
  if (breath.rate_bpm < 4.0 || breath.rate_bpm > 40.0) fail("breath rate must be in [4, 40] bpm");
  if (breath.depth_m < 0.0 || breath.jitter_frac < 0.0 || breath.jitter_frac >= 1.0) fail("bad breath depth/jitter");
  const double range_end = range_start_m + static_cast<double>(num_bins) * bin_size_m;
  if (subject_range_m < range_start_m || subject_range_m > range_end) fail("subject outside the range window");
  if (!(subject_amplitude > 0.0)) fail("subject amplitude must be positive");
  if (torso.amplitude < 0.0 || torso.sway_m < 0.0) fail("bad torso parameters");
  if (abdomen.amplitude < 0.0 || abdomen.coupling < 0.0) fail("bad abdomen parameters");
  for (const auto& c : clutter) {
    if (c.amplitude < 0.0) fail("clutter amplitude must be non-negative");
  }
  for (const auto& b : bad_bins) {
    if (b.bin >= num_bins) fail("bad bin index outside the range window");
  }
  if (!std::isfinite(noise_snr_db)) fail("noise_snr_db must be finite");
  if (sidelobe_level < 0.0 || !(sidelobe_decay_m > 0.0)) fail("bad sidelobe parameters");
}

std::vector<double> breath_waveform(const BreathConfig& cfg, std::size_t n_samples, double sample_rate_hz,
                                    std::uint64_t seed) {
  if (cfg.rate_bpm < 4.0 || cfg.rate_bpm > 40.0) throw Error(ErrorCode::BadRate, "rate must be in [4, 40] bpm");
  if (!(cfg.duty > 0.0) || cfg.duty > 0.5) throw Error(ErrorCode::InvariantViolation, "duty must be in (0, 0.5]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double period = 60.0 / cfg.rate_bpm;
  std::uniform_real_distribution<double> lead(0.0, period);

  std::vector<double> out(n_samples, 0.0);
  const double end = static_cast<double>(n_samples) / sample_rate_hz;
  double start = -lead(rng);
  while (start < end) {
    const double p = period * (1.0 + cfg.jitter_frac * unit(rng));
    const double width = 2.0 * cfg.duty * p;
    const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(start * sample_rate_hz)));
    for (std::size_t t = first; t < n_samples; ++t) {
      const double u = static_cast<double>(t) / sample_rate_hz - start;
      if (u >= width) break;
      out[t] = 0.5 * (1.0 - std::cos(kTwoPi * u / width));
    }
    start += p;
  }
  return out;
}

SimOutput synthesize(const SimScenario& scn, Exec exec) {
  scn.validate();
  const std::size_t n = scn.num_samples();
  const double fs = scn.sample_rate_hz;
  const RangeProfile envelope{kSpeedOfLight / (2.0 * scn.bandwidth_hz) / (2.0 * std::sqrt(2.0 * std::log(2.0))),
                              scn.sidelobe_level, scn.sidelobe_decay_m};
  const double k_phase = 4.0 * std::numbers::pi * scn.carrier_hz / kSpeedOfLight;

  SimOutput out;
  const auto pulses = breath_waveform(scn.breath, n, fs, stream_seed(scn.seed, 1));
  out.truth.chest_waveform.resize(n);
  for (std::size_t t = 0; t < n; ++t) out.truth.chest_waveform[t] = scn.breath.depth_m * pulses[t];
  out.truth.rr_bpm = scn.breath.rate_bpm;

  std::vector<double> sway(n, 0.0);
  if (scn.torso.amplitude > 0.0) {
    std::mt19937_64 rng(stream_seed(scn.seed, 2));
    sway = band_limited_noise(n, fs, 0.1, 0.5, rng);
    for (double& v : sway) v *= scn.torso.sway_m;
  }

  const double noise_sigma = scn.subject_amplitude / (std::sqrt(2.0) * std::pow(10.0, scn.noise_snr_db / 20.0));

  auto& rec = out.recording;
  rec.num_bins = static_cast<std::uint32_t>(scn.num_bins);
  rec.num_samples = n;
  rec.sample_rate_hz = fs;
  rec.range_start_m = scn.range_start_m;
  rec.bin_size_m = scn.bin_size_m;
  rec.iq.resize(scn.num_bins * n);

  for_each_index(scn.num_bins, exec, [&](std::size_t d) {
    const double r_bin = rec.bin_range_m(d);
    const BadBin* bad = find_bad_bin(scn, d);
    const double chest_sign = (bad && bad->mode == BadBinMode::Invert) ? -1.0 : 1.0;
    std::mt19937_64 rng(stream_seed(scn.seed, 1000 + d));
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<std::complex<double>> clean(n);
    for (std::size_t t = 0; t < n; ++t) {
      const double r_chest = scn.subject_range_m + chest_sign * out.truth.chest_waveform[t];
      std::complex<double> w =
          scn.subject_amplitude * envelope(r_bin, r_chest) * std::polar(1.0, k_phase * r_chest);
      if (scn.torso.amplitude > 0.0) {
        const double r_torso = scn.subject_range_m + scn.torso.offset_m + sway[t] +
                               scn.torso.breath_coupling * out.truth.chest_waveform[t];
        w += scn.torso.amplitude * envelope(r_bin, r_torso) * std::polar(1.0, k_phase * r_torso);
      }
      if (scn.abdomen.amplitude > 0.0) {
        const double r_abdomen =
            scn.subject_range_m + scn.abdomen.offset_m - scn.abdomen.coupling * out.truth.chest_waveform[t];
        w += scn.abdomen.amplitude * envelope(r_bin, r_abdomen) * std::polar(1.0, k_phase * r_abdomen);
      }
      for (const auto& c : scn.clutter) {
        w += c.amplitude * envelope(r_bin, c.range_m) * std::polar(1.0, k_phase * c.range_m);
      }
      clean[t] = w;
    }

    if (bad && bad->mode == BadBinMode::Distort) {
      std::complex<double> mean_w = 0.0;
      for (const auto& w : clean) mean_w += w;
      mean_w /= static_cast<double>(n);
      double mod_power = 0.0;
      for (const auto& w : clean) mod_power += std::norm(w - mean_w);
      const double level = scn.distort_gain * std::sqrt(mod_power / static_cast<double>(n));
      const auto interference = band_limited_noise(n, fs, 0.2, 0.7, rng);
      const auto rotation = std::polar(1.0, std::uniform_real_distribution<double>(0.0, kTwoPi)(rng));
      for (std::size_t t = 0; t < n; ++t) clean[t] += level * interference[t] * rotation;
    } else if (bad && bad->mode == BadBinMode::Noise) {
      double power = 0.0;
      for (const auto& w : clean) power += std::norm(w);
      const double rms = std::sqrt(power / static_cast<double>(n) / 2.0);
      for (auto& w : clean) w = {rms * gauss(rng), rms * gauss(rng)};
    }

    auto dst = rec.bin(d);
    for (std::size_t t = 0; t < n; ++t) {
      const std::complex<double> noisy = clean[t] + std::complex<double>(noise_sigma * gauss(rng), noise_sigma * gauss(rng));
      dst[t] = std::complex<float>(static_cast<float>(noisy.real()), static_cast<float>(noisy.imag()));
    }
  });

  // Labels follow the main lobes only: whichever breathing path dominates a
  // bin sets its orientation, static reflectors above the floor mark clutter.
  out.truth.labels.resize(scn.num_bins, BinLabel::Empty);
  for (std::size_t d = 0; d < scn.num_bins; ++d) {
    const double r_bin = rec.bin_range_m(d);
    auto& label = out.truth.labels[d];
    bool clutter = false;
    for (const auto& c : scn.clutter) clutter = clutter || envelope.main_lobe(r_bin, c.range_m) * c.amplitude > 0.2;
    if (clutter) label = BinLabel::Clutter;
    const double chest = scn.subject_amplitude * envelope.main_lobe(r_bin, scn.subject_range_m);
    const double torso = scn.torso.amplitude * scn.torso.breath_coupling *
                         envelope.main_lobe(r_bin, scn.subject_range_m + scn.torso.offset_m);
    const double abdomen = scn.abdomen.amplitude * scn.abdomen.coupling *
                           envelope.main_lobe(r_bin, scn.subject_range_m + scn.abdomen.offset_m);
    const BadBin* bad = find_bad_bin(scn, d);
    if (std::max({chest, torso, abdomen}) > 0.2) {
      bool upright = abdomen < std::max(chest, torso);
      if (bad && bad->mode == BadBinMode::Invert) upright = !upright;
      label = upright ? BinLabel::Good : BinLabel::Inverted;
    } else if (scn.torso.amplitude * envelope.main_lobe(r_bin, scn.subject_range_m + scn.torso.offset_m) > 0.2) {
      label = BinLabel::Clutter;
    }
    if (bad && bad->mode == BadBinMode::Invert && label == BinLabel::Empty) label = BinLabel::Inverted;
    if (bad && bad->mode == BadBinMode::Distort) label = BinLabel::Distorted;
    if (bad && bad->mode == BadBinMode::Noise) label = BinLabel::Noise;
  }
  return out;
}

std::vector<SimScenario> make_scenarios(std::size_t n_scenes, const CorpusSpec& spec, std::uint64_t seed) {
  if (n_scenes < 1) throw Error(ErrorCode::ScenarioInvalid, "corpus needs at least one scene");
  std::vector<SimScenario> out;
  out.reserve(n_scenes);
  for (std::size_t i = 0; i < n_scenes; ++i) {
    std::mt19937_64 rng(stream_seed(seed, i));
    auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    auto count = [&](std::size_t lo, std::size_t hi) {
      return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };

    SimScenario s;
    s.duration_s = spec.duration_s;
    s.breath.rate_bpm = uni(spec.rate_lo, spec.rate_hi);
    s.breath.duty = uni(spec.duty_lo, spec.duty_hi);
    s.breath.depth_m = uni(spec.depth_lo, spec.depth_hi);
    s.breath.jitter_frac = spec.jitter;
    s.subject_range_m = uni(spec.range_lo, spec.range_hi);
    s.noise_snr_db = uni(spec.snr_lo, spec.snr_hi);
    s.torso.amplitude = uni(spec.torso_amp_lo, spec.torso_amp_hi);
    const bool anti_phase = uni(0.0, 1.0) < spec.anti_phase_fraction;
    const double abdomen_amp = uni(spec.abdomen_amp_lo, spec.abdomen_amp_hi);
    const double abdomen_coupling = uni(spec.abdomen_coupling_lo, spec.abdomen_coupling_hi);
    const double abdomen_offset = -uni(0.15, 0.3);
    if (anti_phase) s.abdomen = {abdomen_amp, abdomen_offset, abdomen_coupling};
    s.torso.offset_m = uni(0.08, 0.2);

    const double range_end = s.range_start_m + static_cast<double>(s.num_bins) * s.bin_size_m;
    const std::size_t n_clutter = count(spec.clutter_lo, spec.clutter_hi);
    for (std::size_t c = 0; c < n_clutter; ++c) {
      s.clutter.push_back({uni(s.range_start_m, range_end), uni(spec.clutter_amp_lo, spec.clutter_amp_hi)});
    }

    const auto center = static_cast<long>(std::lround((s.subject_range_m - s.range_start_m) / s.bin_size_m));
    const auto radius = static_cast<long>(spec.bad_bin_radius);
    auto pick_bins = [&](std::size_t how_many, BadBinMode mode) {
      for (std::size_t k = 0; k < how_many; ++k) {
        for (int attempt = 0; attempt < 16; ++attempt) {
          const long b = center + std::uniform_int_distribution<long>(-radius, radius)(rng);
          if (b < 0 || b >= static_cast<long>(s.num_bins)) continue;
          const auto bin = static_cast<std::size_t>(b);
          if (find_bad_bin(s, bin)) continue;
          s.bad_bins.push_back({bin, mode});
          break;
        }
      }
    };
    pick_bins(count(0, spec.max_distort), BadBinMode::Distort);
    pick_bins(count(0, spec.max_invert), BadBinMode::Invert);
    pick_bins(count(0, spec.max_noise), BadBinMode::Noise);
    s.seed = stream_seed(seed ^ 0x5eedULL, i);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SimScene> make_corpus(std::size_t n_scenes, const CorpusSpec& spec, std::uint64_t seed, Exec exec) {
  const auto scenarios = make_scenarios(n_scenes, spec, seed);
  std::vector<SimScene> scenes(scenarios.size());
  for_each_index(scenes.size(), exec, [&](std::size_t i) {
    char id[32];
    std::snprintf(id, sizeof id, "scene_%03zu", i);
    auto sim = synthesize(scenarios[i], Exec::Serial);
    scenes[i] = {id, scenarios[i], std::move(sim.recording), std::move(sim.truth)};
  });
  return scenes;
}

std::filesystem::path write_corpus(const std::vector<SimScene>& scenes, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string());
  std::vector<SessionManifest> manifest;
  for (const auto& scene : scenes) {
    const auto rec_path = dir / (scene.scene_id + ".mvr");
    const auto truth_path = dir / (scene.scene_id + ".mvg");
    write_recording(scene.recording, rec_path);
    write_truth(scene.truth.as_ground_truth(scene.recording.sample_rate_hz), truth_path);
    std::ofstream js(dir / (scene.scene_id + ".json"), std::ios::trunc);
    if (!js) throw Error(ErrorCode::IoFailure, "cannot write scenario for " + scene.scene_id);
    nlohmann::json doc = to_json(scene.scenario);
    js << doc.dump(2) << '\n';
    manifest.push_back({"sim", scene.scene_id, rec_path, truth_path});
  }
  const auto manifest_path = dir / "manifest.json";
  write_manifest(manifest, manifest_path);
  return manifest_path;
}

nlohmann::json to_json(const SimScenario& s) {
  nlohmann::json clutter = nlohmann::json::array();
  for (const auto& c : s.clutter) clutter.push_back({{"range_m", c.range_m}, {"amplitude", c.amplitude}});
  nlohmann::json bad = nlohmann::json::array();
  for (const auto& b : s.bad_bins) bad.push_back({{"bin", b.bin}, {"mode", mode_name(b.mode)}});
  return {{"duration_s", s.duration_s},
          {"sample_rate_hz", s.sample_rate_hz},
          {"num_bins", s.num_bins},
          {"bin_size_m", s.bin_size_m},
          {"range_start_m", s.range_start_m},
          {"carrier_hz", s.carrier_hz},
          {"bandwidth_hz", s.bandwidth_hz},
          {"subject_range_m", s.subject_range_m},
          {"subject_amplitude", s.subject_amplitude},
          {"breath",
           {{"rate_bpm", s.breath.rate_bpm},
            {"duty", s.breath.duty},
            {"depth_m", s.breath.depth_m},
            {"jitter_frac", s.breath.jitter_frac}}},
          {"torso",
           {{"amplitude", s.torso.amplitude},
            {"offset_m", s.torso.offset_m},
            {"sway_m", s.torso.sway_m},
            {"breath_coupling", s.torso.breath_coupling}}},
          {"abdomen",
           {{"amplitude", s.abdomen.amplitude},
            {"offset_m", s.abdomen.offset_m},
            {"coupling", s.abdomen.coupling}}},
          {"clutter", clutter},
          {"noise_snr_db", s.noise_snr_db},
          {"distort_gain", s.distort_gain},
          {"sidelobe_level", s.sidelobe_level},
          {"sidelobe_decay_m", s.sidelobe_decay_m},
          {"bad_bins", bad},
          {"seed", s.seed}};
}

SimScenario scenario_from_json(const nlohmann::json& j) {
  using namespace jsonutil;
  reject_unknown_keys(j,
                      {"duration_s", "sample_rate_hz", "num_bins", "bin_size_m", "range_start_m", "carrier_hz",
                       "bandwidth_hz", "subject_range_m", "subject_amplitude", "breath", "torso", "abdomen",
                       "clutter", "noise_snr_db", "distort_gain", "sidelobe_level", "sidelobe_decay_m", "bad_bins",
                       "seed"},
                      "scenario");
  SimScenario s;
  read_opt(j, "duration_s", s.duration_s);
  read_opt(j, "sample_rate_hz", s.sample_rate_hz);
  read_opt(j, "num_bins", s.num_bins);
  read_opt(j, "bin_size_m", s.bin_size_m);
  read_opt(j, "range_start_m", s.range_start_m);
  read_opt(j, "carrier_hz", s.carrier_hz);
  read_opt(j, "bandwidth_hz", s.bandwidth_hz);
  read_opt(j, "subject_range_m", s.subject_range_m);
  read_opt(j, "subject_amplitude", s.subject_amplitude);
  read_opt(j, "sidelobe_level", s.sidelobe_level);
  read_opt(j, "sidelobe_decay_m", s.sidelobe_decay_m);
  read_opt(j, "noise_snr_db", s.noise_snr_db);
  read_opt(j, "distort_gain", s.distort_gain);
  read_opt(j, "seed", s.seed);
  if (j.contains("breath")) {
    const auto& b = j.at("breath");
    reject_unknown_keys(b, {"rate_bpm", "duty", "depth_m", "jitter_frac"}, "scenario.breath");
    read_opt(b, "rate_bpm", s.breath.rate_bpm);
    read_opt(b, "duty", s.breath.duty);
    read_opt(b, "depth_m", s.breath.depth_m);
    read_opt(b, "jitter_frac", s.breath.jitter_frac);
  }
  if (j.contains("torso")) {
    const auto& t = j.at("torso");
    reject_unknown_keys(t, {"amplitude", "offset_m", "sway_m", "breath_coupling"}, "scenario.torso");
    read_opt(t, "amplitude", s.torso.amplitude);
    read_opt(t, "offset_m", s.torso.offset_m);
    read_opt(t, "sway_m", s.torso.sway_m);
    read_opt(t, "breath_coupling", s.torso.breath_coupling);
  }
  if (j.contains("abdomen")) {
    const auto& a = j.at("abdomen");
    reject_unknown_keys(a, {"amplitude", "offset_m", "coupling"}, "scenario.abdomen");
    read_opt(a, "amplitude", s.abdomen.amplitude);
    read_opt(a, "offset_m", s.abdomen.offset_m);
    read_opt(a, "coupling", s.abdomen.coupling);
  }
  if (j.contains("clutter")) {
    for (const auto& c : j.at("clutter")) {
      reject_unknown_keys(c, {"range_m", "amplitude"}, "scenario.clutter[]");
      ClutterPath p;
      read_opt(c, "range_m", p.range_m);
      read_opt(c, "amplitude", p.amplitude);
      s.clutter.push_back(p);
    }
  }
  if (j.contains("bad_bins")) {
    for (const auto& b : j.at("bad_bins")) {
      reject_unknown_keys(b, {"bin", "mode"}, "scenario.bad_bins[]");
      BadBin bb;
      read_opt(b, "bin", bb.bin);
      std::string mode = "distort";
      read_opt(b, "mode", mode);
      bb.mode = mode_from_name(mode);
      s.bad_bins.push_back(bb);
    }
  }
  return s;
}

nlohmann::json to_json(const CorpusSpec& c) {
  return {{"duration_s", c.duration_s},
          {"rate_bpm", {c.rate_lo, c.rate_hi}},
          {"duty", {c.duty_lo, c.duty_hi}},
          {"depth_m", {c.depth_lo, c.depth_hi}},
          {"jitter_frac", c.jitter},
          {"subject_range_m", {c.range_lo, c.range_hi}},
          {"noise_snr_db", {c.snr_lo, c.snr_hi}},
          {"clutter_count", {c.clutter_lo, c.clutter_hi}},
          {"clutter_amplitude", {c.clutter_amp_lo, c.clutter_amp_hi}},
          {"torso_amplitude", {c.torso_amp_lo, c.torso_amp_hi}},
          {"anti_phase_fraction", c.anti_phase_fraction},
          {"abdomen_amplitude", {c.abdomen_amp_lo, c.abdomen_amp_hi}},
          {"abdomen_coupling", {c.abdomen_coupling_lo, c.abdomen_coupling_hi}},
          {"max_distort", c.max_distort},
          {"max_invert", c.max_invert},
          {"max_noise", c.max_noise},
          {"bad_bin_radius", c.bad_bin_radius}};
}

CorpusSpec corpus_spec_from_json(const nlohmann::json& j) {
  using namespace jsonutil;
  reject_unknown_keys(j,
                      {"duration_s", "rate_bpm", "duty", "depth_m", "jitter_frac", "subject_range_m", "noise_snr_db",
                       "clutter_count", "clutter_amplitude", "torso_amplitude", "anti_phase_fraction", "abdomen_amplitude", "abdomen_coupling", "max_distort",
                       "max_invert", "max_noise", "bad_bin_radius"},
                      "simulator");
  CorpusSpec c;
  auto range = [&](const char* key, auto& lo, auto& hi) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2) throw Error(ErrorCode::ConfigError, std::string(key) + " must be [lo, hi]");
    using T = std::remove_reference_t<decltype(lo)>;
    try {
      lo = v[0].get<T>();
      hi = v[1].get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ConfigError, std::string("bad range for '") + key + "': " + e.what());
    }
    if (hi < lo) throw Error(ErrorCode::ConfigError, std::string(key) + " has hi < lo");
  };
  read_opt(j, "duration_s", c.duration_s);
  range("rate_bpm", c.rate_lo, c.rate_hi);
  range("duty", c.duty_lo, c.duty_hi);
  range("depth_m", c.depth_lo, c.depth_hi);
  read_opt(j, "jitter_frac", c.jitter);
  range("subject_range_m", c.range_lo, c.range_hi);
  range("noise_snr_db", c.snr_lo, c.snr_hi);
  range("clutter_count", c.clutter_lo, c.clutter_hi);
  range("clutter_amplitude", c.clutter_amp_lo, c.clutter_amp_hi);
  range("torso_amplitude", c.torso_amp_lo, c.torso_amp_hi);
  read_opt(j, "anti_phase_fraction", c.anti_phase_fraction);
  range("abdomen_amplitude", c.abdomen_amp_lo, c.abdomen_amp_hi);
  range("abdomen_coupling", c.abdomen_coupling_lo, c.abdomen_coupling_hi);
  read_opt(j, "max_distort", c.max_distort);
  read_opt(j, "max_invert", c.max_invert);
  read_opt(j, "max_noise", c.max_noise);
  read_opt(j, "bad_bin_radius", c.bad_bin_radius);
  if (c.duty_lo <= 0.0 || c.duty_hi > 0.5) throw Error(ErrorCode::ConfigError, "duty must lie in (0, 0.5]");
  if (c.rate_lo < 4.0 || c.rate_hi > 40.0) throw Error(ErrorCode::ConfigError, "rate_bpm must lie in [4, 40]");
  return c;
}

}  // namespace mobivital
