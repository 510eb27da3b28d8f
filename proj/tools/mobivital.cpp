// mobivital: simulate / train / select / evaluate / rr.
// Exit codes: 0 success, 2 configuration error, 3 data error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mobivital/armodel.hpp"
#include "mobivital/baselines.hpp"
#include "mobivital/candidates.hpp"
#include "mobivital/config.hpp"
#include "mobivital/dsp.hpp"
#include "mobivital/errors.hpp"
#include "mobivital/evaluation.hpp"
#include "mobivital/ingest.hpp"
#include "mobivital/scoring.hpp"
#include "mobivital/simulator.hpp"

namespace fs = std::filesystem;
using namespace mobivital;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> r_th;
  std::optional<double> r0;
  std::string band;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON run configuration");
  cmd->add_option("--seed", flags.seed, "Global seed");
  cmd->add_option("--r-th", flags.r_th, "Inversion ratio threshold");
  cmd->add_option("--r0", flags.r0, "Training correlation threshold");
  cmd->add_option("--band", flags.band, "Respiration band LO,HI in Hz");
}

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig cfg = flags.config_path.empty() ? RunConfig{} : load_run_config(flags.config_path);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.r_th) {
    if (!(*flags.r_th > 0.0)) throw Error(ErrorCode::ConfigError, "--r-th must be positive");
    cfg.inversion.r_th = *flags.r_th;
  }
  if (flags.r0) cfg.r0 = *flags.r0;
  if (!flags.band.empty()) {
    const auto comma = flags.band.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::ConfigError, "--band expects LO,HI");
    try {
      cfg.baselines.band = {std::stod(flags.band.substr(0, comma)), std::stod(flags.band.substr(comma + 1))};
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "--band expects two numbers");
    }
    if (!(cfg.baselines.band.lo_hz >= 0.0 && cfg.baselines.band.hi_hz > cfg.baselines.band.lo_hz)) {
      throw Error(ErrorCode::ConfigError, "--band needs 0 <= LO < HI");
    }
  }
  cfg.baselines.inversion = cfg.inversion;
  return cfg;
}

void write_json(const nlohmann::json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string());
}

int cmd_simulate(const RunConfig& cfg, const fs::path& out_dir, std::optional<std::size_t> scenes) {
  const std::size_t n = scenes.value_or(cfg.num_scenes);
  const auto corpus = make_corpus(n, cfg.simulator, cfg.seed);
  write_corpus(corpus, out_dir);
  write_json(to_json(cfg), out_dir / "config.json");
  std::cout << "wrote " << corpus.size() << " scenes (seed " << cfg.seed << ") to " << out_dir.string() << '\n';
  return 0;
}

void append_set(TrainSet& dst, const TrainSet& src) {
  const auto old = dst.histories.cols();
  dst.histories.conservativeResize(src.histories.rows(), old + src.histories.cols());
  dst.futures.conservativeResize(src.futures.rows(), old + src.futures.cols());
  dst.histories.rightCols(src.histories.cols()) = src.histories;
  dst.futures.rightCols(src.futures.cols()) = src.futures;
  dst.provenance.insert(dst.provenance.end(), src.provenance.begin(), src.provenance.end());
  dst.num_sequences += src.num_sequences;
}

int cmd_train(const RunConfig& cfg, const fs::path& manifest_path, const fs::path& out_dir) {
  const auto sessions = read_manifest(manifest_path);
  TrainSet set;
  set.histories.resize(static_cast<Eigen::Index>(cfg.model.history_len), 0);
  set.futures.resize(static_cast<Eigen::Index>(cfg.model.future_len), 0);
  // One session at a time keeps only its candidate bank in memory.
  for (const auto& s : sessions) {
    if (!s.truth_path) continue;
    const auto bank = extract_candidates(read_recording(s.recording_path), cfg.candidates);
    const auto truth = read_truth(*s.truth_path);
    const TrainingSession session{&bank, &truth};
    try {
      append_set(set, build_train_set(std::span(&session, 1), cfg.r0, cfg.model));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoQualifyingSequences) throw;
    }
  }
  if (set.size() == 0) throw Error(ErrorCode::NoQualifyingSequences, "no session provides training windows");

  std::cerr << "training on " << set.size() << " windows from " << set.num_sequences << " sequences\n";
  const auto result = train(set, cfg.model, cfg.seed, Exec::Parallel, [](std::size_t epoch, double mse) {
    std::cerr << "epoch " << epoch + 1 << " mse " << mse << '\n';
  });
  make_dir(out_dir);
  save_model(result.model, out_dir / "model.mvm");
  export_loss_curve_csv(result.loss_curve, out_dir / "loss.csv");
  write_json(to_json(cfg), out_dir / "config.json");
  std::cout << "wrote " << (out_dir / "model.mvm").string() << '\n';
  return 0;
}

nlohmann::json baseline_json(const BaselineChoice& c, const CandidateBank& bank) {
  return {{"method", to_string(c.method)},
          {"selected", c.selected_key},
          {"bin_index", bank.candidates[c.selected_index].bin_index},
          {"score", c.score_raw},
          {"flipped", c.flipped}};
}

int cmd_select(const RunConfig& cfg, const fs::path& rec_path, const std::string& model_path,
               const std::string& method, const std::string& truth_path, const std::string& out_dir) {
  const auto rec = read_recording(rec_path);
  const auto bank = extract_candidates(rec, cfg.candidates);
  std::optional<GroundTruthWaveform> truth;
  if (!truth_path.empty()) truth = align_truth(read_truth(truth_path), bank.sample_rate_hz, bank.num_samples);

  nlohmann::json result;
  std::vector<double> samples;
  if (method == "mobivital") {
    if (model_path.empty()) throw Error(ErrorCode::ConfigError, "--model is required for the mobivital method");
    const auto model = load_model(model_path);
    const auto sel = select(bank, model, SelectConfig{cfg.inversion, true});
    result = nlohmann::json::parse(selection_to_json(sel));
    result["method"] = "mobivital";
    samples = sel.selected.samples;
  } else {
    BaselineChoice choice;
    if (method == "snr") {
      choice = select_snr(bank, cfg.baselines);
    } else if (method == "cfar") {
      choice = select_cfar(bank, cfg.baselines);
    } else if (method == "variance") {
      choice = select_variance(bank, cfg.baselines);
    } else if (method == "oracle") {
      if (!truth) throw Error(ErrorCode::ConfigError, "--truth is required for the oracle method");
      choice = select_oracle(bank, *truth);
    } else {
      throw Error(ErrorCode::ConfigError, "unknown method '" + method + "'");
    }
    result = baseline_json(choice, bank);
    samples = choice.samples;
  }
  if (truth) result["r_with_truth"] = dsp::pearson_r(samples, truth->samples).value_or(0.0);
  if (!out_dir.empty()) {
    make_dir(out_dir);
    export_waveform_csv(samples, bank.sample_rate_hz, fs::path(out_dir) / "waveform.csv");
  }
  std::cout << result.dump(2) << '\n';
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, const fs::path& manifest_path, const fs::path& model_path,
                 const fs::path& out_dir) {
  const auto sessions = read_manifest(manifest_path);
  std::vector<SessionManifest> usable;
  for (const auto& s : sessions) {
    if (s.truth_path) usable.push_back(s);
  }
  if (usable.empty()) throw Error(ErrorCode::EmptyCorpus, "manifest has no sessions with ground truth");
  const auto model = load_model(model_path);
  const SceneLoader loader = [&](std::size_t i) {
    const auto& s = usable[i];
    return SceneInput{s.session_id, read_recording(s.recording_path), read_truth(*s.truth_path)};
  };
  auto report = evaluate_methods(usable.size(), loader, model, cfg.eval_config());
  report.provenance = to_json(cfg);
  report.provenance["model_hyperparameters"] = {{"history_len", model.hyper().history_len},
                                                {"future_len", model.hyper().future_len},
                                                {"hidden_size", model.hyper().hidden_size},
                                                {"num_layers", model.hyper().num_layers}};
  export_report(report, out_dir);
  for (const auto& m : report.methods) {
    std::printf("%-16s mean_r %.3f  neg %.3f  rr_err %.2f bpm\n", m.method.c_str(), m.mean_r,
                m.fraction_negative_r, m.mean_abs_rr_err_bpm);
  }
  std::printf("score/r spearman %.3f over %zu candidates\n", report.score_spearman, report.candidate_rows.size());
  return 0;
}

// Reads an MVG1 truth file or a "time_s,value" CSV.
std::pair<std::vector<double>, double> read_waveform(const fs::path& path) {
  if (path.extension() == ".mvg") {
    auto t = read_truth(path);
    return {std::move(t.samples), t.sample_rate_hz};
  }
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<double> times, values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::InvariantViolation, "bad CSV row: " + line);
    times.push_back(std::stod(line.substr(0, comma)));
    values.push_back(std::stod(line.substr(comma + 1)));
  }
  if (times.size() < 2) throw Error(ErrorCode::TooShort, "waveform has fewer than two samples");
  const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  if (!(dt > 0.0)) throw Error(ErrorCode::InvariantViolation, "time column must increase");
  return {std::move(values), 1.0 / dt};
}

int cmd_rr(const RunConfig& cfg, const fs::path& input) {
  const auto [samples, fs_hz] = read_waveform(input);
  const double rr = estimate_rr(samples, fs_hz, cfg.rr);
  std::cout << nlohmann::json{{"rr_bpm", rr}, {"sample_rate_hz", fs_hz}}.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UWB respiration waveform selection"};
  app.require_subcommand(1);
  CommonFlags flags;

  std::string out, manifest, model, recording, truth, method = "mobivital", input;
  std::optional<std::size_t> scenes;

  auto* sim = app.add_subcommand("simulate", "Write a synthetic corpus with ground truth");
  add_common(sim, flags);
  sim->add_option("--out", out, "Output directory")->required();
  sim->add_option("--scenes", scenes, "Number of scenes (overrides the config)");

  auto* tr = app.add_subcommand("train", "Train the autoregressive quality model");
  add_common(tr, flags);
  tr->add_option("--manifest", manifest, "Session manifest")->required();
  tr->add_option("--out", out, "Output directory for model.mvm and loss.csv")->required();

  auto* sel = app.add_subcommand("select", "Pick the best respiration waveform of one recording");
  add_common(sel, flags);
  sel->add_option("--recording", recording, "MVR1 recording")->required();
  sel->add_option("--model", model, "MVM1 checkpoint");
  sel->add_option("--method", method, "mobivital|snr|cfar|variance|oracle")
      ->check(CLI::IsMember({"mobivital", "snr", "cfar", "variance", "oracle"}));
  sel->add_option("--truth", truth, "MVG1 ground truth (reports r, enables oracle)");
  sel->add_option("--out", out, "Directory for waveform.csv");

  auto* ev = app.add_subcommand("evaluate", "Compare every method on a corpus");
  add_common(ev, flags);
  ev->add_option("--manifest", manifest, "Session manifest")->required();
  ev->add_option("--model", model, "MVM1 checkpoint")->required();
  ev->add_option("--out", out, "Report directory")->required();

  auto* rr = app.add_subcommand("rr", "Respiration rate of a waveform (CSV or MVG1)");
  add_common(rr, flags);
  rr->add_option("--input", input, "Waveform file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const RunConfig cfg = resolve_config(flags);
    if (*sim) return cmd_simulate(cfg, out, scenes);
    if (*tr) return cmd_train(cfg, manifest, out);
    if (*sel) return cmd_select(cfg, recording, model, method, truth, out);
    if (*ev) return cmd_evaluate(cfg, manifest, model, out);
    if (*rr) return cmd_rr(cfg, input);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? kExitConfig : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
