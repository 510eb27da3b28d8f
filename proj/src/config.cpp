#include "mobivital/config.hpp"

#include <fstream>

#include "mobivital/errors.hpp"
#include "mobivital/json_util.hpp"

namespace mobivital {
namespace {

using jsonutil::read_opt;
using jsonutil::reject_unknown_keys;

void read_model(const nlohmann::json& j, ArHyperParams& hp) {
  reject_unknown_keys(j,
                      {"history_len", "future_len", "hidden_size", "num_layers", "batch_size", "epochs",
                       "learning_rate", "window_step"},
                      "model");
  read_opt(j, "history_len", hp.history_len);
  read_opt(j, "future_len", hp.future_len);
  read_opt(j, "hidden_size", hp.hidden_size);
  read_opt(j, "num_layers", hp.num_layers);
  read_opt(j, "batch_size", hp.batch_size);
  read_opt(j, "epochs", hp.epochs);
  read_opt(j, "learning_rate", hp.learning_rate);
  read_opt(j, "window_step", hp.window_step);
  try {
    hp.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, std::string("model: ") + e.what());
  }
}

void read_inversion(const nlohmann::json& j, InversionConfig& inv) {
  reject_unknown_keys(j, {"r_th", "smooth_order", "smooth_frame", "min_prominence", "rel_height"}, "inversion");
  read_opt(j, "r_th", inv.r_th);
  read_opt(j, "smooth_order", inv.smooth_order);
  read_opt(j, "smooth_frame", inv.smooth_frame);
  read_opt(j, "min_prominence", inv.min_prominence);
  read_opt(j, "rel_height", inv.rel_height);
  if (inv.smooth_frame % 2 == 0 || inv.smooth_frame <= inv.smooth_order) {
    throw Error(ErrorCode::ConfigError, "inversion.smooth_frame must be odd and exceed smooth_order");
  }
  if (!(inv.r_th > 0.0)) throw Error(ErrorCode::ConfigError, "inversion.r_th must be positive");
}

void read_baselines(const nlohmann::json& j, BaselineConfig& b) {
  reject_unknown_keys(j, {"band", "cfar", "variance_prominence"}, "baselines");
  if (j.contains("band")) {
    const auto& band = j.at("band");
    if (!band.is_array() || band.size() != 2 || !band[0].is_number() || !band[1].is_number()) {
      throw Error(ErrorCode::ConfigError, "baselines.band must be [lo_hz, hi_hz]");
    }
    b.band = {band[0].get<double>(), band[1].get<double>()};
  }
  if (!(b.band.lo_hz >= 0.0 && b.band.hi_hz > b.band.lo_hz)) {
    throw Error(ErrorCode::ConfigError, "baselines.band needs 0 <= lo < hi");
  }
  if (j.contains("cfar")) {
    const auto& c = j.at("cfar");
    reject_unknown_keys(c, {"guard", "train", "pfa"}, "baselines.cfar");
    read_opt(c, "guard", b.cfar.guard);
    read_opt(c, "train", b.cfar.train);
    read_opt(c, "pfa", b.cfar.pfa);
  }
  if (b.cfar.train == 0 || !(b.cfar.pfa > 0.0 && b.cfar.pfa < 1.0)) {
    throw Error(ErrorCode::ConfigError, "baselines.cfar needs train > 0 and 0 < pfa < 1");
  }
  read_opt(j, "variance_prominence", b.variance_prominence);
}

}  // namespace

EvalConfig RunConfig::eval_config() const {
  EvalConfig e;
  e.candidates = candidates;
  e.select.inversion = inversion;
  e.baselines = baselines;
  e.baselines.inversion = inversion;
  e.rr = rr;
  e.ablation = ablation;
  return e;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"seed", "simulate", "model", "train", "candidates", "inversion", "baselines", "rr", "evaluate"},
                      "config");
  RunConfig cfg;
  read_opt(j, "seed", cfg.seed);
  if (j.contains("simulate")) {
    const auto& s = j.at("simulate");
    reject_unknown_keys(s, {"num_scenes", "corpus"}, "simulate");
    read_opt(s, "num_scenes", cfg.num_scenes);
    if (cfg.num_scenes == 0) throw Error(ErrorCode::ConfigError, "simulate.num_scenes must be >= 1");
    if (s.contains("corpus")) cfg.simulator = corpus_spec_from_json(s.at("corpus"));
  }
  if (j.contains("model")) read_model(j.at("model"), cfg.model);
  if (j.contains("train")) {
    reject_unknown_keys(j.at("train"), {"r0"}, "train");
    read_opt(j.at("train"), "r0", cfg.r0);
  }
  if (j.contains("candidates")) {
    const auto& c = j.at("candidates");
    reject_unknown_keys(c, {"alpha", "detrend_order"}, "candidates");
    read_opt(c, "alpha", cfg.candidates.alpha);
    read_opt(c, "detrend_order", cfg.candidates.detrend_order);
    if (!(cfg.candidates.alpha > 0.0 && cfg.candidates.alpha < 1.0)) {
      throw Error(ErrorCode::ConfigError, "candidates.alpha must lie in (0, 1)");
    }
  }
  if (j.contains("inversion")) read_inversion(j.at("inversion"), cfg.inversion);
  if (j.contains("baselines")) read_baselines(j.at("baselines"), cfg.baselines);
  if (j.contains("rr")) {
    const auto& r = j.at("rr");
    reject_unknown_keys(r, {"smooth_order", "smooth_frame", "min_prominence"}, "rr");
    read_opt(r, "smooth_order", cfg.rr.smooth_order);
    read_opt(r, "smooth_frame", cfg.rr.smooth_frame);
    read_opt(r, "min_prominence", cfg.rr.min_prominence);
    if (cfg.rr.smooth_frame % 2 == 0 || cfg.rr.smooth_frame <= cfg.rr.smooth_order) {
      throw Error(ErrorCode::ConfigError, "rr.smooth_frame must be odd and exceed smooth_order");
    }
  }
  if (j.contains("evaluate")) {
    reject_unknown_keys(j.at("evaluate"), {"ablation"}, "evaluate");
    read_opt(j.at("evaluate"), "ablation", cfg.ablation);
  }
  cfg.baselines.inversion = cfg.inversion;
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("config parse error: ") + e.what());
  }
  return run_config_from_json(j);
}

nlohmann::json to_json(const RunConfig& cfg) {
  const auto& m = cfg.model;
  const auto& inv = cfg.inversion;
  const auto& b = cfg.baselines;
  return {{"seed", cfg.seed},
          {"simulate", {{"num_scenes", cfg.num_scenes}, {"corpus", to_json(cfg.simulator)}}},
          {"model",
           {{"history_len", m.history_len},
            {"future_len", m.future_len},
            {"hidden_size", m.hidden_size},
            {"num_layers", m.num_layers},
            {"batch_size", m.batch_size},
            {"epochs", m.epochs},
            {"learning_rate", m.learning_rate},
            {"window_step", m.window_step}}},
          {"train", {{"r0", cfg.r0}}},
          {"candidates", {{"alpha", cfg.candidates.alpha}, {"detrend_order", cfg.candidates.detrend_order}}},
          {"inversion",
           {{"r_th", inv.r_th},
            {"smooth_order", inv.smooth_order},
            {"smooth_frame", inv.smooth_frame},
            {"min_prominence", inv.min_prominence},
            {"rel_height", inv.rel_height}}},
          {"baselines",
           {{"band", {b.band.lo_hz, b.band.hi_hz}},
            {"cfar", {{"guard", b.cfar.guard}, {"train", b.cfar.train}, {"pfa", b.cfar.pfa}}},
            {"variance_prominence", b.variance_prominence}}},
          {"rr",
           {{"smooth_order", cfg.rr.smooth_order},
            {"smooth_frame", cfg.rr.smooth_frame},
            {"min_prominence", cfg.rr.min_prominence}}},
          {"evaluate", {{"ablation", cfg.ablation}}}};
}

}  // namespace mobivital
