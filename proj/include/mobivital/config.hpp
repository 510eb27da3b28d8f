#pragma once

#include <cstdint>
#include <filesystem>

#include <json.hpp>

#include "mobivital/armodel.hpp"
#include "mobivital/baselines.hpp"
#include "mobivital/candidates.hpp"
#include "mobivital/evaluation.hpp"
#include "mobivital/inversion.hpp"
#include "mobivital/simulator.hpp"

namespace mobivital {

// Everything a CLI command can be configured with. Defaults are the full-size
// model, r0 = 0.9, r_th = 1.0 and a 0.2-0.7 Hz breathing band.
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t num_scenes = 100;
  CorpusSpec simulator;
  ArHyperParams model;
  double r0 = 0.9;
  CandidateConfig candidates;
  InversionConfig inversion;
  BaselineConfig baselines;
  RrConfig rr;
  bool ablation = true;

  EvalConfig eval_config() const;
};

// Missing blocks keep their defaults; unknown keys and invalid values raise ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// Fully resolved values, for provenance.
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace mobivital
