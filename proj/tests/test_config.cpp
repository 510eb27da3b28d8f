#include <doctest.h>

#include <fstream>

#include "mobivital/config.hpp"
#include "mobivital/errors.hpp"
#include "test_util.hpp"

using namespace mobivital;

namespace {

ErrorCode code_of(const nlohmann::json& j) {
  try {
    run_config_from_json(j);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("accepted " << j.dump());
  return ErrorCode::InvariantViolation;
}

}  // namespace

TEST_CASE("defaults describe the full-size system") {
  const RunConfig cfg;
  CHECK(cfg.model.history_len == 200);
  CHECK(cfg.model.future_len == 25);
  CHECK(cfg.model.hidden_size == 352);
  CHECK(cfg.model.num_layers == 2);
  CHECK(cfg.model.batch_size == 64);
  CHECK(cfg.model.epochs == 20);
  CHECK(cfg.model.learning_rate == 1e-4);
  CHECK(cfg.r0 == 0.9);
  CHECK(cfg.inversion.r_th == 1.0);
  CHECK(cfg.baselines.band.lo_hz == 0.2);
  CHECK(cfg.baselines.band.hi_hz == 0.7);
  CHECK(cfg.baselines.cfar.pfa == 1e-3);
}

TEST_CASE("an empty document yields the defaults and to_json round-trips") {
  const auto cfg = run_config_from_json(nlohmann::json::object());
  CHECK(to_json(cfg) == to_json(RunConfig{}));

  auto j = to_json(RunConfig{});
  j["seed"] = 77;
  j["model"]["hidden_size"] = 16;
  j["inversion"]["r_th"] = 1.2;
  j["baselines"]["band"] = {0.1, 0.8};
  j["evaluate"]["ablation"] = false;
  const auto back = run_config_from_json(j);
  CHECK(back.seed == 77);
  CHECK(back.model.hidden_size == 16);
  CHECK(back.baselines.inversion.r_th == 1.2);  // the baselines share the detector settings
  CHECK(to_json(back) == j);

  const auto eval = back.eval_config();
  CHECK(eval.select.inversion.r_th == 1.2);
  CHECK(eval.baselines.band.hi_hz == 0.8);
  CHECK_FALSE(eval.ablation);
}

TEST_CASE("invalid settings are configuration errors") {
  CHECK(code_of({{"sede", 1}}) == ErrorCode::ConfigError);
  CHECK(code_of({{"model", {{"hidden", 3}}}}) == ErrorCode::ConfigError);
  CHECK(code_of({{"model", {{"future_len", 500}}}}) == ErrorCode::ConfigError);
  CHECK(code_of({{"model", {{"epochs", "many"}}}}) == ErrorCode::ConfigError);
  CHECK(code_of({{"inversion", {{"smooth_frame", 100}}}}) == ErrorCode::ConfigError);
  CHECK(code_of({{"inversion", {{"r_th", 0.0}}}}) == ErrorCode::ConfigError);
  CHECK(code_of({{"baselines", {{"band", {0.7, 0.2}}}}}) == ErrorCode::ConfigError);
  CHECK(code_of({{"baselines", {{"cfar", {{"pfa", 2.0}}}}}}) == ErrorCode::ConfigError);
  CHECK(code_of({{"candidates", {{"alpha", 1.0}}}}) == ErrorCode::ConfigError);
  CHECK(code_of({{"rr", {{"smooth_frame", 4}}}}) == ErrorCode::ConfigError);
  CHECK(code_of({{"simulate", {{"num_scenes", 0}}}}) == ErrorCode::ConfigError);
  CHECK(code_of({{"simulate", {{"corpus", {{"duty", {0.5, 0.9}}}}}}}) == ErrorCode::ConfigError);
  CHECK(code_of(nlohmann::json::array()) == ErrorCode::ConfigError);
}

TEST_CASE("config files") {
  testing::TempDir dir("cfg");
  std::ofstream(dir / "ok.json") << R"({"seed": 5, "train": {"r0": 0.8}})";
  const auto cfg = load_run_config(dir / "ok.json");
  CHECK(cfg.seed == 5);
  CHECK(cfg.r0 == 0.8);

  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK_THROWS_AS(load_run_config(dir / "broken.json"), Error);
  CHECK_THROWS_AS(load_run_config(dir / "missing.json"), Error);
}
