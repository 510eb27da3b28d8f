#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

#include "mobivital/ingest.hpp"
#include "test_util.hpp"

using namespace mobivital;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stdout captured to a file and stderr discarded.
Run cli(const std::string& args, const std::filesystem::path& scratch) {
  const auto log = scratch / "stdout.txt";
  const std::string cmd = std::string("\"") + MOBIVITAL_CLI + "\" " + args + " > \"" + log.string() + "\" 2>/dev/null";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

constexpr const char* kSmallConfig = R"({
  "seed": 3,
  "model": {"history_len": 50, "future_len": 10, "hidden_size": 4, "num_layers": 1, "epochs": 1},
  "simulate": {"corpus": {"duration_s": 12}}
})";

}  // namespace

TEST_CASE("simulate, train, select, evaluate and rr end to end") {
  testing::TempDir dir("cli");
  std::ofstream(dir / "cfg.json") << kSmallConfig;
  const auto cfg = "--config " + q(dir / "cfg.json");

  auto r = cli("simulate --out " + q(dir / "corpus") + " --scenes 2 " + cfg, dir.path());
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(dir / "corpus" / "manifest.json"));
  CHECK(std::filesystem::exists(dir / "corpus" / "scene_001.mvr"));
  const auto written = nlohmann::json::parse(std::ifstream(dir / "corpus" / "config.json"));
  CHECK(written["seed"] == 3);

  r = cli("train --manifest " + q(dir / "corpus" / "manifest.json") + " --out " + q(dir / "model") + " " + cfg,
          dir.path());
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(dir / "model" / "model.mvm"));
  CHECK(std::filesystem::exists(dir / "model" / "loss.csv"));

  const auto rec = q(dir / "corpus" / "scene_000.mvr");
  const auto truth = q(dir / "corpus" / "scene_000.mvg");
  r = cli("select --recording " + rec + " --model " + q(dir / "model" / "model.mvm") + " --truth " + truth +
              " --out " + q(dir / "sel"),
          dir.path());
  REQUIRE(r.code == 0);
  auto js = nlohmann::json::parse(r.out);
  CHECK(js["method"] == "mobivital");
  CHECK(js.contains("diagnostics"));
  CHECK(std::abs(js["r_with_truth"].get<double>()) <= 1.0);
  CHECK(std::filesystem::exists(dir / "sel" / "waveform.csv"));

  for (const char* method : {"snr", "cfar", "variance"}) {
    r = cli("select --recording " + rec + " --method " + method, dir.path());
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["method"] == method);
  }
  r = cli("select --recording " + rec + " --method oracle --truth " + truth + " --out " + q(dir / "oracle"),
          dir.path());
  REQUIRE(r.code == 0);
  js = nlohmann::json::parse(r.out);
  CHECK(js["score"].get<double>() == doctest::Approx(js["r_with_truth"].get<double>()));
  CHECK(std::filesystem::exists(dir / "oracle" / "waveform.csv"));

  r = cli("evaluate --manifest " + q(dir / "corpus" / "manifest.json") + " --model " +
              q(dir / "model" / "model.mvm") + " --out " + q(dir / "report") + " " + cfg,
          dir.path());
  REQUIRE(r.code == 0);
  for (const char* f : {"scenes.csv", "rr.csv", "cdf.csv", "candidates.csv", "summary.json"}) {
    CHECK(std::filesystem::exists(dir / "report" / f));
  }
  const auto summary = nlohmann::json::parse(std::ifstream(dir / "report" / "summary.json"));
  CHECK(summary["config"]["seed"] == 3);

  r = cli("rr --input " + truth, dir.path());
  REQUIRE(r.code == 0);
  js = nlohmann::json::parse(r.out);
  CHECK(js["sample_rate_hz"] == 50.0);
  CHECK(js["rr_bpm"].get<double>() > 4.0);
  CHECK(js["rr_bpm"].get<double>() < 40.0);

  r = cli("rr --input " + q(dir / "oracle" / "waveform.csv"), dir.path());
  CHECK(r.code == 0);
}

TEST_CASE("usage and configuration errors exit with 2") {
  testing::TempDir dir("cli_err");
  std::ofstream(dir / "bad_duty.json") << R"({"simulate": {"corpus": {"duty": [0.2, 0.9]}}})";
  CHECK(cli("simulate --out " + q(dir / "c") + " --config " + q(dir / "bad_duty.json"), dir.path()).code == 2);
  CHECK_FALSE(std::filesystem::exists(dir / "c" / "manifest.json"));
  CHECK(cli("", dir.path()).code == 2);
  CHECK(cli("frobnicate", dir.path()).code == 2);
  CHECK(cli("simulate", dir.path()).code == 2);
  CHECK(cli("simulate --out " + q(dir / "c") + " --band 0.7,0.2", dir.path()).code == 2);
  CHECK(cli("simulate --out " + q(dir / "c") + " --band nonsense", dir.path()).code == 2);
  CHECK(cli("simulate --out " + q(dir / "c") + " --r-th -1", dir.path()).code == 2);
}

TEST_CASE("bad inputs exit with a data error") {
  testing::TempDir dir("cli_data");
  // Shorter than one smoothing frame.
  UwbRecording rec;
  rec.num_bins = 2;
  rec.num_samples = 40;
  rec.sample_rate_hz = 50.0;
  rec.bin_size_m = 0.05;
  rec.iq.assign(rec.num_bins * rec.num_samples, {1.0f, 0.5f});
  write_recording(rec, dir / "short.mvr");
  CHECK(cli("select --recording " + q(dir / "short.mvr") + " --method cfar", dir.path()).code == 3);
  CHECK(cli("select --recording " + q(dir / "missing.mvr") + " --method snr", dir.path()).code == 3);
  std::ofstream(dir / "junk.mvr") << "not a recording";
  CHECK(cli("select --recording " + q(dir / "junk.mvr") + " --method snr", dir.path()).code == 3);

  write_recording(rec, dir / "ok.mvr");
  CHECK(cli("select --recording " + q(dir / "ok.mvr") + " --method sideways", dir.path()).code == 2);
  CHECK(cli("select --recording " + q(dir / "ok.mvr") + " --method oracle", dir.path()).code == 2);
  CHECK(cli("select --recording " + q(dir / "ok.mvr"), dir.path()).code == 2);  // mobivital needs --model
}
