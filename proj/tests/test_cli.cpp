#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "streamatt/commands.hpp"
#include "test_util.hpp"

using namespace streamatt;
namespace fs = std::filesystem;

namespace {

fs::path talk_manifest() { return testutil::data_dir() / "mock_talk" / "manifest.json"; }
fs::path talk_scenario() { return testutil::data_dir() / "mock_talk" / "scenario.json"; }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(STREAMATT_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// Second column of the "<talk>\t<mode>\t<value>" rows.
std::map<std::string, double> parse_report(const std::string& tsv) {
  std::map<std::string, double> out;
  std::istringstream in(tsv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string talk, mode, value;
    std::getline(row, talk, '\t');
    std::getline(row, mode, '\t');
    std::getline(row, value, '\t');
    out[mode] = std::stod(value);
  }
  return out;
}

}  // namespace

TEST(Cli, MissingManifestIsUsageError) {
  const auto dir = testutil::temp_dir("cli_missing");
  EXPECT_EQ(run_cli("simulate --manifest /nonexistent/manifest.json --out " + q(dir / "log.jsonl")), cli::kExitUsage);
  EXPECT_EQ(run_cli("simulate --bogus-flag"), cli::kExitUsage);
  EXPECT_EQ(run_cli("--help"), cli::kExitOk);
}

TEST(Cli, ZeroZoneReproducesScript) {
  const auto dir = testutil::temp_dir("cli_f0");
  const auto log_path = dir / "log.jsonl";
  ASSERT_EQ(run_cli("simulate --manifest " + q(talk_manifest()) + " --f 0 --out " + q(log_path)), cli::kExitOk);
  const auto sc = load_scenario(talk_scenario());
  std::string expected;
  for (const auto& w : sc.words) expected += (expected.empty() ? "" : " ") + w.surface;
  EXPECT_EQ(load_log(log_path).hypothesis(), expected);
}

TEST(Cli, ScoreMatchesLibrary) {
  const auto dir = testutil::temp_dir("cli_score");
  const auto log_path = dir / "log.jsonl", report = dir / "report.tsv";
  ASSERT_EQ(run_cli("simulate --manifest " + q(talk_manifest()) + " --out " + q(log_path)), cli::kExitOk);
  ASSERT_EQ(run_cli("score --log " + q(log_path) + " --manifest " + q(talk_manifest()) + " --out " + q(report)),
            cli::kExitOk);
  const auto values = parse_report(read_text_file(report));
  const auto log = load_log(log_path);
  const auto manifest = load_manifest(talk_manifest());
  EXPECT_EQ(values.at("nca"), stream_laal(log, manifest, LatencyMode::nca));
  EXPECT_EQ(values.at("ca"), stream_laal(log, manifest, LatencyMode::ca));
}

TEST(Cli, EmptyLogScoresZeroWithWarning) {
  const auto dir = testutil::temp_dir("cli_empty");
  const auto log_path = dir / "log.jsonl";
  write_text_file(log_path, R"({"config": {}, "talk_id": "mock_talk"})" "\n");
  cli::ScoreOptions o;
  o.log = log_path;
  o.manifest = talk_manifest();
  std::ostringstream out, warn;
  const auto s = cli::cmd_score(o, out, warn);
  EXPECT_EQ(s.stream_laal_nca_ms, 0.0);
  EXPECT_EQ(s.stream_laal_ca_ms, 0.0);
  EXPECT_NE(warn.str().find("warning"), std::string::npos);
  EXPECT_EQ(parse_report(out.str()).at("nca"), 0.0);
}

TEST(Cli, TalkIdMismatchIsUsageError) {
  const auto dir = testutil::temp_dir("cli_mismatch");
  const auto log_path = dir / "log.jsonl";
  write_text_file(log_path, R"({"config": {}, "talk_id": "other"})" "\n");
  EXPECT_EQ(run_cli("score --log " + q(log_path) + " --manifest " + q(talk_manifest())), cli::kExitUsage);
}

TEST(Cli, EmptySweepListIsUsageError) {
  cli::SweepOptions o;
  o.manifest = talk_manifest();
  o.spec.f_values.clear();
  std::ostringstream out;
  EXPECT_THROW(cli::cmd_sweep(o, out), InputError);
}

TEST(Cli, SingletonSweepEqualsSimulateAndScore) {
  cli::SweepOptions o;
  o.manifest = talk_manifest();
  o.spec.f_values = {4};
  o.spec.n_words_values = {10};
  std::ostringstream out;
  const auto rows = cli::cmd_sweep(o, out);
  ASSERT_EQ(rows.size(), 1u);
  ASSERT_TRUE(rows[0].ok) << rows[0].error;

  cli::SimulateOptions sim;
  sim.manifest = talk_manifest();
  sim.config.f = 4;
  sim.config.n_words = 10;
  const auto score = score_stream(cli::cmd_simulate(sim), load_manifest(talk_manifest()));
  EXPECT_EQ(rows[0].stream_laal_nca_ms, score.stream_laal_nca_ms);
  EXPECT_EQ(rows[0].stream_laal_ca_ms, score.stream_laal_ca_ms);
}

TEST(Cli, SweepNcaGrowsWithF) {
  cli::SweepOptions o;
  o.manifest = talk_manifest();
  o.spec.n_words_values = {20};
  o.jobs = 4;
  std::ostringstream out;
  const auto rows = cli::cmd_sweep(o, out);
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ASSERT_TRUE(rows[i].ok) << rows[i].error;
    if (i) {
      EXPECT_GE(rows[i].stream_laal_nca_ms, rows[i - 1].stream_laal_nca_ms);
    }
  }
}

TEST(Cli, BridgeExecMatchesMock) {
  const auto dir = testutil::temp_dir("cli_bridge");
  const auto mock_log = dir / "mock.jsonl", bridge_log = dir / "bridge.jsonl";
  ASSERT_EQ(run_cli("simulate --manifest " + q(talk_manifest()) + " --out " + q(mock_log)), cli::kExitOk);
  const std::string endpoint = "bridge:exec:" + std::string(STREAMATT_FAKE_BRIDGE) + " " + talk_scenario().string();
  ASSERT_EQ(run_cli("simulate --manifest " + q(talk_manifest()) + " --model \"" + endpoint + "\" --out " + q(bridge_log)),
            cli::kExitOk);
  EXPECT_EQ(read_text_file(bridge_log), read_text_file(mock_log));
}

TEST(Cli, DeadBridgeIsTransportError) {
  const auto dir = testutil::temp_dir("cli_dead");
  EXPECT_EQ(run_cli("simulate --manifest " + q(talk_manifest()) + " --model bridge:exec:true --out " +
                    q(dir / "log.jsonl")),
            cli::kExitBackend);
}

TEST(Cli, RatioCommand) { EXPECT_EQ(run_cli("ratio --bleu 23.5 --nca 2.17 --ca 3.70"), cli::kExitOk); }
