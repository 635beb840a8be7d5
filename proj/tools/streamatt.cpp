// streamatt: run streaming-policy simulations and score them.
//
//   streamatt simulate --manifest talk.json [--model mock:scenario.json|bridge:<endpoint>] --out log.jsonl
//   streamatt score    --log log.jsonl --manifest talk.json [--mode nca|ca|both] [--out report.tsv]
//   streamatt sweep    --manifest talk.json [--f-values 2,4,6,8] [--n-words-values 10,20,30,40] [--jobs N]
//   streamatt gen-scenario --out-dir dir [--seed N]
//   streamatt ratio    --bleu B --nca S --ca S
//   streamatt profile  --text file

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "streamatt/commands.hpp"

namespace sc = streamatt::cli;
using streamatt::HistoryMode;
using streamatt::LatencyMode;

namespace {

void add_policy_flags(CLI::App* cmd, streamatt::PolicyConfig& cfg, std::string& history) {
  cmd->add_option("--f", cfg.f, "Forbidden trailing frames")->check(CLI::NonNegativeNumber);
  cmd->add_option("--chunk-ms", cfg.chunk_ms, "Audio per step in ms")->check(CLI::PositiveNumber);
  cmd->add_option("--history", history, "Textual history selection")->check(CLI::IsMember({"fw", "punct", "baseline"}));
  cmd->add_option("--n-words", cfg.n_words, "Words kept in the textual history")->check(CLI::PositiveNumber);
  cmd->add_option("--attention-layer", cfg.attention_layer, "Decoder layer the attention comes from");
  cmd->add_option("--ms-per-word", cfg.ms_per_word_baseline, "Baseline per-word duration")->check(CLI::PositiveNumber);
  cmd->add_option("--max-new", cfg.max_new_tokens, "Cap on generated tokens per step")->check(CLI::PositiveNumber);
}

std::vector<LatencyMode> parse_modes(const std::string& m) {
  if (m == "nca") return {LatencyMode::nca};
  if (m == "ca") return {LatencyMode::ca};
  return {LatencyMode::nca, LatencyMode::ca};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming speech translation policy simulator and latency scorer"};
  app.require_subcommand(1);

  // simulate
  sc::SimulateOptions sim;
  std::string sim_history = "fw", sim_clock = "simulated", sim_manifest, sim_out;
  auto* simulate = app.add_subcommand("simulate", "Run the policy over a talk and write the emission log");
  simulate->add_option("--manifest", sim_manifest, "Talk manifest (JSON)")->required();
  simulate->add_option("--model", sim.model, "mock:<scenario.json> or bridge:<endpoint>");
  simulate->add_option("--out", sim_out, "Emission log path (JSON lines)")->required();
  simulate->add_option("--clock", sim_clock, "Compute clock")->check(CLI::IsMember({"simulated", "wall"}));
  add_policy_flags(simulate, sim.config, sim_history);

  // score
  sc::ScoreOptions score;
  std::string score_mode = "both", score_log, score_manifest, score_out, score_hyp, score_segs;
  auto* scorecmd = app.add_subcommand("score", "Compute StreamLAAL for an emission log");
  scorecmd->add_option("--log", score_log, "Emission log")->required();
  scorecmd->add_option("--manifest", score_manifest, "Talk manifest")->required();
  scorecmd->add_option("--mode", score_mode, "Latency clock")->check(CLI::IsMember({"nca", "ca", "both"}));
  scorecmd->add_option("--out", score_out, "Report TSV (default stdout)");
  scorecmd->add_option("--hyp-out", score_hyp, "Resegmented hypotheses, one segment per line");
  scorecmd->add_option("--segments-out", score_segs, "Per-segment scores TSV");

  // sweep
  sc::SweepOptions sweep;
  std::string sweep_history = "fw", sweep_clock = "simulated", sweep_manifest, sweep_out;
  std::vector<std::string> sweep_histories;
  auto* sweepcmd = app.add_subcommand("sweep", "Simulate and score a grid of configurations");
  sweepcmd->add_option("--manifest", sweep_manifest, "Talk manifest")->required();
  sweepcmd->add_option("--model", sweep.model, "mock:<scenario.json> or bridge:<endpoint>");
  sweepcmd->add_option("--f-values", sweep.spec.f_values, "Values of f")->delimiter(',');
  sweepcmd->add_option("--n-words-values", sweep.spec.n_words_values, "Values of n_words")->delimiter(',');
  sweepcmd->add_option("--histories", sweep_histories, "History modes (fw,punct,baseline)")->delimiter(',');
  sweepcmd->add_option("--jobs", sweep.jobs, "Parallel configurations")->check(CLI::PositiveNumber);
  sweepcmd->add_option("--clock", sweep_clock, "Compute clock")->check(CLI::IsMember({"simulated", "wall"}));
  sweepcmd->add_option("--out", sweep_out, "Report TSV (default stdout)");
  add_policy_flags(sweepcmd, sweep.base, sweep_history);

  // gen-scenario
  sc::GenScenarioOptions gen;
  std::string gen_dir;
  auto* gencmd = app.add_subcommand("gen-scenario", "Generate a synthetic mock talk (scenario + manifest)");
  gencmd->add_option("--out-dir", gen_dir, "Output directory")->required();
  gencmd->add_option("--seed", gen.seed, "Random seed");
  gencmd->add_option("--talk-id", gen.talk_id, "Talk id");
  gencmd->add_option("--sentences", gen.sentences, "Number of sentences/segments")->check(CLI::PositiveNumber);
  gencmd->add_option("--min-words", gen.min_words, "Minimum words per sentence")->check(CLI::PositiveNumber);
  gencmd->add_option("--max-words", gen.max_words, "Maximum words per sentence")->check(CLI::PositiveNumber);
  gencmd->add_option("--noise", gen.noise, "Attention peakedness")->check(CLI::PositiveNumber);
  gencmd->add_option("--call-ms", gen.cost.per_call_ms, "Simulated cost per decode call");
  gencmd->add_option("--frame-cost-ms", gen.cost.per_frame_ms, "Simulated cost per frame");
  gencmd->add_option("--token-cost-ms", gen.cost.per_token_ms, "Simulated cost per token");

  // ratio
  double bleu = 0, nca_s = 0, ca_s = 0;
  auto* ratiocmd = app.add_subcommand("ratio", "BLEU / (StreamLAAL_NCA + StreamLAAL_CA)");
  ratiocmd->add_option("--bleu", bleu, "BLEU score")->required();
  ratiocmd->add_option("--nca", nca_s, "NCA StreamLAAL in seconds")->required();
  ratiocmd->add_option("--ca", ca_s, "CA StreamLAAL in seconds")->required();

  // profile
  std::string profile_path;
  auto* profilecmd = app.add_subcommand("profile", "Count punctuation marks in a text file");
  profilecmd->add_option("--text", profile_path, "Text file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return sc::kExitUsage;
  }

  try {
    if (*simulate) {
      sim.manifest = sim_manifest;
      sim.out = sim_out;
      sim.config.history_mode = streamatt::parse_history_mode(sim_history);
      sim.clock = sim_clock == "wall" ? streamatt::ClockMode::wall : streamatt::ClockMode::simulated;
      const auto log = sc::cmd_simulate(sim);
      std::cerr << "wrote " << log.events.size() << " emission events to " << sim_out << "\n";
    } else if (*scorecmd) {
      score.log = score_log;
      score.manifest = score_manifest;
      score.modes = parse_modes(score_mode);
      score.out = score_out;
      score.hyp_out = score_hyp;
      score.segments_out = score_segs;
      sc::cmd_score(score);
    } else if (*sweepcmd) {
      sweep.manifest = sweep_manifest;
      sweep.out = sweep_out;
      sweep.base.history_mode = streamatt::parse_history_mode(sweep_history);
      if (!sweep_histories.empty()) {
        sweep.spec.history_modes.clear();
        for (const auto& h : sweep_histories) sweep.spec.history_modes.push_back(streamatt::parse_history_mode(h));
      } else {
        sweep.spec.history_modes = {sweep.base.history_mode};
      }
      sweep.clock = sweep_clock == "wall" ? streamatt::ClockMode::wall : streamatt::ClockMode::simulated;
      const auto rows = sc::cmd_sweep(sweep);
      for (const auto& r : rows)
        if (!r.ok) return sc::kExitFailure;
    } else if (*gencmd) {
      const auto talk = sc::generate_talk(gen);
      const std::filesystem::path dir(gen_dir);
      std::filesystem::create_directories(dir);
      streamatt::write_text_file(dir / gen.scenario_file, streamatt::scenario_to_json(talk.scenario).dump(1) + "\n");
      streamatt::write_text_file(dir / "manifest.json", streamatt::manifest_to_json(talk.manifest).dump(1) + "\n");
    } else if (*ratiocmd) {
      std::cout << streamatt::format_number(streamatt::quality_latency_ratio(bleu, nca_s, ca_s)) << "\n";
    } else if (*profilecmd) {
      const auto text = streamatt::read_text_file(profile_path);
      for (const auto& [mark, count] : streamatt::punctuation_profile(text)) std::cout << mark << '\t' << count << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sc::exit_code_for(e);
  }
  return sc::kExitOk;
}
