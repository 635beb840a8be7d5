#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "streamatt/bridge_client.hpp"
#include "streamatt/error.hpp"
#include "streamatt/harness.hpp"
#include "streamatt/io.hpp"
#include "streamatt/metrics.hpp"
#include "streamatt/mock_model.hpp"
#include "streamatt/policy.hpp"

namespace streamatt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitBackend = 3;

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const TransportError*>(&e)) return kExitBackend;
  if (dynamic_cast<const InputError*>(&e) || dynamic_cast<const ScenarioError*>(&e)) return kExitUsage;
  return kExitFailure;
}

// "mock:<scenario.json>" or "bridge:<endpoint>". Empty means the manifest's
// own scenario.
struct ModelSpec {
  enum class Kind { manifest_scenario, mock, bridge } kind = Kind::manifest_scenario;
  std::string target;
};

inline ModelSpec parse_model_spec(const std::string& s) {
  if (s.empty()) return {};
  if (s.starts_with("mock:")) return {ModelSpec::Kind::mock, s.substr(5)};
  if (s.starts_with("bridge:")) return {ModelSpec::Kind::bridge, s.substr(7)};
  throw InputError("model must be mock:<path> or bridge:<endpoint>, got '" + s + "'");
}

inline std::unique_ptr<Model> make_model(const ModelSpec& spec, const StreamManifest& manifest,
                                         const PolicyConfig& config) {
  switch (spec.kind) {
    case ModelSpec::Kind::manifest_scenario:
      if (!manifest_uses_scenario(manifest))
        throw InputError("no --model given and the manifest features are not a mock scenario");
      return std::make_unique<MockModel>(load_scenario(manifest_scenario_path(manifest)), config.attention_layer);
    case ModelSpec::Kind::mock:
      return std::make_unique<MockModel>(load_scenario(spec.target), config.attention_layer);
    case ModelSpec::Kind::bridge:
      return std::make_unique<BridgeModel>(spec.target);
  }
  throw InputError("bad model spec");
}

// ---------------------------------------------------------------------------

struct SimulateOptions {
  std::filesystem::path manifest;
  std::string model;
  PolicyConfig config;
  ClockMode clock = ClockMode::simulated;
  std::filesystem::path out;  // empty: do not write
};

inline EmissionLog cmd_simulate(const SimulateOptions& o) {
  const StreamManifest manifest = load_manifest(o.manifest);
  const FeatureSequence features = load_stream_features(manifest);
  o.config.validate(features.frame_ms());
  auto model = make_model(parse_model_spec(o.model), manifest, o.config);
  EmissionLog log = run_stream(manifest, features, *model, o.config, {o.clock});
  if (!o.out.empty()) write_text_file(o.out, log_to_jsonl(log));
  return log;
}

struct ScoreOptions {
  std::filesystem::path log;
  std::filesystem::path manifest;
  std::vector<LatencyMode> modes{LatencyMode::nca, LatencyMode::ca};
  std::filesystem::path out;           // TSV report; empty: stdout
  std::filesystem::path hyp_out;       // segmented hypotheses, one per line
  std::filesystem::path segments_out;  // per-segment TSV
};

inline StreamScore cmd_score(const ScoreOptions& o, std::ostream& stdout_stream = std::cout,
                             std::ostream& warn = std::cerr) {
  const EmissionLog log = load_log(o.log);
  const StreamManifest manifest = load_manifest(o.manifest);
  StreamScore score = score_stream(log, manifest);
  if (log.events.empty()) warn << "warning: log for '" << log.talk_id << "' has no emissions; latencies are 0\n";
  if (score.empty_segments > 0)
    warn << "warning: " << score.empty_segments << " segment(s) received no hypothesis words (counted as 0)\n";
  const std::string report = score_report_tsv(score, o.modes);
  if (o.out.empty()) {
    stdout_stream << report;
  } else {
    write_text_file(o.out, report);
  }
  if (!o.hyp_out.empty()) write_text_file(o.hyp_out, segmented_hypotheses(score));
  if (!o.segments_out.empty()) write_text_file(o.segments_out, segment_report_tsv(score));
  return score;
}

// ---------------------------------------------------------------------------

struct SweepSpec {
  std::vector<int> f_values{2, 4, 6, 8};
  std::vector<int> n_words_values{10, 20, 30, 40};
  std::vector<HistoryMode> history_modes{HistoryMode::fixed_words};

  void validate() const {
    if (f_values.empty()) throw InputError("sweep needs at least one f value");
    if (n_words_values.empty()) throw InputError("sweep needs at least one n_words value");
    if (history_modes.empty()) throw InputError("sweep needs at least one history mode");
  }
};

struct SweepRow {
  PolicyConfig config;
  bool ok = false;
  double stream_laal_nca_ms = 0.0;
  double stream_laal_ca_ms = 0.0;
  std::string error;
};

struct SweepOptions {
  std::filesystem::path manifest;
  std::string model;
  PolicyConfig base;
  SweepSpec spec;
  unsigned jobs = 1;
  ClockMode clock = ClockMode::simulated;
  std::filesystem::path out;  // empty: stdout
};

inline std::string sweep_report_tsv(const std::vector<SweepRow>& rows) {
  std::string out = "f\tn_words\thistory\tstream_laal_nca_ms\tstream_laal_ca_ms\tstatus\n";
  for (const auto& r : rows) {
    out += std::to_string(r.config.f) + '\t' + std::to_string(r.config.n_words) + '\t' +
           std::string(to_string(r.config.history_mode)) + '\t';
    if (r.ok) {
      out += format_number(r.stream_laal_nca_ms) + '\t' + format_number(r.stream_laal_ca_ms) + "\tok\n";
    } else {
      std::string msg = r.error;
      for (char& c : msg)
        if (c == '\t' || c == '\n') c = ' ';
      out += "\t\terror: " + msg + '\n';
    }
  }
  return out;
}

// Runs simulate + score for every (history, n_words, f) combination. Each
// job builds its own model; a failing configuration does not stop the rest.
inline std::vector<SweepRow> cmd_sweep(const SweepOptions& o, std::ostream& stdout_stream = std::cout) {
  o.spec.validate();
  const StreamManifest manifest = load_manifest(o.manifest);
  const FeatureSequence features = load_stream_features(manifest);
  const ModelSpec model_spec = parse_model_spec(o.model);

  std::vector<SweepRow> rows;
  for (auto mode : o.spec.history_modes)
    for (int n : o.spec.n_words_values)
      for (int f : o.spec.f_values) {
        SweepRow r;
        r.config = o.base;
        r.config.history_mode = mode;
        r.config.n_words = n;
        r.config.f = f;
        rows.push_back(r);
      }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      SweepRow& r = rows[i];
      try {
        r.config.validate(features.frame_ms());
        auto model = make_model(model_spec, manifest, r.config);
        const EmissionLog log = run_stream(manifest, features, *model, r.config, {o.clock});
        const StreamScore s = score_stream(log, manifest);
        r.stream_laal_nca_ms = s.stream_laal_nca_ms;
        r.stream_laal_ca_ms = s.stream_laal_ca_ms;
        r.ok = true;
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(o.jobs, static_cast<unsigned>(rows.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  const std::string report = sweep_report_tsv(rows);
  if (o.out.empty()) {
    stdout_stream << report;
  } else {
    write_text_file(o.out, report);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Synthetic talk generation

struct GenScenarioOptions {
  std::uint64_t seed = 1;
  std::string talk_id = "mock_talk";
  int sentences = 8;
  int min_words = 6;
  int max_words = 14;
  double frame_ms = kDefaultFrameMs;
  double noise = 2.0;
  double noise_floor = 0.0;
  CostModel cost{40.0, 0.25, 0.5};
  double reference_edit_rate = 0.1;  // chance a reference word differs from the script
  std::string scenario_file = "scenario.json";
};

struct GeneratedTalk {
  MockScenario scenario;
  StreamManifest manifest;
};

namespace detail {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  // Uniform in [lo, hi], independent of the standard library's distributions.
  int range(int lo, int hi) { return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1)); }
  bool chance(double p) { return static_cast<double>(gen_() >> 11) * 0x1.0p-53 < p; }

 private:
  std::mt19937_64 gen_;
};

inline constexpr const char* kSyllables[] = {"ka", "lo", "mi", "ten", "sa", "ri", "vo", "nel", "da", "pu",
                                             "gen", "ta", "ber", "shi", "mo", "lin", "fa", "ze", "rok", "ul"};

}  // namespace detail

// A talk of scripted sentences with roughly speech-rate timing (5–9 frames
// per word at 40 ms) and short pauses between sentences. Each sentence
// becomes one reference segment.
inline GeneratedTalk generate_talk(const GenScenarioOptions& o) {
  if (o.sentences < 1 || o.min_words < 1 || o.max_words < o.min_words)
    throw InputError("bad sentence/word counts for scenario generation");
  detail::Rng rng(o.seed);
  GeneratedTalk talk;
  MockScenario& sc = talk.scenario;
  sc.frame_ms = o.frame_ms;
  sc.peakedness = o.noise;
  sc.noise_floor = o.noise_floor;
  sc.cost = o.cost;

  const int nsyl = static_cast<int>(std::size(detail::kSyllables));
  int frame = rng.range(3, 8);
  for (int s = 0; s < o.sentences; ++s) {
    const int seg_start = frame;
    const int nwords = rng.range(o.min_words, o.max_words);
    std::string reference;
    for (int w = 0; w < nwords; ++w) {
      ScenarioWord word;
      const int span = rng.range(5, 9);
      const int pieces = rng.range(1, 3);
      for (int p = 0; p < pieces; ++p) word.tokens.push_back(detail::kSyllables[rng.range(0, nsyl - 1)]);
      const bool last = w + 1 == nwords;
      if (last) {
        word.tokens.push_back(rng.chance(0.15) ? "?" : ".");
      } else if (rng.chance(0.12)) {
        word.tokens.push_back(",");
      }
      for (std::size_t p = 0; p < word.tokens.size(); ++p) {
        const int offset = static_cast<int>((p * static_cast<std::size_t>(span - 1)) / word.tokens.size());
        word.alignment.push_back(frame + offset);
      }
      for (const auto& t : word.tokens) word.surface += t;
      word.lookahead = rng.range(0, 3);
      std::string ref_word = word.surface;
      if (rng.chance(o.reference_edit_rate)) {
        ref_word = std::string(detail::kSyllables[rng.range(0, nsyl - 1)]) + detail::kSyllables[rng.range(0, nsyl - 1)];
        if (last) ref_word += '.';
      }
      if (w == 0 && !ref_word.empty()) ref_word[0] = static_cast<char>(std::toupper(ref_word[0]));
      if (!reference.empty()) reference += ' ';
      reference += ref_word;
      sc.words.push_back(std::move(word));
      frame += span;
    }
    talk.manifest.segments.push_back({seg_start * o.frame_ms, (frame - seg_start) * o.frame_ms, reference});
    frame += rng.range(5, 15);
  }
  sc.total_frames = frame;
  sc.validate();

  talk.manifest.talk_id = o.talk_id;
  talk.manifest.total_duration_ms = frame * o.frame_ms;
  talk.manifest.features = std::string(kScenarioPrefix) + o.scenario_file;
  talk.manifest.validate();
  return talk;
}

}  // namespace streamatt::cli
