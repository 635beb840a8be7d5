#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "streamatt/error.hpp"
#include "streamatt/features.hpp"
#include "streamatt/io.hpp"
#include "streamatt/mock_model.hpp"
#include "streamatt/model.hpp"
#include "streamatt/policy.hpp"
#include "streamatt/tokens.hpp"

namespace streamatt {

// ---------------------------------------------------------------------------
// Manifest

struct Segment {
  double offset_ms = 0.0;
  double duration_ms = 0.0;
  std::string reference;
};
using SegmentSet = std::vector<Segment>;

struct StreamManifest {
  std::string talk_id;
  double total_duration_ms = 0.0;
  // "scenario:<path>" synthesizes frames for a mock scenario; anything else is
  // a feature file {"frame_ms": n, "frames": [[...], ...]}.
  std::string features;
  SegmentSet segments;
  std::filesystem::path base_dir;  // relative feature paths resolve here

  void validate() const {
    if (talk_id.empty()) throw InputError("manifest talk_id is empty");
    if (total_duration_ms < 0.0) throw InputError("manifest duration must be non-negative");
    double prev_end = 0.0;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const auto& s = segments[i];
      if (!(s.duration_ms > 0.0)) throw InputError("segment " + std::to_string(i) + " has non-positive duration");
      if (s.reference.empty()) throw InputError("segment " + std::to_string(i) + " has an empty reference");
      if (s.offset_ms < prev_end - 1e-9) throw InputError("segments overlap or are unsorted");
      if (s.offset_ms + s.duration_ms > total_duration_ms + 1e-9)
        throw InputError("segment " + std::to_string(i) + " extends past the stream end");
      prev_end = s.offset_ms + s.duration_ms;
    }
  }

  std::filesystem::path resolve(const std::string& p) const {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }
};

inline StreamManifest manifest_from_json(const json& j, std::filesystem::path base_dir = {}) {
  StreamManifest m;
  m.talk_id = json_get<std::string>(j, "talk_id");
  m.total_duration_ms = json_get<double>(j, "duration_ms");
  m.features = json_get_or<std::string>(j, "features", "");
  for (const auto& js : json_get_or<json>(j, "segments", json::array())) {
    m.segments.push_back({json_get<double>(js, "offset_ms"), json_get<double>(js, "duration_ms"),
                          json_get<std::string>(js, "reference")});
  }
  m.base_dir = std::move(base_dir);
  m.validate();
  return m;
}

inline json manifest_to_json(const StreamManifest& m) {
  json segs = json::array();
  for (const auto& s : m.segments)
    segs.push_back({{"offset_ms", s.offset_ms}, {"duration_ms", s.duration_ms}, {"reference", s.reference}});
  return {{"talk_id", m.talk_id}, {"duration_ms", m.total_duration_ms}, {"features", m.features},
          {"segments", std::move(segs)}};
}

inline StreamManifest load_manifest(const std::filesystem::path& path) {
  return manifest_from_json(read_json_file(path), path.parent_path());
}

inline constexpr std::string_view kScenarioPrefix = "scenario:";

inline bool manifest_uses_scenario(const StreamManifest& m) { return m.features.starts_with(kScenarioPrefix); }

inline std::filesystem::path manifest_scenario_path(const StreamManifest& m) {
  return m.resolve(m.features.substr(kScenarioPrefix.size()));
}

inline FeatureSequence load_stream_features(const StreamManifest& m) {
  if (m.features.empty()) throw InputError("manifest has no features source");
  if (manifest_uses_scenario(m)) {
    const MockScenario sc = load_scenario(manifest_scenario_path(m));
    const auto frames = static_cast<std::size_t>(std::floor(m.total_duration_ms / sc.frame_ms + 1e-9));
    return scenario_features(sc, frames);
  }
  const json j = read_json_file(m.resolve(m.features));
  const double frame_ms = json_get_or<double>(j, "frame_ms", kDefaultFrameMs);
  const auto rows = json_get<std::vector<std::vector<float>>>(j, "frames");
  FeatureSequence fs(rows.empty() ? 0 : rows.front().size(), frame_ms, 0.0);
  for (const auto& r : rows) fs.push_back(r);
  if (fs.end_ms() > m.total_duration_ms + 1e-6) throw InputError("features extend past the stream duration");
  return fs;
}

// ---------------------------------------------------------------------------
// Emission log

struct EmittedWord {
  std::string surface;  // leading space when it starts a word after earlier text
  bool is_word_final = true;

  friend bool operator==(const EmittedWord&, const EmittedWord&) = default;
};

struct EmissionEvent {
  std::size_t step_index = 0;  // 1-based decode step
  double audio_consumed_ms = 0.0;
  double cumulative_compute_ms = 0.0;
  std::vector<EmittedWord> words;

  friend bool operator==(const EmissionEvent&, const EmissionEvent&) = default;
};

struct EmissionLog {
  std::string talk_id;
  json config;
  std::vector<EmissionEvent> events;

  // Y_S: the concatenation of every emitted surface.
  std::string hypothesis() const {
    std::string s;
    for (const auto& e : events)
      for (const auto& w : e.words) s += w.surface;
    return s;
  }
};

// Computation-aware delay on the simulated additive clock.
inline double ca_delay(const EmissionEvent& e) { return e.audio_consumed_ms + e.cumulative_compute_ms; }
inline double nca_delay(const EmissionEvent& e) { return e.audio_consumed_ms; }

inline json config_to_json(const PolicyConfig& c) {
  return {{"f", c.f},
          {"chunk_ms", c.chunk_ms},
          {"n_words", c.n_words},
          {"history_mode", std::string(to_string(c.history_mode))},
          {"ms_per_word_baseline", c.ms_per_word_baseline},
          {"attention_layer", c.attention_layer},
          {"max_new_tokens", c.max_new_tokens}};
}

inline PolicyConfig config_from_json(const json& j) {
  PolicyConfig c;
  c.f = json_get_or<int>(j, "f", c.f);
  c.chunk_ms = json_get_or<int>(j, "chunk_ms", c.chunk_ms);
  c.n_words = json_get_or<int>(j, "n_words", c.n_words);
  c.history_mode = parse_history_mode(json_get_or<std::string>(j, "history_mode", "fw"));
  c.ms_per_word_baseline = json_get_or<double>(j, "ms_per_word_baseline", c.ms_per_word_baseline);
  c.attention_layer = json_get_or<int>(j, "attention_layer", c.attention_layer);
  c.max_new_tokens = json_get_or<int>(j, "max_new_tokens", c.max_new_tokens);
  return c;
}

inline json event_to_json(const EmissionEvent& e) {
  json words = json::array();
  for (const auto& w : e.words) words.push_back({{"surface", w.surface}, {"is_word_final", w.is_word_final}});
  return {{"step_index", e.step_index},
          {"audio_consumed_ms", e.audio_consumed_ms},
          {"cumulative_compute_ms", e.cumulative_compute_ms},
          {"words", std::move(words)}};
}

// JSON lines: a header {"talk_id", "config"} followed by one event per line.
inline std::string log_to_jsonl(const EmissionLog& log) {
  std::string out = json{{"talk_id", log.talk_id}, {"config", log.config}}.dump(-1, ' ', false, json::error_handler_t::replace);
  out += '\n';
  for (const auto& e : log.events) {
    out += event_to_json(e).dump(-1, ' ', false, json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

inline EmissionLog log_from_jsonl(const std::string& text) {
  EmissionLog log;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw InputError("log line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!header) {
      log.talk_id = json_get<std::string>(j, "talk_id");
      log.config = json_get_or<json>(j, "config", json::object());
      header = true;
      continue;
    }
    EmissionEvent e;
    e.step_index = json_get<std::size_t>(j, "step_index");
    e.audio_consumed_ms = json_get<double>(j, "audio_consumed_ms");
    e.cumulative_compute_ms = json_get<double>(j, "cumulative_compute_ms");
    for (const auto& w : json_get<json>(j, "words"))
      e.words.push_back({json_get<std::string>(w, "surface"), json_get<bool>(w, "is_word_final")});
    log.events.push_back(std::move(e));
  }
  if (!header) throw InputError("log has no header line");
  return log;
}

inline EmissionLog load_log(const std::filesystem::path& path) { return log_from_jsonl(read_text_file(path)); }

// ---------------------------------------------------------------------------
// Stream simulation

enum class ClockMode { simulated, wall };

struct RunOptions {
  ClockMode clock = ClockMode::simulated;
  std::size_t max_flush_steps = 64;
};

// Word fragments of one emission. A fragment ends its word unless the decoder
// produced a continuation piece right after it.
inline std::vector<EmittedWord> emitted_fragments(const TokenList& emitted, const std::optional<TokenRecord>& next,
                                                  bool stream_has_text) {
  std::vector<EmittedWord> out;
  for (const auto& t : emitted) {
    if (t.is_eos) continue;
    if (out.empty() || t.begins_word) {
      out.push_back({(t.begins_word && (stream_has_text || !out.empty())) ? " " : "", true});
    }
    out.back().surface += t.surface;
  }
  if (!out.empty()) out.back().is_word_final = !(next && !next->is_eos && !next->begins_word);
  return out;
}

// Feeds the talk in chunk_ms pieces, then flushes with f = 0 until the model
// has nothing more to say. Every fragment carries the audio fed so far and the
// running compute total.
inline EmissionLog run_stream(const StreamManifest& manifest, const FeatureSequence& features, Model& model,
                              const PolicyConfig& config, const RunOptions& options = {}) {
  config.validate(features.frame_ms());
  EmissionLog log;
  log.talk_id = manifest.talk_id;
  log.config = config_to_json(config);

  const std::size_t total = features.size();
  if (total == 0) return log;
  const auto per_chunk =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(config.chunk_ms / features.frame_ms() + 1e-9)));

  HistoryState state;
  state.audio_history = FeatureSequence(features.width(), features.frame_ms(), features.origin_offset_ms());
  double compute = 0.0;
  std::size_t step = 0;
  bool has_text = false;

  auto run = [&](const FeatureSequence& chunk, double consumed_ms, bool flush) {
    ++step;
    const auto t0 = std::chrono::steady_clock::now();
    StepResult r;
    try {
      r = policy_step(state, chunk, model, config, flush);
    } catch (const TransportError& e) {
      throw TransportError("step " + std::to_string(step) + ": " + e.what());
    } catch (const ScenarioError& e) {
      throw ScenarioError("step " + std::to_string(step) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError("step " + std::to_string(step) + ": " + e.what());
    }
    if (options.clock == ClockMode::wall) {
      compute += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    } else {
      compute += r.compute_cost_ms;
    }
    state = std::move(r.state);
    if (!r.emitted.empty()) {
      EmissionEvent e{step, consumed_ms, compute, emitted_fragments(r.emitted, r.next_token, has_text)};
      if (!e.words.empty()) {
        has_text = true;
        log.events.push_back(std::move(e));
      }
    }
    return r;
  };

  const double end_ms = std::max(manifest.total_duration_ms, features.end_ms());
  for (std::size_t start = 0; start < total; start += per_chunk) {
    const std::size_t n = std::min(per_chunk, total - start);
    const FeatureSequence chunk = features.slice(start, n);
    run(chunk, start + n == total ? end_ms : chunk.end_ms(), false);
  }

  for (std::size_t i = 0; i < options.max_flush_steps; ++i) {
    if (state.audio_history.empty()) break;
    const StepResult r = run(state.audio_history.cleared(), end_ms, true);
    if (r.emitted.empty()) break;
  }
  return log;
}

}  // namespace streamatt
