#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "streamatt/attention.hpp"
#include "streamatt/error.hpp"
#include "streamatt/features.hpp"
#include "streamatt/io.hpp"
#include "streamatt/model.hpp"
#include "streamatt/tokens.hpp"

namespace streamatt {

// Deterministic scripted translation model used as a test oracle.
//
// The scenario fixes the full output of a talk: every word, its tokens, the
// absolute stream frame each token attends to, and how many frames past its
// last token the word needs before the mock is willing to produce it. The
// mock's vocabulary is the script itself: token_id is the token's position in
// the script and script_size() is the EOS id, so a forced prefix always
// locates itself unambiguously.

struct ScenarioWord {
  std::string surface;
  std::vector<std::string> tokens;  // pieces concatenating to surface
  std::vector<int> alignment;       // absolute frame per token
  int lookahead = 0;                // extra frames needed past the last token
};

// Simulated compute time charged per decode call.
struct CostModel {
  double per_call_ms = 0.0;
  double per_frame_ms = 0.0;
  double per_token_ms = 0.0;
};

struct MockScenario {
  std::vector<ScenarioWord> words;
  // Row sharpness: weight(j) ∝ exp(-peakedness·|j - peak|). Infinity gives
  // one-hot rows. Any positive value keeps the argmax at the scripted frame;
  // peakedness >= ln 3 keeps the peak mass >= 0.5 when noise_floor is 0.
  double peakedness = 2.0;
  double noise_floor = 0.0;  // uniform mass mixed into every row, in [0, 1)
  double frame_ms = kDefaultFrameMs;
  std::optional<int> total_frames;  // stream length; defaults to last alignment + 1
  std::size_t feature_dim = 1;
  CostModel cost;

  int stream_frames() const {
    if (total_frames) return *total_frames;
    int last = 0;
    for (const auto& w : words)
      for (int a : w.alignment) last = std::max(last, a + 1);
    return last;
  }

  std::size_t script_size() const {
    std::size_t n = 0;
    for (const auto& w : words) n += w.tokens.size();
    return n;
  }
  std::int64_t eos_id() const { return static_cast<std::int64_t>(script_size()); }

  void validate() const {
    if (!(frame_ms > 0.0)) throw InputError("scenario frame_ms must be positive");
    if (!(peakedness > 0.0)) throw InputError("scenario noise (peakedness) must be positive");
    if (noise_floor < 0.0 || noise_floor >= 1.0) throw InputError("noise_floor must be in [0, 1)");
    if (feature_dim == 0) throw InputError("feature_dim must be positive");
    int prev = 0;
    for (const auto& w : words) {
      if (w.tokens.empty()) throw InputError("scenario word '" + w.surface + "' has no tokens");
      if (w.alignment.size() != w.tokens.size())
        throw InputError("scenario word '" + w.surface + "' alignment/token count mismatch");
      std::string joined;
      for (const auto& t : w.tokens) {
        if (t.empty()) throw InputError("empty token in word '" + w.surface + "'");
        joined += t;
      }
      if (joined != w.surface)
        throw InputError("tokens of '" + w.surface + "' do not concatenate to the word");
      if (w.surface.find_first_of(" \t\n\r") != std::string::npos)
        throw InputError("scenario word '" + w.surface + "' contains whitespace");
      if (w.lookahead < 0) throw InputError("negative lookahead");
      for (int a : w.alignment) {
        if (a < prev) throw InputError("scenario alignment must be non-decreasing");
        prev = a;
      }
    }
    if (total_frames && *total_frames < stream_frames_from_alignment())
      throw InputError("total_frames shorter than the scripted alignment");
  }

  // Position of each token's word in words[].
  std::vector<std::size_t> word_index_per_token() const {
    std::vector<std::size_t> out;
    for (std::size_t w = 0; w < words.size(); ++w)
      out.insert(out.end(), words[w].tokens.size(), w);
    return out;
  }

  TokenList script() const {
    TokenList out;
    std::int64_t id = 0;
    for (const auto& w : words)
      for (std::size_t k = 0; k < w.tokens.size(); ++k)
        out.push_back({id++, w.tokens[k], k == 0, false});
    return out;
  }

  std::vector<int> script_alignment() const {
    std::vector<int> out;
    for (const auto& w : words) out.insert(out.end(), w.alignment.begin(), w.alignment.end());
    return out;
  }

  TokenRecord eos_token() const { return {eos_id(), "", false, true}; }

 private:
  int stream_frames_from_alignment() const {
    int last = 0;
    for (const auto& w : words)
      for (int a : w.alignment) last = std::max(last, a + 1);
    return last;
  }
};

inline MockScenario scenario_from_json(const json& j) {
  MockScenario s;
  s.frame_ms = json_get_or<double>(j, "frame_ms", kDefaultFrameMs);
  s.peakedness = json_get_or<double>(j, "noise", 2.0);
  s.noise_floor = json_get_or<double>(j, "noise_floor", 0.0);
  s.feature_dim = json_get_or<std::size_t>(j, "feature_dim", 1);
  if (j.contains("total_frames")) s.total_frames = json_get<int>(j, "total_frames");
  if (j.contains("cost")) {
    const auto& c = j.at("cost");
    s.cost.per_call_ms = json_get_or<double>(c, "per_call_ms", 0.0);
    s.cost.per_frame_ms = json_get_or<double>(c, "per_frame_ms", 0.0);
    s.cost.per_token_ms = json_get_or<double>(c, "per_token_ms", 0.0);
  }
  const json words = json_get<json>(j, "words");
  if (!words.is_array()) throw InputError("scenario 'words' must be an array");
  for (const auto& jw : words) {
    ScenarioWord w;
    w.surface = json_get<std::string>(jw, "surface");
    w.tokens = jw.contains("tokens") ? json_get<std::vector<std::string>>(jw, "tokens")
                                     : std::vector<std::string>{w.surface};
    const json& ja = jw.contains("alignment") ? jw.at("alignment") : json();
    if (ja.is_number_integer()) {
      w.alignment.assign(w.tokens.size(), ja.get<int>());
    } else {
      w.alignment = json_get<std::vector<int>>(jw, "alignment");
    }
    w.lookahead = json_get_or<int>(jw, "lookahead", 0);
    s.words.push_back(std::move(w));
  }
  s.validate();
  return s;
}

inline json scenario_to_json(const MockScenario& s) {
  json j;
  j["frame_ms"] = s.frame_ms;
  j["noise"] = s.peakedness;
  j["noise_floor"] = s.noise_floor;
  j["feature_dim"] = s.feature_dim;
  if (s.total_frames) j["total_frames"] = *s.total_frames;
  j["cost"] = {{"per_call_ms", s.cost.per_call_ms},
               {"per_frame_ms", s.cost.per_frame_ms},
               {"per_token_ms", s.cost.per_token_ms}};
  j["words"] = json::array();
  for (const auto& w : s.words) {
    j["words"].push_back({{"surface", w.surface},
                          {"tokens", w.tokens},
                          {"alignment", w.alignment},
                          {"lookahead", w.lookahead}});
  }
  return j;
}

inline MockScenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_json_file(path));
}

namespace detail {

inline void fill_peaked_row(std::span<float> row, std::size_t peak, double peakedness,
                            double noise_floor) {
  const std::size_t n = row.size();
  std::vector<double> w(n, 0.0);
  if (std::isinf(peakedness)) {
    w[peak] = 1.0;
  } else {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double dist = j > peak ? double(j - peak) : double(peak - j);
      w[j] = std::exp(-peakedness * dist);
      sum += w[j];
    }
    for (auto& v : w) v /= sum;
  }
  for (std::size_t j = 0; j < n; ++j)
    row[j] = static_cast<float>((1.0 - noise_floor) * w[j] + noise_floor / double(n));
}

}  // namespace detail

// Attention rows peaked on each token's scripted frame. first_frame is the
// absolute stream frame of column 0; frames outside the window clamp to its
// edges. EOS rows peak on the last column.
inline AttentionMatrix synthesize_attention(const MockScenario& scenario, const TokenList& tokens,
                                            std::size_t num_frames, int first_frame = 0,
                                            int layer_index = 4) {
  if (num_frames == 0) throw InputError("cannot synthesize attention over zero frames");
  const TokenList script = scenario.script();
  const std::vector<int> align = scenario.script_alignment();
  AttentionMatrix att(tokens.size(), num_frames, layer_index, "mean");
  for (std::size_t r = 0; r < tokens.size(); ++r) {
    const auto& t = tokens[r];
    std::size_t peak = num_frames - 1;
    if (t.is_eos) {
      if (t.token_id != scenario.eos_id()) throw ScenarioError("EOS token id not in script");
    } else {
      if (t.token_id < 0 || t.token_id >= scenario.eos_id() ||
          script[static_cast<std::size_t>(t.token_id)].surface != t.surface)
        throw ScenarioError("token '" + t.surface + "' is not part of the scenario script");
      const long local = long(align[static_cast<std::size_t>(t.token_id)]) - first_frame;
      peak = static_cast<std::size_t>(std::clamp<long>(local, 0, long(num_frames) - 1));
    }
    detail::fill_peaked_row(att.row(r), peak, scenario.peakedness, scenario.noise_floor);
  }
  return att;
}

// Synthetic feature frames for a scenario talk: one vector per frame whose
// first component is the absolute frame index (the rest are zero).
inline FeatureSequence scenario_features(const MockScenario& scenario, std::size_t frames) {
  FeatureSequence fs(scenario.feature_dim, scenario.frame_ms, 0.0);
  std::vector<float> v(scenario.feature_dim, 0.0f);
  for (std::size_t i = 0; i < frames; ++i) {
    v[0] = static_cast<float>(i);
    fs.push_back(v);
  }
  return fs;
}

class MockModel final : public Model {
 public:
  explicit MockModel(MockScenario scenario, int attention_layer = 4)
      : scenario_(std::move(scenario)), layer_(attention_layer) {
    scenario_.validate();
    script_ = scenario_.script();
    word_of_ = scenario_.word_index_per_token();
  }

  const MockScenario& scenario() const { return scenario_; }

  DecodeResult decode(const DecodeRequest& req) override {
    check_decode_request(req);
    const auto& feats = req.features;
    if (feats.width() != scenario_.feature_dim) throw InputError("feature width mismatch");
    if (std::abs(feats.frame_ms() - scenario_.frame_ms) > 1e-9)
      throw InputError("frame duration does not match the scenario");

    const int first_frame = static_cast<int>(std::llround(feats.origin_offset_ms() / scenario_.frame_ms));
    const int window_end = first_frame + static_cast<int>(feats.size());

    std::size_t pos = 0;
    std::int64_t last_id = -1;
    for (const auto& t : req.forced_prefix) {
      if (t.token_id < 0 || t.token_id >= scenario_.eos_id() ||
          script_[static_cast<std::size_t>(t.token_id)].surface != t.surface)
        throw ScenarioError("forced prefix token '" + t.surface + "' is not in the script");
      if (t.token_id <= last_id) throw ScenarioError("forced prefix is not in script order");
      last_id = t.token_id;
    }
    if (last_id >= 0) pos = static_cast<std::size_t>(last_id) + 1;

    DecodeResult res;
    res.tokens = req.forced_prefix;
    res.prefix_size = req.forced_prefix.size();

    const auto budget = static_cast<std::size_t>(req.max_new_tokens);
    std::size_t produced = 0;
    while (produced < budget) {
      if (pos >= script_.size()) {
        res.tokens.push_back(scenario_.eos_token());
        break;
      }
      const ScenarioWord& word = scenario_.words[word_of_[pos]];
      if (script_[pos].begins_word && word.alignment.front() < first_frame) {
        // Audio for this word has been discarded; it can no longer be produced.
        pos += word.tokens.size();
        continue;
      }
      if (!word_available(word, window_end)) break;
      res.tokens.push_back(script_[pos++]);
      ++produced;
    }

    res.attention = synthesize_attention(scenario_, res.tokens, feats.size(), first_frame, layer_);
    const auto& c = scenario_.cost;
    res.compute_cost_ms = c.per_call_ms + c.per_frame_ms * double(feats.size()) +
                          c.per_token_ms * double(res.tokens.size());
    return res;
  }

  // The mock produces a word once the window reaches its last token's frame
  // plus lookahead (capped at the end of the stream).
  bool word_available(const ScenarioWord& word, int window_end) const {
    const int last = word.alignment.back();
    const int needed = std::min(last + word.lookahead, scenario_.stream_frames());
    return last < window_end && needed <= window_end;
  }

 private:
  MockScenario scenario_;
  int layer_;
  TokenList script_;
  std::vector<std::size_t> word_of_;
};

// Requests arriving over the wire carry neither prefix surfaces nor the
// window's stream offset. For scenario features (first component = absolute
// frame index) both can be recovered, letting a mock sit behind the protocol.
inline void restore_wire_request(const MockModel& model, DecodeRequest& req) {
  const TokenList script = model.scenario().script();
  for (auto& t : req.forced_prefix)
    if (t.token_id >= 0 && static_cast<std::size_t>(t.token_id) < script.size())
      t = script[static_cast<std::size_t>(t.token_id)];
  if (req.features.empty()) return;
  const double first = std::round(req.features.frame(0)[0]);
  if (first < 0.0) return;
  FeatureSequence shifted(req.features.width(), req.features.frame_ms(), first * req.features.frame_ms());
  for (std::size_t i = 0; i < req.features.size(); ++i) shifted.push_back(req.features.frame(i));
  req.features = std::move(shifted);
}

}  // namespace streamatt
