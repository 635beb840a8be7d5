#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "streamatt/attention.hpp"
#include "streamatt/error.hpp"
#include "streamatt/features.hpp"
#include "streamatt/model.hpp"
#include "streamatt/tokens.hpp"

namespace streamatt {

enum class HistoryMode { fixed_words, punctuation, baseline_fixed };

inline std::string_view to_string(HistoryMode m) {
  switch (m) {
    case HistoryMode::fixed_words: return "fw";
    case HistoryMode::punctuation: return "punct";
    case HistoryMode::baseline_fixed: return "baseline";
  }
  return "?";
}

inline HistoryMode parse_history_mode(std::string_view s) {
  if (s == "fw" || s == "fixed_words") return HistoryMode::fixed_words;
  if (s == "punct" || s == "punctuation") return HistoryMode::punctuation;
  if (s == "baseline" || s == "baseline_fixed") return HistoryMode::baseline_fixed;
  throw InputError("unknown history mode '" + std::string(s) + "'");
}

struct PolicyConfig {
  int f = 2;            // forbidden trailing frames
  int chunk_ms = 1000;  // incoming audio per step
  int n_words = 20;     // textual history cap (fixed words and baseline)
  HistoryMode history_mode = HistoryMode::fixed_words;
  double ms_per_word_baseline = 280.0;
  int attention_layer = 4;
  int max_new_tokens = kDefaultMaxNewTokens;

  void validate(double frame_ms = kDefaultFrameMs) const {
    if (f < 0) throw InputError("f must be non-negative");
    if (n_words < 1) throw InputError("n_words must be at least 1");
    if (chunk_ms <= 0 || chunk_ms < frame_ms) throw InputError("chunk_ms must be at least one frame");
    if (!(ms_per_word_baseline > 0.0)) throw InputError("ms_per_word_baseline must be positive");
    if (max_new_tokens <= 0) throw InputError("max_new_tokens must be positive");
  }
};

// Frame index (0-based) each token attends to most.
using AlignmentVector = std::vector<std::size_t>;

// Row-wise argmax; ties resolve to the earliest frame.
inline AlignmentVector align_tokens(const AttentionMatrix& attention) {
  if (attention.empty()) throw InputError("cannot align an empty attention matrix");
  AlignmentVector out(attention.rows());
  for (std::size_t r = 0; r < attention.rows(); ++r) {
    const auto row = attention.row(r);
    out[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

// Length of the longest token prefix whose alignment stays clear of the last
// f frames. The first token attending to frame >= num_frames - f blocks itself
// and everything after it.
inline std::size_t select_emission(std::span<const std::size_t> alignment, std::size_t num_frames,
                                   std::size_t f) {
  if (f >= num_frames) return 0;
  const std::size_t limit = num_frames - f;
  std::size_t n = 0;
  while (n < alignment.size() && alignment[n] < limit) ++n;
  return n;
}

// Keep the last n_words words of prev ++ hyp.
inline WordList textual_history_fw(const WordList& prev, const WordList& hyp, int n_words) {
  WordList all = prev;
  all.insert(all.end(), hyp.begin(), hyp.end());
  const auto keep = std::min<std::size_t>(all.size(), static_cast<std::size_t>(std::max(n_words, 0)));
  return WordList(all.end() - static_cast<std::ptrdiff_t>(keep), all.end());
}

// Keep the words after the last one ending in a medium-strong mark; with no
// mark anywhere, keep everything.
inline WordList textual_history_punct(const WordList& prev, const WordList& hyp) {
  WordList all = prev;
  all.insert(all.end(), hyp.begin(), hyp.end());
  std::size_t start = 0;
  for (std::size_t i = all.size(); i > 0; --i) {
    if (ends_with_strong_mark(word_surface(all[i - 1]))) {
      start = i;
      break;
    }
  }
  return WordList(all.begin() + static_cast<std::ptrdiff_t>(start), all.end());
}

// Audio suffix starting at the earliest frame attended by the retained text.
// `alignment` holds one entry per retained token, in order.
inline FeatureSequence audio_history_select(const FeatureSequence& full_audio, const WordList& retained,
                                            std::span<const std::size_t> alignment) {
  if (alignment.size() != token_count(retained))
    throw InternalError("alignment does not cover the retained text");
  if (retained.empty()) return full_audio.cleared();
  const std::size_t first = *std::min_element(alignment.begin(), alignment.end());
  if (first >= full_audio.size()) throw InternalError("alignment outside the audio window");
  return full_audio.suffix(first);
}

struct HistoryState {
  TokenList text_history;
  FeatureSequence audio_history;
  std::size_t emitted_total_words = 0;
};

// Frames kept by the fixed-duration baseline: n_words words at a fixed
// per-word duration, rounded down to whole frames.
inline std::size_t baseline_audio_frames(const PolicyConfig& config, double frame_ms) {
  return static_cast<std::size_t>(std::floor(config.n_words * config.ms_per_word_baseline / frame_ms + 1e-9));
}

// Fixed history on both sides. prev.audio_history is the full current window.
inline HistoryState baseline_history(const HistoryState& prev, const WordList& new_hypothesis,
                                     const PolicyConfig& config) {
  HistoryState next;
  next.text_history = flatten(textual_history_fw(group_words(prev.text_history), new_hypothesis, config.n_words));
  const auto& audio = prev.audio_history;
  const std::size_t keep = std::min(audio.size(), baseline_audio_frames(config, audio.frame_ms()));
  next.audio_history = audio.suffix(audio.size() - keep);
  std::size_t new_words = 0;
  for (const auto& t : flatten(new_hypothesis)) new_words += t.begins_word ? 1 : 0;
  next.emitted_total_words = prev.emitted_total_words + new_words;
  return next;
}

struct StepResult {
  TokenList emitted;
  std::optional<TokenRecord> next_token;  // first decoded token after the emitted ones
  TokenList withheld;
  HistoryState state;
  AttentionMatrix attention;
  AlignmentVector alignment;  // over every decoded token, prefix included
  std::size_t prefix_size = 0;
  std::size_t window_frames = 0;
  double compute_cost_ms = 0.0;
  bool decoded = false;
  bool text_cut_to_empty = false;  // selection discarded every word it was given
};

// One iteration. Emission and both histories come from a single decoder pass.
// When `flush` is set the safety zone is disabled so every decoded token is
// emitted.
inline StepResult policy_step(const HistoryState& state, const FeatureSequence& new_chunk, Model& model,
                              const PolicyConfig& config, bool flush = false) {
  StepResult out;
  const FeatureSequence window = state.audio_history.concat(new_chunk);
  out.window_frames = window.size();
  if (window.empty()) {
    out.state = state;
    out.state.audio_history = window;
    return out;
  }

  DecodeRequest req{window, state.text_history, config.max_new_tokens};
  DecodeResult res = model.decode(req);
  check_decode_result<InternalError>(req, res);
  out.decoded = true;
  out.compute_cost_ms = res.compute_cost_ms;
  out.prefix_size = req.forced_prefix.size();
  out.alignment = res.tokens.empty() ? AlignmentVector{} : align_tokens(res.attention);

  const std::size_t prefix = out.prefix_size;
  std::size_t cont = res.tokens.size() - prefix;
  const bool has_eos = cont > 0 && res.tokens.back().is_eos;
  if (has_eos) --cont;

  const std::span<const std::size_t> cont_align(out.alignment.data() + prefix, cont);
  const std::size_t f = flush ? 0 : static_cast<std::size_t>(config.f);
  const std::size_t emit = select_emission(cont_align, window.size(), f);

  const auto first = res.tokens.begin() + static_cast<std::ptrdiff_t>(prefix);
  out.emitted.assign(first, first + static_cast<std::ptrdiff_t>(emit));
  out.withheld.assign(first + static_cast<std::ptrdiff_t>(emit), first + static_cast<std::ptrdiff_t>(cont));
  if (prefix + emit < res.tokens.size()) out.next_token = res.tokens[prefix + emit];

  const WordList prev_words = group_words(state.text_history);
  const WordList new_words = group_words(out.emitted);

  HistoryState next;
  if (config.history_mode == HistoryMode::baseline_fixed) {
    HistoryState full = state;
    full.audio_history = window;
    next = baseline_history(full, new_words, config);
  } else {
    const WordList retained = config.history_mode == HistoryMode::fixed_words
                                  ? textual_history_fw(prev_words, new_words, config.n_words)
                                  : textual_history_punct(prev_words, new_words);
    next.text_history = flatten(retained);
    const std::size_t combined = state.text_history.size() + emit;
    const std::size_t kept = next.text_history.size();
    if (kept == 0 && combined > 0) {
      out.text_cut_to_empty = true;
      next.audio_history = window.cleared();
    } else if (kept == 0) {
      next.audio_history = window;  // nothing translated yet: keep listening
    } else {
      // Retained tokens are the tail of prefix ++ emitted, i.e. rows
      // [prefix + emit - kept, prefix + emit) of this pass's attention.
      const std::span<const std::size_t> kept_align(out.alignment.data() + prefix + emit - kept, kept);
      next.audio_history = audio_history_select(window, retained, kept_align);
    }
    std::size_t started = 0;
    for (const auto& t : out.emitted) started += t.begins_word ? 1 : 0;
    next.emitted_total_words = state.emitted_total_words + started;
  }
  out.state = std::move(next);
  out.attention = std::move(res.attention);
  return out;
}

}  // namespace streamatt
