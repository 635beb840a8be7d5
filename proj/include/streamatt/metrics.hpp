#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "streamatt/error.hpp"
#include "streamatt/harness.hpp"
#include "streamatt/tokens.hpp"

namespace streamatt {

// ---------------------------------------------------------------------------
// Edit distance and WER

// Word-level Levenshtein distance, unit costs.
template <typename T>
std::size_t edit_distance(std::span<const T> a, std::span<const T> b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline double wer(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
  if (ref.empty()) throw InputError("WER is undefined for an empty reference");
  return static_cast<double>(edit_distance<std::string>(hyp, ref)) / static_cast<double>(ref.size());
}

// Matching form used by the resegmenter: ASCII-lowercased with the six
// profile marks removed.
inline std::string normalize_for_matching(std::string_view word) {
  std::string out;
  out.reserve(word.size());
  for (char c : word) {
    if (kProfileMarks.find(c) != std::string_view::npos) continue;
    const auto uc = static_cast<unsigned char>(c);
    out.push_back(uc < 0x80 ? static_cast<char>(std::tolower(uc)) : c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// LAAL

// Length-adaptive average lagging of one segment. Delays are relative to the
// segment start. The oracle delay of word i (0-based) is
// i * total_duration_ms / max(ref_len, hyp_len); the average runs up to the
// first word whose delay reaches the end of the segment (or over all words).
inline double laal(std::span<const double> delays, double total_duration_ms, std::size_t ref_len, std::size_t hyp_len) {
  if (!(total_duration_ms > 0.0)) throw InputError("LAAL needs a positive segment duration");
  if (delays.empty()) return 0.0;
  if (hyp_len != delays.size()) throw InputError("hyp_len must equal the number of delays");
  const double rate = total_duration_ms / static_cast<double>(std::max(ref_len, hyp_len));
  std::size_t tau = delays.size();
  for (std::size_t i = 0; i < delays.size(); ++i) {
    if (delays[i] >= total_duration_ms) {
      tau = i + 1;
      break;
    }
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < tau; ++i) sum += delays[i] - static_cast<double>(i) * rate;
  return sum / static_cast<double>(tau);
}

// ---------------------------------------------------------------------------
// Hypothesis words with delays

struct DelayedWord {
  std::string surface;
  double nca_delay_ms = 0.0;
  double ca_delay_ms = 0.0;

  friend bool operator==(const DelayedWord&, const DelayedWord&) = default;
};

// Rebuilds whole words from logged fragments. A fragment with a leading space
// starts a word; the word's delay is that of the event holding its last piece.
inline std::vector<DelayedWord> delayed_words(const EmissionLog& log) {
  std::vector<DelayedWord> out;
  bool open = false;
  for (const auto& e : log.events) {
    for (const auto& frag : e.words) {
      std::string_view s = frag.surface;
      const bool starts = !s.empty() && std::isspace(static_cast<unsigned char>(s.front()));
      const auto pieces = split_whitespace(s);
      if (pieces.empty()) continue;
      for (std::size_t k = 0; k < pieces.size(); ++k) {
        if (k == 0 && open && !starts) {
          out.back().surface += pieces[k];
        } else {
          out.push_back({pieces[k], 0.0, 0.0});
        }
        out.back().nca_delay_ms = nca_delay(e);
        out.back().ca_delay_ms = ca_delay(e);
      }
      open = !std::isspace(static_cast<unsigned char>(s.back()));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Resegmentation

struct Resegmentation {
  std::vector<std::size_t> boundaries;  // K+1 entries, 0 = b_0 <= ... <= b_K = |hyp|
  std::size_t total_distance = 0;
};

// Boundaries splitting `hyp` into refs.size() consecutive pieces with minimum
// summed word edit distance; among optimal splits, the lexicographically
// smallest boundary vector. Inputs are already normalized.
//
// A suffix table over the concatenated references gives, for every segment
// boundary k and hypothesis position j, the optimal cost of the remaining
// segments; boundaries are then fixed left to right, each at the earliest
// position that still attains the optimum. O(|hyp| * total reference words).
inline Resegmentation resegment_boundaries(const std::vector<std::string>& hyp,
                                           const std::vector<std::vector<std::string>>& refs) {
  if (refs.empty()) throw InputError("resegmentation needs at least one reference segment");
  const std::size_t n = hyp.size();
  const std::size_t K = refs.size();

  std::vector<std::string> concat;
  std::vector<std::size_t> start(K + 1, 0);  // start[k]: first word of ref k in concat
  for (std::size_t k = 0; k < K; ++k) {
    start[k] = concat.size();
    concat.insert(concat.end(), refs[k].begin(), refs[k].end());
  }
  start[K] = concat.size();
  const std::size_t total_ref = concat.size();

  // suffix[k][j] = edit distance between concat[start[k]..] and hyp[j..].
  std::vector<std::vector<std::size_t>> suffix(K + 1, std::vector<std::size_t>(n + 1));
  std::vector<std::size_t> row(n + 1), below(n + 1);
  for (std::size_t j = 0; j <= n; ++j) row[j] = n - j;
  std::size_t next_k = K;
  suffix[K] = row;
  while (next_k > 0 && start[next_k - 1] == total_ref) suffix[--next_k] = row;
  for (std::size_t r = total_ref; r-- > 0;) {
    std::swap(row, below);
    row[n] = total_ref - r;
    for (std::size_t j = n; j-- > 0;) {
      const std::size_t sub = below[j + 1] + (concat[r] == hyp[j] ? 0 : 1);
      row[j] = std::min({sub, below[j] + 1, row[j + 1] + 1});
    }
    while (next_k > 0 && start[next_k - 1] == r) suffix[--next_k] = row;
  }

  Resegmentation out;
  out.total_distance = suffix[0][0];
  out.boundaries.assign(K + 1, 0);
  out.boundaries[K] = n;
  std::size_t remaining = out.total_distance;
  std::vector<std::size_t> prefix_row, prev_row;
  for (std::size_t k = 0; k + 1 < K; ++k) {
    const std::size_t b = out.boundaries[k];
    const auto& ref = refs[k];
    // dist[j - b] = edit distance between ref and hyp[b..j).
    prev_row.resize(n - b + 1);
    std::iota(prev_row.begin(), prev_row.end(), std::size_t{0});
    prefix_row = prev_row;
    for (std::size_t i = 1; i <= ref.size(); ++i) {
      prefix_row[0] = i;
      for (std::size_t j = 1; j <= n - b; ++j) {
        const std::size_t sub = prev_row[j - 1] + (ref[i - 1] == hyp[b + j - 1] ? 0 : 1);
        prefix_row[j] = std::min({sub, prev_row[j] + 1, prefix_row[j - 1] + 1});
      }
      std::swap(prefix_row, prev_row);
    }
    const auto& dist = prev_row;
    std::size_t chosen = n + 1;
    for (std::size_t j = b; j <= n; ++j) {
      if (dist[j - b] + suffix[k + 1][j] == remaining) {
        chosen = j;
        break;
      }
    }
    if (chosen > n) throw InternalError("resegmentation lost the optimum");
    out.boundaries[k + 1] = chosen;
    remaining -= dist[chosen - b];
  }
  return out;
}

// Splits delayed hypothesis words across reference segments. Delays travel
// with their words; emitted surfaces are kept as-is.
inline std::vector<std::vector<DelayedWord>> resegment(const std::vector<DelayedWord>& hyp,
                                                       const std::vector<std::vector<std::string>>& refs,
                                                       Resegmentation* info = nullptr) {
  std::vector<std::string> norm_hyp;
  norm_hyp.reserve(hyp.size());
  for (const auto& w : hyp) norm_hyp.push_back(normalize_for_matching(w.surface));
  std::vector<std::vector<std::string>> norm_refs;
  for (const auto& r : refs) {
    auto& nr = norm_refs.emplace_back();
    for (const auto& w : r) nr.push_back(normalize_for_matching(w));
  }
  Resegmentation seg = resegment_boundaries(norm_hyp, norm_refs);
  std::vector<std::vector<DelayedWord>> out(refs.size());
  for (std::size_t k = 0; k < refs.size(); ++k)
    out[k].assign(hyp.begin() + static_cast<std::ptrdiff_t>(seg.boundaries[k]),
                  hyp.begin() + static_cast<std::ptrdiff_t>(seg.boundaries[k + 1]));
  if (info) *info = std::move(seg);
  return out;
}

// ---------------------------------------------------------------------------
// StreamLAAL

enum class LatencyMode { nca, ca };

struct SegmentScore {
  std::size_t segment_index = 0;
  double laal_nca_ms = 0.0;
  double laal_ca_ms = 0.0;
  std::size_t hyp_word_count = 0;
  std::size_t ref_word_count = 0;
};

struct StreamScore {
  std::string talk_id;
  double stream_laal_nca_ms = 0.0;
  double stream_laal_ca_ms = 0.0;
  std::vector<SegmentScore> segments;
  std::vector<std::vector<DelayedWord>> segment_words;
  std::size_t total_edit_distance = 0;
  std::size_t empty_segments = 0;

  double value(LatencyMode m) const { return m == LatencyMode::nca ? stream_laal_nca_ms : stream_laal_ca_ms; }
};

// Resegments the log's hypothesis against the references, then averages the
// per-segment LAAL over every segment. Segment-relative delays are not
// clamped; a segment that receives no words contributes 0.
inline StreamScore score_stream(const EmissionLog& log, const StreamManifest& manifest) {
  if (log.talk_id != manifest.talk_id)
    throw InputError("talk id mismatch: log '" + log.talk_id + "' vs manifest '" + manifest.talk_id + "'");
  if (manifest.segments.empty()) throw InputError("manifest has no reference segments");
  StreamScore out;
  out.talk_id = manifest.talk_id;

  std::vector<std::vector<std::string>> refs;
  for (const auto& s : manifest.segments) refs.push_back(split_whitespace(s.reference));
  Resegmentation info;
  out.segment_words = resegment(delayed_words(log), refs, &info);
  out.total_edit_distance = info.total_distance;

  double nca_sum = 0.0, ca_sum = 0.0;
  for (std::size_t k = 0; k < manifest.segments.size(); ++k) {
    const auto& seg = manifest.segments[k];
    const auto& words = out.segment_words[k];
    SegmentScore sc;
    sc.segment_index = k;
    sc.hyp_word_count = words.size();
    sc.ref_word_count = refs[k].size();
    if (words.empty()) {
      ++out.empty_segments;
    } else {
      std::vector<double> nca, ca;
      for (const auto& w : words) {
        nca.push_back(w.nca_delay_ms - seg.offset_ms);
        ca.push_back(w.ca_delay_ms - seg.offset_ms);
      }
      sc.laal_nca_ms = laal(nca, seg.duration_ms, sc.ref_word_count, sc.hyp_word_count);
      sc.laal_ca_ms = laal(ca, seg.duration_ms, sc.ref_word_count, sc.hyp_word_count);
    }
    nca_sum += sc.laal_nca_ms;
    ca_sum += sc.laal_ca_ms;
    out.segments.push_back(sc);
  }
  const auto count = static_cast<double>(manifest.segments.size());
  out.stream_laal_nca_ms = nca_sum / count;
  out.stream_laal_ca_ms = ca_sum / count;
  return out;
}

inline double stream_laal(const EmissionLog& log, const StreamManifest& manifest, LatencyMode mode) {
  return score_stream(log, manifest).value(mode);
}

// ---------------------------------------------------------------------------
// Punctuation profile and quality/latency ratio

using PunctuationProfile = std::map<char, std::size_t>;

inline PunctuationProfile punctuation_profile(std::string_view text) {
  PunctuationProfile p;
  for (char m : kProfileMarks) p[m] = 0;
  for (char c : text)
    if (kProfileMarks.find(c) != std::string_view::npos) ++p[c];
  return p;
}

// BLEU / (StreamLAAL_NCA + StreamLAAL_CA), latencies in seconds.
inline double quality_latency_ratio(double bleu, double nca_s, double ca_s) {
  const double denom = nca_s + ca_s;
  if (!(denom > 0.0)) throw InputError("quality/latency ratio needs a positive latency sum");
  return bleu / denom;
}

// ---------------------------------------------------------------------------
// Reports

inline std::string_view to_string(LatencyMode m) { return m == LatencyMode::nca ? "nca" : "ca"; }

// TSV with columns talk_id, mode, stream_laal_ms.
inline std::string score_report_tsv(const StreamScore& s, std::span<const LatencyMode> modes) {
  std::string out = "talk_id\tmode\tstream_laal_ms\n";
  for (auto m : modes) {
    out += s.talk_id;
    out += '\t';
    out += to_string(m);
    out += '\t';
    out += format_number(s.value(m));
    out += '\n';
  }
  return out;
}

inline std::string segment_report_tsv(const StreamScore& s) {
  std::string out = "segment_index\tlaal_nca_ms\tlaal_ca_ms\thyp_word_count\tref_word_count\n";
  for (const auto& sc : s.segments) {
    out += std::to_string(sc.segment_index) + '\t' + format_number(sc.laal_nca_ms) + '\t' +
           format_number(sc.laal_ca_ms) + '\t' + std::to_string(sc.hyp_word_count) + '\t' +
           std::to_string(sc.ref_word_count) + '\n';
  }
  return out;
}

// One resegmented hypothesis per line, original surfaces, for external scoring.
inline std::string segmented_hypotheses(const StreamScore& s) {
  std::string out;
  for (const auto& words : s.segment_words) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i) out += ' ';
      out += words[i].surface;
    }
    out += '\n';
  }
  return out;
}

}  // namespace streamatt
