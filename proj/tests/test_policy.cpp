#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "properties.hpp"
#include "streamatt/policy.hpp"
#include "test_util.hpp"

using namespace streamatt;
using testutil::scenario;
using testutil::word;

namespace {

AttentionMatrix matrix(const std::vector<std::vector<float>>& rows) {
  AttentionMatrix m;
  for (const auto& r : rows) m.append_row(r);
  return m;
}

WordList words(const std::string& text) {
  TokenList t;
  int id = 0;
  for (const auto& w : split_whitespace(text)) t.push_back({id++, w, true, false});
  return group_words(t);
}

std::string text(const WordList& w) { return detokenize(flatten(w)); }

FeatureSequence window(std::size_t n, std::size_t first = 0) {
  FeatureSequence fs(1, kDefaultFrameMs, static_cast<double>(first) * kDefaultFrameMs);
  for (std::size_t i = 0; i < n; ++i) {
    const float v = static_cast<float>(first + i);
    fs.push_back(std::span<const float>(&v, 1));
  }
  return fs;
}

HistoryState empty_state() {
  HistoryState s;
  s.audio_history = FeatureSequence(1, kDefaultFrameMs, 0.0);
  return s;
}

std::string many_words(int from, int to) {
  std::string s;
  for (int i = from; i < to; ++i) s += (s.empty() ? "" : " ") + ("w" + std::to_string(i));
  return s;
}

}  // namespace

TEST(AlignTokens, SingleCell) { EXPECT_EQ(align_tokens(matrix({{1.0f}})), (AlignmentVector{0})); }

TEST(AlignTokens, UniformRowTiesToEarliest) {
  EXPECT_EQ(align_tokens(matrix({{0.25f, 0.25f, 0.25f, 0.25f}})), (AlignmentVector{0}));
}

TEST(AlignTokens, RowArgmax) {
  EXPECT_EQ(align_tokens(matrix({{0.1f, 0.7f, 0.2f}, {0.2f, 0.2f, 0.6f}})), (AlignmentVector{1, 2}));
}

TEST(AlignTokens, EmptyMatrixIsError) { EXPECT_THROW(align_tokens(AttentionMatrix{}), InputError); }

TEST(AlignTokens, MatchesOracleOnRandomMatrices) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::vector<float>> rows(1 + rng() % 16, std::vector<float>(1 + rng() % 64));
    for (auto& r : rows)
      for (auto& x : r) x = rng() % 4 == 0 ? 0.5f : u(rng);  // frequent ties
    EXPECT_EQ(align_tokens(matrix(rows)), oracle::argmax_rows(rows));
  }
}

TEST(SelectEmission, ZeroZoneEmitsAll) {
  const std::vector<std::size_t> a{0, 3, 3, 4};
  EXPECT_EQ(select_emission(a, 5, 0), 4u);
}

TEST(SelectEmission, ZoneCoveringWindowEmitsNothing) {
  const std::vector<std::size_t> a{0, 0};
  EXPECT_EQ(select_emission(a, 4, 4), 0u);
  EXPECT_EQ(select_emission(a, 4, 9), 0u);
}

TEST(SelectEmission, StopsAtFirstBlockedToken) {
  const std::vector<std::size_t> a{0, 1, 3};
  EXPECT_EQ(select_emission(a, 4, 2), 2u);
  // A later token pointing back does not get through once one is blocked.
  const std::vector<std::size_t> b{0, 3, 1};
  EXPECT_EQ(select_emission(b, 4, 2), 1u);
}

TEST(SelectEmission, MonotoneInZoneSize) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<std::size_t> a(rng() % 20);
    for (auto& x : a) x = rng() % n;
    std::size_t prev = a.size();
    for (std::size_t f = 0; f <= n + 1; ++f) {
      const std::size_t k = select_emission(a, n, f);
      EXPECT_LE(k, prev);
      prev = k;
    }
  }
}

TEST(TextualHistoryFw, KeepsLastN) {
  const auto out = textual_history_fw(words(many_words(0, 18)), words(many_words(18, 23)), 20);
  EXPECT_EQ(text(out), many_words(3, 23));
}

TEST(TextualHistoryFw, ShortHistoryKeptWhole) {
  EXPECT_EQ(text(textual_history_fw({}, words("a b c"), 20)), "a b c");
  EXPECT_TRUE(textual_history_fw({}, {}, 20).empty());
}

TEST(TextualHistoryPunct, KeepsWordsAfterLastStrongMark) {
  EXPECT_EQ(text(textual_history_punct(words("Hello world."), words("How are"))), "How are");
  EXPECT_TRUE(textual_history_punct(words("all"), words("done.")).empty());
  EXPECT_EQ(text(textual_history_punct(words("one two"), words("three four"))), "one two three four");
  // Commas do not cut.
  EXPECT_EQ(text(textual_history_punct(words("so, yes: and"), words("more, words"))), "and more, words");
}

TEST(AudioHistory, StartsAtEarliestRetainedAlignment) {
  const auto full = window(20);
  const auto retained = words("a b c");
  const std::vector<std::size_t> align{7, 9, 12};
  const auto out = audio_history_select(full, retained, align);
  EXPECT_EQ(out.size(), 13u);
  EXPECT_EQ(out.frame(0)[0], 7.0f);
  EXPECT_DOUBLE_EQ(out.end_ms(), full.end_ms());
}

TEST(AudioHistory, EmptyTextMeansEmptyAudio) {
  const auto out = audio_history_select(window(20), {}, {});
  EXPECT_TRUE(out.empty());
}

TEST(AudioHistory, AllAtZeroKeepsWindow) {
  const std::vector<std::size_t> align{0, 0};
  EXPECT_EQ(audio_history_select(window(20), words("a b"), align).size(), 20u);
}

TEST(AudioHistory, LengthMismatchIsInternalError) {
  const std::vector<std::size_t> align{1};
  EXPECT_THROW(audio_history_select(window(20), words("a b"), align), InternalError);
}

TEST(BaselineHistory, FixedDurationAudio) {
  PolicyConfig cfg;
  cfg.n_words = 20;
  // 20 words * 280 ms / 40 ms per frame
  EXPECT_EQ(baseline_audio_frames(cfg, 40.0), 140u);
  HistoryState prev;
  prev.audio_history = window(200);
  const auto next = baseline_history(prev, words(many_words(0, 25)), cfg);
  EXPECT_EQ(next.audio_history.size(), 140u);
  EXPECT_EQ(next.audio_history.frame(0)[0], 60.0f);
  EXPECT_EQ(group_words(next.text_history).size(), 20u);
}

TEST(BaselineHistory, ClampsToShortWindow) {
  PolicyConfig cfg;
  HistoryState prev;
  prev.audio_history = window(30);
  EXPECT_EQ(baseline_history(prev, words("a"), cfg).audio_history.size(), 30u);
  prev.audio_history = window(0);
  const auto empty = baseline_history(prev, {}, cfg);
  EXPECT_TRUE(empty.audio_history.empty());
  EXPECT_TRUE(empty.text_history.empty());
}

TEST(PolicyStep, ZoneCoveringWindowEmitsNothingAndKeepsAudio) {
  MockModel m(scenario({word("a", 0), word("b", 3)}, 10));
  PolicyConfig cfg;
  cfg.f = 5;
  auto r = policy_step(empty_state(), window(2), m, cfg);
  EXPECT_TRUE(r.emitted.empty());
  EXPECT_EQ(r.state.audio_history.size(), 2u);
  r = policy_step(r.state, window(2, 2), m, cfg);
  EXPECT_TRUE(r.emitted.empty());
  EXPECT_EQ(r.state.audio_history.size(), 4u);
}

TEST(PolicyStep, EmitsClearWordsAndTrimsAudio) {
  MockModel m(scenario({word("a", 1), word("b", 3), word("c", 5)}, 10));
  PolicyConfig cfg;
  const auto r = policy_step(empty_state(), window(10), m, cfg);
  EXPECT_EQ(detokenize(r.emitted), "a b c");
  EXPECT_EQ(detokenize(r.state.text_history), "a b c");
  EXPECT_EQ(r.state.audio_history.size(), 9u);
  EXPECT_EQ(r.state.audio_history.frame(0)[0], 1.0f);
  EXPECT_EQ(r.state.emitted_total_words, 3u);
}

TEST(PolicyStep, BlockedWordIsWithheld) {
  MockModel m(scenario({word("a", 1), word("b", 8)}, 12));
  PolicyConfig cfg;
  cfg.f = 2;
  // 10-frame window: "b" attends to frame 8 >= 10 - 2.
  const auto r = policy_step(empty_state(), window(10), m, cfg);
  EXPECT_EQ(detokenize(r.emitted), "a");
  ASSERT_EQ(r.withheld.size(), 1u);
  EXPECT_EQ(r.withheld[0].surface, "b");
  ASSERT_TRUE(r.next_token.has_value());
  EXPECT_EQ(r.next_token->surface, "b");
}

TEST(PolicyStep, StrongMarkResetsTextAndAudio) {
  MockModel m(scenario({word("Hello", 1), word("world.", 3), word("next", 15)}, 20));
  PolicyConfig cfg;
  cfg.history_mode = HistoryMode::punctuation;
  const auto r = policy_step(empty_state(), window(10), m, cfg);
  EXPECT_EQ(detokenize(r.emitted), "Hello world.");
  EXPECT_TRUE(r.state.text_history.empty());
  EXPECT_TRUE(r.state.audio_history.empty());
  EXPECT_TRUE(r.text_cut_to_empty);
  // The next chunk is decoded on its own and the next word still appears.
  const auto r2 = policy_step(r.state, window(10, 10), m, cfg);
  EXPECT_EQ(detokenize(r2.emitted), "next");
}

TEST(PolicyStep, FlushIgnoresZone) {
  MockModel m(scenario({word("a", 1), word("b", 9)}, 10));
  PolicyConfig cfg;
  cfg.f = 4;
  const auto r = policy_step(empty_state(), window(10), m, cfg, true);
  EXPECT_EQ(detokenize(r.emitted), "a b");
}

TEST(PolicyStep, ZeroZoneSingleChunkReproducesScript) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 50; ++t) {
    const auto sc = testutil::random_scenario(rng, 1 + static_cast<int>(rng() % 20), 80);
    MockModel m(sc);
    PolicyConfig cfg;
    cfg.f = 0;
    const auto r = policy_step(empty_state(), scenario_features(sc, 80), m, cfg);
    EXPECT_EQ(r.emitted, sc.script());
  }
}

TEST(PolicyStep, BlockingMonotoneInF) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 50; ++t) {
    const auto sc = testutil::random_scenario(rng, 12, 60);
    MockModel m(sc);
    const std::size_t n = 5 + rng() % 55;
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (int f = 0; f <= 12; ++f) {
      PolicyConfig cfg;
      cfg.f = f;
      const auto r = policy_step(empty_state(), scenario_features(sc, n), m, cfg);
      EXPECT_LE(r.emitted.size(), prev);
      prev = r.emitted.size();
    }
  }
}

TEST(PolicyProperties, RandomSequencesHoldInvariants) {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 300; ++t) {
    const std::string err = props::random_sequence(rng);
    ASSERT_TRUE(err.empty()) << "sequence " << t << ": " << err;
  }
}
