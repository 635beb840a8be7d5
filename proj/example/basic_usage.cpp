// Runs the streaming policy over a three-word mock talk and prints both
// StreamLAAL clocks.

#include <iostream>

#include "streamatt/streamatt.hpp"

int main() {
  using namespace streamatt;

  MockScenario sc;
  sc.words = {{"Hello", {"Hel", "lo"}, {8, 10}, 1}, {"world.", {"world."}, {30}, 1}, {"Bye.", {"Bye."}, {70}, 0}};
  sc.total_frames = 90;
  sc.cost = {50.0, 0.5, 1.0};

  StreamManifest talk;
  talk.talk_id = "demo";
  talk.total_duration_ms = sc.total_frames.value() * sc.frame_ms;
  talk.segments = {{0.0, 2000.0, "Hello world."}, {2000.0, 1600.0, "Bye."}};

  PolicyConfig cfg;
  cfg.f = 2;
  cfg.history_mode = HistoryMode::punctuation;

  MockModel model(sc);
  const EmissionLog log = run_stream(talk, scenario_features(sc, 90), model, cfg);
  for (const auto& e : log.events) {
    std::cout << "step " << e.step_index << " @" << e.audio_consumed_ms << " ms:";
    for (const auto& w : e.words) std::cout << " [" << w.surface << "]";
    std::cout << "\n";
  }

  const StreamScore score = score_stream(log, talk);
  std::cout << "StreamLAAL NCA " << score.stream_laal_nca_ms << " ms, CA " << score.stream_laal_ca_ms << " ms\n";
}
