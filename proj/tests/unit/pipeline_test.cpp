#include "drowse/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "drowse/bounded_queue.hpp"
#include "drowse/stream.hpp"
#include "drowse/synth.hpp"
#include "test_support.hpp"

namespace drowse {
namespace {

using testing::TempDir;

std::vector<FrameRecord> scenario(std::vector<Segment> segs, std::uint64_t seed = 1) {
  ScenarioSpec spec;
  spec.segments = std::move(segs);
  return synth_sequence(spec, seed);
}

std::vector<Event> replay_events(const std::vector<FrameRecord>& records,
                                 const PipelineConfig& cfg, RunReport* report = nullptr) {
  std::vector<Event> events;
  ScriptedClassifier c;
  const RunReport r = run_replay(records, cfg, c, [&](const Event& e) { events.push_back(e); });
  if (report) *report = r;
  return events;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

TEST(Replay, SixtyClosedFramesFireOneAlarm) {
  RunReport report;
  const auto events = replay_events(
      scenario({{60, SegmentMode::kEyesClosed, Probability(0.9), std::nullopt}}), {}, &report);
  EXPECT_EQ(report.alarms, 1);
  ASSERT_EQ(events.size(), 1u);
  EXPECT_EQ(events[0].kind, EventKind::kAlarm);
  EXPECT_EQ(events[0].t_ms, 59 * 1000 / 30);
  EXPECT_EQ(events[0].wall, "1970-01-01T00:00:01.966Z");
}

TEST(Replay, FiftyNineClosedFramesFireNothing) {
  RunReport report;
  replay_events(scenario({{59, SegmentMode::kEyesClosed, Probability(0.9), std::nullopt},
                          {1, SegmentMode::kAlert, Probability(0.1), std::nullopt}}),
                {}, &report);
  EXPECT_EQ(report.alarms, 0);
}

TEST(Replay, AllAlertIsQuiet) {
  RunReport report;
  const auto events =
      replay_events(scenario({{1000, SegmentMode::kAlert, Probability(0.1), std::nullopt}}), {},
                    &report);
  EXPECT_TRUE(events.empty());
  EXPECT_EQ(report.frames, 1000);
  EXPECT_EQ(report.yawns, 0);
}

TEST(Replay, NoFaceWithHighProbabilityAlarms) {
  RunReport report;
  replay_events(scenario({{60, SegmentMode::kNoFace, Probability(0.9), std::nullopt}}), {},
                &report);
  EXPECT_EQ(report.alarms, 1);
  EXPECT_EQ(report.invalid_ratio_frames, 60);
  EXPECT_EQ(report.no_signal_frames, 0);
}

TEST(Replay, YawnDetected) {
  RunReport report;
  const auto events = replay_events(
      scenario({{30, SegmentMode::kYawning, Probability(0.1), std::nullopt}}), {}, &report);
  EXPECT_EQ(report.yawns, 1);
  ASSERT_EQ(events.size(), 1u);
  EXPECT_EQ(events[0].kind, EventKind::kYawn);
  EXPECT_EQ(events[0].t_ms, 14 * 1000 / 30);
}

TEST(Replay, WallTimeFollowsEpoch) {
  PipelineConfig cfg;
  cfg.replay_epoch_ms = 1'700'000'000'123;
  cfg.session = "s9";
  const auto events = replay_events(
      scenario({{60, SegmentMode::kEyesClosed, Probability(0.9), std::nullopt}}), cfg);
  ASSERT_EQ(events.size(), 1u);
  EXPECT_EQ(events[0].wall, "2023-11-14T22:13:22.089Z");
  EXPECT_EQ(events[0].session, "s9");
}

TEST(Replay, ResetMatchesFreshPipeline) {
  const auto warm = scenario({{100, SegmentMode::kEyesClosed, Probability(0.9), std::nullopt},
                              {40, SegmentMode::kYawning, std::nullopt, std::nullopt}});
  const auto stream = scenario({{50, SegmentMode::kEyesClosed, Probability(0.9), std::nullopt},
                                {20, SegmentMode::kYawning, Probability(0.1), std::nullopt},
                                {70, SegmentMode::kNoFace, Probability(0.7), std::nullopt}},
                               5);
  FramePipeline used{PipelineConfig{}};
  FramePipeline fresh{PipelineConfig{}};
  for (const auto& r : warm) used.process(r, r.probability);
  used.reset(false);
  for (const auto& r : stream) {
    EXPECT_EQ(used.process(r, r.probability), fresh.process(r, r.probability));
  }
}

TEST(ReplayFile, ByteIdenticalAcrossRuns) {
  TempDir dir;
  ScenarioSpec spec;
  spec.segments = {{90, SegmentMode::kAlert, Probability(0.1), std::nullopt},
                   {130, SegmentMode::kEyesClosed, Probability(0.9), std::nullopt},
                   {20, SegmentMode::kYawning, Probability(0.2), std::nullopt},
                   {75, SegmentMode::kNoFace, Probability(0.8), std::nullopt}};
  write_stream(dir / "s.jsonl", synth_sequence(spec, 3));
  std::ostringstream log;
  const RunReport a = replay_file(dir / "s.jsonl", {}, dir / "a.jsonl", {}, log);
  replay_file(dir / "s.jsonl", {}, dir / "b.jsonl", {}, log);
  replay_file(dir / "s.jsonl", {}, dir / "a2.jsonl", {}, log);
  replay_file(dir / "s.jsonl", {}, dir / "a2.jsonl", {}, log);
  EXPECT_EQ(a.alarms, 3);
  EXPECT_EQ(a.yawns, 1);
  EXPECT_FALSE(slurp(dir / "a.jsonl").empty());
  EXPECT_EQ(slurp(dir / "a.jsonl"), slurp(dir / "b.jsonl"));
  EXPECT_EQ(slurp(dir / "a.jsonl"), slurp(dir / "a2.jsonl"));
}

TEST(ReplayFile, AppendModeAndLostEvents) {
  TempDir dir;
  write_stream(dir / "s.jsonl",
               scenario({{60, SegmentMode::kEyesClosed, Probability(0.9), std::nullopt}}));
  std::ostringstream log;
  ReplayOptions append;
  append.truncate_output = false;
  replay_file(dir / "s.jsonl", {}, dir / "e.jsonl", append, log);
  // Same session, same timestamps: non-decreasing, so accepted.
  replay_file(dir / "s.jsonl", {}, dir / "e.jsonl", append, log);
  EXPECT_EQ(EventStore(dir / "e.jsonl").size(), 2u);

  PipelineConfig late;
  {
    EventStore store(dir / "e.jsonl");
    store.append({EventKind::kAlarm, 1'000'000, "replay", "w"});
  }
  const RunReport r = replay_file(dir / "s.jsonl", late, dir / "e.jsonl", append, log);
  EXPECT_EQ(r.lost_events, 1);
  EXPECT_NE(log.str().find("event lost"), std::string::npos);
}

TEST(ReplayFile, ModelBackendWithoutEngineFails) {
  TempDir dir;
  write_stream(dir / "s.jsonl",
               scenario({{5, SegmentMode::kAlert, Probability(0.9), std::nullopt}}));
  PipelineConfig cfg;
  cfg.classifier.backend = ClassifierBackend::kModel;
  cfg.classifier.model_path = "m.onnx";
  EXPECT_THROW(replay_file(dir / "s.jsonl", cfg, dir / "e.jsonl"), ClassifierError);
}

TEST(ConstantBackend, DrivesFusion) {
  PipelineConfig cfg;
  ConstantClassifier c(Probability(1.0));
  std::vector<Event> events;
  const auto records = scenario({{120, SegmentMode::kNoFace, std::nullopt, std::nullopt}});
  run_replay(records, cfg, c, [&](const Event& e) { events.push_back(e); });
  EXPECT_EQ(events.size(), 2u);
  ConstantClassifier zero(Probability(0.0));
  events.clear();
  run_replay(records, cfg, zero, [&](const Event& e) { events.push_back(e); });
  EXPECT_TRUE(events.empty());
}

TEST(Joiner, StalenessBound) {
  ProbabilityJoiner j(2);
  EXPECT_FALSE(j.resolve(0));
  j.publish(0, Probability(0.3));
  EXPECT_FALSE(j.resolve(0)->substituted);
  EXPECT_TRUE(j.resolve(1)->substituted);
  EXPECT_EQ(j.resolve(2)->source_frame, 0);
  EXPECT_FALSE(j.resolve(3));
  j.publish(5, std::nullopt);
  EXPECT_FALSE(j.resolve(5)->probability);
  j.publish(4, Probability(0.9));  // older results never replace newer ones
  EXPECT_EQ(j.resolve(6)->source_frame, 5);
}

// Slow classifier that records which frames it saw.
class SlowClassifier final : public Classifier {
 public:
  explicit SlowClassifier(std::chrono::microseconds delay) : delay_(delay) {}
  std::string_view backend_name() const noexcept override { return "slow"; }
  bool accepts(const FrameRecord& r) const noexcept override { return r.probability.has_value(); }
  Probability classify(const FrameRecord& r) override {
    std::this_thread::sleep_for(delay_);
    ++calls;
    return *r.probability;
  }
  Probability classify(const PreprocessedFrame&) override { return Probability(0.0); }
  static inline std::atomic<int> calls{0};

 private:
  std::chrono::microseconds delay_;
};

RecordSource vector_source(const std::vector<FrameRecord>& records) {
  auto i = std::make_shared<std::size_t>(0);
  return [&records, i]() -> std::optional<FrameRecord> {
    if (*i >= records.size()) return std::nullopt;
    return records[(*i)++];
  };
}

TEST(RunLive, FastClassifierMatchesReplay) {
  TempDir dir;
  const auto records =
      scenario({{90, SegmentMode::kAlert, Probability(0.1), std::nullopt},
                {130, SegmentMode::kEyesClosed, Probability(0.9), std::nullopt},
                {20, SegmentMode::kYawning, Probability(0.2), std::nullopt},
                {75, SegmentMode::kNoFace, Probability(0.8), std::nullopt}});
  PipelineConfig cfg;
  cfg.staleness_frames = 0;
  cfg.session = "live";
  EventStore store(dir / "e.jsonl");
  std::ostringstream log;
  LiveOptions opts;
  opts.clock = [] { return std::string("W"); };
  std::vector<Event> seen;
  opts.on_event = [&](const Event& e) { seen.push_back(e); };
  const RunReport live =
      run_live(vector_source(records), cfg, std::make_unique<ScriptedClassifier>(), store, log, opts);
  EXPECT_EQ(live.substituted_frames, 0);

  RunReport replay;
  auto expected = replay_events(records, cfg, &replay);
  for (auto& e : expected) e.wall = "W";
  EXPECT_EQ(store.list_events(), expected);
  EXPECT_EQ(seen, expected);
  EXPECT_EQ(live.alarms, replay.alarms);
  EXPECT_EQ(live.yawns, replay.yawns);
  EXPECT_EQ(live.frames, replay.frames);
  EXPECT_NE(log.str().find("ALARM session=live"), std::string::npos);
}

TEST(RunLive, SlowClassifierSubstitutesWithinBound) {
  TempDir dir;
  const auto records =
      scenario({{200, SegmentMode::kEyesClosed, Probability(0.9), std::nullopt}});
  PipelineConfig cfg;
  cfg.staleness_frames = 2;
  cfg.buffer_size = 4;
  EventStore store(dir / "e.jsonl", EventStore::Mode::kReadWrite, false);
  std::ostringstream log;
  SlowClassifier::calls = 0;
  const RunReport r = run_live(vector_source(records), cfg,
                               std::make_unique<SlowClassifier>(std::chrono::microseconds(300)),
                               store, log);
  EXPECT_EQ(r.frames, 200);
  EXPECT_EQ(r.alarms, 3);
  EXPECT_LE(SlowClassifier::calls.load(), 200);
  // Every substitution is logged, and none reaches back more than K frames.
  std::istringstream lines(log.str());
  std::int64_t logged = 0;
  for (std::string l; std::getline(lines, l);) {
    std::int64_t frame = 0, source = 0;
    if (std::sscanf(l.c_str(), "frame %ld: using classifier result from frame %ld", &frame,
                    &source) == 2) {
      ++logged;
      EXPECT_GT(frame, source);
      EXPECT_LE(frame - source, 2);
    }
  }
  EXPECT_EQ(logged, r.substituted_frames);
}

TEST(RunLive, SourceFailureEndsSession) {
  TempDir dir;
  EventStore store(dir / "e.jsonl");
  std::ostringstream log;
  int n = 0;
  RecordSource source = [&n]() -> std::optional<FrameRecord> {
    if (n == 10) throw std::runtime_error("camera unplugged");
    FrameRecord r;
    r.t_ms = n++;
    r.probability = Probability(0.9);
    return r;
  };
  const RunReport r = run_live(source, {}, std::make_unique<ScriptedClassifier>(), store, log);
  EXPECT_EQ(r.frames, 10);
  EXPECT_NE(log.str().find("camera unplugged"), std::string::npos);
}

TEST(AlarmNotifier, ExpandsPlaceholders) {
  const Event e{EventKind::kAlarm, 1234, "s1", "2024-01-01T00:00:00.000Z"};
  EXPECT_EQ(AlarmNotifier::expand("beep {t_ms} {session} {t_ms} {wall}", e),
            "beep 1234 s1 1234 2024-01-01T00:00:00.000Z");
}

TEST(AlarmNotifier, RunsHookOffThread) {
  TempDir dir;
  std::ostringstream log;
  LockedLog locked(log);
  {
    AlarmNotifier n("echo {t_ms} >> '" + (dir / "hook.txt").string() + "'", locked);
    n.notify({EventKind::kAlarm, 7, "s", "w"});
    n.notify({EventKind::kAlarm, 8, "s", "w"});
  }
  EXPECT_EQ(slurp(dir / "hook.txt"), "7\n8\n");
}

TEST(BoundedQueue, FifoBackpressureAndClose) {
  BoundedQueue<int> q(2);
  EXPECT_THROW(BoundedQueue<int>(0), std::invalid_argument);
  EXPECT_TRUE(q.try_push(1));
  EXPECT_TRUE(q.try_push(2));
  EXPECT_FALSE(q.try_push(3));
  std::atomic<bool> pushed{false};
  std::thread producer([&] {
    q.push(3);
    pushed = true;
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  EXPECT_FALSE(pushed);
  EXPECT_EQ(q.pop(), 1);
  producer.join();
  EXPECT_TRUE(pushed);
  EXPECT_EQ(q.pop(), 2);
  EXPECT_EQ(q.pop(), 3);
  q.close();
  EXPECT_FALSE(q.pop());
  EXPECT_FALSE(q.push(4));
}

TEST(BoundedQueue, ManyProducersOneConsumer) {
  BoundedQueue<int> q(3);
  std::vector<std::thread> producers;
  for (int p = 0; p < 4; ++p) {
    producers.emplace_back([&q, p] {
      for (int i = 0; i < 500; ++i) q.push(p * 1000 + i);
    });
  }
  std::vector<int> last(4, -1);
  for (int k = 0; k < 2000; ++k) {
    const int v = *q.pop();
    EXPECT_GT(v % 1000, last[static_cast<std::size_t>(v / 1000)]);
    last[static_cast<std::size_t>(v / 1000)] = v % 1000;
  }
  for (auto& t : producers) t.join();
  EXPECT_EQ(q.size(), 0u);
}

}  // namespace
}  // namespace drowse
