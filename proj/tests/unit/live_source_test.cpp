#include "drowse/live_source.hpp"

#include <fstream>

#include <gtest/gtest.h>

#include "drowse/stream.hpp"
#include "drowse/synth.hpp"
#include "test_support.hpp"

namespace drowse {
namespace {

bool contains(const std::vector<std::string>& lines, const std::string& needle) {
  for (const auto& l : lines) {
    if (l.find(needle) != std::string::npos) return true;
  }
  return false;
}

TEST(LiveSource, PassThroughEqualsReadStream) {
  testing::TempDir dir;
  ScenarioSpec spec;
  spec.segments = {{50, SegmentMode::kAlert, Probability(0.2), std::nullopt},
                   {20, SegmentMode::kNoFace, Probability(0.7), std::nullopt}};
  write_stream(dir / "s.jsonl", synth_sequence(spec, 4));
  const LiveCapture cap = live_source("cat '" + (dir / "s.jsonl").string() + "'");
  EXPECT_EQ(cap.records, read_stream(dir / "s.jsonl"));
  EXPECT_FALSE(cap.protocol_error);
  EXPECT_TRUE(cap.diagnostics.empty());
}

TEST(LiveSource, ImmediateExitGivesEmptySequenceWithDiagnostic) {
  const LiveCapture cap = live_source("true");
  EXPECT_TRUE(cap.records.empty());
  EXPECT_TRUE(contains(cap.diagnostics, "produced no frames"));
}

TEST(LiveSource, FailingCommandReportsStatus) {
  LiveSource src("exit 3");
  EXPECT_FALSE(src.next());
  EXPECT_EQ(src.exit_status(), 3);
  EXPECT_TRUE(contains(src.diagnostics(), "status 3"));
}

TEST(LiveSource, MalformedLineEndsStreamWithContent) {
  const LiveCapture cap = live_source(
      "printf '%s\\n' '{\"t_ms\": 0, \"prob\": 0.5}' '{\"t_ms\": 33, \"prob\": 0.6}' "
      "'{\"t_ms\": oops}' '{\"t_ms\": 99, \"prob\": 0.1}'");
  ASSERT_EQ(cap.records.size(), 2u);
  ASSERT_TRUE(cap.protocol_error);
  EXPECT_NE(cap.protocol_error->find("line 3"), std::string::npos);
  EXPECT_NE(cap.protocol_error->find("{\"t_ms\": oops}"), std::string::npos);
  EXPECT_TRUE(contains(cap.diagnostics, "oops"));
}

TEST(LiveSource, RegressionIsProtocolViolation) {
  const LiveCapture cap =
      live_source("printf '%s\\n' '{\"t_ms\": 50, \"prob\": 0.5}' '{\"t_ms\": 10, \"prob\": 0.5}'");
  EXPECT_EQ(cap.records.size(), 1u);
  ASSERT_TRUE(cap.protocol_error);
  EXPECT_NE(cap.protocol_error->find("regression"), std::string::npos);
}

TEST(LiveSource, ViolationStopsEndlessProducer) {
  const LiveCapture cap = live_source("while true; do echo garbage; done");
  EXPECT_TRUE(cap.records.empty());
  EXPECT_TRUE(cap.protocol_error);
}

}  // namespace
}  // namespace drowse
