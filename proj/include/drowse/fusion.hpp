#pragma once

// Per-frame decision fusion and the sleepy-frame / yawn counters.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "drowse/geometry.hpp"
#include "drowse/probability.hpp"

namespace drowse {

// How the landmark verdict and the classifier verdict combine when both are
// available. Whichever signal is missing on a frame is simply not consulted.
enum class FusionPolicy : std::uint8_t { kBoth, kEither, kCnnOnly, kLandmarkOnly };

inline std::string_view to_string(FusionPolicy p) noexcept {
  switch (p) {
    case FusionPolicy::kBoth: return "both";
    case FusionPolicy::kEither: return "either";
    case FusionPolicy::kCnnOnly: return "cnn_only";
    case FusionPolicy::kLandmarkOnly: return "landmark_only";
  }
  return "unknown";
}

inline std::optional<FusionPolicy> parse_fusion_policy(std::string_view s) noexcept {
  if (s == "both") return FusionPolicy::kBoth;
  if (s == "either") return FusionPolicy::kEither;
  if (s == "cnn_only") return FusionPolicy::kCnnOnly;
  if (s == "landmark_only") return FusionPolicy::kLandmarkOnly;
  return std::nullopt;
}

struct FusionConfig {
  double ear_close_threshold = 0.21;
  double mar_yawn_threshold = 0.6;
  double cnn_threshold = 0.5;
  std::int64_t alarm_frame_threshold = 60;
  std::int64_t yawn_min_frames = 15;
  FusionPolicy policy = FusionPolicy::kBoth;

  void validate() const {
    if (!(ear_close_threshold > 0.0)) throw std::invalid_argument("ear_close_threshold must be > 0");
    if (!(mar_yawn_threshold > 0.0)) throw std::invalid_argument("mar_yawn_threshold must be > 0");
    if (!(cnn_threshold > 0.0 && cnn_threshold <= 1.0)) {
      throw std::invalid_argument("cnn_threshold must be in (0, 1]");
    }
    if (alarm_frame_threshold < 1) throw std::invalid_argument("alarm_frame_threshold must be >= 1");
    if (yawn_min_frames < 1) throw std::invalid_argument("yawn_min_frames must be >= 1");
  }
  friend bool operator==(const FusionConfig&, const FusionConfig&) = default;
};

struct FrameInputs {
  AspectRatios ratios;
  std::optional<Probability> probability;
  std::int64_t t_ms = 0;
};

struct EventTotals {
  std::int64_t alarms = 0;
  std::int64_t yawns = 0;
  friend bool operator==(const EventTotals&, const EventTotals&) = default;
};

struct DrowsinessState {
  std::int64_t sleepy_counter = 0;
  std::int64_t yawn_run = 0;
  bool yawn_latched = false;
  EventTotals totals;
  friend bool operator==(const DrowsinessState&, const DrowsinessState&) = default;
};

struct StepOutput {
  bool sleepy_frame = false;
  bool yawn_event = false;
  bool alarm_event = false;
  friend bool operator==(const StepOutput&, const StepOutput&) = default;
};

inline bool judge_frame(const FrameInputs& in, const FusionConfig& cfg) {
  const bool has_landmark = in.ratios.ear_mean.valid();
  const bool has_cnn = in.probability.has_value();
  const bool landmark_sleepy =
      has_landmark && in.ratios.ear_mean.value() < cfg.ear_close_threshold;
  const bool cnn_sleepy = has_cnn && in.probability->value() >= cfg.cnn_threshold;

  if (has_landmark && has_cnn) {
    switch (cfg.policy) {
      case FusionPolicy::kBoth: return landmark_sleepy && cnn_sleepy;
      case FusionPolicy::kEither: return landmark_sleepy || cnn_sleepy;
      case FusionPolicy::kCnnOnly: return cnn_sleepy;
      case FusionPolicy::kLandmarkOnly: return landmark_sleepy;
    }
  }
  if (has_cnn) return cnn_sleepy;
  if (has_landmark) return landmark_sleepy;
  return false;
}

// In-place transition. The alarm fires on the frame where the consecutive
// sleepy count reaches the threshold, after which the count restarts; a yawn
// fires once per above-threshold MAR run, when the run reaches
// yawn_min_frames.
inline StepOutput advance(DrowsinessState& state, const FrameInputs& in,
                          const FusionConfig& cfg) {
  StepOutput out;
  out.sleepy_frame = judge_frame(in, cfg);
  if (out.sleepy_frame) {
    if (++state.sleepy_counter >= cfg.alarm_frame_threshold) {
      out.alarm_event = true;
      state.sleepy_counter = 0;
      ++state.totals.alarms;
    }
  } else {
    state.sleepy_counter = 0;
  }

  const Ratio& mar = in.ratios.mar;
  if (mar.valid() && mar.value() > cfg.mar_yawn_threshold) {
    ++state.yawn_run;
    if (!state.yawn_latched && state.yawn_run >= cfg.yawn_min_frames) {
      state.yawn_latched = true;
      out.yawn_event = true;
      ++state.totals.yawns;
    }
  } else {
    state.yawn_run = 0;
    state.yawn_latched = false;
  }
  return out;
}

inline std::pair<DrowsinessState, StepOutput> step(const DrowsinessState& state,
                                                   const FrameInputs& in,
                                                   const FusionConfig& cfg) {
  DrowsinessState next = state;
  StepOutput out = advance(next, in, cfg);
  return {next, out};
}

inline DrowsinessState reset(const DrowsinessState& state, bool preserve_totals) {
  DrowsinessState fresh;
  if (preserve_totals) fresh.totals = state.totals;
  return fresh;
}

}  // namespace drowse
