#pragma once

// Deterministic synthetic scenario streams. Each segment renders the eye and
// mouth landmarks for one behaviour, with seeded jitter on every coordinate.

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "drowse/geometry.hpp"
#include "drowse/record.hpp"

namespace drowse {

enum class SegmentMode : std::uint8_t { kAlert, kEyesClosed, kYawning, kNoFace };

inline std::string_view to_string(SegmentMode m) noexcept {
  switch (m) {
    case SegmentMode::kAlert: return "alert";
    case SegmentMode::kEyesClosed: return "eyes_closed";
    case SegmentMode::kYawning: return "yawning";
    case SegmentMode::kNoFace: return "no_face";
  }
  return "unknown";
}

inline std::optional<SegmentMode> parse_segment_mode(std::string_view s) noexcept {
  if (s == "alert") return SegmentMode::kAlert;
  if (s == "eyes_closed") return SegmentMode::kEyesClosed;
  if (s == "yawning") return SegmentMode::kYawning;
  if (s == "no_face") return SegmentMode::kNoFace;
  return std::nullopt;
}

struct Segment {
  std::int64_t frames = 1;
  SegmentMode mode = SegmentMode::kAlert;
  std::optional<Probability> probability;
  std::optional<Label> label;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct ScenarioSpec {
  int fps = 30;
  std::vector<Segment> segments;

  void validate() const {
    if (fps < 1) throw std::invalid_argument("scenario fps must be >= 1");
    for (std::size_t i = 0; i < segments.size(); ++i) {
      if (segments[i].frames < 1) {
        throw std::invalid_argument("scenario segment " + std::to_string(i) +
                                    " has duration < 1");
      }
    }
  }
  std::int64_t total_frames() const noexcept {
    std::int64_t n = 0;
    for (const auto& s : segments) n += s.frames;
    return n;
  }
  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

// {"fps": 30, "segments": [{"frames": 60, "mode": "eyes_closed",
//                           "prob": 0.9, "label": "sleepy"}, ...]}
inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  ScenarioSpec spec;
  if (!j.is_object()) throw std::invalid_argument("scenario must be a JSON object");
  spec.fps = j.value("fps", 30);
  const auto segs = j.find("segments");
  if (segs == j.end() || !segs->is_array()) {
    throw std::invalid_argument("scenario needs a \"segments\" array");
  }
  for (const auto& s : *segs) {
    Segment seg;
    seg.frames = s.at("frames").get<std::int64_t>();
    const auto mode = parse_segment_mode(s.at("mode").get<std::string>());
    if (!mode) throw std::invalid_argument("unknown segment mode " + s.at("mode").dump());
    seg.mode = *mode;
    if (auto p = s.find("prob"); p != s.end() && !p->is_null()) {
      seg.probability = Probability(p->get<double>());
    }
    if (auto l = s.find("label"); l != s.end() && !l->is_null()) {
      seg.label = parse_label(l->get<std::string>());
      if (!seg.label) throw std::invalid_argument("unknown label " + l->dump());
    }
    spec.segments.push_back(seg);
  }
  spec.validate();
  return spec;
}

inline nlohmann::json scenario_to_json(const ScenarioSpec& spec) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : spec.segments) {
    nlohmann::json js{{"frames", s.frames}, {"mode", to_string(s.mode)}};
    js["prob"] = s.probability ? nlohmann::json(s.probability->value()) : nlohmann::json();
    js["label"] = s.label ? nlohmann::json(to_string(*s.label)) : nlohmann::json();
    segs.push_back(std::move(js));
  }
  return {{"fps", spec.fps}, {"segments", segs}};
}

// Face layout in normalized image coordinates. Eye aspect (height/width) is
// 0.3 when open, mouth aspect 0.1 when closed and 1.0 when yawning.
struct SynthGeometry {
  static constexpr double kJitter = 0.005;
  static constexpr double kEyeWidth = 0.32;
  static constexpr double kEyeOpenHeight = 0.3 * kEyeWidth;
  static constexpr double kLeftEyeX = 0.30;
  static constexpr double kRightEyeX = 0.70;
  static constexpr double kEyeY = 0.40;
  static constexpr double kMouthWidth = 0.24;
  static constexpr double kMouthRestHeight = 0.1 * kMouthWidth;
  static constexpr double kMouthYawnHeight = 1.0 * kMouthWidth;
  static constexpr double kMouthX = 0.50;
  static constexpr double kMouthY = 0.75;
};

namespace detail {

// Uniform in [-1, 1] from the raw engine bits, so output does not depend on
// the standard library's distribution implementation.
inline double symmetric_unit(std::mt19937_64& rng) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

inline void place(LandmarkSet& pts, int index, double x, double y, std::mt19937_64& rng) {
  const double j = SynthGeometry::kJitter;
  const double dx = j * symmetric_unit(rng);
  const double dy = j * symmetric_unit(rng);
  const double dz = j * symmetric_unit(rng);
  pts.set(index, Point3{x + dx, y + dy, dz});
}

inline void place_eye(LandmarkSet& pts, const EyeSpec& eye, double cx, double cy,
                      double height, std::mt19937_64& rng) {
  const double w = SynthGeometry::kEyeWidth;
  const double h2 = height / 2.0;
  place(pts, eye.p(1), cx - w / 2, cy, rng);
  place(pts, eye.p(2), cx - w / 6, cy - h2, rng);
  place(pts, eye.p(3), cx + w / 6, cy - h2, rng);
  place(pts, eye.p(4), cx + w / 2, cy, rng);
  place(pts, eye.p(5), cx + w / 6, cy + h2, rng);
  place(pts, eye.p(6), cx - w / 6, cy + h2, rng);
}

inline void place_mouth(LandmarkSet& pts, const MouthSpec& mouth, double cx, double cy,
                        double height, std::mt19937_64& rng) {
  const double w = SynthGeometry::kMouthWidth;
  const double h2 = height / 2.0;
  place(pts, mouth.p(1), cx - w / 2, cy, rng);
  place(pts, mouth.p(2), cx - w / 4, cy - h2, rng);
  place(pts, mouth.p(3), cx, cy - h2, rng);
  place(pts, mouth.p(4), cx + w / 4, cy - h2, rng);
  place(pts, mouth.p(5), cx + w / 2, cy, rng);
  place(pts, mouth.p(6), cx + w / 4, cy + h2, rng);
  place(pts, mouth.p(7), cx, cy + h2, rng);
  place(pts, mouth.p(8), cx - w / 4, cy + h2, rng);
}

}  // namespace detail

// Pure function of (spec, seed, landmark specs).
inline std::vector<FrameRecord> synth_sequence(
    const ScenarioSpec& spec, std::uint64_t seed,
    const EyeSpec& left = EyeSpec::default_left(),
    const EyeSpec& right = EyeSpec::default_right(),
    const MouthSpec& mouth = MouthSpec::default_mouth()) {
  using G = SynthGeometry;
  spec.validate();
  std::mt19937_64 rng(seed);
  std::vector<FrameRecord> out;
  out.reserve(static_cast<std::size_t>(spec.total_frames()));
  std::int64_t frame = 0;
  for (const auto& seg : spec.segments) {
    for (std::int64_t k = 0; k < seg.frames; ++k, ++frame) {
      FrameRecord r;
      r.t_ms = frame * 1000 / spec.fps;
      LandmarkFrame lf;
      lf.t_ms = r.t_ms;
      lf.face_found = seg.mode != SegmentMode::kNoFace;
      if (lf.face_found) {
        const double eye_h = seg.mode == SegmentMode::kEyesClosed ? 0.0 : G::kEyeOpenHeight;
        const double mouth_h =
            seg.mode == SegmentMode::kYawning ? G::kMouthYawnHeight : G::kMouthRestHeight;
        detail::place_eye(lf.points, left, G::kLeftEyeX, G::kEyeY, eye_h, rng);
        detail::place_eye(lf.points, right, G::kRightEyeX, G::kEyeY, eye_h, rng);
        detail::place_mouth(lf.points, mouth, G::kMouthX, G::kMouthY, mouth_h, rng);
      }
      r.landmarks = std::move(lf);
      r.probability = seg.probability;
      r.label = seg.label;
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace drowse
