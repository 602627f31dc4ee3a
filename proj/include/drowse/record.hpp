#pragma once

// FrameRecord and its one-line text encoding:
//
//   {"t_ms": 0, "face": true, "pts": {"0": [x, y, z], ...}, "prob": 0.5,
//    "img": null, "label": "awake"}
//
// Absent optional fields are null. A record without landmarks carries
// "face": null and "pts": null; a detector pass that found no face is
// "face": false with an empty (or partial) "pts" object.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "drowse/geometry.hpp"
#include "drowse/probability.hpp"
#include "drowse/text_format.hpp"

namespace drowse {

enum class Label : std::uint8_t { kSleepy, kAwake };

inline std::string_view to_string(Label l) noexcept {
  return l == Label::kSleepy ? "sleepy" : "awake";
}

inline std::optional<Label> parse_label(std::string_view s) noexcept {
  if (s == "sleepy") return Label::kSleepy;
  if (s == "awake") return Label::kAwake;
  return std::nullopt;
}

struct FrameRecord {
  std::int64_t t_ms = 0;
  std::optional<LandmarkFrame> landmarks;  // landmarks->t_ms mirrors t_ms
  std::optional<Probability> probability;
  std::optional<std::string> image_ref;
  std::optional<Label> label;

  bool has_payload() const noexcept {
    return landmarks.has_value() || probability.has_value() ||
           image_ref.has_value();
  }
  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

// Malformed stream content. line() is 1-based, or 0 when unknown.
class StreamError : public std::runtime_error {
 public:
  StreamError(std::size_t line, const std::string& what)
      : std::runtime_error(line == 0 ? what
                                     : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline bool canonical_index_key(const std::string& key, int& index) {
  if (key.empty() || key.size() > 3) return false;
  if (key.size() > 1 && key[0] == '0') return false;
  int v = 0;
  for (char c : key) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  index = v;
  return true;
}

inline double finite_number(const nlohmann::json& j, const char* what) {
  if (!j.is_number()) throw std::invalid_argument(std::string(what) + " is not a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " is not finite");
  return v;
}

}  // namespace detail

inline FrameRecord parse_record(std::string_view line, std::size_t line_no = 0) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw StreamError(line_no, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw StreamError(line_no, "record is not a JSON object");

  try {
    for (const auto& [key, _] : j.items()) {
      if (key != "t_ms" && key != "face" && key != "pts" && key != "prob" &&
          key != "img" && key != "label") {
        throw std::invalid_argument("unknown field \"" + key + "\"");
      }
    }

    FrameRecord r;
    const auto t = j.find("t_ms");
    if (t == j.end() || !(t->is_number_integer() || t->is_number_unsigned())) {
      throw std::invalid_argument("t_ms missing or not an integer");
    }
    if (t->is_number_unsigned()) {
      r.t_ms = static_cast<std::int64_t>(t->get<std::uint64_t>());
    } else {
      r.t_ms = t->get<std::int64_t>();
    }
    if (r.t_ms < 0) throw std::invalid_argument("t_ms is negative");

    const auto face = j.find("face");
    const auto pts = j.find("pts");
    const bool face_null = face == j.end() || face->is_null();
    const bool pts_null = pts == j.end() || pts->is_null();
    if (face_null) {
      if (!pts_null) throw std::invalid_argument("pts given without face flag");
    } else {
      if (!face->is_boolean()) throw std::invalid_argument("face is not a boolean");
      LandmarkFrame lf;
      lf.t_ms = r.t_ms;
      lf.face_found = face->get<bool>();
      if (!pts_null) {
        if (!pts->is_object()) throw std::invalid_argument("pts is not an object");
        for (const auto& [key, value] : pts->items()) {
          int index = -1;
          if (!detail::canonical_index_key(key, index) || !valid_landmark_index(index)) {
            throw std::out_of_range("landmark index \"" + key + "\" outside [0, 467]");
          }
          if (!value.is_array() || value.size() != 3) {
            throw std::invalid_argument("landmark " + key + " is not [x, y, z]");
          }
          lf.points.set(index, Point3{detail::finite_number(value[0], "x"),
                                      detail::finite_number(value[1], "y"),
                                      detail::finite_number(value[2], "z")});
        }
      }
      r.landmarks = std::move(lf);
    }

    if (const auto p = j.find("prob"); p != j.end() && !p->is_null()) {
      r.probability = Probability(detail::finite_number(*p, "prob"));
    }
    if (const auto img = j.find("img"); img != j.end() && !img->is_null()) {
      if (!img->is_string()) throw std::invalid_argument("img is not a string");
      r.image_ref = img->get<std::string>();
    }
    if (const auto lab = j.find("label"); lab != j.end() && !lab->is_null()) {
      if (!lab->is_string()) throw std::invalid_argument("label is not a string");
      r.label = parse_label(lab->get_ref<const std::string&>());
      if (!r.label) throw std::invalid_argument("label must be \"sleepy\" or \"awake\"");
    }
    if (!r.has_payload()) {
      throw std::invalid_argument("record carries none of landmarks, prob, img");
    }
    return r;
  } catch (const StreamError&) {
    throw;
  } catch (const std::exception& e) {
    throw StreamError(line_no, e.what());
  }
}

// Canonical encoding, no trailing newline.
inline std::string serialize_record(const FrameRecord& r) {
  std::string out;
  out.reserve(64 + (r.landmarks ? r.landmarks->points.size() * 48 : 0));
  out += "{\"t_ms\": ";
  out += std::to_string(r.t_ms);
  if (r.landmarks) {
    out += ", \"face\": ";
    out += r.landmarks->face_found ? "true" : "false";
    out += ", \"pts\": {";
    bool first = true;
    for (const auto& [index, p] : r.landmarks->points) {
      if (!first) out += ", ";
      first = false;
      out += '"';
      out += std::to_string(index);
      out += "\": [";
      text::append_double(out, p.x);
      out += ", ";
      text::append_double(out, p.y);
      out += ", ";
      text::append_double(out, p.z);
      out += ']';
    }
    out += '}';
  } else {
    out += ", \"face\": null, \"pts\": null";
  }
  out += ", \"prob\": ";
  if (r.probability) {
    text::append_double(out, r.probability->value());
  } else {
    out += "null";
  }
  out += ", \"img\": ";
  if (r.image_ref) {
    text::append_json_string(out, *r.image_ref);
  } else {
    out += "null";
  }
  out += ", \"label\": ";
  if (r.label) {
    out += '"';
    out += to_string(*r.label);
    out += '"';
  } else {
    out += "null";
  }
  out += '}';
  return out;
}

}  // namespace drowse
