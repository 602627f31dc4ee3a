#pragma once

// Eye and mouth aspect ratios computed from indexed facial landmarks.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace drowse {

inline constexpr int kLandmarkCount = 468;

// Denominators at or below this (normalized units) make a ratio invalid.
inline constexpr double kDegenerateEpsilon = 1e-9;

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool finite() const noexcept {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
  friend bool operator==(const Point3&, const Point3&) = default;
};

// Planar Euclidean distance; z does not participate.
inline double distance(const Point3& p, const Point3& q) noexcept {
  return std::hypot(p.x - q.x, p.y - q.y);
}

inline bool valid_landmark_index(int index) noexcept {
  return index >= 0 && index < kLandmarkCount;
}

// Sparse landmark storage kept sorted by index. Recordings usually carry
// only the twenty eye/mouth points, so a flat vector beats a 468-slot array.
class LandmarkSet {
 public:
  using value_type = std::pair<int, Point3>;
  using const_iterator = std::vector<value_type>::const_iterator;

  LandmarkSet() = default;
  LandmarkSet(std::initializer_list<value_type> points) {
    for (const auto& [index, p] : points) set(index, p);
  }

  // Inserts or replaces. Throws on an out-of-range index or non-finite point.
  void set(int index, const Point3& p) {
    if (!valid_landmark_index(index)) {
      throw std::out_of_range("landmark index " + std::to_string(index) +
                              " outside [0, 467]");
    }
    if (!p.finite()) {
      throw std::invalid_argument("landmark " + std::to_string(index) +
                                  " has a non-finite coordinate");
    }
    auto it = lower(index);
    if (it != points_.end() && it->first == index) {
      it->second = p;
    } else {
      points_.insert(it, {index, p});
    }
  }

  const Point3* find(int index) const noexcept {
    auto it = std::lower_bound(
        points_.begin(), points_.end(), index,
        [](const value_type& v, int i) { return v.first < i; });
    if (it == points_.end() || it->first != index) return nullptr;
    return &it->second;
  }

  bool contains(int index) const noexcept { return find(index) != nullptr; }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const_iterator begin() const noexcept { return points_.begin(); }
  const_iterator end() const noexcept { return points_.end(); }

  friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;

 private:
  std::vector<value_type>::iterator lower(int index) {
    return std::lower_bound(
        points_.begin(), points_.end(), index,
        [](const value_type& v, int i) { return v.first < i; });
  }

  std::vector<value_type> points_;
};

struct LandmarkFrame {
  std::int64_t t_ms = 0;
  bool face_found = false;
  LandmarkSet points;

  friend bool operator==(const LandmarkFrame&, const LandmarkFrame&) = default;
};

namespace detail {

template <std::size_t N>
void require_distinct_indices(const std::array<int, N>& indices,
                              std::string_view what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (!valid_landmark_index(indices[i])) {
      throw std::invalid_argument(std::string(what) + ": index " +
                                  std::to_string(indices[i]) +
                                  " outside [0, 467]");
    }
    for (std::size_t j = i + 1; j < N; ++j) {
      if (indices[i] == indices[j]) {
        throw std::invalid_argument(std::string(what) + ": index " +
                                    std::to_string(indices[i]) +
                                    " used twice");
      }
    }
  }
}

}  // namespace detail

// Six eye landmarks p1..p6: p1/p4 are the horizontal corners, (p2, p6) and
// (p3, p5) the vertical pairs.
class EyeSpec {
 public:
  explicit EyeSpec(std::array<int, 6> indices) : indices_(indices) {
    detail::require_distinct_indices(indices_, "eye spec");
  }

  static EyeSpec default_left() { return EyeSpec({30, 29, 28, 243, 22, 24}); }
  static EyeSpec default_right() {
    return EyeSpec({463, 258, 259, 359, 254, 252});
  }

  // 1-based accessor matching the p1..p6 naming.
  int p(int n) const { return indices_.at(static_cast<std::size_t>(n - 1)); }
  const std::array<int, 6>& indices() const noexcept { return indices_; }

  friend bool operator==(const EyeSpec&, const EyeSpec&) = default;

 private:
  std::array<int, 6> indices_;
};

// Eight mouth landmarks p1..p8: p1/p5 are the corners, (p2, p8), (p3, p7)
// and (p4, p6) the vertical pairs.
class MouthSpec {
 public:
  explicit MouthSpec(std::array<int, 8> indices) : indices_(indices) {
    detail::require_distinct_indices(indices_, "mouth spec");
  }

  static MouthSpec default_mouth() {
    return MouthSpec({61, 39, 0, 269, 287, 405, 17, 181});
  }

  int p(int n) const { return indices_.at(static_cast<std::size_t>(n - 1)); }
  const std::array<int, 8>& indices() const noexcept { return indices_; }

  friend bool operator==(const MouthSpec&, const MouthSpec&) = default;

 private:
  std::array<int, 8> indices_;
};

enum class RatioStatus : std::uint8_t {
  kValid,
  kNoFace,
  kMissingLandmark,
  kDegenerateHorizontal,
};

inline std::string_view to_string(RatioStatus s) noexcept {
  switch (s) {
    case RatioStatus::kValid: return "valid";
    case RatioStatus::kNoFace: return "no-face";
    case RatioStatus::kMissingLandmark: return "missing-landmark";
    case RatioStatus::kDegenerateHorizontal: return "degenerate-horizontal";
  }
  return "unknown";
}

// An aspect ratio or the reason it could not be computed.
class Ratio {
 public:
  constexpr Ratio() noexcept = default;

  static constexpr Ratio of(double value) noexcept {
    return Ratio(value, RatioStatus::kValid);
  }
  static constexpr Ratio invalid(RatioStatus why) noexcept {
    return Ratio(0.0, why);
  }

  constexpr bool valid() const noexcept { return status_ == RatioStatus::kValid; }
  constexpr RatioStatus status() const noexcept { return status_; }

  double value() const {
    if (!valid()) {
      throw std::logic_error("value() on invalid ratio (" +
                             std::string(to_string(status_)) + ")");
    }
    return value_;
  }

  friend constexpr bool operator==(const Ratio&, const Ratio&) = default;

 private:
  constexpr Ratio(double value, RatioStatus status) noexcept
      : value_(value), status_(status) {}

  double value_ = 0.0;
  RatioStatus status_ = RatioStatus::kNoFace;
};

struct AspectRatios {
  Ratio ear_left;
  Ratio ear_right;
  Ratio ear_mean;
  Ratio mar;

  bool any_valid() const noexcept {
    return ear_left.valid() || ear_right.valid() || mar.valid();
  }
  friend bool operator==(const AspectRatios&, const AspectRatios&) = default;
};

namespace detail {

// Sum of the vertical pair distances over `pairs` times the corner distance.
template <std::size_t Pairs, std::size_t N>
Ratio aspect_ratio(const LandmarkFrame& frame, const std::array<int, N>& idx,
                   int corner_a, int corner_b,
                   const std::array<std::pair<int, int>, Pairs>& verticals) {
  if (!frame.face_found) return Ratio::invalid(RatioStatus::kNoFace);
  std::array<const Point3*, N> pts{};
  for (std::size_t i = 0; i < N; ++i) {
    pts[i] = frame.points.find(idx[i]);
    if (pts[i] == nullptr) return Ratio::invalid(RatioStatus::kMissingLandmark);
  }
  const double horizontal =
      distance(*pts[static_cast<std::size_t>(corner_a - 1)],
               *pts[static_cast<std::size_t>(corner_b - 1)]);
  if (!(horizontal > kDegenerateEpsilon)) {
    return Ratio::invalid(RatioStatus::kDegenerateHorizontal);
  }
  double vertical = 0.0;
  for (const auto& [a, b] : verticals) {
    vertical += distance(*pts[static_cast<std::size_t>(a - 1)],
                         *pts[static_cast<std::size_t>(b - 1)]);
  }
  return Ratio::of(vertical / (static_cast<double>(Pairs) * horizontal));
}

}  // namespace detail

// (|p2-p6| + |p3-p5|) / (2 |p1-p4|)
inline Ratio compute_ear(const LandmarkFrame& frame, const EyeSpec& eye) {
  static constexpr std::array<std::pair<int, int>, 2> kVerticals{
      {{2, 6}, {3, 5}}};
  return detail::aspect_ratio(frame, eye.indices(), 1, 4, kVerticals);
}

// (|p2-p8| + |p3-p7| + |p4-p6|) / (3 |p1-p5|)
inline Ratio compute_mar(const LandmarkFrame& frame, const MouthSpec& mouth) {
  static constexpr std::array<std::pair<int, int>, 3> kVerticals{
      {{2, 8}, {3, 7}, {4, 6}}};
  return detail::aspect_ratio(frame, mouth.indices(), 1, 5, kVerticals);
}

inline AspectRatios compute_aspect_ratios(const LandmarkFrame& frame,
                                          const EyeSpec& left,
                                          const EyeSpec& right,
                                          const MouthSpec& mouth) {
  AspectRatios r;
  if (!frame.face_found) return r;
  r.ear_left = compute_ear(frame, left);
  r.ear_right = compute_ear(frame, right);
  r.mar = compute_mar(frame, mouth);
  if (r.ear_left.valid() && r.ear_right.valid()) {
    r.ear_mean = Ratio::of((r.ear_left.value() + r.ear_right.value()) / 2.0);
  } else {
    r.ear_mean = Ratio::invalid(r.ear_left.valid() ? r.ear_right.status()
                                                   : r.ear_left.status());
  }
  return r;
}

}  // namespace drowse
