#pragma once

// Binary classification metrics (sleepy is the positive class) and
// episode-level evaluation of alarm logs against labeled streams.

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "drowse/record.hpp"

namespace drowse {

struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const noexcept { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(std::span<const Label> predictions,
                                 std::span<const Label> truth) {
  if (predictions.size() != truth.size()) {
    throw std::invalid_argument("confusion: " + std::to_string(predictions.size()) +
                                " predictions vs " + std::to_string(truth.size()) + " labels");
  }
  ConfusionMatrix m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool predicted = predictions[i] == Label::kSleepy;
    const bool actual = truth[i] == Label::kSleepy;
    if (predicted && actual) {
      ++m.tp;
    } else if (predicted) {
      ++m.fp;
    } else if (actual) {
      ++m.fn;
    } else {
      ++m.tn;
    }
  }
  return m;
}

inline double accuracy(const ConfusionMatrix& m) {
  if (m.total() < 1) throw std::invalid_argument("accuracy of an empty confusion matrix");
  return static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total());
}

struct Episode {
  std::size_t first = 0;  // frame index, inclusive
  std::size_t last = 0;   // inclusive
  std::size_t length() const noexcept { return last - first + 1; }
  friend bool operator==(const Episode&, const Episode&) = default;
};

struct RunEvaluation {
  double true_alarm_rate = 0.0;
  double false_positive_rate = 0.0;
  std::int64_t episodes = 0;
  std::int64_t episodes_alarmed = 0;
  std::int64_t alarms = 0;
  std::int64_t false_alarms = 0;
  std::int64_t unmatched_alarms = 0;  // timestamps before the first frame
};

inline std::vector<Label> labels_of(std::span<const FrameRecord> stream) {
  std::vector<Label> labels;
  labels.reserve(stream.size());
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (!stream[i].label) {
      throw std::invalid_argument("frame " + std::to_string(i) + " (t_ms " +
                                  std::to_string(stream[i].t_ms) + ") has no label");
    }
    labels.push_back(*stream[i].label);
  }
  return labels;
}

// Maximal runs of sleepy labels at least `min_length` frames long.
inline std::vector<Episode> sleepy_episodes(std::span<const Label> labels,
                                            std::int64_t min_length) {
  std::vector<Episode> out;
  std::size_t i = 0;
  while (i < labels.size()) {
    if (labels[i] != Label::kSleepy) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < labels.size() && labels[j + 1] == Label::kSleepy) ++j;
    if (static_cast<std::int64_t>(j - i + 1) >= min_length) out.push_back({i, j});
    i = j + 1;
  }
  return out;
}

// Alarms are placed on the last frame whose t_ms is not after the alarm's,
// so the log's order does not matter.
inline RunEvaluation evaluate_run(std::span<const std::int64_t> alarm_t_ms,
                                  std::span<const FrameRecord> stream,
                                  std::int64_t alarm_frame_threshold) {
  if (alarm_frame_threshold < 1) throw std::invalid_argument("alarm_frame_threshold must be >= 1");
  const std::vector<Label> labels = labels_of(stream);
  const std::vector<Episode> episodes = sleepy_episodes(labels, alarm_frame_threshold);

  std::vector<std::int64_t> times;
  times.reserve(stream.size());
  for (const auto& r : stream) times.push_back(r.t_ms);

  RunEvaluation ev;
  ev.episodes = static_cast<std::int64_t>(episodes.size());
  std::vector<bool> alarmed(episodes.size(), false);
  for (const std::int64_t t : alarm_t_ms) {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) {
      ++ev.unmatched_alarms;
      continue;
    }
    const auto frame = static_cast<std::size_t>(it - times.begin() - 1);
    ++ev.alarms;
    if (labels[frame] == Label::kAwake) ++ev.false_alarms;
    const auto ep = std::upper_bound(episodes.begin(), episodes.end(), frame,
                                     [](std::size_t f, const Episode& e) { return f < e.first; });
    if (ep != episodes.begin() && frame <= std::prev(ep)->last) {
      alarmed[static_cast<std::size_t>(std::prev(ep) - episodes.begin())] = true;
    }
  }
  ev.episodes_alarmed = std::count(alarmed.begin(), alarmed.end(), true);
  ev.true_alarm_rate = ev.episodes == 0 ? 0.0
                                        : static_cast<double>(ev.episodes_alarmed) /
                                              static_cast<double>(ev.episodes);
  ev.false_positive_rate = ev.alarms == 0 ? 0.0
                                          : static_cast<double>(ev.false_alarms) /
                                                static_cast<double>(ev.alarms);
  return ev;
}

}  // namespace drowse
