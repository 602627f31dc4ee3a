#pragma once

// Frame pipeline: ingest -> geometry -> classifier -> fusion -> events.
//
// Replay runs everything in lock-step on the calling thread and stamps
// event wall times from the stream clock, so output is a pure function of
// (stream, config). Live runs read frames on one thread, classify on
// another, and join the two per frame with a bounded staleness allowance.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "drowse/bounded_queue.hpp"
#include "drowse/classifier.hpp"
#include "drowse/config.hpp"
#include "drowse/fusion.hpp"
#include "drowse/geometry.hpp"
#include "drowse/record.hpp"
#include "drowse/store.hpp"
#include "drowse/stream.hpp"
#include "drowse/text_format.hpp"

namespace drowse {

struct RunReport {
  std::int64_t frames = 0;
  std::int64_t alarms = 0;
  std::int64_t yawns = 0;
  std::int64_t invalid_ratio_frames = 0;  // no valid mean EAR
  std::int64_t no_signal_frames = 0;      // neither EAR nor probability
  std::int64_t classified_frames = 0;
  std::int64_t substituted_frames = 0;    // live only: stale probability reused
  std::int64_t lost_events = 0;           // store appends that failed

  nlohmann::json to_json() const {
    return {{"frames", frames},
            {"alarms", alarms},
            {"yawns", yawns},
            {"invalid_ratio_frames", invalid_ratio_frames},
            {"no_signal_frames", no_signal_frames},
            {"classified_frames", classified_frames},
            {"substituted_frames", substituted_frames},
            {"lost_events", lost_events}};
  }

  std::string to_text() const {
    std::ostringstream os;
    os << "frames processed:     " << frames << '\n'
       << "alarms:               " << alarms << '\n'
       << "yawns:                " << yawns << '\n'
       << "invalid-ratio frames: " << invalid_ratio_frames << '\n'
       << "no-signal frames:     " << no_signal_frames << '\n'
       << "classified frames:    " << classified_frames << '\n';
    if (substituted_frames > 0) os << "stale substitutions:  " << substituted_frames << '\n';
    if (lost_events > 0) os << "LOST EVENTS:          " << lost_events << '\n';
    return os.str();
  }
};

// Geometry and fusion for one session. Not thread-safe; one owner.
class FramePipeline {
 public:
  explicit FramePipeline(const PipelineConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

  AspectRatios ratios_for(const FrameRecord& r) const {
    if (!r.landmarks) return {};
    return compute_aspect_ratios(*r.landmarks, cfg_.left_eye, cfg_.right_eye, cfg_.mouth);
  }

  StepOutput process(const FrameRecord& r, std::optional<Probability> probability) {
    FrameInputs in{ratios_for(r), probability, r.t_ms};
    ++report_.frames;
    if (!in.ratios.ear_mean.valid()) ++report_.invalid_ratio_frames;
    if (!in.ratios.ear_mean.valid() && !probability) ++report_.no_signal_frames;
    if (probability) ++report_.classified_frames;
    const StepOutput out = advance(state_, in, cfg_.fusion);
    if (out.alarm_event) ++report_.alarms;
    if (out.yawn_event) ++report_.yawns;
    return out;
  }

  void reset(bool preserve_totals) { state_ = drowse::reset(state_, preserve_totals); }

  const DrowsinessState& state() const noexcept { return state_; }
  RunReport& report() noexcept { return report_; }
  const PipelineConfig& config() const noexcept { return cfg_; }

 private:
  PipelineConfig cfg_;
  DrowsinessState state_;
  RunReport report_;
};

// Line-at-a-time logging shared by the live threads.
class LockedLog {
 public:
  explicit LockedLog(std::ostream& os) : os_(os) {}
  void line(const std::string& s) {
    std::lock_guard lock(mu_);
    os_ << s << '\n';
  }

 private:
  std::ostream& os_;
  std::mutex mu_;
};

inline std::optional<Probability> classify_if_accepted(Classifier& classifier,
                                                       const FrameRecord& r) {
  if (!classifier.accepts(r)) return std::nullopt;
  return classifier.classify(r);
}

// Events produced by one frame, alarm first.
inline std::vector<Event> events_for(const StepOutput& out, std::int64_t t_ms,
                                     const std::string& session, const std::string& wall) {
  std::vector<Event> events;
  if (out.alarm_event) events.push_back({EventKind::kAlarm, t_ms, session, wall});
  if (out.yawn_event) events.push_back({EventKind::kYawn, t_ms, session, wall});
  return events;
}

using EventSink = std::function<void(const Event&)>;

// Lock-step run with stream-derived wall times.
inline RunReport run_replay(std::span<const FrameRecord> records, const PipelineConfig& cfg,
                            Classifier& classifier, const EventSink& sink) {
  FramePipeline pipeline(cfg);
  for (const auto& r : records) {
    const StepOutput out = pipeline.process(r, classify_if_accepted(classifier, r));
    if (!out.alarm_event && !out.yawn_event) continue;
    const std::string wall = text::iso8601_from_epoch_offset(cfg.replay_epoch_ms, r.t_ms);
    for (const auto& e : events_for(out, r.t_ms, cfg.session, wall)) sink(e);
  }
  return pipeline.report();
}

// Per-frame fusion outputs, for evaluation against labels.
inline std::vector<StepOutput> predict_frames(std::span<const FrameRecord> records,
                                              const PipelineConfig& cfg, Classifier& classifier) {
  FramePipeline pipeline(cfg);
  std::vector<StepOutput> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(pipeline.process(r, classify_if_accepted(classifier, r)));
  return out;
}

// Sink that appends to a store; failures are counted and logged, not fatal.
inline EventSink store_sink(EventStore& store, RunReport& report, LockedLog& log) {
  return [&store, &report, &log](const Event& e) {
    try {
      store.append(e);
    } catch (const std::exception& ex) {
      ++report.lost_events;
      log.line("event lost (" + std::string(to_string(e.kind)) + " at t_ms " +
               std::to_string(e.t_ms) + "): " + ex.what());
    }
  };
}

struct ReplayOptions {
  // Start the event file empty instead of appending to it.
  bool truncate_output = true;
  ModelClassifierFactory model_factory;
};

// Replays a stream file into an event file. Image references resolve
// relative to the stream file's directory.
inline RunReport replay_file(const std::filesystem::path& stream_path, const PipelineConfig& cfg,
                             const std::filesystem::path& event_path,
                             const ReplayOptions& options = {}, std::ostream& log = std::cerr) {
  const std::vector<FrameRecord> records = read_stream(stream_path);
  auto classifier =
      make_classifier(cfg.classifier, options.model_factory, stream_path.parent_path());
  if (options.truncate_output) {
    std::ofstream(event_path, std::ios::trunc);
  }
  EventStore store(event_path);
  for (const auto& w : store.take_warnings()) log << w << '\n';
  LockedLog locked(log);
  RunReport lost;
  RunReport report = run_replay(records, cfg, *classifier, store_sink(store, lost, locked));
  report.lost_events = lost.lost_events;
  return report;
}

// Given the most recent classifier result, decides what a frame may use.
// A result from `staleness` frames back is usable while staleness <= K.
class ProbabilityJoiner {
 public:
  struct Joined {
    std::optional<Probability> probability;
    std::int64_t source_frame = -1;
    bool substituted = false;
  };

  explicit ProbabilityJoiner(std::int64_t max_staleness) : max_staleness_(max_staleness) {}

  void publish(std::int64_t frame, std::optional<Probability> p) {
    if (frame >= latest_frame_) {
      latest_frame_ = frame;
      latest_ = p;
    }
  }

  // nullopt: nothing fresh enough yet, the caller has to wait.
  std::optional<Joined> resolve(std::int64_t frame) const {
    if (latest_frame_ < 0 || frame - latest_frame_ > max_staleness_) return std::nullopt;
    return Joined{latest_, latest_frame_, latest_frame_ != frame};
  }

  std::int64_t max_staleness() const noexcept { return max_staleness_; }

 private:
  std::int64_t max_staleness_;
  std::int64_t latest_frame_ = -1;
  std::optional<Probability> latest_;
};

// Classifier on its own thread. submit() replaces any request the worker has
// not started yet, so the worker always moves to the newest frame.
class ClassifierWorker {
 public:
  ClassifierWorker(std::unique_ptr<Classifier> classifier, std::int64_t max_staleness,
                   LockedLog& log)
      : classifier_(std::move(classifier)), joiner_(max_staleness), log_(log),
        thread_([this](std::stop_token st) { run(st); }) {}

  ~ClassifierWorker() {
    thread_.request_stop();
    {
      std::lock_guard lock(mu_);
      stopping_ = true;
    }
    cv_.notify_all();
  }

  void submit(std::int64_t frame, FrameRecord record) {
    {
      std::lock_guard lock(mu_);
      pending_.emplace(frame, std::move(record));
    }
    cv_.notify_all();
  }

  // Blocks until a result no more than K frames old is available.
  ProbabilityJoiner::Joined join(std::int64_t frame) {
    std::unique_lock lock(mu_);
    std::optional<ProbabilityJoiner::Joined> j;
    cv_.wait(lock, [&] { return stopping_ || (j = joiner_.resolve(frame)).has_value(); });
    return j.value_or(ProbabilityJoiner::Joined{});
  }

 private:
  void run(std::stop_token st) {
    for (;;) {
      std::pair<std::int64_t, FrameRecord> job;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stopping_ || st.stop_requested() || pending_.has_value(); });
        if (stopping_ || st.stop_requested()) return;
        job = std::move(*pending_);
        pending_.reset();
      }
      std::optional<Probability> p;
      try {
        p = classify_if_accepted(*classifier_, job.second);
      } catch (const std::exception& e) {
        log_.line("frame " + std::to_string(job.first) + ": " + e.what());
      }
      {
        std::lock_guard lock(mu_);
        joiner_.publish(job.first, p);
      }
      cv_.notify_all();
    }
  }

  std::unique_ptr<Classifier> classifier_;
  ProbabilityJoiner joiner_;
  LockedLog& log_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::optional<std::pair<std::int64_t, FrameRecord>> pending_;
  bool stopping_ = false;
  std::jthread thread_;
};

// Runs the alarm hook off the frame thread.
class AlarmNotifier {
 public:
  AlarmNotifier(std::string hook_template, LockedLog& log)
      : hook_(std::move(hook_template)), log_(log), queue_(256),
        thread_([this] { run(); }) {}

  ~AlarmNotifier() {
    queue_.close();
    thread_.join();
  }

  void notify(const Event& e) {
    if (!queue_.try_push(e)) {
      log_.line("alarm hook backlog full; dropped alarm at t_ms " + std::to_string(e.t_ms));
    }
  }

  static std::string expand(std::string tmpl, const Event& e) {
    auto replace_all = [&tmpl](const std::string& key, const std::string& value) {
      for (std::size_t pos = 0; (pos = tmpl.find(key, pos)) != std::string::npos;) {
        tmpl.replace(pos, key.size(), value);
        pos += value.size();
      }
    };
    replace_all("{t_ms}", std::to_string(e.t_ms));
    replace_all("{session}", e.session);
    replace_all("{wall}", e.wall);
    return tmpl;
  }

 private:
  void run() {
    while (auto e = queue_.pop()) {
      if (hook_.empty()) {
        log_.line("ALARM session=" + e->session + " t_ms=" + std::to_string(e->t_ms) +
                  " wall=" + e->wall);
        continue;
      }
      const int rc = std::system(expand(hook_, *e).c_str());
      if (rc != 0) log_.line("alarm hook exited with " + std::to_string(rc));
    }
  }

  std::string hook_;
  LockedLog& log_;
  BoundedQueue<Event> queue_;
  std::thread thread_;
};

using RecordSource = std::function<std::optional<FrameRecord>()>;

struct LiveOptions {
  // Stamps wall times; defaults to the system clock.
  std::function<std::string()> clock = text::iso8601_now;
  // Receives every emitted event after it is stored.
  EventSink on_event;
};

// Live session: a reader thread feeds a bounded queue, the classifier runs
// on a worker thread, and this thread joins results, advances fusion and
// writes events.
inline RunReport run_live(const RecordSource& source, const PipelineConfig& cfg,
                          std::unique_ptr<Classifier> classifier, EventStore& store,
                          std::ostream& log, const LiveOptions& options = {}) {
  cfg.validate();
  LockedLog locked(log);
  BoundedQueue<FrameRecord> queue(cfg.buffer_size);
  std::jthread reader([&] {
    try {
      while (auto r = source()) {
        if (!queue.push(std::move(*r))) break;
      }
    } catch (const std::exception& e) {
      locked.line(std::string("frame source failed: ") + e.what());
    }
    queue.close();
  });

  // Unblocks the reader if this thread leaves early.
  struct CloseOnExit {
    BoundedQueue<FrameRecord>& q;
    ~CloseOnExit() { q.close(); }
  } close_on_exit{queue};

  FramePipeline pipeline(cfg);
  RunReport lost;
  const EventSink sink = store_sink(store, lost, locked);
  AlarmNotifier notifier(cfg.alarm_hook, locked);
  {
    ClassifierWorker worker(std::move(classifier), cfg.staleness_frames, locked);
    std::int64_t frame = 0;
    while (auto r = queue.pop()) {
      worker.submit(frame, *r);
      const auto joined = worker.join(frame);
      if (joined.substituted) {
        ++pipeline.report().substituted_frames;
        locked.line("frame " + std::to_string(frame) + ": using classifier result from frame " +
                    std::to_string(joined.source_frame));
      }
      const StepOutput out = pipeline.process(*r, joined.probability);
      if (out.alarm_event || out.yawn_event) {
        const std::string wall = options.clock();
        for (const auto& e : events_for(out, r->t_ms, cfg.session, wall)) {
          sink(e);
          if (e.kind == EventKind::kAlarm) notifier.notify(e);
          if (options.on_event) options.on_event(e);
        }
      }
      ++frame;
    }
  }
  RunReport report = pipeline.report();
  report.lost_events = lost.lost_events;
  return report;
}

}  // namespace drowse
