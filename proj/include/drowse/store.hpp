#pragma once

// Append-only event log, one JSON object per line:
//
//   {"kind": "alarm", "t_ms": 2000, "session": "s1", "wall": "2026-01-01T00:00:02.000Z"}
//
// One writer appends whole lines (write + fsync). Any number of readers, in
// this process or others, tail the file and only consume newline-terminated
// lines, so a half-written line is never observed.

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "drowse/text_format.hpp"

namespace drowse {

enum class EventKind : std::uint8_t { kYawn, kAlarm };

inline std::string_view to_string(EventKind k) noexcept {
  return k == EventKind::kYawn ? "yawn" : "alarm";
}

inline std::optional<EventKind> parse_event_kind(std::string_view s) noexcept {
  if (s == "yawn") return EventKind::kYawn;
  if (s == "alarm") return EventKind::kAlarm;
  return std::nullopt;
}

struct Event {
  EventKind kind = EventKind::kAlarm;
  std::int64_t t_ms = 0;
  std::string session;
  std::string wall;

  friend bool operator==(const Event&, const Event&) = default;
};

struct Summary {
  std::int64_t yawns = 0;
  std::int64_t alarms = 0;
  friend bool operator==(const Summary&, const Summary&) = default;
};

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Append rejected because t_ms went backwards within its session.
class OrderingError : public StoreError {
 public:
  using StoreError::StoreError;
};

inline std::string serialize_event(const Event& e) {
  std::string out = "{\"kind\": \"";
  out += to_string(e.kind);
  out += "\", \"t_ms\": ";
  out += std::to_string(e.t_ms);
  out += ", \"session\": ";
  text::append_json_string(out, e.session);
  out += ", \"wall\": ";
  text::append_json_string(out, e.wall);
  out += '}';
  return out;
}

inline nlohmann::json event_to_json(const Event& e) {
  return {{"kind", to_string(e.kind)}, {"t_ms", e.t_ms}, {"session", e.session}, {"wall", e.wall}};
}

// Accepts the stored form; "wall" may be omitted when `default_wall` is set.
inline Event event_from_json(const nlohmann::json& j,
                             const std::optional<std::string>& default_wall = std::nullopt) {
  if (!j.is_object()) throw std::invalid_argument("event is not a JSON object");
  Event e;
  const auto kind = j.find("kind");
  if (kind == j.end() || !kind->is_string()) throw std::invalid_argument("event kind missing");
  const auto k = parse_event_kind(kind->get_ref<const std::string&>());
  if (!k) throw std::invalid_argument("event kind must be \"yawn\" or \"alarm\"");
  e.kind = *k;
  const auto t = j.find("t_ms");
  if (t == j.end() || !(t->is_number_integer() || t->is_number_unsigned())) {
    throw std::invalid_argument("event t_ms missing or not an integer");
  }
  e.t_ms = t->get<std::int64_t>();
  if (e.t_ms < 0) throw std::invalid_argument("event t_ms is negative");
  const auto s = j.find("session");
  if (s == j.end() || !s->is_string()) throw std::invalid_argument("event session missing");
  e.session = s->get<std::string>();
  const auto w = j.find("wall");
  if (w != j.end() && w->is_string()) {
    e.wall = w->get<std::string>();
  } else if (w == j.end() && default_wall) {
    e.wall = *default_wall;
  } else {
    throw std::invalid_argument("event wall missing or not a string");
  }
  for (const auto& [key, _] : j.items()) {
    if (key != "kind" && key != "t_ms" && key != "session" && key != "wall") {
      throw std::invalid_argument("unknown event field \"" + key + "\"");
    }
  }
  return e;
}

inline Event parse_event(std::string_view line) {
  return event_from_json(nlohmann::json::parse(line));
}

class EventStore {
 public:
  enum class Mode : std::uint8_t { kReadWrite, kReadOnly };

  // Read-write opening creates the file and cuts off a torn final line.
  // Read-only opening never touches the file (it may not exist yet).
  explicit EventStore(std::filesystem::path path, Mode mode = Mode::kReadWrite,
                      bool sync_each_append = true)
      : path_(std::move(path)), mode_(mode), sync_(sync_each_append) {
    if (mode_ == Mode::kReadWrite) {
      fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
      if (fd_ < 0) {
        throw StoreError("cannot open event store " + path_.string() + ": " +
                         std::strerror(errno));
      }
    }
    std::unique_lock lock(mu_);
    refresh_locked();
    if (mode_ == Mode::kReadWrite && !pending_.empty()) {
      warnings_.push_back("event store " + path_.string() + ": discarding torn final line (" +
                          std::to_string(pending_.size()) + " bytes)");
      if (::ftruncate(fd_, static_cast<off_t>(offset_)) != 0) {
        throw StoreError("cannot truncate torn line: " + std::string(std::strerror(errno)));
      }
      pending_.clear();
    }
  }

  EventStore(const EventStore&) = delete;
  EventStore& operator=(const EventStore&) = delete;

  ~EventStore() {
    if (fd_ >= 0) ::close(fd_);
  }

  const std::filesystem::path& path() const noexcept { return path_; }
  bool read_only() const noexcept { return mode_ == Mode::kReadOnly; }

  // Durable (flushed, and fsynced unless disabled) before returning.
  void append(const Event& e) {
    if (mode_ == Mode::kReadOnly) throw StoreError("event store is read-only");
    if (e.t_ms < 0) throw std::invalid_argument("event t_ms is negative");
    std::unique_lock lock(mu_);
    refresh_locked();
    if (auto it = last_t_.find(e.session); it != last_t_.end() && e.t_ms < it->second) {
      throw OrderingError("event t_ms " + std::to_string(e.t_ms) + " precedes " +
                          std::to_string(it->second) + " in session \"" + e.session + "\"");
    }
    const std::string line = serialize_event(e) + '\n';
    std::size_t written = 0;
    while (written < line.size()) {
      const ssize_t n = ::write(fd_, line.data() + written, line.size() - written);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw StoreError("event store write failed: " + std::string(std::strerror(errno)));
      }
      written += static_cast<std::size_t>(n);
    }
    if (sync_ && ::fsync(fd_) != 0) {
      throw StoreError("event store fsync failed: " + std::string(std::strerror(errno)));
    }
    refresh_locked();
  }

  Summary summary(const std::optional<std::string>& session = std::nullopt) {
    auto lock = fresh_snapshot();
    Summary s;
    for (const auto& e : events_) {
      if (session && e.session != *session) continue;
      (e.kind == EventKind::kYawn ? s.yawns : s.alarms) += 1;
    }
    return s;
  }

  // Events in append order, optionally filtered by kind, then sliced.
  std::vector<Event> list_events(std::optional<EventKind> kind = std::nullopt,
                                 std::optional<std::size_t> limit = std::nullopt,
                                 std::size_t offset = 0) {
    auto lock = fresh_snapshot();
    std::vector<Event> out;
    std::size_t seen = 0;
    for (const auto& e : events_) {
      if (kind && e.kind != *kind) continue;
      if (seen++ < offset) continue;
      if (limit && out.size() >= *limit) break;
      out.push_back(e);
    }
    return out;
  }

  std::size_t size() {
    auto lock = fresh_snapshot();
    return events_.size();
  }

  // Diagnostics collected while reading (torn or unparsable lines).
  std::vector<std::string> take_warnings() {
    std::unique_lock lock(mu_);
    return std::exchange(warnings_, {});
  }

 private:
  std::shared_lock<std::shared_mutex> fresh_snapshot() {
    {
      std::unique_lock lock(mu_);
      refresh_locked();
    }
    return std::shared_lock(mu_);
  }

  // Consumes complete lines appended since the last call.
  void refresh_locked() {
    std::error_code ec;
    const auto size = std::filesystem::file_size(path_, ec);
    if (ec) return;
    if (size < offset_) {
      throw StoreError("event store " + path_.string() + " shrank underneath the reader");
    }
    // A writer reopening the file cuts off the torn tail we were holding.
    if (size < offset_ + pending_.size()) pending_.clear();
    if (size == offset_ + pending_.size()) return;
    std::ifstream in(path_, std::ios::binary);
    in.seekg(static_cast<std::streamoff>(offset_ + pending_.size()));
    std::string chunk(static_cast<std::size_t>(size - offset_ - pending_.size()), '\0');
    in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
    chunk.resize(static_cast<std::size_t>(in.gcount()));
    std::string buf = std::move(pending_) + chunk;
    pending_.clear();
    std::size_t start = 0;
    for (;;) {
      const auto nl = buf.find('\n', start);
      if (nl == std::string::npos) break;
      ingest_line(std::string_view(buf).substr(start, nl - start), offset_);
      offset_ += nl - start + 1;
      start = nl + 1;
    }
    pending_ = buf.substr(start);
    if (!pending_.empty() && mode_ == Mode::kReadOnly && !warned_torn_) {
      warned_torn_ = true;
      warnings_.push_back("event store " + path_.string() +
                          ": incomplete final line skipped");
    }
  }

  void ingest_line(std::string_view line, std::uint64_t at) {
    if (line.empty()) return;
    try {
      Event e = parse_event(line);
      auto [it, inserted] = last_t_.try_emplace(e.session, e.t_ms);
      if (!inserted && e.t_ms > it->second) it->second = e.t_ms;
      events_.push_back(std::move(e));
    } catch (const std::exception& ex) {
      warnings_.push_back("event store " + path_.string() + ": skipping bad line at byte " +
                          std::to_string(at) + ": " + ex.what());
    }
  }

  std::filesystem::path path_;
  Mode mode_;
  bool sync_;
  int fd_ = -1;

  mutable std::shared_mutex mu_;
  std::vector<Event> events_;
  std::map<std::string, std::int64_t> last_t_;
  std::uint64_t offset_ = 0;
  std::string pending_;
  bool warned_torn_ = false;
  std::vector<std::string> warnings_;
};

}  // namespace drowse
