#pragma once

// Frame records read from an external landmark-detector process. The
// process writes stream-format lines to its standard output, one per frame.

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "drowse/stream.hpp"

extern char** environ;

namespace drowse {

class SpawnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LiveSource {
 public:
  // Runs `command` through /bin/sh.
  explicit LiveSource(const std::string& command) : command_(command) {
    int fds[2];
    if (::pipe(fds) != 0) throw SpawnError("pipe: " + std::string(std::strerror(errno)));
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);
    posix_spawn_file_actions_addclose(&actions, fds[0]);
    posix_spawn_file_actions_addclose(&actions, fds[1]);
    const char* argv[] = {"sh", "-c", command_.c_str(), nullptr};
    const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, nullptr,
                                 const_cast<char* const*>(argv), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(fds[1]);
    if (rc != 0) {
      ::close(fds[0]);
      throw SpawnError("cannot start detector \"" + command_ + "\": " + std::strerror(rc));
    }
    out_ = ::fdopen(fds[0], "r");
    if (out_ == nullptr) {
      ::close(fds[0]);
      terminate();
      throw SpawnError("fdopen: " + std::string(std::strerror(errno)));
    }
  }

  LiveSource(const LiveSource&) = delete;
  LiveSource& operator=(const LiveSource&) = delete;

  ~LiveSource() {
    if (out_ != nullptr) std::fclose(out_);
    terminate();
  }

  // Next record, or nullopt at end of stream. A protocol violation ends the
  // stream; protocol_error() then holds the offending line.
  std::optional<FrameRecord> next() {
    while (!done_) {
      std::optional<std::string> line = read_line();
      if (!line) {
        finish();
        return std::nullopt;
      }
      try {
        if (auto r = validator_.accept(*line)) return r;
      } catch (const StreamError& e) {
        protocol_error_ = std::string(e.what()) + " [" + *line + "]";
        diagnostics_.push_back("detector protocol violation, stream ended: " + *protocol_error_);
        terminate();
        done_ = true;
      }
    }
    return std::nullopt;
  }

  const std::optional<std::string>& protocol_error() const noexcept { return protocol_error_; }
  const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }
  std::optional<int> exit_status() const noexcept { return exit_status_; }

 private:
  std::optional<std::string> read_line() {
    std::string line;
    int c;
    while ((c = std::fgetc(out_)) != EOF) {
      if (c == '\n') return line;
      line.push_back(static_cast<char>(c));
    }
    if (!line.empty()) return line;
    return std::nullopt;
  }

  void finish() {
    done_ = true;
    reap(false);
    if (exit_status_ && *exit_status_ != 0) {
      diagnostics_.push_back("detector \"" + command_ + "\" exited with status " +
                             std::to_string(*exit_status_));
    }
    if (validator_.line_no() == 0) {
      diagnostics_.push_back("detector \"" + command_ + "\" produced no frames");
    }
  }

  void terminate() {
    if (pid_ > 0) {
      ::kill(pid_, SIGTERM);
      reap(true);
    }
  }

  void reap(bool killed) {
    if (pid_ <= 0) return;
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
    if (!killed) {
      exit_status_ = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    }
    pid_ = -1;
  }

  std::string command_;
  pid_t pid_ = -1;
  std::FILE* out_ = nullptr;
  StreamValidator validator_;
  bool done_ = false;
  std::optional<std::string> protocol_error_;
  std::optional<int> exit_status_;
  std::vector<std::string> diagnostics_;
};

struct LiveCapture {
  std::vector<FrameRecord> records;
  std::optional<std::string> protocol_error;
  std::vector<std::string> diagnostics;
};

// Drains a detector process completely.
inline LiveCapture live_source(const std::string& command) {
  LiveSource src(command);
  LiveCapture cap;
  while (auto r = src.next()) cap.records.push_back(std::move(*r));
  cap.protocol_error = src.protocol_error();
  cap.diagnostics = src.diagnostics();
  return cap;
}

}  // namespace drowse
