#pragma once

// Reading and writing frame-record streams (one record per line).

#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "drowse/record.hpp"

namespace drowse {

// Validates lines one at a time: record syntax plus non-decreasing t_ms.
class StreamValidator {
 public:
  // Returns nullopt for blank lines.
  std::optional<FrameRecord> accept(std::string_view line) {
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) return std::nullopt;
    FrameRecord r = parse_record(line, line_no_);
    if (last_t_ms_ && r.t_ms < *last_t_ms_) {
      throw StreamError(line_no_, "timestamp regression: t_ms " + std::to_string(r.t_ms) +
                                      " after " + std::to_string(*last_t_ms_));
    }
    last_t_ms_ = r.t_ms;
    return r;
  }

  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_ = 0;
  std::optional<std::int64_t> last_t_ms_;
};

inline std::vector<FrameRecord> read_stream(std::istream& in) {
  std::vector<FrameRecord> records;
  StreamValidator validator;
  std::string line;
  while (std::getline(in, line)) {
    if (auto r = validator.accept(line)) records.push_back(std::move(*r));
  }
  return records;
}

inline std::vector<FrameRecord> read_stream(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open stream file " + path.string());
  return read_stream(in);
}

inline void write_stream(std::ostream& out, std::span<const FrameRecord> records) {
  for (const auto& r : records) {
    out << serialize_record(r) << '\n';
  }
}

inline void write_stream(const std::filesystem::path& path,
                         std::span<const FrameRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot create stream file " + path.string());
  write_stream(out, records);
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace drowse
