#pragma once

// The per-frame sleepiness probability, behind a pluggable backend, and the
// image preprocessing shared with the model backend.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "drowse/probability.hpp"
#include "drowse/record.hpp"

namespace drowse {

inline constexpr int kModelInputSize = 224;
inline constexpr int kChannels = 3;

// Row-major interleaved RGB, 3 bytes per pixel.
struct FramePixels {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  void validate() const {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("frame has a zero dimension (" + std::to_string(width) +
                                  "x" + std::to_string(height) + ")");
    }
    const auto expected = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                          kChannels;
    if (data.size() != expected) {
      throw std::invalid_argument("frame data has " + std::to_string(data.size()) +
                                  " bytes, expected " + std::to_string(expected));
    }
  }
  std::uint8_t at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                 static_cast<std::size_t>(x)) * kChannels + static_cast<std::size_t>(c)];
  }
};

// 224 x 224 x 3 (HWC) values in [0, 1], the model's input layout.
class PreprocessedFrame {
 public:
  static constexpr std::size_t kSize =
      static_cast<std::size_t>(kModelInputSize) * kModelInputSize * kChannels;

  PreprocessedFrame() : values_(kSize, 0.0f) {}

  float at(int y, int x, int c) const { return values_[index(y, x, c)]; }
  float& at(int y, int x, int c) { return values_[index(y, x, c)]; }
  std::span<const float> values() const noexcept { return values_; }

 private:
  static std::size_t index(int y, int x, int c) {
    return (static_cast<std::size_t>(y) * kModelInputSize + static_cast<std::size_t>(x)) *
               kChannels + static_cast<std::size_t>(c);
  }
  std::vector<float> values_;
};

namespace detail {

// Half-pixel-centre sampling positions, clamped to the source edges.
struct LinearTap {
  int lo = 0;
  int hi = 0;
  double frac = 0.0;
};

inline std::vector<LinearTap> linear_taps(int src, int dst) {
  std::vector<LinearTap> taps(static_cast<std::size_t>(dst));
  const double scale = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    double s = (i + 0.5) * scale - 0.5;
    if (s < 0.0) s = 0.0;
    int lo = static_cast<int>(std::floor(s));
    if (lo > src - 1) lo = src - 1;
    const int hi = lo + 1 < src ? lo + 1 : src - 1;
    taps[static_cast<std::size_t>(i)] = {lo, hi, hi == lo ? 0.0 : s - lo};
  }
  return taps;
}

}  // namespace detail

// Bilinear resize to 224 x 224, then scale bytes by 1/255.
inline PreprocessedFrame preprocess(const FramePixels& frame) {
  frame.validate();
  const auto xs = detail::linear_taps(frame.width, kModelInputSize);
  const auto ys = detail::linear_taps(frame.height, kModelInputSize);
  PreprocessedFrame out;
  for (int y = 0; y < kModelInputSize; ++y) {
    const auto& ty = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < kModelInputSize; ++x) {
      const auto& tx = xs[static_cast<std::size_t>(x)];
      for (int c = 0; c < kChannels; ++c) {
        const double top = frame.at(ty.lo, tx.lo, c) * (1.0 - tx.frac) +
                           frame.at(ty.lo, tx.hi, c) * tx.frac;
        const double bottom = frame.at(ty.hi, tx.lo, c) * (1.0 - tx.frac) +
                              frame.at(ty.hi, tx.hi, c) * tx.frac;
        const double v = (top * (1.0 - ty.frac) + bottom * ty.frac) / 255.0;
        out.at(y, x, c) = static_cast<float>(v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v));
      }
    }
  }
  return out;
}

enum class ClassifierBackend : std::uint8_t { kScripted, kConstant, kModel };

inline std::string_view to_string(ClassifierBackend b) noexcept {
  switch (b) {
    case ClassifierBackend::kScripted: return "scripted";
    case ClassifierBackend::kConstant: return "constant";
    case ClassifierBackend::kModel: return "model";
  }
  return "unknown";
}

inline std::optional<ClassifierBackend> parse_classifier_backend(std::string_view s) noexcept {
  if (s == "scripted") return ClassifierBackend::kScripted;
  if (s == "constant") return ClassifierBackend::kConstant;
  if (s == "model") return ClassifierBackend::kModel;
  return std::nullopt;
}

struct ClassifierConfig {
  ClassifierBackend backend = ClassifierBackend::kScripted;
  Probability constant_value{0.0};
  std::optional<std::filesystem::path> model_path;

  void validate() const {
    if (backend == ClassifierBackend::kModel && !model_path) {
      throw std::invalid_argument("classifier backend \"model\" needs model_path");
    }
    if (backend != ClassifierBackend::kModel && model_path) {
      throw std::invalid_argument("model_path is only valid with backend \"model\"");
    }
  }
  friend bool operator==(const ClassifierConfig&, const ClassifierConfig&) = default;
};

// Failure reported by a backend; the message leads with the backend name.
class ClassifierError : public std::runtime_error {
 public:
  ClassifierError(std::string_view backend, const std::string& what)
      : std::runtime_error(std::string(backend) + " classifier: " + what) {}
};

// One instance is driven by one thread at a time.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::string_view backend_name() const noexcept = 0;

  // Whether this record carries what the backend consumes. The pipeline
  // treats the probability as absent for frames where this is false.
  virtual bool accepts(const FrameRecord& record) const noexcept = 0;

  virtual Probability classify(const FrameRecord& record) = 0;
  virtual Probability classify(const PreprocessedFrame& frame) = 0;
};

// Echoes the probability recorded in the stream.
class ScriptedClassifier final : public Classifier {
 public:
  std::string_view backend_name() const noexcept override { return "scripted"; }
  bool accepts(const FrameRecord& record) const noexcept override {
    return record.probability.has_value();
  }
  Probability classify(const FrameRecord& record) override {
    if (!record.probability) {
      throw ClassifierError(backend_name(), "frame at t_ms " + std::to_string(record.t_ms) +
                                                " has no prob field");
    }
    return *record.probability;
  }
  Probability classify(const PreprocessedFrame&) override {
    throw ClassifierError(backend_name(), "needs a frame record, not pixels");
  }
};

class ConstantClassifier final : public Classifier {
 public:
  explicit ConstantClassifier(Probability value) : value_(value) {}
  std::string_view backend_name() const noexcept override { return "constant"; }
  bool accepts(const FrameRecord&) const noexcept override { return true; }
  Probability classify(const FrameRecord&) override { return value_; }
  Probability classify(const PreprocessedFrame&) override { return value_; }

 private:
  Probability value_;
};

// Builds the model backend; supplied by code that links an inference engine.
using ModelClassifierFactory =
    std::function<std::unique_ptr<Classifier>(const std::filesystem::path& model_path,
                                              const std::filesystem::path& image_root)>;

inline std::unique_ptr<Classifier> make_classifier(const ClassifierConfig& cfg,
                                                   const ModelClassifierFactory& model_factory = {},
                                                   const std::filesystem::path& image_root = {}) {
  cfg.validate();
  switch (cfg.backend) {
    case ClassifierBackend::kScripted: return std::make_unique<ScriptedClassifier>();
    case ClassifierBackend::kConstant:
      return std::make_unique<ConstantClassifier>(cfg.constant_value);
    case ClassifierBackend::kModel:
      if (!model_factory) {
        throw ClassifierError("model", "this build has no inference engine");
      }
      return model_factory(*cfg.model_path, image_root);
  }
  throw std::logic_error("unhandled classifier backend");
}

}  // namespace drowse
