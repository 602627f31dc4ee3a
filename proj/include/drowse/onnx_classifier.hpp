#pragma once

// Model backend: runs an exported ONNX classifier through OpenCV's DNN
// module. The model takes "input" as float32 [1, 224, 224, 3] in [0, 1] and
// produces "prob" as [1, 1].
//
// Requires linking opencv_core, opencv_dnn, opencv_imgcodecs.

#include <filesystem>
#include <memory>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>
#include <opencv2/imgcodecs.hpp>

#include "drowse/classifier.hpp"

namespace drowse {

inline constexpr const char* kModelInputName = "input";
inline constexpr const char* kModelOutputName = "prob";

// Loads an image file as RGB pixels.
inline FramePixels load_image_rgb(const std::filesystem::path& path) {
  const cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw std::runtime_error("cannot decode image " + path.string());
  FramePixels px;
  px.width = bgr.cols;
  px.height = bgr.rows;
  px.data.resize(static_cast<std::size_t>(px.width) * px.height * kChannels);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      const std::size_t o = (static_cast<std::size_t>(y) * px.width + x) * kChannels;
      px.data[o + 0] = row[x][2];
      px.data[o + 1] = row[x][1];
      px.data[o + 2] = row[x][0];
    }
  }
  return px;
}

class OnnxClassifier final : public Classifier {
 public:
  // image_root resolves the relative image_ref paths carried by records.
  explicit OnnxClassifier(const std::filesystem::path& model_path,
                          std::filesystem::path image_root = {})
      : image_root_(std::move(image_root)) {
    if (!std::filesystem::is_regular_file(model_path)) {
      throw ClassifierError(backend_name(), "model file " + model_path.string() +
                                                " is missing or not a regular file");
    }
    try {
      net_ = cv::dnn::readNetFromONNX(model_path.string());
    } catch (const cv::Exception& e) {
      throw ClassifierError(backend_name(), "cannot load " + model_path.string() + ": " + e.what());
    }
    if (net_.empty()) {
      throw ClassifierError(backend_name(), "empty network in " + model_path.string());
    }
    net_.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
    net_.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);
  }

  std::string_view backend_name() const noexcept override { return "model"; }

  bool accepts(const FrameRecord& record) const noexcept override {
    return record.image_ref.has_value();
  }

  Probability classify(const FrameRecord& record) override {
    if (!record.image_ref) {
      throw ClassifierError(backend_name(), "frame at t_ms " + std::to_string(record.t_ms) +
                                                " has no img field");
    }
    const std::filesystem::path path = image_root_ / *record.image_ref;
    FramePixels px;
    try {
      px = load_image_rgb(path);
    } catch (const std::exception& e) {
      throw ClassifierError(backend_name(), e.what());
    }
    return classify(preprocess(px));
  }

  Probability classify(const PreprocessedFrame& frame) override {
    const int dims[] = {1, kModelInputSize, kModelInputSize, kChannels};
    cv::Mat blob(4, dims, CV_32F);
    const auto values = frame.values();
    std::copy(values.begin(), values.end(), blob.ptr<float>());
    cv::Mat out;
    try {
      net_.setInput(blob, kModelInputName);
      out = net_.forward(kModelOutputName);
    } catch (const cv::Exception& e) {
      throw ClassifierError(backend_name(), std::string("inference failed: ") + e.what());
    }
    if (out.total() != 1) {
      throw ClassifierError(backend_name(), "output \"prob\" has " + std::to_string(out.total()) +
                                                " elements, expected 1");
    }
    const double p = static_cast<double>(out.ptr<float>()[0]);
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ClassifierError(backend_name(), "output " + std::to_string(p) + " outside [0, 1]");
    }
    return Probability(p);
  }

 private:
  cv::dnn::Net net_;
  std::filesystem::path image_root_;
};

inline ModelClassifierFactory onnx_classifier_factory() {
  return [](const std::filesystem::path& model_path, const std::filesystem::path& image_root)
             -> std::unique_ptr<Classifier> {
    return std::make_unique<OnnxClassifier>(model_path, image_root);
  };
}

}  // namespace drowse
