#include "drowse/classifier.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace drowse {
namespace {

FramePixels solid(int w, int h, std::uint8_t v) {
  return FramePixels{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3, v)};
}

FramePixels checkerboard(int size, int cell) {
  FramePixels f{size, size, std::vector<std::uint8_t>(static_cast<std::size_t>(size) * size * 3)};
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const bool on = ((x / cell) + (y / cell)) % 2 == 0;
      for (int c = 0; c < 3; ++c) {
        f.data[(static_cast<std::size_t>(y) * size + x) * 3 + c] =
            static_cast<std::uint8_t>(on ? 255 - 40 * c : 10 * c);
      }
    }
  }
  return f;
}

// Direct bilinear sample per output element, half-pixel centres, edge clamp.
double oracle_sample(const FramePixels& f, int oy, int ox, int c) {
  auto source = [](int o, int src) {
    double s = (o + 0.5) * static_cast<double>(src) / 224.0 - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(src - 1));
  };
  const double sy = source(oy, f.height);
  const double sx = source(ox, f.width);
  const int y0 = static_cast<int>(sy);
  const int x0 = static_cast<int>(sx);
  const int y1 = std::min(y0 + 1, f.height - 1);
  const int x1 = std::min(x0 + 1, f.width - 1);
  const double wy = sy - y0;
  const double wx = sx - x0;
  auto px = [&](int y, int x) { return static_cast<double>(f.data[(y * f.width + x) * 3 + c]); };
  const double v = px(y0, x0) * (1 - wy) * (1 - wx) + px(y0, x1) * (1 - wy) * wx +
                   px(y1, x0) * wy * (1 - wx) + px(y1, x1) * wy * wx;
  return v / 255.0;
}

TEST(Preprocess, ConstantWhiteImageIsAllOnes) {
  const PreprocessedFrame out = preprocess(solid(64, 64, 255));
  for (float v : out.values()) ASSERT_EQ(v, 1.0f);
}

TEST(Preprocess, ShapeIsFixed) {
  EXPECT_EQ(preprocess(solid(1, 1, 3)).values().size(), 224u * 224u * 3u);
  EXPECT_EQ(preprocess(solid(640, 480, 3)).values().size(), 224u * 224u * 3u);
  EXPECT_EQ(preprocess(solid(17, 300, 3)).values().size(), 224u * 224u * 3u);
}

TEST(Preprocess, RejectsBadFrames) {
  EXPECT_THROW(preprocess(FramePixels{0, 10, {}}), std::invalid_argument);
  EXPECT_THROW(preprocess(FramePixels{10, 0, {}}), std::invalid_argument);
  EXPECT_THROW(preprocess(FramePixels{2, 2, std::vector<std::uint8_t>(11)}),
               std::invalid_argument);
}

TEST(Preprocess, CheckerboardMatchesBilinearOracle) {
  for (int cell : {1, 3, 8}) {
    const FramePixels f = checkerboard(448, cell);
    const PreprocessedFrame out = preprocess(f);
    for (int y = 0; y < 224; ++y) {
      for (int x = 0; x < 224; ++x) {
        for (int c = 0; c < 3; ++c) {
          ASSERT_NEAR(out.at(y, x, c), oracle_sample(f, y, x, c), 1e-6)
              << "cell " << cell << " at " << y << "," << x << "," << c;
        }
      }
    }
  }
}

TEST(Preprocess, UpscaleMatchesOracle) {
  testing::Gen g(9);
  FramePixels f{37, 91, std::vector<std::uint8_t>(37 * 91 * 3)};
  for (auto& b : f.data) b = static_cast<std::uint8_t>(g.integer(0, 255));
  const PreprocessedFrame out = preprocess(f);
  for (int y = 0; y < 224; ++y) {
    for (int x = 0; x < 224; ++x) {
      for (int c = 0; c < 3; ++c) ASSERT_NEAR(out.at(y, x, c), oracle_sample(f, y, x, c), 1e-6);
    }
  }
}

TEST(Preprocess, IdentityAtModelSize) {
  testing::Gen g(10);
  FramePixels f{224, 224, std::vector<std::uint8_t>(224 * 224 * 3)};
  for (auto& b : f.data) b = static_cast<std::uint8_t>(g.integer(0, 255));
  const PreprocessedFrame out = preprocess(f);
  for (int y = 0; y < 224; ++y) {
    for (int x = 0; x < 224; ++x) {
      for (int c = 0; c < 3; ++c) {
        ASSERT_EQ(out.at(y, x, c), static_cast<float>(f.at(y, x, c) / 255.0));
      }
    }
  }
}

TEST(Probability, EnforcesUnitInterval) {
  EXPECT_NO_THROW(Probability(0.0));
  EXPECT_NO_THROW(Probability(1.0));
  EXPECT_THROW(Probability(-1e-12), std::out_of_range);
  EXPECT_THROW(Probability(1.0000001), std::out_of_range);
  EXPECT_THROW(Probability(std::nan("")), std::out_of_range);
}

TEST(ScriptedClassifier, EchoesRecordedProbability) {
  ScriptedClassifier c;
  FrameRecord r;
  r.probability = Probability(0.87);
  EXPECT_TRUE(c.accepts(r));
  EXPECT_EQ(c.classify(r).value(), 0.87);
}

TEST(ScriptedClassifier, MissingProbabilityNamesBackend) {
  ScriptedClassifier c;
  FrameRecord r;
  r.t_ms = 42;
  EXPECT_FALSE(c.accepts(r));
  try {
    c.classify(r);
    FAIL() << "expected ClassifierError";
  } catch (const ClassifierError& e) {
    EXPECT_NE(std::string(e.what()).find("scripted"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("42"), std::string::npos);
  }
  EXPECT_THROW(c.classify(PreprocessedFrame{}), ClassifierError);
}

TEST(ConstantClassifier, ReturnsConstantForEveryFrame) {
  ConstantClassifier c(Probability(0.0));
  testing::Gen g(11);
  for (int i = 0; i < 100; ++i) {
    FrameRecord r;
    r.t_ms = i;
    if (g.coin()) r.probability = Probability(g.uniform(0, 1));
    EXPECT_EQ(c.classify(r).value(), 0.0);
  }
  EXPECT_EQ(c.classify(PreprocessedFrame{}).value(), 0.0);
}

TEST(ClassifierConfig, ModelPathRequiredIffModelBackend) {
  ClassifierConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.model_path = "m.onnx";
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.backend = ClassifierBackend::kModel;
  EXPECT_NO_THROW(cfg.validate());
  cfg.model_path.reset();
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(MakeClassifier, BuildsEachBackend) {
  ClassifierConfig cfg;
  EXPECT_EQ(make_classifier(cfg)->backend_name(), "scripted");
  cfg.backend = ClassifierBackend::kConstant;
  cfg.constant_value = Probability(0.25);
  auto c = make_classifier(cfg);
  EXPECT_EQ(c->backend_name(), "constant");
  EXPECT_EQ(c->classify(FrameRecord{}).value(), 0.25);
  cfg.backend = ClassifierBackend::kModel;
  cfg.model_path = "x.onnx";
  EXPECT_THROW(make_classifier(cfg), ClassifierError);
  bool called = false;
  auto factory = [&called](const std::filesystem::path& model, const std::filesystem::path& root)
      -> std::unique_ptr<Classifier> {
    called = true;
    EXPECT_EQ(model, "x.onnx");
    EXPECT_EQ(root, "imgs");
    return std::make_unique<ConstantClassifier>(Probability(1.0));
  };
  EXPECT_EQ(make_classifier(cfg, factory, "imgs")->classify(FrameRecord{}).value(), 1.0);
  EXPECT_TRUE(called);
}

TEST(ClassifierBackend, NamesRoundTrip) {
  for (auto b : {ClassifierBackend::kScripted, ClassifierBackend::kConstant,
                 ClassifierBackend::kModel}) {
    EXPECT_EQ(parse_classifier_backend(to_string(b)), b);
  }
  EXPECT_FALSE(parse_classifier_backend("onnx"));
}

}  // namespace
}  // namespace drowse
