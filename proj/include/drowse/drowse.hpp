#pragma once

// Umbrella header. The ONNX model backend lives separately in
// drowse/onnx_classifier.hpp because it pulls in OpenCV.

#include "drowse/activation.hpp"
#include "drowse/bounded_queue.hpp"
#include "drowse/classifier.hpp"
#include "drowse/config.hpp"
#include "drowse/dashboard.hpp"
#include "drowse/fusion.hpp"
#include "drowse/geometry.hpp"
#include "drowse/live_source.hpp"
#include "drowse/metrics.hpp"
#include "drowse/pipeline.hpp"
#include "drowse/probability.hpp"
#include "drowse/record.hpp"
#include "drowse/store.hpp"
#include "drowse/stream.hpp"
#include "drowse/synth.hpp"
#include "drowse/text_format.hpp"
