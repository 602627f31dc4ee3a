#pragma once

// Whole-pipeline configuration, stored as one JSON document. Missing keys
// take their defaults; unknown keys are rejected so typos do not pass
// silently. Writing always materializes every field.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "drowse/classifier.hpp"
#include "drowse/fusion.hpp"
#include "drowse/geometry.hpp"

namespace drowse {

struct DashboardConfig {
  std::string bind_address = "127.0.0.1:8080";
  std::filesystem::path store_path = "events.jsonl";
  bool read_only = false;
  friend bool operator==(const DashboardConfig&, const DashboardConfig&) = default;
};

struct PipelineConfig {
  FusionConfig fusion;
  ClassifierConfig classifier;
  EyeSpec left_eye = EyeSpec::default_left();
  EyeSpec right_eye = EyeSpec::default_right();
  MouthSpec mouth = MouthSpec::default_mouth();
  std::size_t buffer_size = 64;
  std::filesystem::path store_path = "events.jsonl";
  std::int64_t staleness_frames = 2;
  std::string session = "replay";
  // Replay stamps event wall times as this epoch (ms since 1970) + t_ms.
  std::int64_t replay_epoch_ms = 0;
  // Shell command run for each live alarm; {t_ms} and {session} expand.
  // Empty prints a line to standard error instead.
  std::string alarm_hook;
  std::string bind_address = "127.0.0.1:8080";
  bool read_only = false;

  void validate() const {
    fusion.validate();
    classifier.validate();
    if (buffer_size < 1) throw std::invalid_argument("buffer_size must be >= 1");
    if (staleness_frames < 0) throw std::invalid_argument("staleness_frames must be >= 0");
  }

  DashboardConfig dashboard() const { return {bind_address, store_path, read_only}; }

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                           const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw std::invalid_argument("config: unknown key \"" + key + "\" in " + where);
  }
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

}  // namespace detail

inline nlohmann::json config_to_json(const PipelineConfig& c) {
  using nlohmann::json;
  json j;
  j["fusion"] = {
      {"ear_close_threshold", c.fusion.ear_close_threshold},
      {"mar_yawn_threshold", c.fusion.mar_yawn_threshold},
      {"cnn_threshold", c.fusion.cnn_threshold},
      {"alarm_frame_threshold", c.fusion.alarm_frame_threshold},
      {"yawn_min_frames", c.fusion.yawn_min_frames},
      {"policy", to_string(c.fusion.policy)},
  };
  j["classifier"] = {
      {"backend", to_string(c.classifier.backend)},
      {"constant_value", c.classifier.constant_value.value()},
      {"model_path", c.classifier.model_path ? json(c.classifier.model_path->string()) : json()},
  };
  j["landmarks"] = {
      {"left_eye", c.left_eye.indices()},
      {"right_eye", c.right_eye.indices()},
      {"mouth", c.mouth.indices()},
  };
  j["ingest"] = {{"buffer_size", c.buffer_size}};
  j["store_path"] = c.store_path.string();
  j["session"] = c.session;
  j["replay_epoch_ms"] = c.replay_epoch_ms;
  j["live"] = {{"staleness_frames", c.staleness_frames}, {"alarm_hook", c.alarm_hook}};
  j["dashboard"] = {{"bind", c.bind_address}, {"read_only", c.read_only}};
  return j;
}

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  detail::reject_unknown(j, {"fusion", "classifier", "landmarks", "ingest", "store_path",
                             "session", "replay_epoch_ms", "live", "dashboard"},
                         "top level");
  PipelineConfig c;
  try {
    if (auto f = j.find("fusion"); f != j.end()) {
      detail::reject_unknown(*f, {"ear_close_threshold", "mar_yawn_threshold", "cnn_threshold",
                                  "alarm_frame_threshold", "yawn_min_frames", "policy"},
                             "fusion");
      detail::read_opt(*f, "ear_close_threshold", c.fusion.ear_close_threshold);
      detail::read_opt(*f, "mar_yawn_threshold", c.fusion.mar_yawn_threshold);
      detail::read_opt(*f, "cnn_threshold", c.fusion.cnn_threshold);
      detail::read_opt(*f, "alarm_frame_threshold", c.fusion.alarm_frame_threshold);
      detail::read_opt(*f, "yawn_min_frames", c.fusion.yawn_min_frames);
      if (auto p = f->find("policy"); p != f->end()) {
        const auto policy = parse_fusion_policy(p->get<std::string>());
        if (!policy) throw std::invalid_argument("config: unknown fusion policy " + p->dump());
        c.fusion.policy = *policy;
      }
    }
    if (auto cl = j.find("classifier"); cl != j.end()) {
      detail::reject_unknown(*cl, {"backend", "constant_value", "model_path"}, "classifier");
      if (auto b = cl->find("backend"); b != cl->end()) {
        const auto backend = parse_classifier_backend(b->get<std::string>());
        if (!backend) throw std::invalid_argument("config: unknown classifier backend " + b->dump());
        c.classifier.backend = *backend;
      }
      if (auto v = cl->find("constant_value"); v != cl->end()) {
        c.classifier.constant_value = Probability(v->get<double>());
      }
      if (auto m = cl->find("model_path"); m != cl->end() && !m->is_null()) {
        c.classifier.model_path = std::filesystem::path(m->get<std::string>());
      }
    }
    if (auto l = j.find("landmarks"); l != j.end()) {
      detail::reject_unknown(*l, {"left_eye", "right_eye", "mouth"}, "landmarks");
      if (auto e = l->find("left_eye"); e != l->end()) c.left_eye = EyeSpec(e->get<std::array<int, 6>>());
      if (auto e = l->find("right_eye"); e != l->end()) c.right_eye = EyeSpec(e->get<std::array<int, 6>>());
      if (auto m = l->find("mouth"); m != l->end()) c.mouth = MouthSpec(m->get<std::array<int, 8>>());
    }
    if (auto in = j.find("ingest"); in != j.end()) {
      detail::reject_unknown(*in, {"buffer_size"}, "ingest");
      detail::read_opt(*in, "buffer_size", c.buffer_size);
    }
    if (auto s = j.find("store_path"); s != j.end()) c.store_path = s->get<std::string>();
    detail::read_opt(j, "session", c.session);
    detail::read_opt(j, "replay_epoch_ms", c.replay_epoch_ms);
    if (auto lv = j.find("live"); lv != j.end()) {
      detail::reject_unknown(*lv, {"staleness_frames", "alarm_hook"}, "live");
      detail::read_opt(*lv, "staleness_frames", c.staleness_frames);
      detail::read_opt(*lv, "alarm_hook", c.alarm_hook);
    }
    if (auto d = j.find("dashboard"); d != j.end()) {
      detail::reject_unknown(*d, {"bind", "read_only"}, "dashboard");
      detail::read_opt(*d, "bind", c.bind_address);
      detail::read_opt(*d, "read_only", c.read_only);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

inline void save_config(const PipelineConfig& c, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write config " + path.string());
  out << config_to_json(c).dump(2) << '\n';
}

// Loads `path`, or writes the defaults there first if it does not exist.
inline PipelineConfig load_or_create_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    PipelineConfig defaults;
    save_config(defaults, path);
    return defaults;
  }
  return load_config(path);
}

}  // namespace drowse
