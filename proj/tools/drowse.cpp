// drowse: command-line front end for the drowsiness pipeline.
//
//   drowse replay  --stream s.jsonl [--config c.json] [--out events.jsonl]
//   drowse synth   scenario.json --seed 7 --out s.jsonl
//   drowse serve   [--config c.json] [--bind host:port] [--store e.jsonl] [--read-only]
//   drowse eval    --stream s.jsonl --events e.jsonl [--config c.json]
//   drowse run     --detector "cmd ..." [--config c.json] [--store e.jsonl]
//   drowse config  --out c.json
//
// Exit codes: 0 success, 1 input error, 2 runtime failure.

#include <signal.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "drowse/drowse.hpp"

#ifdef DROWSE_WITH_ONNX
#include "drowse/onnx_classifier.hpp"
#endif

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitRuntime = 2;

// Problems with what the user handed us, as opposed to failures while running.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

drowse::ModelClassifierFactory model_factory() {
#ifdef DROWSE_WITH_ONNX
  return drowse::onnx_classifier_factory();
#else
  return {};
#endif
}

struct CommonOptions {
  std::string config_path;
  std::string store_path;
  std::string out_path;
  std::string report_path;
  std::string session;
};

drowse::PipelineConfig resolve_config(const CommonOptions& opts) {
  drowse::PipelineConfig cfg;
  try {
    if (!opts.config_path.empty()) cfg = drowse::load_or_create_config(opts.config_path);
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
  if (!opts.store_path.empty()) cfg.store_path = opts.store_path;
  if (!opts.session.empty()) cfg.session = opts.session;
  return cfg;
}

void write_report(const std::string& path, const nlohmann::json& j) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write report " + path);
  out << j.dump(2) << '\n';
}

std::vector<drowse::FrameRecord> load_stream(const std::string& path) {
  try {
    return drowse::read_stream(std::filesystem::path(path));
  } catch (const std::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

int cmd_replay(const CommonOptions& opts, const std::string& stream_path) {
  const drowse::PipelineConfig cfg = resolve_config(opts);
  // Validate the stream before the event file is touched.
  load_stream(stream_path);
  const bool to_out = !opts.out_path.empty();
  const std::filesystem::path events = to_out ? std::filesystem::path(opts.out_path) : cfg.store_path;
  drowse::ReplayOptions ro;
  ro.truncate_output = to_out;
  ro.model_factory = model_factory();
  const drowse::RunReport report = drowse::replay_file(stream_path, cfg, events, ro, std::cerr);
  std::cout << report.to_text();
  write_report(opts.report_path, report.to_json());
  return report.lost_events == 0 ? kExitOk : kExitRuntime;
}

int cmd_synth(const std::string& spec_path, std::uint64_t seed, const std::string& out_path) {
  drowse::ScenarioSpec spec;
  try {
    std::ifstream in(spec_path);
    if (!in) throw std::runtime_error("cannot open scenario " + spec_path);
    spec = drowse::scenario_from_json(nlohmann::json::parse(in));
  } catch (const std::exception& e) {
    throw InputError(spec_path + ": " + e.what());
  }
  const auto records = drowse::synth_sequence(spec, seed);
  drowse::write_stream(std::filesystem::path(out_path), records);
  std::cout << "wrote " << records.size() << " frames to " << out_path << '\n';
  return kExitOk;
}

int cmd_serve(const CommonOptions& opts, const std::string& bind, bool read_only) {
  drowse::PipelineConfig cfg = resolve_config(opts);
  if (!bind.empty()) cfg.bind_address = bind;
  if (read_only) cfg.read_only = true;
  drowse::DashboardConfig dc = cfg.dashboard();
  try {
    drowse::parse_bind_address(dc.bind_address);
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }

  // Handle SIGINT/SIGTERM synchronously; block them before any thread starts.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  drowse::Dashboard dashboard(dc);
  for (const auto& w : dashboard.store().take_warnings()) std::cerr << w << '\n';
  const int port = dashboard.start();
  const auto host = drowse::parse_bind_address(dc.bind_address).first;
  std::cout << "serving " << dc.store_path.string() << " on http://" << host << ':' << port
            << (dc.read_only ? " (read-only)" : "") << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  dashboard.stop();
  std::cout << "stopped" << std::endl;
  return kExitOk;
}

int cmd_eval(const CommonOptions& opts, const std::string& stream_path,
             const std::string& events_path) {
  const drowse::PipelineConfig cfg = resolve_config(opts);
  const auto records = load_stream(stream_path);
  std::vector<drowse::Label> truth;
  try {
    truth = drowse::labels_of(records);
  } catch (const std::exception& e) {
    throw InputError(stream_path + ": unlabeled stream: " + e.what());
  }
  if (!std::filesystem::exists(events_path)) throw InputError("no event file " + events_path);
  drowse::EventStore store(events_path, drowse::EventStore::Mode::kReadOnly);
  for (const auto& w : store.take_warnings()) std::cerr << w << '\n';
  std::vector<std::int64_t> alarm_times;
  for (const auto& e : store.list_events(drowse::EventKind::kAlarm)) {
    if (opts.session.empty() || e.session == opts.session) alarm_times.push_back(e.t_ms);
  }

  const drowse::RunEvaluation ev =
      drowse::evaluate_run(alarm_times, records, cfg.fusion.alarm_frame_threshold);
  nlohmann::json report = {{"true_alarm_rate", ev.true_alarm_rate},
                           {"false_positive_rate", ev.false_positive_rate},
                           {"episodes", ev.episodes},
                           {"episodes_alarmed", ev.episodes_alarmed},
                           {"alarms", ev.alarms},
                           {"false_alarms", ev.false_alarms},
                           {"unmatched_alarms", ev.unmatched_alarms}};
  std::cout << "episodes:          " << ev.episodes << '\n'
            << "episodes alarmed:  " << ev.episodes_alarmed << '\n'
            << "alarms:            " << ev.alarms << " (" << ev.false_alarms << " in awake frames)\n"
            << "true alarm rate:   " << ev.true_alarm_rate << '\n'
            << "false positive rate: " << ev.false_positive_rate << '\n';

  if (!records.empty()) {
    auto classifier = drowse::make_classifier(cfg.classifier, model_factory(),
                                              std::filesystem::path(stream_path).parent_path());
    const auto outputs = drowse::predict_frames(records, cfg, *classifier);
    std::vector<drowse::Label> predicted;
    predicted.reserve(outputs.size());
    for (const auto& o : outputs) {
      predicted.push_back(o.sleepy_frame ? drowse::Label::kSleepy : drowse::Label::kAwake);
    }
    const drowse::ConfusionMatrix m = drowse::confusion(predicted, truth);
    const double acc = drowse::accuracy(m);
    report["confusion"] = {{"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn}};
    report["frame_accuracy"] = acc;
    std::cout << "per-frame confusion: tp=" << m.tp << " fp=" << m.fp << " fn=" << m.fn
              << " tn=" << m.tn << '\n'
              << "per-frame accuracy:  " << acc << '\n';
  }
  write_report(opts.report_path, report);
  return kExitOk;
}

int cmd_run(const CommonOptions& opts, const std::string& detector) {
  drowse::PipelineConfig cfg = resolve_config(opts);
  if (opts.session.empty()) {
    cfg.session = "live-" + drowse::text::iso8601_now();
  }
  auto classifier = drowse::make_classifier(cfg.classifier, model_factory());
  drowse::EventStore store(cfg.store_path);
  for (const auto& w : store.take_warnings()) std::cerr << w << '\n';
  drowse::LiveSource source(detector);
  const drowse::RunReport report = drowse::run_live([&source] { return source.next(); }, cfg,
                                                    std::move(classifier), store, std::cerr);
  for (const auto& d : source.diagnostics()) std::cerr << d << '\n';
  std::cout << report.to_text();
  write_report(opts.report_path, report.to_json());
  if (source.exit_status() && (*source.exit_status() == 126 || *source.exit_status() == 127) &&
      report.frames == 0) {
    std::cerr << "detector could not be started\n";
    return kExitRuntime;
  }
  if (source.protocol_error() || report.lost_events > 0) return kExitRuntime;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Drowsiness detection pipeline: replay, synthesize, serve, evaluate, run live"};
  app.require_subcommand(1);

  CommonOptions opts;
  auto add_config = [&opts](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path,
                    "Pipeline config (JSON); written with defaults if missing");
  };

  std::string stream_path;
  auto* replay = app.add_subcommand("replay", "Replay a recorded stream through the pipeline");
  replay->add_option("--stream,stream", stream_path, "Frame stream file")->required();
  add_config(replay);
  replay->add_option("--out", opts.out_path, "Event file for this run (overwritten)");
  replay->add_option("--store", opts.store_path, "Event store to append to when --out is absent");
  replay->add_option("--report", opts.report_path, "Write the run report as JSON");
  replay->add_option("--session", opts.session, "Session id stamped on events");

  std::string spec_path;
  std::uint64_t seed = 0;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic stream from a scenario");
  synth->add_option("spec", spec_path, "Scenario file (JSON)")->required();
  synth->add_option("--seed", seed, "Jitter seed");
  synth->add_option("--out", opts.out_path, "Output stream file")->required();

  std::string bind;
  bool read_only = false;
  auto* serve = app.add_subcommand("serve", "Serve the dashboard");
  add_config(serve);
  serve->add_option("--bind", bind, "host:port (port 0 picks a free port)");
  serve->add_option("--store", opts.store_path, "Event store file");
  serve->add_flag("--read-only", read_only, "Reject writes");

  std::string events_path;
  auto* eval = app.add_subcommand("eval", "Evaluate an alarm log against a labeled stream");
  eval->add_option("--stream,stream", stream_path, "Labeled stream file")->required();
  eval->add_option("--events,events", events_path, "Event file")->required();
  add_config(eval);
  eval->add_option("--session", opts.session, "Only count alarms from this session");
  eval->add_option("--report", opts.report_path, "Write the evaluation as JSON");

  std::string detector;
  auto* run = app.add_subcommand("run", "Run live from an external landmark detector");
  run->add_option("--detector", detector, "Detector command writing stream lines to stdout")
      ->required();
  add_config(run);
  run->add_option("--store", opts.store_path, "Event store file");
  run->add_option("--session", opts.session, "Session id (default: live-<start time>)");
  run->add_option("--report", opts.report_path, "Write the run report as JSON");

  auto* config = app.add_subcommand("config", "Write a config file with every default");
  config->add_option("--out", opts.out_path, "Config file to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*replay) return cmd_replay(opts, stream_path);
    if (*synth) return cmd_synth(spec_path, seed, opts.out_path);
    if (*serve) return cmd_serve(opts, bind, read_only);
    if (*eval) return cmd_eval(opts, stream_path, events_path);
    if (*run) return cmd_run(opts, detector);
    if (*config) {
      drowse::save_config(drowse::PipelineConfig{}, opts.out_path);
      return kExitOk;
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitInput;
}
