#pragma once

// HTTP dashboard over an event store.
//
//   GET  /                 HTML page: totals and the yawn and alarm tables
//   GET  /api/summary      {"yawns": n, "alarms": n}
//   GET  /api/events       ?kind=yawn|alarm&limit=n&offset=n -> event array
//   POST /api/events       append one event (403 when read-only)

#include <charconv>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "drowse/config.hpp"
#include "drowse/store.hpp"
#include "drowse/text_format.hpp"

namespace drowse {

namespace detail {

inline std::string html_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

inline void append_event_table(std::string& html, std::string_view title,
                               const std::vector<Event>& events) {
  html += "<h2>";
  html += title;
  html += "</h2>\n<table>\n<tr><th>Time (UTC)</th><th>Session time (ms)</th></tr>\n";
  for (const auto& e : events) {
    html += "<tr><td>" + html_escape(e.wall) + "</td><td>" + std::to_string(e.t_ms) +
            "</td></tr>\n";
  }
  html += "</table>\n";
}

inline std::optional<std::size_t> parse_size(const std::string& s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

inline std::string summary_json(const Summary& s) {
  return nlohmann::ordered_json{{"yawns", s.yawns}, {"alarms", s.alarms}}.dump();
}

inline std::string events_json(const std::vector<Event>& events) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : events) arr.push_back(event_to_json(e));
  return arr.dump();
}

// Totals come from the same snapshot as the tables.
inline std::string render_dashboard_html(const std::vector<Event>& events) {
  std::vector<Event> yawns;
  std::vector<Event> alarms;
  for (const auto& e : events) (e.kind == EventKind::kYawn ? yawns : alarms).push_back(e);
  std::string html =
      "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n"
      "<title>Drowsiness dashboard</title>\n<style>\n"
      "body { font-family: system-ui, sans-serif; margin: 2em; }\n"
      ".totals { display: flex; gap: 3em; }\n"
      ".total { font-size: 2.5em; font-weight: 600; }\n"
      "table { border-collapse: collapse; margin-bottom: 2em; }\n"
      "td, th { border: 1px solid #ccc; padding: 4px 12px; }\n"
      "</style>\n</head>\n<body>\n<h1>Drowsiness dashboard</h1>\n<div class=\"totals\">\n";
  html += "<div>Yawns<div class=\"total\" id=\"yawn-total\">" + std::to_string(yawns.size()) +
          "</div></div>\n";
  html += "<div>Alarms<div class=\"total\" id=\"alarm-total\">" + std::to_string(alarms.size()) +
          "</div></div>\n</div>\n";
  detail::append_event_table(html, "Yawns", yawns);
  detail::append_event_table(html, "Alarms", alarms);
  html += "</body>\n</html>\n";
  return html;
}

inline std::pair<std::string, int> parse_bind_address(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw std::invalid_argument("bind address \"" + bind + "\" is not host:port");
  }
  int port = -1;
  const std::string p = bind.substr(colon + 1);
  auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), port);
  if (ec != std::errc{} || ptr != p.data() + p.size() || port < 0 || port > 65535) {
    throw std::invalid_argument("bind address \"" + bind + "\" has a bad port");
  }
  return {bind.substr(0, colon), port};
}

class Dashboard {
 public:
  // The clock stamps POSTed events that arrive without a wall time.
  explicit Dashboard(DashboardConfig cfg,
                     std::function<std::string()> clock = text::iso8601_now)
      : cfg_(std::move(cfg)),
        store_(cfg_.store_path,
               cfg_.read_only ? EventStore::Mode::kReadOnly : EventStore::Mode::kReadWrite),
        clock_(std::move(clock)) {
    routes();
  }

  Dashboard(const Dashboard&) = delete;
  Dashboard& operator=(const Dashboard&) = delete;

  ~Dashboard() { stop(); }

  // Binds the socket and serves on a background thread. Port 0 picks a free
  // port. Returns the bound port.
  int start() {
    const auto [host, port] = parse_bind_address(cfg_.bind_address);
    if (port == 0) {
      port_ = server_.bind_to_any_port(host);
      if (port_ < 0) throw std::runtime_error("cannot bind " + cfg_.bind_address);
    } else {
      if (!server_.bind_to_port(host, port)) {
        throw std::runtime_error("cannot bind " + cfg_.bind_address);
      }
      port_ = port;
    }
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  // Blocks until stop() is called from another thread or a signal handler.
  void wait() {
    if (thread_.joinable()) thread_.join();
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const noexcept { return port_; }
  EventStore& store() noexcept { return store_; }

 private:
  static void send_json_error(httplib::Response& res, int status, const std::string& msg) {
    res.status = status;
    res.set_content(nlohmann::json{{"error", msg}}.dump(), "application/json");
  }

  void routes() {
    server_.Get("/", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(render_dashboard_html(store_.list_events()), "text/html; charset=utf-8");
    });

    server_.Get("/api/summary", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(summary_json(store_.summary()), "application/json");
    });

    server_.Get("/api/events", [this](const httplib::Request& req, httplib::Response& res) {
      std::optional<EventKind> kind;
      std::optional<std::size_t> limit;
      std::size_t offset = 0;
      if (req.has_param("kind")) {
        kind = parse_event_kind(req.get_param_value("kind"));
        if (!kind) return send_json_error(res, 400, "kind must be yawn or alarm");
      }
      if (req.has_param("limit")) {
        limit = detail::parse_size(req.get_param_value("limit"));
        if (!limit) return send_json_error(res, 400, "limit must be a non-negative integer");
      }
      if (req.has_param("offset")) {
        const auto o = detail::parse_size(req.get_param_value("offset"));
        if (!o) return send_json_error(res, 400, "offset must be a non-negative integer");
        offset = *o;
      }
      res.set_content(events_json(store_.list_events(kind, limit, offset)), "application/json");
    });

    server_.Post("/api/events", [this](const httplib::Request& req, httplib::Response& res) {
      if (cfg_.read_only) return send_json_error(res, 403, "dashboard is read-only");
      Event e;
      try {
        e = event_from_json(nlohmann::json::parse(req.body), clock_());
      } catch (const std::exception& ex) {
        return send_json_error(res, 400, ex.what());
      }
      try {
        store_.append(e);
      } catch (const OrderingError& ex) {
        return send_json_error(res, 400, ex.what());
      } catch (const std::exception& ex) {
        return send_json_error(res, 500, ex.what());
      }
      res.status = 201;
      res.set_content(event_to_json(e).dump(), "application/json");
    });
  }

  DashboardConfig cfg_;
  EventStore store_;
  std::function<std::string()> clock_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace drowse
