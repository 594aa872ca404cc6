#include "tfct/service.hpp"

#include <charconv>

#include <sys/socket.h>

#include <httplib.h>
#include <json.hpp>

namespace tfct {

using nlohmann::json;

namespace {

constexpr int kBadRequest = 400;
constexpr int kNotFound = 404;
constexpr int kConflict = 409;
constexpr int kUnprocessable = 422;

bool parse_int(const std::string& s, std::int64_t& out) {
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end && !s.empty();
}

Service::Response error(int status, const std::string& message) { return {status, Service::error_body(status, message)}; }

Service::Response no_data() { return error(kNotFound, "no dataset loaded"); }

std::int32_t int_field(const json& j, const char* key, std::int32_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw SelectionError(std::string("'") + key + "' must be an integer");
  const auto n = v.get<std::int64_t>();
  if (n < INT32_MIN || n > INT32_MAX) throw SelectionError(std::string("'") + key + "' out of range");
  return static_cast<std::int32_t>(n);
}

}  // namespace

Service::Service(std::shared_ptr<const Precomputed> data, ViewOptions view) : data_(std::move(data)), view_(view) {
  if (data_) selection_ = all_steps(data_->info.steps);
}

std::string Service::error_body(int status, const std::string& message) {
  return json{{"code", status}, {"message", message}}.dump();
}

Selection Service::selection() const {
  std::lock_guard lock(session_mutex_);
  return selection_;
}

ViewOptions Service::view() const {
  std::lock_guard lock(session_mutex_);
  return view_;
}

std::string Service::cached(const std::string& key, const std::function<std::string()>& make) {
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  auto value = make();
  std::lock_guard lock(cache_mutex_);
  return cache_.emplace(key, std::move(value)).first->second;
}

Service::Response Service::payload_for(const Selection& s, const ViewOptions& view) {
  return {200, cached("fct:" + signature(s, view), [&] { return fct_payload(*data_, s, view); })};
}

Service::Response Service::dataset() const {
  if (!data_) return no_data();
  return {200, dataset_payload(*data_)};
}

Service::Response Service::select(const std::string& body) {
  if (!data_) return no_data();
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    return error(kBadRequest, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) return error(kBadRequest, "body must be a JSON object");

  const auto steps = data_->info.steps;
  Selection s;
  ViewOptions view;
  try {
    if (!j.contains("mode") || !j.at("mode").is_string()) throw SelectionError("'mode' is required");
    switch (parse_selection_mode(j.at("mode").get<std::string>())) {
      case SelectionMode::window:
        if (!j.contains("center")) throw SelectionError("'center' is required");
        s = window_selection(int_field(j, "center", 0), int_field(j, "width", kDefaultWindow), steps);
        break;
      case SelectionMode::periodic:
        if (!j.contains("anchor")) throw SelectionError("'anchor' is required");
        s = periodic_selection(int_field(j, "anchor", 0), int_field(j, "period", kDefaultPeriod), steps);
        break;
      case SelectionMode::multi: {
        if (!j.contains("members") || !j.at("members").is_array()) throw SelectionError("'members' must be an array");
        std::vector<std::int32_t> members;
        for (const auto& v : j.at("members")) {
          if (!v.is_number_integer()) throw SelectionError("members must be integers");
          const auto t = v.get<std::int64_t>();
          if (t < 0 || t >= steps) throw SelectionError("step " + std::to_string(t) + " out of range");
          members.push_back(static_cast<std::int32_t>(t));
        }
        s = multi_selection(std::move(members), steps);
        break;
      }
    }
    std::lock_guard lock(session_mutex_);
    view = view_;
    for (auto [key, flag] : {std::pair{"compact_gaps", &view.compact_gaps},
                             std::pair{"optimized_spacing", &view.optimized_spacing}}) {
      if (!j.contains(key)) continue;
      if (!j.at(key).is_boolean()) throw SelectionError(std::string("'") + key + "' must be a boolean");
      *flag = j.at(key).get<bool>();
    }
    selection_ = s;
    view_ = view;
  } catch (const SelectionError& e) {
    return error(kUnprocessable, e.what());
  }
  return payload_for(s, view);
}

Service::Response Service::shift(const std::string& body) {
  if (!data_) return no_data();
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    return error(kBadRequest, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("direction") || !j.at("direction").is_number_integer()) {
    return error(kUnprocessable, "'direction' must be 1 or -1");
  }
  Selection s;
  ViewOptions view;
  {
    std::lock_guard lock(session_mutex_);
    try {
      s = shifted(selection_, j.at("direction").get<int>(), data_->info.steps);
    } catch (const ShiftError& e) {
      return error(kConflict, e.what());
    } catch (const SelectionError& e) {
      return error(kUnprocessable, e.what());
    }
    selection_ = s;
    view = view_;
  }
  return payload_for(s, view);
}

Service::Response Service::selector(const std::map<std::string, std::string>& query) {
  if (!data_) return no_data();
  auto get = [&](const std::string& key, const std::string& fallback) {
    auto it = query.find(key);
    return it == query.end() ? fallback : it->second;
  };
  Measure measure;
  SeriesMode mode;
  std::int64_t window = 0;
  try {
    measure = parse_measure(get("measure", "degree"));
    mode = parse_series_mode(get("mode", "direct"));
  } catch (const std::invalid_argument& e) {
    return error(kUnprocessable, e.what());
  }
  if (!parse_int(get("window", std::to_string(kDefaultWindow)), window) || window <= 0 || window % 2 == 0 ||
      window > INT32_MAX) {
    return error(kUnprocessable, "window must be an odd positive integer");
  }
  const auto key = "selector:" + std::string(to_string(measure)) + ":" + std::string(to_string(mode)) + ":" +
                   std::to_string(window);
  return {200, cached(key, [&] {
            return selector_payload(selector_series(data_->alignment, measure, mode, static_cast<int>(window)));
          })};
}

Service::Response Service::highlight_tree(const std::string& step) {
  if (!data_) return no_data();
  std::int64_t t = 0;
  if (!parse_int(step, t) || t < 0 || t >= data_->info.steps) return error(kNotFound, "time step " + step + " not found");
  const auto s = selection();
  const auto v = view();
  const auto key = "tree:" + std::to_string(t) + ":" + signature(s, v);
  return {200, cached(key, [&] { return highlight_tree_payload(*data_, s, v, static_cast<std::int32_t>(t)); })};
}

Service::Response Service::highlight_branch(const std::string& id) {
  if (!data_) return no_data();
  std::int64_t b = 0;
  if (!parse_int(id, b) || b < INT32_MIN || b > INT32_MAX ||
      !data_->layout.structure.contains(static_cast<std::int32_t>(b))) {
    return error(kNotFound, "branch " + id + " not found");
  }
  return {200, cached("branch:" + std::to_string(b),
                      [&] { return highlight_branch_payload(*data_, static_cast<std::int32_t>(b)); })};
}

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;

  explicit Impl(Service& s) : service(s) {
    // The library default enables SO_REUSEPORT, which would let a second
    // server share a busy port.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});

    auto reply = [](httplib::Response& res, const Service::Response& r) {
      res.status = r.status;
      res.set_content(r.body, "application/json");
    };
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.Get("/api/dataset", [this, reply](const httplib::Request&, httplib::Response& res) {
      reply(res, service.dataset());
    });
    server.Post("/api/selection", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, service.select(req.body));
    });
    server.Post("/api/selection/shift", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, service.shift(req.body));
    });
    server.Get("/api/selector", [this, reply](const httplib::Request& req, httplib::Response& res) {
      std::map<std::string, std::string> query;
      for (const auto& [k, v] : req.params) query.emplace(k, v);
      reply(res, service.selector(query));
    });
    server.Get(R"(/api/highlight/tree/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, service.highlight_tree(req.matches[1]));
    });
    server.Get(R"(/api/highlight/branch/([^/]+))",
               [this, reply](const httplib::Request& req, httplib::Response& res) {
                 reply(res, service.highlight_branch(req.matches[1]));
               });
    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
      res.set_content(Service::error_body(res.status, "no route for " + req.method + " " + req.path),
                      "application/json");
      return httplib::Server::HandlerResponse::Handled;
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string message = "internal error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        message = e.what();
      } catch (...) {
      }
      res.status = 500;
      res.set_content(Service::error_body(500, message), "application/json");
    });
  }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  if (port < 0 || port > 65535) throw std::runtime_error("invalid port " + std::to_string(port));
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw std::runtime_error("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port) + " (port busy?)");
  }
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace tfct
