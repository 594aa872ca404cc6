#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "tfct/payload.hpp"

namespace tfct {

inline constexpr int kDefaultPort = 7878;

// Request handling for the HTTP API, independent of the transport. Each
// method returns the status code and JSON body of one endpoint. The overall
// alignment and layout are immutable; only the session selection changes.
class Service {
public:
  struct Response {
    int status = 200;
    std::string body;
  };

  // Without data every endpoint answers 404. The initial selection is all steps.
  explicit Service(std::shared_ptr<const Precomputed> data = nullptr, ViewOptions view = {});

  Response dataset() const;                                    // GET /api/dataset
  Response select(const std::string& body);                    // POST /api/selection
  Response shift(const std::string& body);                     // POST /api/selection/shift
  Response selector(const std::map<std::string, std::string>& query);  // GET /api/selector
  Response highlight_tree(const std::string& step);            // GET /api/highlight/tree/{t}
  Response highlight_branch(const std::string& id);            // GET /api/highlight/branch/{id}

  Selection selection() const;
  ViewOptions view() const;

  static std::string error_body(int status, const std::string& message);

private:
  Response payload_for(const Selection& s, const ViewOptions& view);
  std::string cached(const std::string& key, const std::function<std::string()>& make);

  std::shared_ptr<const Precomputed> data_;
  mutable std::mutex session_mutex_;
  Selection selection_;
  ViewOptions view_;
  std::mutex cache_mutex_;
  std::map<std::string, std::string> cache_;
};

// HTTP front end on top of Service. CORS is open to any origin.
class HttpServer {
public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks a free port. Returns the bound port; throws
  // std::runtime_error when the port cannot be bound.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tfct
