#pragma once

#include <memory>
#include <string>

#include "smbo/service.hpp"

namespace httplib {
class Server;
}

namespace smbo::service {

/// Serves an Api over HTTP/1.1 with cpp-httplib. Requests are handled on a
/// thread pool; per-study serialization is the store's job.
class HttpServer {
 public:
  explicit HttpServer(Api& api);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds host:port (port 0 picks a free one) and returns the bound port,
  /// or -1 on failure.
  int bind(const std::string& host, int port);
  /// Blocks serving requests until stop() is called.
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace smbo::service
