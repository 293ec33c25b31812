#pragma once

#include <memory>
#include <string>

#include "loanfair/api.hpp"

namespace loanfair {

/// HTTP binding of an ApiCore. Every path is forwarded; the core does the routing.
class HttpServer {
 public:
  explicit HttpServer(ApiCore& core);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds `host:port` (port 0 picks a free one) and returns the bound port.
  /// Error("io_error") when binding fails.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Requires a prior bind().
  void listen();
  void stop();
  bool running() const;
  int port() const noexcept { return port_; }

 private:
  ApiCore& core_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace loanfair
