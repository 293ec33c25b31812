#include "loanfair/server.hpp"

#include <atomic>
#include <thread>

#include "httplib.h"
#include "loanfair/error.hpp"

namespace loanfair {

struct HttpServer::Impl {
  httplib::Server server;
  std::atomic<bool> bound{false};
  std::atomic<bool> listened{false};
  std::atomic<bool> stopped{false};
};

namespace {

ApiRequest to_api_request(const httplib::Request& req) {
  ApiRequest out;
  out.method = req.method;
  out.path = req.path;
  for (const auto& [key, value] : req.params) out.query.emplace(key, value);
  out.body = req.body;
  if (req.has_header("X-Session-Id")) out.session = req.get_header_value("X-Session-Id");
  return out;
}

}  // namespace

HttpServer::HttpServer(ApiCore& core) : core_(core), impl_(std::make_unique<Impl>()) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    const ApiResponse r = core_.handle(to_api_request(req));
    res.status = r.status;
    res.set_content(r.text(), "application/json");
  };
  auto& s = impl_->server;
  s.Get(".*", handler);
  s.Post(".*", handler);
  s.Put(".*", handler);
  s.Patch(".*", handler);
  s.Delete(".*", handler);
  s.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  // SO_REUSEADDR without SO_REUSEPORT.
  s.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
  });
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Headers", "Content-Type, X-Session-Id"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
}

HttpServer::~HttpServer() {
  stop();
  // httplib closes the listening socket only from a running server.
  if (impl_->bound && !impl_->listened) {
    std::thread t([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    impl_->server.stop();
    t.join();
  }
}

int HttpServer::bind(const std::string& host, int port) {
  auto& s = impl_->server;
  port_ = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
  if (port_ <= 0) throw Error("io_error", "cannot bind " + host + ":" + std::to_string(port));
  impl_->bound = true;
  return port_;
}

void HttpServer::listen() {
  if (impl_->stopped.exchange(false)) return;
  impl_->listened = true;
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (!impl_) return;
  if (impl_->server.is_running()) impl_->server.stop();
  else if (impl_->bound && !impl_->listened) impl_->stopped = true;
}

bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace loanfair
