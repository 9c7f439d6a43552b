#include <thread>

#include "httplib.h"
#include "owl/error.hpp"
#include "owl/service.hpp"

namespace owl {

struct HttpFrontend::Impl {
  OracleService& service;
  std::string static_dir;
  httplib::Server server;
  std::thread thread;

  Impl(OracleService& s, std::string dir) : service(s), static_dir(std::move(dir)) {}
};

namespace {

void send(httplib::Response& res, const Reply& reply) {
  res.status = reply.status;
  res.set_content(reply.body, "application/json; charset=utf-8");
}

}  // namespace

HttpFrontend::HttpFrontend(OracleService& service, std::string static_dir)
    : impl_(std::make_unique<Impl>(service, std::move(static_dir))) {
  auto& server = impl_->server;
  OracleService& svc = impl_->service;
  server.Get("/api/queue", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.get_queue()); });
  server.Post(R"(/api/queue/([^/]+)/label)", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.post_label(req.matches[1], req.body));
  });
  server.Get("/api/classes", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.get_classes()); });
  server.Post("/api/classes", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.post_class(req.body));
  });
  server.Get("/api/status", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.get_status()); });

  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    send(res, error_reply(500, what));
  });
  // Unmatched routes and methods get the same JSON error shape.
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) send(res, error_reply(res.status, res.status == 404 ? "not found" : "request failed"));
  });
  if (!impl_->static_dir.empty() && !server.set_mount_point("/", impl_->static_dir))
    throw IoError("static directory '" + impl_->static_dir + "' does not exist");
}

HttpFrontend::~HttpFrontend() { stop(); }

int HttpFrontend::start(const std::string& bind, int port) {
  if (impl_->thread.joinable()) throw StateError("HttpFrontend already started");
  auto& server = impl_->server;
  int bound = port;
  if (port == 0) {
    bound = server.bind_to_any_port(bind.c_str());
  } else if (!server.bind_to_port(bind.c_str(), port)) {
    bound = -1;
  }
  if (bound < 0) throw IoError("cannot bind " + bind + ":" + std::to_string(port));
  impl_->thread = std::thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();
  return bound;
}

void HttpFrontend::stop() {
  if (!impl_ || !impl_->thread.joinable()) return;
  impl_->server.stop();
  impl_->thread.join();
}

}  // namespace owl
