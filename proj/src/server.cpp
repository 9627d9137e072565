#include "avalon/server.hpp"

#include "avalon/resources.hpp"
#include "httplib.h"

namespace avalon {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code,
                const std::string& message) {
  send_json(res, status, {{"error", code}, {"message", message}});
}

int status_for(AnnotationError::Code c) {
  switch (c) {
    case AnnotationError::Code::UnknownAnnotator: return 403;
    case AnnotationError::Code::UnknownTask: return 404;
    case AnnotationError::Code::BadDomain: return 422;
    case AnnotationError::Code::LeaseLost: return 409;
    case AnnotationError::Code::TooFewGames: return 400;
  }
  return 500;
}

// Annotator id from the bearer token, or nullopt after writing 401/403.
std::optional<std::string> authorize(const httplib::Request& req, httplib::Response& res,
                                     const AnnotationService& service) {
  const std::string h = req.get_header_value("Authorization");
  const std::string prefix = "Bearer ";
  if (h.rfind(prefix, 0) != 0 || h.size() == prefix.size()) {
    send_error(res, 401, "unauthorized", "missing bearer token");
    return std::nullopt;
  }
  std::string id = h.substr(prefix.size());
  if (!service.has_annotator(id)) {
    send_error(res, 403, "unknown_annotator", "no bundle is assigned to " + id);
    return std::nullopt;
  }
  return id;
}

}  // namespace

AnnotationServer::AnnotationServer(AnnotationService& service,
                                   std::optional<std::filesystem::path> static_dir)
    : service_(service), http_(std::make_unique<httplib::Server>()) {
  install_routes();
  if (static_dir) http_->set_mount_point("/", static_dir->string());
}

AnnotationServer::~AnnotationServer() { stop(); }

void AnnotationServer::install_routes() {
  http_->Get("/api/tasks/next", [this](const httplib::Request& req, httplib::Response& res) {
    auto who = authorize(req, res, service_);
    if (!who) return;
    auto task = service_.next_task(*who);
    send_json(res, 200, {{"done", !task}, {"task", task ? task->to_json(false) : json(nullptr)}});
  });

  http_->Post(R"(/api/tasks/([^/]+)/submit)",
              [this](const httplib::Request& req, httplib::Response& res) {
                auto who = authorize(req, res, service_);
                if (!who) return;
                json body;
                try {
                  body = json::parse(req.body);
                } catch (const json::exception& e) {
                  send_error(res, 400, "bad_request", e.what());
                  return;
                }
                if (!body.is_object() || !body.contains("value")) {
                  send_error(res, 400, "bad_request", "body needs a \"value\" field");
                  return;
                }
                try {
                  auto ack = service_.submit(*who, req.matches[1], body.at("value"),
                                             body.value("note", ""));
                  send_json(res, 200,
                            {{"record", ack.record.to_json()}, {"duplicate", ack.duplicate}});
                } catch (const AnnotationError& e) {
                  send_error(res, status_for(e.code()), to_string(e.code()), e.what());
                }
              });

  http_->Get("/api/progress", [this](const httplib::Request& req, httplib::Response& res) {
    if (!authorize(req, res, service_)) return;
    send_json(res, 200, service_.progress());
  });

  http_->Get("/api/bundles", [this](const httplib::Request& req, httplib::Response& res) {
    if (!authorize(req, res, service_)) return;
    send_json(res, 200, service_.bundles_summary());
  });

  http_->Get(R"(/api/rubric/([a-z_]+))",
             [this](const httplib::Request& req, httplib::Response& res) {
               if (!authorize(req, res, service_)) return;
               try {
                 const TaskKind kind = task_kind_from_string(req.matches[1].str());
                 res.set_content(std::string(resource(rubric_for(kind))), "text/markdown");
               } catch (const std::exception&) {
                 send_error(res, 404, "unknown_kind", "no rubric for " + req.matches[1].str());
               }
             });

  http_->set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
          std::rethrow_exception(ep);
        } catch (const AnnotationError& e) {
          send_error(res, status_for(e.code()), to_string(e.code()), e.what());
        } catch (const std::exception& e) {
          send_error(res, 500, "internal", e.what());
        }
      });
}

void AnnotationServer::listen(const std::string& host, int port) {
  if (!http_->listen(host, port)) {
    throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
  }
}

int AnnotationServer::start_background(const std::string& host) {
  const int port = http_->bind_to_any_port(host);
  if (port < 0) throw std::runtime_error("cannot bind " + host);
  thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  return port;
}

void AnnotationServer::stop() {
  if (http_) http_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace avalon
