#pragma once

// HTTP front end for the annotation service.
//
//   GET  /api/tasks/next            -> {"done": bool, "task": {...}|null}
//   POST /api/tasks/{id}/submit     <- {"value": ..., "note": "..."}
//   GET  /api/progress
//   GET  /api/rubric/{kind}         text/markdown
//   GET  /api/bundles
//
// Every /api route needs "Authorization: Bearer <annotator id>".

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "avalon/annotation.hpp"

namespace httplib {
class Server;
}

namespace avalon {

class AnnotationServer {
 public:
  // static_dir, if set, is served at "/" (the console build output).
  explicit AnnotationServer(AnnotationService& service,
                            std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~AnnotationServer();

  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  // Blocks until stop().
  void listen(const std::string& host, int port);
  // Binds an ephemeral port, serves on a background thread, returns the port.
  int start_background(const std::string& host = "127.0.0.1");
  void stop();

 private:
  void install_routes();

  AnnotationService& service_;
  std::unique_ptr<httplib::Server> http_;
  std::thread thread_;
};

}  // namespace avalon
