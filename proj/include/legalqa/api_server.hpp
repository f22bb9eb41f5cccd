#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "legalqa/error.hpp"
#include "legalqa/session_engine.hpp"

namespace httplib {
class Server;
}

namespace legalqa {

/// HTTP status for an error code.
int http_status(const Error& error);

/// {"error": {"code", "message", "retryable"}}
json error_body(const Error& error);

/// The /v1 HTTP+JSON API over a session engine:
///   POST /v1/sessions                      {question, location} -> 201 session
///   GET  /v1/sessions/{id}                 -> session
///   POST /v1/sessions/{id}/selections      {selections: [{clarification, option}]} -> session
///   POST /v1/sessions/{id}/answer          -> session (Answered)
///   GET  /v1/sessions/{id}/answer          -> {session_id, answer, retrieved, best_effort}
///   GET  /v1/regions                       -> {regions: [{code, name}]}
///   GET  /v1/health                        -> {status, sessions}
/// Static assets, when a directory is given, are served from "/".
class ApiServer {
 public:
  explicit ApiServer(std::shared_ptr<SessionEngine> engine, std::filesystem::path static_dir = {});
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Blocks until stop().
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it; call listen_after_bind() next.
  int bind_to_any_port(const std::string& host);
  bool listen_after_bind();
  void wait_until_ready() const;
  void stop();

 private:
  void routes();

  std::shared_ptr<SessionEngine> engine_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace legalqa
