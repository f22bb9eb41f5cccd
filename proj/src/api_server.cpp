#include "legalqa/api_server.hpp"

#include <httplib.h>

namespace legalqa {

namespace {

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  try {
    auto body = json::parse(req.body);
    if (!body.is_object()) fail(ErrorCode::parse_error, "request body must be a JSON object");
    return body;
  } catch (const json::parse_error& e) {
    fail(ErrorCode::parse_error, std::string("request body is not JSON: ") + e.what());
  }
}

template <typename Handler>
auto guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const Error& e) {
      send(res, http_status(e), error_body(e));
    } catch (const json::exception& e) {
      Error error(ErrorCode::invalid_argument, std::string("bad request field: ") + e.what());
      send(res, http_status(error), error_body(error));
    } catch (const std::exception& e) {
      Error error(ErrorCode::io_error, e.what());
      send(res, 500, error_body(error));
    }
  };
}

}  // namespace

int http_status(const Error& error) {
  switch (error.code()) {
    case ErrorCode::invalid_argument:
    case ErrorCode::parse_error:
    case ErrorCode::incomplete_submission:
      return 400;
    case ErrorCode::not_found:
      return 404;
    case ErrorCode::state_error:
      return 409;
    case ErrorCode::unsupported_region:
      return 422;
    case ErrorCode::provider_unavailable:
      return error.retryable() ? 503 : 502;
    case ErrorCode::protocol_error:
    case ErrorCode::fixture_miss:
      return 502;
    default:
      return 500;
  }
}

json error_body(const Error& error) {
  return {{"error", {{"code", to_string(error.code())}, {"message", error.what()}, {"retryable", error.retryable()}}}};
}

ApiServer::ApiServer(std::shared_ptr<SessionEngine> engine, std::filesystem::path static_dir)
    : engine_(std::move(engine)), server_(std::make_unique<httplib::Server>()) {
  routes();
  if (!static_dir.empty()) server_->set_mount_point("/", static_dir.string());
}

ApiServer::~ApiServer() { stop(); }

void ApiServer::routes() {
  auto& s = *server_;
  auto engine = engine_;

  s.Post("/v1/sessions", guarded([engine](const httplib::Request& req, httplib::Response& res) {
           auto body = parse_body(req);
           auto session = engine->open_session(body.at("question").get<std::string>(),
                                               body.at("location").get<std::string>());
           send(res, 201, to_json(session));
         }));

  s.Get(R"(/v1/sessions/([^/]+))", guarded([engine](const httplib::Request& req, httplib::Response& res) {
          send(res, 200, to_json(engine->get(req.matches[1])));
        }));

  s.Post(R"(/v1/sessions/([^/]+)/selections)",
         guarded([engine](const httplib::Request& req, httplib::Response& res) {
           auto body = parse_body(req);
           std::vector<SelectionInput> selections;
           for (const auto& item : body.at("selections")) {
             selections.push_back({item.at("clarification").get<std::size_t>(), item.at("option").get<std::size_t>()});
           }
           send(res, 200, to_json(engine->submit_selections(req.matches[1], selections)));
         }));

  s.Post(R"(/v1/sessions/([^/]+)/answer)", guarded([engine](const httplib::Request& req, httplib::Response& res) {
           send(res, 200, to_json(engine->compose_answer(req.matches[1])));
         }));

  s.Get(R"(/v1/sessions/([^/]+)/answer)", guarded([engine](const httplib::Request& req, httplib::Response& res) {
          auto session = engine->get(req.matches[1]);
          if (!session.answer) {
            fail(ErrorCode::state_error, "session is " + std::string(to_string(session.state)) + ", not answered");
          }
          auto j = to_json(session);
          send(res, 200,
               {{"session_id", j["session_id"]},
                {"answer", j["answer"]},
                {"retrieved", j["retrieved"]},
                {"best_effort", j["best_effort"]}});
        }));

  s.Get("/v1/regions", guarded([engine](const httplib::Request&, httplib::Response& res) {
          json regions = json::array();
          for (const auto& r : engine->regions().regions()) regions.push_back({{"code", r.code}, {"name", r.name}});
          send(res, 200, {{"regions", regions}});
        }));

  s.Get("/v1/health", guarded([engine](const httplib::Request&, httplib::Response& res) {
          send(res, 200, {{"status", "ok"}, {"sessions", engine->session_ids().size()}});
        }));
}

bool ApiServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

int ApiServer::bind_to_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool ApiServer::listen_after_bind() { return server_->listen_after_bind(); }

void ApiServer::wait_until_ready() const { server_->wait_until_ready(); }

void ApiServer::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

}  // namespace legalqa
