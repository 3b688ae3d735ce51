#include <httplib.h>

#include "argjudge/annotation.hpp"

namespace argjudge {

using nlohmann::json;

namespace {

int status_for(Rejection r) {
  switch (r) {
    case Rejection::unknown_rater:
    case Rejection::bad_token: return 401;
    case Rejection::unknown_task: return 404;
    case Rejection::closed:
    case Rejection::duplicate: return 409;
    case Rejection::empty_explanation:
    case Rejection::bad_answer: return 422;
  }
  return 400;
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  reply(res, status, json{{"error", code}, {"message", message}});
}

std::string bearer(const httplib::Request& req) {
  const std::string auth = req.get_header_value("Authorization");
  if (auth.rfind("Bearer ", 0) == 0) return auth.substr(7);
  if (req.has_param("token")) return req.get_param_value("token");
  return {};
}

json task_json(const AnnotationTask& t) {
  return json{{"task_id", t.task_id},
              {"kind", to_string(t.kind)},
              {"required_raters", t.required_raters},
              {"payload", t.payload}};
}

json progress_json(const BoardProgress& p, const std::string& rater) {
  json kinds = json::object();
  for (const auto& [k, v] : p.by_kind) kinds[std::string(to_string(k))] = {{"closed", v.first}, {"total", v.second}};
  json out{{"tasks", p.tasks}, {"closed", p.closed}, {"votes", p.votes}, {"by_kind", std::move(kinds)}};
  if (!rater.empty()) {
    auto it = p.raters.find(rater);
    if (it != p.raters.end())
      out["rater"] = {{"rater_id", rater},
                      {"votes", it->second.votes},
                      {"gold_answered", it->second.gold_answered},
                      {"gold_correct", it->second.gold_correct},
                      {"flagged", it->second.flagged}};
  }
  return out;
}

}  // namespace

struct AnnotationServer::Impl {
  AnnotationBoard& board;
  std::string admin_token;
  httplib::Server server;

  Impl(AnnotationBoard& b, std::string admin) : board(b), admin_token(std::move(admin)) { routes(); }

  template <class F>
  void guarded(httplib::Response& res, F&& body) {
    try {
      body();
    } catch (const AnnotationError& e) {
      reply_error(res, status_for(e.reason()), to_string(e.reason()), e.what());
    } catch (const json::exception& e) {
      reply_error(res, 400, "bad_request", e.what());
    } catch (const Error& e) {
      reply_error(res, 400, "bad_request", e.what());
    }
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Authorization, Content-Type"}});
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get("/task", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string rater = req.get_param_value("rater");
        if (rater.empty()) return reply_error(res, 400, "bad_request", "missing ?rater=");
        board.authenticate(rater, bearer(req));
        auto task = board.next_task(rater);
        reply(res, 200, json{{"task", task ? task_json(*task) : json(nullptr)}});
      });
    });

    server.Post("/vote", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = json::parse(req.body);
        if (!body.is_object()) return reply_error(res, 400, "bad_request", "body must be a JSON object");
        const std::string rater = body.value("rater", "");
        const std::string task_id = body.value("task_id", "");
        if (rater.empty() || task_id.empty())
          return reply_error(res, 400, "bad_request", "rater and task_id are required");
        board.authenticate(rater, bearer(req));
        const bool closed = board.submit_vote(rater, task_id, body.value("answer", json::object()),
                                              body.value("explanation", ""));
        reply(res, 200, json{{"accepted", true}, {"task_id", task_id}, {"closed", closed}});
      });
    });

    server.Get("/export", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        if (!admin_token.empty() && bearer(req) != admin_token)
          return reply_error(res, 401, "bad_token", "export needs the admin token");
        auto kind = task_kind_from_string(req.get_param_value("kind"));
        if (!kind) return reply_error(res, 400, "bad_request", "kind must be basic_form, content, persuasion_pair or gold_check");
        reply(res, 200, board.export_json(*kind));
      });
    });

    server.Get("/progress", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        std::string rater = req.get_param_value("rater");
        if (!rater.empty()) board.authenticate(rater, bearer(req));
        reply(res, 200, progress_json(board.progress(), rater));
      });
    });
  }
};

AnnotationServer::AnnotationServer(AnnotationBoard& board, std::string admin_token)
    : impl_(std::make_unique<Impl>(board, std::move(admin_token))) {}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw ConfigError("cannot bind annotation service to " + host + ":" + std::to_string(port));
  return bound;
}

void AnnotationServer::serve() {
  impl_->server.listen_after_bind();
}

void AnnotationServer::stop() {
  if (impl_) impl_->server.stop();
}

bool AnnotationServer::running() const { return impl_->server.is_running(); }

}  // namespace argjudge
