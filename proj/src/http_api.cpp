#include "oasis/http_api.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "oasis/config.hpp"

namespace oasis {
using json = nlohmann::json;

namespace {

json error_body(const Error& e) {
  json j{{"category", to_string(e.category())}, {"message", e.what()}};
  if (e.field()) j["field"] = *e.field();
  if (e.row()) j["row"] = *e.row();
  return j;
}

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json optional_real(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json estimate_json(const EstimateView& v) {
  return json{{"session_id", v.session_id},
              {"alpha", v.alpha},
              {"f_measure", optional_real(v.f_measure)},
              {"estimate_pending", !v.f_measure.has_value()},
              {"precision", optional_real(v.precision)},
              {"recall", optional_real(v.recall)},
              {"budget", v.budget},
              {"iteration", v.iteration},
              {"status", to_string(v.status)},
              {"pi_hat", v.pi_hat},
              {"instrumental", v.instrumental}};
}

json query_json(const QueryView& q) {
  json payload = json::object();
  for (const auto& [k, v] : q.payload) payload[k] = v;
  return json{{"session_id", q.session_id},
              {"t", q.t},
              {"pair_id", q.pair_id},
              {"score", q.score},
              {"predicted_label", q.predicted_label},
              {"payload", payload},
              {"status", to_string(q.status)}};
}

json parse_body(const httplib::Request& req) {
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCategory::validation, "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCategory::validation, std::string("request body is not JSON: ") + e.what());
  }
}

std::string read_text(const std::string& path, const char* field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::io, "cannot read " + path, field);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string text_field(const json& body, const char* inline_key, const char* path_key, bool required) {
  if (body.contains(inline_key)) {
    if (!body[inline_key].is_string())
      throw Error(ErrorCategory::validation, std::string(inline_key) + " must be a string", inline_key);
    return body[inline_key].get<std::string>();
  }
  if (body.contains(path_key)) {
    if (!body[path_key].is_string())
      throw Error(ErrorCategory::validation, std::string(path_key) + " must be a string", path_key);
    return read_text(body[path_key].get<std::string>(), path_key);
  }
  if (required)
    throw Error(ErrorCategory::validation, std::string("one of ") + inline_key + " or " + path_key +
                                               " is required",
                inline_key);
  return {};
}

SessionRequest session_request(const json& body) {
  static const std::vector<std::string> known = {"pool_csv",    "pool_path",    "score_kind",
                                                 "payload_csv", "payload_path", "config"};
  for (const auto& [k, v] : body.items())
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw Error(ErrorCategory::validation, "unknown field '" + k + "'", k);
  SessionRequest r;
  r.pool_csv = text_field(body, "pool_csv", "pool_path", true);
  if (body.contains("payload_csv") || body.contains("payload_path"))
    r.payload_csv = text_field(body, "payload_csv", "payload_path", false);
  if (body.contains("score_kind")) {
    const auto& k = body["score_kind"];
    if (k == "probability")
      r.score_kind = ScoreKind::probability;
    else if (k == "raw")
      r.score_kind = ScoreKind::raw;
    else if (k != "auto")
      throw Error(ErrorCategory::validation, "score_kind must be auto, probability or raw", "score_kind");
  }
  if (body.contains("config")) {
    const auto& cfg = body["config"];
    if (!cfg.is_object()) throw Error(ErrorCategory::validation, "config must be an object", "config");
    for (const auto& [k, v] : cfg.items()) {
      std::string text;
      if (v.is_string())
        text = v.get<std::string>();
      else if (v.is_null())
        text = "none";
      else if (v.is_number() || v.is_boolean())
        text = v.dump();
      else
        throw Error(ErrorCategory::validation, "config values must be scalars", k);
      set_config_field(r.config, k, text);
    }
  }
  return r;
}

}  // namespace

int http_status(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::not_found: return 404;
    case ErrorCategory::conflict: return 409;
    case ErrorCategory::exhausted: return 410;
    case ErrorCategory::unauthorized: return 401;
    case ErrorCategory::validation: return 422;
    case ErrorCategory::io: return 500;
    default: return 400;
  }
}

struct HttpApi::Impl {
  SessionStore& store;
  std::string token;
  httplib::Server server;

  Impl(SessionStore& s, std::string t) : store(s), token(std::move(t)) {}

  template <class F>
  void guarded(const httplib::Request& req, httplib::Response& res, F&& body) {
    try {
      if (!token.empty() && req.get_header_value("Authorization") != "Bearer " + token)
        throw Error(ErrorCategory::unauthorized, "missing or wrong bearer token");
      body();
    } catch (const Error& e) {
      send(res, http_status(e.category()), error_body(e));
    } catch (const std::exception& e) {
      send(res, 500, json{{"category", "internal"}, {"message", e.what()}});
    }
  }

  void routes() {
    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(req, res, [&] {
        const std::string id = store.create_session(session_request(parse_body(req)));
        send(res, 201, json{{"session_id", id}, {"estimate", estimate_json(store.get_estimate(id))}});
      });
    });
    server.Get(R"(/sessions/([^/]+)/query)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(req, res, [&] { send(res, 200, query_json(store.next_query(req.matches[1]))); });
    });
    server.Post(R"(/sessions/([^/]+)/labels)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(req, res, [&] {
        const json body = parse_body(req);
        if (!body.contains("pair_id") || !body["pair_id"].is_string())
          throw Error(ErrorCategory::validation, "pair_id must be a string", "pair_id");
        if (!body.contains("label") || !body["label"].is_number_integer())
          throw Error(ErrorCategory::validation, "label must be 0 or 1", "label");
        const auto view = store.submit_label(req.matches[1], body["pair_id"].get<std::string>(),
                                             body["label"].get<int>());
        send(res, 200, estimate_json(view));
      });
    });
    server.Get(R"(/sessions/([^/]+)/estimate)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(req, res, [&] { send(res, 200, estimate_json(store.get_estimate(req.matches[1]))); });
    });
  }
};

HttpApi::HttpApi(SessionStore& store, std::string token)
    : impl_(std::make_unique<Impl>(store, std::move(token))) {
  impl_->routes();
}

HttpApi::~HttpApi() = default;

int HttpApi::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpApi::serve() { return impl_->server.listen_after_bind(); }

void HttpApi::stop() { impl_->server.stop(); }

}  // namespace oasis
