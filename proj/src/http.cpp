#include "nextline/http.hpp"

#include <httplib.h>

#include <iostream>
#include <json.hpp>

#include "nextline/error.hpp"

using json = nlohmann::ordered_json;

namespace nextline {

namespace {

constexpr std::size_t kMaxK = 1000;

HttpReply error_reply(int status, const std::string& message) {
  return {status, json{{"error", message}}.dump()};
}

}  // namespace

HttpReply handle_suggest(const ArtifactBundle& bundle, std::string_view body) {
  json request;
  try {
    request = json::parse(body);
  } catch (const json::parse_error& e) {
    return error_reply(400, std::string("malformed JSON: ") + e.what());
  }
  if (!request.is_object()) return error_reply(400, "request body must be a JSON object");
  if (!request.contains("line") || !request["line"].is_string()) {
    return error_reply(400, "field \"line\" (string) is required");
  }
  std::size_t k = 10;
  if (request.contains("k")) {
    const auto& kv = request["k"];
    if (!kv.is_number_integer() || kv.get<long long>() < 1 || kv.get<long long>() > static_cast<long long>(kMaxK)) {
      return error_reply(400, "field \"k\" must be an integer in [1, " + std::to_string(kMaxK) + "]");
    }
    k = kv.get<std::size_t>();
  }
  std::vector<float> embedding;
  if (request.contains("text_embedding")) {
    const auto& ev = request["text_embedding"];
    if (!ev.is_array()) return error_reply(400, "field \"text_embedding\" must be an array of numbers");
    for (const auto& x : ev) {
      if (!x.is_number()) return error_reply(400, "field \"text_embedding\" must be an array of numbers");
      embedding.push_back(x.get<float>());
    }
    if (embedding.size() != bundle.pca().in_dim) {
      return error_reply(400, "text_embedding must have " + std::to_string(bundle.pca().in_dim) + " components");
    }
  }

  try {
    const std::string line = request["line"].get<std::string>();
    const SuggestResult r = embedding.empty() ? suggest(bundle, line, k) : suggest(bundle, line, embedding, k);
    json out;
    out["oov"] = r.oov;
    out["anchor"] = r.anchor_line;
    out["suggestions"] = json::array();
    for (const auto& s : r.suggestions) {
      out["suggestions"].push_back({{"line", s.line}, {"distance", s.distance}, {"rank", s.rank}});
    }
    return {200, out.dump()};
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Input) return error_reply(422, e.what());
    return error_reply(500, e.what());
  } catch (const std::exception& e) {
    return error_reply(500, e.what());
  }
}

HttpReply handle_health() { return {200, json{{"status", "ok"}}.dump()}; }

HttpReply handle_stats(const ArtifactBundle& bundle) {
  json bytes = json::object();
  for (const auto& [name, size] : bundle.artifact_bytes()) bytes[name] = size;
  bytes["total"] = bundle.total_bytes();
  json out{{"vocab", bundle.vocab_size()}, {"dim", bundle.dim()}, {"artifact_bytes", bytes}};
  return {200, out.dump()};
}

struct HttpServer::Impl {
  explicit Impl(const ArtifactBundle& b) : bundle(b) {}
  const ArtifactBundle& bundle;
  httplib::Server server;
};

HttpServer::HttpServer(const ArtifactBundle& bundle) : impl_(std::make_unique<Impl>(bundle)) {
  auto& srv = impl_->server;
  const ArtifactBundle& b = impl_->bundle;
  auto send = [](httplib::Response& res, const HttpReply& reply) {
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  };
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  srv.Post("/v1/suggest", [&b, send](const httplib::Request& req, httplib::Response& res) {
    send(res, handle_suggest(b, req.body));
  });
  srv.Get("/v1/health", [send](const httplib::Request&, httplib::Response& res) { send(res, handle_health()); });
  srv.Get("/v1/stats", [&b, send](const httplib::Request&, httplib::Response& res) { send(res, handle_stats(b)); });
  srv.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  srv.set_exception_handler([send](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    send(res, error_reply(500, what));
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) fail(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

void serve_http(const ArtifactBundle& bundle, const std::string& host, int port) {
  HttpServer server(bundle);
  const int bound = server.bind(host, port);
  std::cerr << "serving " << bundle.vocab_size() << " lines on http://" << host << ":" << bound << "/v1\n";
  server.listen();
}

}  // namespace nextline
