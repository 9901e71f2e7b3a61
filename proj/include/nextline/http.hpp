#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "nextline/service.hpp"

namespace nextline {

struct HttpReply {
  int status = 200;
  std::string body;  ///< JSON
};

/// POST /v1/suggest with {"line": str, "k": int?, "text_embedding": [float]?}.
/// 200 {"oov", "anchor", "suggestions": [{"line","distance","rank"}]},
/// 400 malformed request, 422 nothing to suggest, 500 otherwise.
HttpReply handle_suggest(const ArtifactBundle& bundle, std::string_view body);
/// GET /v1/health
HttpReply handle_health();
/// GET /v1/stats: vocabulary size, dimension and per-artifact bytes.
HttpReply handle_stats(const ArtifactBundle& bundle);

/// JSON-over-HTTP front end for a loaded bundle. Handlers run concurrently
/// on the server's thread pool; the bundle is only read.
class HttpServer {
 public:
  explicit HttpServer(const ArtifactBundle& bundle);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds `host:port` (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Blocking convenience: bind, log the address to stderr, serve forever.
void serve_http(const ArtifactBundle& bundle, const std::string& host, int port);

}  // namespace nextline
