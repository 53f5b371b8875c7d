#pragma once

#include <memory>
#include <string>

#include "oasis/error.hpp"
#include "oasis/service.hpp"

namespace oasis {

// HTTP status used for each error family.
int http_status(ErrorCategory category);

// JSON front end for a SessionStore:
//   POST /sessions                 {pool_csv | pool_path, score_kind?, payload_csv | payload_path?, config?}
//   GET  /sessions/{id}/query
//   POST /sessions/{id}/labels     {pair_id, label}
//   GET  /sessions/{id}/estimate
// Errors come back as {category, message, field?, row?}. A non-empty token
// requires "Authorization: Bearer <token>" on every request.
class HttpApi {
 public:
  HttpApi(SessionStore& store, std::string token);
  ~HttpApi();

  // Binds host:port (port 0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  // Blocks serving requests until stop().
  bool serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace oasis
