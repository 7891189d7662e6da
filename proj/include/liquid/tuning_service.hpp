#pragma once

// HTTP JSON service for interactive smoothness tuning. Sessions hold a loaded
// dataset split, the current lambda2 map, locked characteristics and a fit
// cache; every number in a response is a pure function of
// (dataset, spec, lambda2 map, patterns).
//
//   POST /sessions              {spec, data_csv | data_path, split?}
//   POST /sessions/{id}/refit   {lambda2?: {name: value}, patterns?: {name: pattern}}
//   POST /sessions/{id}/lock    {characteristic, lambda2?}
//   GET  /sessions/{id}/state
//   GET  /healthz
//
// Errors are {code, message, detail}: 400 malformed input, 404 unknown session
// or characteristic, 409 override of a locked characteristic, 422 fit failure.

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>

#include "json.hpp"

namespace liquid {

struct ServiceOptions {
  std::size_t max_rows = 1'000'000;
  std::chrono::seconds ttl{3600};
  /// Fits allowed to run at once across all sessions.
  int fit_slots = 2;
  std::size_t curve_points = 200;
};

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

class TuningService {
 public:
  explicit TuningService(ServiceOptions options = {});
  ~TuningService();
  TuningService(const TuningService&) = delete;
  TuningService& operator=(const TuningService&) = delete;

  /// Transport-free entry point; the HTTP server forwards every request here.
  ServiceResponse handle(const std::string& method, const std::string& path, const std::string& body);

  /// Binds and serves until stop(). Port 0 picks a free port; `on_bound`
  /// receives the port once listening.
  void serve(const std::string& host, int port, const std::function<void(int)>& on_bound = {});
  void stop();

  std::size_t session_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace liquid
