#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "hfrisk/date.hpp"
#include "hfrisk/workflow.hpp"

namespace hfrisk {

enum class ServiceMode { live, sim };

struct ServiceConfig {
  std::string host = "127.0.0.1";
  /// 0 picks a free port.
  int port = 8080;
  std::filesystem::path data_dir = "data";
  /// Id under data_dir/models, or a path to a model file.
  std::optional<std::string> model_id;
  /// Rule file used when no model is active; default rules otherwise.
  std::optional<std::filesystem::path> rules_file;
  std::size_t capacity = 20;
  int coverage_days = 14;
  ServiceMode mode = ServiceMode::live;
  /// Initial sim-mode date when the store has no clock yet.
  std::optional<Date> sim_start;
  /// Architecture and defaults for POST /train.
  ExperimentConfig experiment;
};

/// HTTP response as seen by a caller of Service::handle.
struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// The REST service. Construction opens the store (replaying the log) and
/// loads the active model; a corrupt store throws CorruptStoreError.
///
/// Reads run concurrently; writes take an exclusive lock. Training runs on
/// one background worker, jobs queue behind it.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the listening socket and returns the port.
  int bind();
  /// Serves until stop(). Calls bind() if needed.
  void run();
  void stop();

  /// Dispatches one request without HTTP; `query` holds URL parameters.
  ApiResponse handle(std::string_view method, std::string_view path,
                     const std::map<std::string, std::string>& query = {},
                     const std::string& body = {});

  /// Blocks until the training queue is empty.
  void wait_for_jobs();
  Date today() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hfrisk
