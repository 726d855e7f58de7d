#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smbo/study.hpp"

namespace smbo::service {

enum class ErrorCode { not_found, invalid_input, conflict, state_error, internal };

std::string to_string(ErrorCode code);
int http_status(ErrorCode code);

/// The single error carried by every non-success response.
class ApiError : public std::runtime_error {
 public:
  ApiError(ErrorCode code, const std::string& message, nlohmann::json detail = nlohmann::json::object())
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}
  ErrorCode code() const { return code_; }
  const nlohmann::json& detail() const { return detail_; }
  nlohmann::json to_json() const;

 private:
  ErrorCode code_;
  nlohmann::json detail_;
};

/// A persisted study plus its bookkeeping.
struct StudyRecord {
  std::string id;
  std::string owner;
  std::string created;
  std::string updated;
  Study study;

  nlohmann::json to_json() const;
  nlohmann::json summary() const;
};

/// One JSON document per study in a directory. Writes go to a temporary file
/// that is renamed over the old document, so readers always see a complete
/// version. Mutations of one study are serialized by a per-study mutex and
/// guarded by the study revision (optimistic concurrency).
class StudyStore {
 public:
  explicit StudyStore(std::filesystem::path directory, Clock clock = utc_now);

  const std::filesystem::path& directory() const { return dir_; }
  const Clock& clock() const { return clock_; }

  StudyRecord create(Study study, const std::string& owner = "");
  StudyRecord load(const std::string& id) const;
  std::vector<StudyRecord> list() const;
  bool exists(const std::string& id) const;

  /// Applies `fn` to the study under its lock and persists the result
  /// before returning. If `expected_revision` is given and differs from the
  /// stored revision, throws ApiError(conflict) without calling `fn`.
  /// If `fn` throws, nothing is written.
  nlohmann::json mutate(const std::string& id, std::optional<std::uint64_t> expected_revision,
                        const std::function<nlohmann::json(Study&)>& fn);

 private:
  std::filesystem::path path_for(const std::string& id) const;
  void save(const StudyRecord& record) const;
  std::mutex& lock_for(const std::string& id);
  std::string new_id();

  std::filesystem::path dir_;
  Clock clock_;
  std::mutex locks_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct Response {
  int status = 200;
  nlohmann::json body;
};

/// Transport-independent ask-tell API. Routes:
///   POST /studies                   {space, config, owner?}
///   GET  /studies
///   GET  /studies/{id}
///   POST /studies/{id}/suggest      {q?, revision?}
///   GET  /studies/{id}/slate?k=
///   POST /studies/{id}/observe      {x, y, source?, revision?}
///   GET  /studies/{id}/history
///   GET  /studies/{id}/best?mode=observed|model
///   POST /studies/{id}/stop         {revision?}
///   POST /studies/{id}/discard      {revision?}
///   GET  /studies/{id}/curve
/// Errors map to 400 invalid_input, 404 not_found, 409 conflict,
/// 422 state_error and 500 internal, each with body {"error": ApiError}.
class Api {
 public:
  explicit Api(StudyStore& store) : store_(store) {}
  Response handle(const Request& request);

 private:
  Response dispatch(const Request& request);
  StudyStore& store_;
};

/// Data directory: $SMBO_DATA_DIR if set, else `fallback`.
std::filesystem::path data_directory(const std::filesystem::path& fallback);

}  // namespace smbo::service
