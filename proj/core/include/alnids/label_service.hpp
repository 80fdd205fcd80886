#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "alnids/active_loop.hpp"
#include "alnids/dataset.hpp"
#include "json.hpp"

namespace alnids {

inline constexpr int kSchemaVersion = 1;

enum class SessionStatus { kAwaitingLabel, kRetraining, kDone };
std::string_view to_string(SessionStatus s);

// Reply of an API call, independent of the transport.
struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

// One labeling session: the active loop driven by labels arriving over the API.
class LabelSession {
 public:
  LabelSession(std::string id, std::string dataset, LoopConfig config, bool replay_assist,
               std::shared_ptr<const PreparedDataset> data);

  const std::string& id() const { return id_; }
  SessionStatus status() const { return status_.load(); }
  std::size_t labels_received() const;

  nlohmann::json query_document() const;
  // Applies the label when `query_number` matches the pending query.
  ApiResponse submit(std::size_t query_number, std::uint8_t label);
  nlohmann::json metrics_document() const;

  // Everything needed to rebuild the session by replaying its labels.
  nlohmann::json persisted() const;
  static std::unique_ptr<LabelSession> restore(const nlohmann::json& doc,
                                               std::shared_ptr<const PreparedDataset> data);

 private:
  nlohmann::json pending_document_locked() const;
  nlohmann::json progress_locked() const;
  void advance_locked();

  std::string id_;
  std::string dataset_;
  LoopConfig config_;
  bool replay_assist_;
  std::shared_ptr<const PreparedDataset> data_;

  // Serializes mutation; readers of status_ never block on a retrain.
  mutable std::mutex mutex_;
  std::atomic<SessionStatus> status_{SessionStatus::kAwaitingLabel};
  ActiveState state_;
  MetricsSnapshot initial_;
  std::optional<PendingQuery> pending_;
  std::vector<QueryEvent> history_;
};

struct ServiceOptions {
  // Root written by `prepare`; datasets are looked up by name beneath it.
  std::filesystem::path data_dir;
  // Session files live here; empty disables persistence.
  std::filesystem::path state_dir;
};

// Transport-free session manager behind the HTTP routes.
class LabelService {
 public:
  explicit LabelService(ServiceOptions options);

  // Makes an in-memory dataset available under `name` (used by tests and
  // embedders that do not go through the data directory).
  void register_dataset(const std::string& name, std::shared_ptr<const PreparedDataset> data);

  // Reloads every persisted session and replays its labels.
  std::size_t restore_sessions();

  ApiResponse health() const;
  ApiResponse create_session(const nlohmann::json& request);
  ApiResponse next_query(const std::string& id) const;
  ApiResponse submit_label(const std::string& id, const nlohmann::json& request);
  ApiResponse metrics(const std::string& id) const;

  std::size_t session_count() const;

 private:
  std::shared_ptr<const PreparedDataset> dataset(const std::string& name);
  std::shared_ptr<LabelSession> find(const std::string& id) const;
  void persist(const LabelSession& session) const;

  ServiceOptions options_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const PreparedDataset>> datasets_;
  std::map<std::string, std::shared_ptr<LabelSession>> sessions_;
  std::size_t next_id_ = 1;
};

// HTTP front end: POST /sessions, GET /sessions/{id}/query,
// POST /sessions/{id}/label, GET /sessions/{id}/metrics, GET /health.
class LabelServer {
 public:
  explicit LabelServer(std::shared_ptr<LabelService> service);
  ~LabelServer();

  LabelServer(const LabelServer&) = delete;
  LabelServer& operator=(const LabelServer&) = delete;

  // Binds the socket; throws if the address is unavailable. Port 0 picks a
  // free port. Returns the bound port.
  int bind(const std::string& host, int port);
  // Serves until stop(); blocks.
  void listen();
  // bind() + listen() on a background thread.
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace alnids
