#include "alnids/label_service.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "alnids/ensemble.hpp"
#include "alnids/error.hpp"
#include "alnids/experiments.hpp"
#include "alnids/learners.hpp"
#include "alnids/metrics.hpp"
#include "httplib.h"

namespace alnids {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kTopImportances = 10;

json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

json error_body(const std::string& message) {
  return {{"schema_version", kSchemaVersion}, {"error", message}};
}

ApiResponse error_response(int status, const std::string& message) { return {status, error_body(message)}; }

// Gini importances of the random forest behind `model`, if there is one.
json importances(const ProbabilisticClassifier& model) {
  const Model* forest = nullptr;
  if (const auto* m = dynamic_cast<const Model*>(&model)) {
    if (m->kind() == LearnerKind::kRandomForest) forest = m;
  } else if (const auto* e = dynamic_cast<const EnsembleModel*>(&model)) {
    for (const auto& member : e->spec().members) {
      if (member.model.kind() == LearnerKind::kRandomForest) {
        forest = &member.model;
        break;
      }
    }
  }
  json out = json::array();
  if (forest == nullptr) return out;
  auto ranked = feature_importance(*forest);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  for (std::size_t i = 0; i < ranked.size() && i < kTopImportances; ++i) {
    out.push_back({{"feature", ranked[i].first}, {"importance", ranked[i].second}});
  }
  return out;
}

LoopConfig loop_config_from_request(const json& doc) {
  LoopConfig c;
  bool checkpoints_given = false;
  for (const auto& [key, value] : doc.items()) {
    if (key == "n_seed") {
      c.n_seed = value.get<std::size_t>();
    } else if (key == "budget") {
      c.budget = value.get<std::size_t>();
    } else if (key == "checkpoints") {
      c.checkpoints = value.get<std::vector<std::size_t>>();
      checkpoints_given = true;
    } else if (key == "learner") {
      c.learner = learner_spec(value.get<std::string>());
    } else if (key == "strategy") {
      c.strategy = parse_strategy(value.get<std::string>());
    } else if (key == "seed") {
      c.seed = value.get<std::uint64_t>();
    } else if (key == "tie_tolerance") {
      c.tie_tolerance = value.get<double>();
    } else {
      throw InvalidArgument("unknown config key: " + key);
    }
  }
  if (!checkpoints_given) {
    std::erase_if(c.checkpoints, [&](std::size_t k) { return k > c.budget; });
  }
  c.validate();
  return c;
}

void write_atomically(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::kAwaitingLabel: return "awaiting_label";
    case SessionStatus::kRetraining: return "retraining";
    case SessionStatus::kDone: return "done";
  }
  return "unknown";
}

LabelSession::LabelSession(std::string id, std::string dataset, LoopConfig config, bool replay_assist,
                           std::shared_ptr<const PreparedDataset> data)
    : id_(std::move(id)),
      dataset_(std::move(dataset)),
      config_(std::move(config)),
      replay_assist_(replay_assist),
      data_(std::move(data)),
      state_(initialize(config_, data_->splits.train)) {
  initial_ = evaluate(*state_.model, data_->splits.dev);
  std::lock_guard lock(mutex_);
  advance_locked();
}

std::size_t LabelSession::labels_received() const {
  std::lock_guard lock(mutex_);
  return history_.size();
}

void LabelSession::advance_locked() {
  pending_ = propose(state_);
  status_ = pending_ ? SessionStatus::kAwaitingLabel : SessionStatus::kDone;
}

json LabelSession::pending_document_locked() const {
  if (!pending_) return nullptr;
  json features = json::array();
  for (const auto& [name, value] : data_->encoder.decode(data_->splits.train.matrix.row(pending_->index))) {
    features.push_back({{"name", name}, {"value", value}});
  }
  return {{"query_number", pending_->query_number},
          {"index", pending_->index},
          {"budget", config_.budget},
          {"queries_used", state_.queries_used},
          {"queries_remaining", config_.budget - state_.queries_used},
          {"strategy", to_string(config_.strategy)},
          {"score", pending_->score},
          {"probability", number_or_null(pending_->probability)},
          {"features", features},
          {"importances", importances(*state_.model)}};
}

json LabelSession::query_document() const {
  json doc = {{"schema_version", kSchemaVersion}, {"session_id", id_}};
  if (status_.load() == SessionStatus::kRetraining) {
    doc["status"] = to_string(SessionStatus::kRetraining);
    doc["query"] = nullptr;
    return doc;
  }
  std::lock_guard lock(mutex_);
  doc["status"] = to_string(status_.load());
  doc["query"] = pending_document_locked();
  return doc;
}

json LabelSession::progress_locked() const {
  json doc = {{"schema_version", kSchemaVersion},
              {"session_id", id_},
              {"status", to_string(status_.load())},
              {"labels_received", history_.size()},
              {"queries_remaining", config_.budget - state_.queries_used},
              {"query", pending_document_locked()}};
  if (replay_assist_) doc["metrics"] = to_json(history_.empty() ? initial_ : history_.back().dev);
  return doc;
}

ApiResponse LabelSession::submit(std::size_t query_number, std::uint8_t label) {
  std::lock_guard lock(mutex_);
  if (!pending_) return error_response(410, "session " + id_ + " is done");
  if (query_number != pending_->query_number) {
    return error_response(409, "query " + std::to_string(query_number) + " is not pending; the pending query is " +
                                   std::to_string(pending_->query_number));
  }
  status_ = SessionStatus::kRetraining;
  try {
    history_.push_back(apply_label(state_, *pending_, label, data_->splits.dev));
  } catch (...) {
    status_ = SessionStatus::kAwaitingLabel;
    throw;
  }
  advance_locked();
  return {200, progress_locked()};
}

json LabelSession::metrics_document() const {
  std::lock_guard lock(mutex_);
  json history = json::array();
  for (const auto& e : history_) {
    history.push_back({{"query_number", e.query_number},
                       {"index", e.index},
                       {"label", e.label},
                       {"score", e.score},
                       {"probability", number_or_null(e.probability)}});
  }
  json doc = {{"schema_version", kSchemaVersion},
              {"session_id", id_},
              {"dataset", dataset_},
              {"status", to_string(status_.load())},
              {"learner", config_.learner_name()},
              {"strategy", to_string(config_.strategy)},
              {"budget", config_.budget},
              {"labels_received", history_.size()},
              {"replay_assist", replay_assist_},
              {"history", history},
              {"importances", importances(*state_.model)}};
  if (replay_assist_) {
    json curve = json::array();
    curve.push_back({{"query", 0}, {"f1", initial_.f1}});
    for (const auto& e : history_) curve.push_back({{"query", e.query_number}, {"f1", e.dev.f1}});
    doc["initial"] = to_json(initial_);
    doc["latest"] = to_json(history_.empty() ? initial_ : history_.back().dev);
    doc["curve"] = curve;
    doc["zscores"] = to_json(feature_z_scores(*state_.model, data_->splits.dev));
  }
  return doc;
}

json LabelSession::persisted() const {
  std::lock_guard lock(mutex_);
  json labels = json::array();
  for (const auto& e : history_) {
    labels.push_back({{"query_number", e.query_number}, {"index", e.index}, {"label", e.label}});
  }
  return {{"schema_version", kSchemaVersion},
          {"id", id_},
          {"dataset", dataset_},
          {"replay_assist", replay_assist_},
          {"config", config_.to_json()},
          {"labels", labels}};
}

std::unique_ptr<LabelSession> LabelSession::restore(const json& doc, std::shared_ptr<const PreparedDataset> data) {
  auto session = std::make_unique<LabelSession>(doc.at("id").get<std::string>(), doc.at("dataset").get<std::string>(),
                                                LoopConfig::from_json(doc.at("config")),
                                                doc.at("replay_assist").get<bool>(), std::move(data));
  for (const auto& entry : doc.at("labels")) {
    const auto number = entry.at("query_number").get<std::size_t>();
    const auto index = entry.at("index").get<std::size_t>();
    {
      std::lock_guard lock(session->mutex_);
      if (!session->pending_ || session->pending_->index != index) {
        throw Error("session " + session->id_ + " does not replay: query " + std::to_string(number) +
                    " selects a different record");
      }
    }
    const ApiResponse r = session->submit(number, entry.at("label").get<std::uint8_t>());
    if (r.status != 200) throw Error("session " + session->id_ + " does not replay: " + r.body.dump());
  }
  return session;
}

LabelService::LabelService(ServiceOptions options) : options_(std::move(options)) {}

void LabelService::register_dataset(const std::string& name, std::shared_ptr<const PreparedDataset> data) {
  std::lock_guard lock(mutex_);
  datasets_[dataset_name(name)] = std::move(data);
}

std::shared_ptr<const PreparedDataset> LabelService::dataset(const std::string& requested) {
  const std::string name = dataset_name(requested);
  {
    std::lock_guard lock(mutex_);
    if (auto it = datasets_.find(name); it != datasets_.end()) return it->second;
  }
  if (options_.data_dir.empty() || name.empty() || name.find('/') != std::string::npos || name.front() == '.' ||
      !fs::exists(options_.data_dir / name / "metadata.json")) {
    return nullptr;
  }
  auto loaded = std::make_shared<const PreparedDataset>(load_prepared(options_.data_dir / name));
  std::lock_guard lock(mutex_);
  return datasets_.emplace(name, std::move(loaded)).first->second;
}

std::shared_ptr<LabelSession> LabelService::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

void LabelService::persist(const LabelSession& session) const {
  if (options_.state_dir.empty()) return;
  write_atomically(options_.state_dir / (session.id() + ".json"), session.persisted().dump(2) + "\n");
}

std::size_t LabelService::restore_sessions() {
  if (options_.state_dir.empty() || !fs::exists(options_.state_dir)) return 0;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(options_.state_dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::size_t restored = 0;
  for (const auto& path : files) {
    std::ifstream in(path);
    const json doc = json::parse(in);
    auto data = dataset(doc.at("dataset").get<std::string>());
    if (!data) throw Error(path.string() + ": dataset " + doc.at("dataset").get<std::string>() + " not found");
    std::shared_ptr<LabelSession> session = LabelSession::restore(doc, std::move(data));
    std::lock_guard lock(mutex_);
    const std::string& id = session->id();
    if (id.rfind("session-", 0) == 0) {
      next_id_ = std::max(next_id_, static_cast<std::size_t>(std::stoull(id.substr(8))) + 1);
    }
    sessions_[id] = std::move(session);
    ++restored;
  }
  return restored;
}

ApiResponse LabelService::health() const {
  return {200, {{"schema_version", kSchemaVersion}, {"status", "ok"}, {"sessions", session_count()}}};
}

std::size_t LabelService::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

ApiResponse LabelService::create_session(const json& request) {
  if (!request.is_object()) return error_response(400, "request body must be a JSON object");
  if (!request.contains("dataset") || !request.at("dataset").is_string()) {
    return error_response(400, "missing dataset name");
  }
  LoopConfig config;
  bool replay_assist = false;
  try {
    config = loop_config_from_request(request.value("config", json::object()));
    replay_assist = request.value("replay_assist", false);
  } catch (const std::exception& e) {
    return error_response(400, std::string("bad config: ") + e.what());
  }
  const std::string name = request.at("dataset").get<std::string>();
  auto data = dataset(name);
  if (!data) return error_response(400, "unknown dataset: " + name);
  if (data->splits.train.size() < config.n_seed) {
    return error_response(400, "dataset " + name + " has fewer training rows than n_seed");
  }

  std::string id;
  {
    std::lock_guard lock(mutex_);
    id = "session-" + std::to_string(next_id_++);
  }
  auto session = std::make_shared<LabelSession>(id, dataset_name(name), config, replay_assist, std::move(data));
  persist(*session);
  {
    std::lock_guard lock(mutex_);
    sessions_[id] = session;
  }
  json body = session->query_document();
  body["budget"] = config.budget;
  return {201, body};
}

ApiResponse LabelService::next_query(const std::string& id) const {
  const auto session = find(id);
  if (!session) return error_response(404, "unknown session: " + id);
  json doc = session->query_document();
  if (doc.at("status") == to_string(SessionStatus::kDone)) {
    json body = error_body("session " + id + " is done");
    body["session_id"] = id;
    body["status"] = doc.at("status");
    return {410, body};
  }
  return {200, doc};
}

ApiResponse LabelService::submit_label(const std::string& id, const json& request) {
  const auto session = find(id);
  if (!session) return error_response(404, "unknown session: " + id);
  if (!request.is_object() || !request.contains("query_number") || !request.at("query_number").is_number_integer() ||
      request.at("query_number").get<std::int64_t>() < 0) {
    return error_response(400, "body needs a non-negative integer query_number");
  }
  std::uint8_t label = 0;
  const json& l = request.value("label", json(nullptr));
  if (l == "attack" || l == 1) {
    label = 1;
  } else if (l == "normal" || l == 0) {
    label = 0;
  } else {
    return error_response(400, "label must be \"normal\" or \"attack\"");
  }
  ApiResponse r = session->submit(request.at("query_number").get<std::size_t>(), label);
  if (r.status == 200) persist(*session);
  return r;
}

ApiResponse LabelService::metrics(const std::string& id) const {
  const auto session = find(id);
  if (!session) return error_response(404, "unknown session: " + id);
  return {200, session->metrics_document()};
}

struct LabelServer::Impl {
  std::shared_ptr<LabelService> service;
  httplib::Server server;
  std::thread thread;
};

namespace {

void reply(httplib::Response& res, const ApiResponse& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

template <class Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    reply(res, fn());
  } catch (const InvalidArgument& e) {
    reply(res, error_response(400, e.what()));
  } catch (const std::exception& e) {
    reply(res, error_response(500, e.what()));
  }
}

}  // namespace

LabelServer::LabelServer(std::shared_ptr<LabelService> service) : impl_(std::make_unique<Impl>()) {
  impl_->service = std::move(service);
  auto& server = impl_->server;
  LabelService* svc = impl_->service.get();

  // httplib defaults to SO_REUSEPORT, which lets a second server share a busy
  // port silently. Plain SO_REUSEADDR still allows quick restarts.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });

  server.Get("/health", [svc](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { return svc->health(); });
  });
  server.Post("/sessions", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded()) return error_response(400, "body is not valid JSON");
      return svc->create_session(body);
    });
  });
  server.Get(R"(/sessions/([^/]+)/query)", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return svc->next_query(req.matches[1]); });
  });
  server.Post(R"(/sessions/([^/]+)/label)", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded()) return error_response(400, "body is not valid JSON");
      return svc->submit_label(req.matches[1], body);
    });
  });
  server.Get(R"(/sessions/([^/]+)/metrics)", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return svc->metrics(req.matches[1]); });
  });
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) res.set_content(error_body("not found").dump(), "application/json");
  });
}

LabelServer::~LabelServer() { stop(); }

int LabelServer::bind(const std::string& host, int port) {
  auto& server = impl_->server;
  if (port == 0) {
    const int bound = server.bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind " + host);
    return bound;
  }
  if (!server.bind_to_port(host, port)) {
    throw Error("cannot bind " + host + ":" + std::to_string(port) + " (address in use?)");
  }
  return port;
}

void LabelServer::listen() { impl_->server.listen_after_bind(); }

int LabelServer::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  impl_->thread = std::thread([this] { listen(); });
  impl_->server.wait_until_ready();
  return bound;
}

void LabelServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace alnids
