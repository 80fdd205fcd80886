#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

#include "alnids/error.hpp"
#include "alnids/label_service.hpp"
#include "httplib.h"
#include "test_support.hpp"

using namespace alnids;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::shared_ptr<const PreparedDataset> shared_data() {
  static const auto d = std::make_shared<const PreparedDataset>(alnids::testing::small_prepared("back.", 0.03));
  return d;
}

json session_request(std::size_t budget = 4, const std::string& strategy = "entropy", bool replay = false) {
  return {{"dataset", "back"},
          {"replay_assist", replay},
          {"config", {{"n_seed", 40}, {"budget", budget}, {"strategy", strategy}, {"learner", "rf"}, {"seed", 2}}}};
}

std::shared_ptr<LabelService> make_service(const fs::path& state = {}) {
  auto svc = std::make_shared<LabelService>(ServiceOptions{{}, state});
  svc->register_dataset("back", shared_data());
  return svc;
}

// Labels every query from ground truth until the session is done.
std::vector<std::size_t> drive(LabelService& svc, const std::string& id) {
  std::vector<std::size_t> asked;
  const auto& labels = shared_data()->splits.train.labels;
  while (true) {
    const ApiResponse q = svc.next_query(id);
    if (q.status == 410) break;
    EXPECT_EQ(q.status, 200);
    const auto idx = q.body.at("query").at("index").get<std::size_t>();
    asked.push_back(idx);
    const ApiResponse r =
        svc.submit_label(id, {{"query_number", q.body["query"]["query_number"]}, {"label", labels[idx] ? 1 : 0}});
    EXPECT_EQ(r.status, 200);
  }
  return asked;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("alnids_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(LabelService, HealthCarriesSchemaVersion) {
  const auto svc = make_service();
  const auto r = svc->health();
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body.at("schema_version"), kSchemaVersion);
  EXPECT_EQ(r.body.at("status"), "ok");
}

TEST(LabelService, CreateValidatesTheRequest) {
  const auto svc = make_service();
  EXPECT_EQ(svc->create_session(json::array()).status, 400);
  EXPECT_EQ(svc->create_session({{"config", json::object()}}).status, 400);
  EXPECT_EQ(svc->create_session({{"dataset", "smurf"}}).status, 400);
  auto bad = session_request();
  bad["config"]["colour"] = "red";
  EXPECT_EQ(svc->create_session(bad).status, 400);
  bad = session_request();
  bad["config"]["learner"] = "if";
  EXPECT_EQ(svc->create_session(bad).status, 400);
  bad = session_request();
  bad["config"]["n_seed"] = 1000000;
  EXPECT_EQ(svc->create_session(bad).status, 400);
  EXPECT_EQ(svc->session_count(), 0u);
}

TEST(LabelService, LabelsFlowUntilTheBudgetIsSpent) {
  const auto svc = make_service();
  const ApiResponse created = svc->create_session(session_request(3));
  ASSERT_EQ(created.status, 201);
  const std::string id = created.body.at("session_id");
  EXPECT_EQ(created.body.at("status"), "awaiting_label");
  EXPECT_EQ(created.body.at("query").at("query_number"), 1);
  EXPECT_EQ(created.body.at("query").at("features").size(), kNumFeatures);

  const auto q1 = svc->next_query(id);
  EXPECT_EQ(q1.body.at("query"), created.body.at("query"));
  EXPECT_EQ(svc->submit_label(id, {{"query_number", 1}, {"label", "banana"}}).status, 400);
  EXPECT_EQ(svc->submit_label(id, {{"label", "attack"}}).status, 400);
  EXPECT_EQ(svc->submit_label(id, {{"query_number", 2}, {"label", "attack"}}).status, 409);
  EXPECT_EQ(svc->submit_label(id, {{"query_number", 1}, {"label", "attack"}}).status, 200);
  // A duplicate submission of an answered query is a conflict, not a second label.
  EXPECT_EQ(svc->submit_label(id, {{"query_number", 1}, {"label", "attack"}}).status, 409);
  EXPECT_EQ(svc->submit_label(id, {{"query_number", 2}, {"label", "normal"}}).status, 200);
  EXPECT_EQ(svc->submit_label(id, {{"query_number", 3}, {"label", 0}}).status, 200);
  EXPECT_EQ(svc->next_query(id).status, 410);
  EXPECT_EQ(svc->submit_label(id, {{"query_number", 4}, {"label", 0}}).status, 410);

  const auto m = svc->metrics(id);
  ASSERT_EQ(m.status, 200);
  EXPECT_EQ(m.body.at("schema_version"), kSchemaVersion);
  EXPECT_EQ(m.body.at("status"), "done");
  EXPECT_EQ(m.body.at("labels_received"), 3);
  EXPECT_EQ(m.body.at("history").at(0).at("label"), 1);
  EXPECT_FALSE(m.body.contains("curve"));

  EXPECT_EQ(svc->next_query("session-99").status, 404);
  EXPECT_EQ(svc->submit_label("session-99", {{"query_number", 1}, {"label", 0}}).status, 404);
  EXPECT_EQ(svc->metrics("session-99").status, 404);
}

TEST(LabelService, ZeroBudgetSessionIsBornDone) {
  const auto svc = make_service();
  const auto created = svc->create_session(session_request(0));
  ASSERT_EQ(created.status, 201);
  EXPECT_EQ(created.body.at("status"), "done");
  EXPECT_TRUE(created.body.at("query").is_null());
  EXPECT_EQ(svc->next_query(created.body.at("session_id")).status, 410);
}

TEST(LabelService, ReplayMatchesTheBatchLoop) {
  const auto svc = make_service();
  const auto created = svc->create_session(session_request(6, "uncertainty", true));
  ASSERT_EQ(created.status, 201);
  const std::string id = created.body.at("session_id");
  const auto asked = drive(*svc, id);

  LoopConfig c;
  c.n_seed = 40;
  c.budget = 6;
  c.checkpoints = {6};
  c.strategy = Strategy::kUncertainty;
  c.learner = LearnerConfig::random_forest();
  c.seed = 2;
  ReplayOracle oracle(shared_data()->splits.train.labels);
  const Trace t = run(c, shared_data()->splits.train, shared_data()->splits.dev, oracle);
  ASSERT_EQ(asked.size(), t.events.size());
  for (std::size_t i = 0; i < asked.size(); ++i) EXPECT_EQ(asked[i], t.events[i].index);

  const auto m = svc->metrics(id).body;
  EXPECT_EQ(m.at("curve").size(), 7u);
  EXPECT_DOUBLE_EQ(m.at("latest").at("f1").get<double>(), t.events.back().dev.f1);
  EXPECT_DOUBLE_EQ(m.at("initial").at("f1").get<double>(), t.initial.f1);
  EXPECT_TRUE(m.contains("zscores"));
}

TEST(LabelService, SessionsSurviveARestart) {
  TempDir dir("sessions");
  std::string id;
  json before;
  {
    const auto svc = make_service(dir.path);
    id = svc->create_session(session_request(5)).body.at("session_id");
    const auto& labels = shared_data()->splits.train.labels;
    for (int i = 0; i < 2; ++i) {
      const auto q = svc->next_query(id).body.at("query");
      ASSERT_EQ(svc->submit_label(id, {{"query_number", q["query_number"]}, {"label", labels[q["index"]]}}).status,
                200);
    }
    before = svc->next_query(id).body;
  }
  ASSERT_TRUE(fs::exists(dir.path / (id + ".json")));
  const auto svc = make_service(dir.path);
  EXPECT_EQ(svc->restore_sessions(), 1u);
  EXPECT_EQ(svc->next_query(id).body, before);
  EXPECT_EQ(svc->metrics(id).body.at("labels_received"), 2);
  // New sessions do not reuse a restored id.
  EXPECT_NE(svc->create_session(session_request(1)).body.at("session_id"), id);
}

TEST(LabelService, ConcurrentSubmitsApplyExactlyOnce) {
  const auto svc = make_service();
  const std::string id = svc->create_session(session_request(2)).body.at("session_id");
  std::atomic<int> ok{0}, conflict{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      const int s = svc->submit_label(id, {{"query_number", 1}, {"label", "normal"}}).status;
      if (s == 200) ++ok;
      if (s == 409) ++conflict;
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(ok.load(), 1);
  EXPECT_EQ(conflict.load(), 7);
  EXPECT_EQ(svc->metrics(id).body.at("labels_received"), 1);
}

TEST(LabelServer, ServesTheJsonApi) {
  LabelServer server(make_service());
  const int port = server.start("127.0.0.1", 0);
  httplib::Client client("127.0.0.1", port);

  auto health = client.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(json::parse(health->body).at("schema_version"), kSchemaVersion);

  auto created = client.Post("/sessions", session_request(2).dump(), "application/json");
  ASSERT_TRUE(created);
  ASSERT_EQ(created->status, 201);
  const std::string id = json::parse(created->body).at("session_id");

  auto query = client.Get("/sessions/" + id + "/query");
  ASSERT_TRUE(query);
  EXPECT_EQ(query->status, 200);
  const json q = json::parse(query->body);
  EXPECT_EQ(q.at("schema_version"), kSchemaVersion);

  auto label = client.Post("/sessions/" + id + "/label", R"({"query_number": 1, "label": "attack"})",
                           "application/json");
  ASSERT_TRUE(label);
  EXPECT_EQ(label->status, 200);
  EXPECT_EQ(json::parse(label->body).at("schema_version"), kSchemaVersion);

  auto dup = client.Post("/sessions/" + id + "/label", R"({"query_number": 1, "label": "attack"})",
                         "application/json");
  EXPECT_EQ(dup->status, 409);
  EXPECT_EQ(json::parse(dup->body).at("schema_version"), kSchemaVersion);

  auto garbage = client.Post("/sessions", "{not json", "application/json");
  EXPECT_EQ(garbage->status, 400);
  auto missing = client.Get("/sessions/nope/metrics");
  EXPECT_EQ(missing->status, 404);
  auto unknown_route = client.Get("/elsewhere");
  EXPECT_EQ(unknown_route->status, 404);
  EXPECT_EQ(json::parse(unknown_route->body).at("schema_version"), kSchemaVersion);

  auto metrics = client.Get("/sessions/" + id + "/metrics");
  EXPECT_EQ(metrics->status, 200);
  EXPECT_EQ(json::parse(metrics->body).at("labels_received"), 1);
  server.stop();
}

TEST(LabelServer, BusyPortIsAnError) {
  LabelServer first(make_service());
  const int port = first.start("127.0.0.1", 0);
  LabelServer second(make_service());
  EXPECT_THROW(second.bind("127.0.0.1", port), Error);
}
