#include <doctest.h>


#include <sstream>
#include <thread>

#include "fixtures.hpp"
#include "groupscope/api_service.hpp"
#include "groupscope/payloads.hpp"
#include "groupscope/synthetic.hpp"
#include "oracles.hpp"

// After Eigen: resolv.h defines a _res macro.
#include <httplib.h>

using namespace groupscope;
using nlohmann::json;

namespace {

ApiRequest get(std::string path, std::multimap<std::string, std::string> query = {}) {
  return {"GET", std::move(path), std::move(query), "", ""};
}

ApiRequest post(std::string path, std::string body, std::string type = "application/json") {
  return {"POST", std::move(path), {}, std::move(body), std::move(type)};
}

json body(const ApiResponse& r) { return json::parse(r.body); }

ServiceConfig config() {
  ServiceConfig c;
  c.seed = 7;
  return c;
}

EmbeddingPair small_embeddings() { return EmbeddingPair::synthetic(4, 101, 202); }

}  // namespace

TEST_SUITE("api") {

TEST_CASE("health and schema") {
  ApiService api(config(), small_embeddings());
  CHECK(api.handle(get("/health")).status == 200);
  const auto s = api.handle(get("/schema"));
  CHECK(s.status == 200);
  CHECK(body(s).contains("endpoints"));
  CHECK(api.handle(get("/nowhere")).status == 404);
}

TEST_CASE("dataset upload is validated and idempotent") {
  ApiService api(config(), small_embeddings());
  CHECK(api.handle(get("/datasets/current")).status == 409);

  const auto jsonl = to_jsonl(fixtures::depth3());
  const auto first = api.handle(post("/datasets", jsonl, "application/x-ndjson"));
  REQUIRE(first.status == 201);
  const auto j = body(first);
  CHECK(j["n_instances"] == 36);
  CHECK(j["n_attributes"] == 7);
  const auto expected = assign_split(ingest_text(jsonl, default_schema()), {}, 7);
  CHECK(j["checksum"] == expected.checksum());
  CHECK(j["checksum"] == oracle::sha256(dataset_body(expected).dump()));
  CHECK(j["id"] == j["checksum"].get<std::string>().substr(0, 16));

  const auto again = api.handle(post("/datasets", json{{"jsonl", jsonl}}.dump()));
  CHECK(again.status == 200);
  CHECK(body(again)["checksum"] == j["checksum"]);

  auto broken = jsonl;
  broken.insert(broken.find('\n') + 1, "{\"id\": \"x\"}\n");
  const auto bad = api.handle(post("/datasets", broken, "application/x-ndjson"));
  CHECK(bad.status == 400);
  CHECK(body(bad)["error"]["message"].get<std::string>().find("line 2") != std::string::npos);
}

TEST_CASE("instance search and paging") {
  ApiService api(config(), small_embeddings());
  const auto d = fixtures::depth3();
  api.load_dataset(d);
  const auto all = body(api.handle(get("/instances")));
  CHECK(all["total"] == d.size());
  CHECK(all["items"].size() == 20);
  CHECK(all["items"][0]["id"] == "1");
  CHECK(all["items"][0]["attributes"]["Care"]["value"] == "virtue");

  const auto hit = body(api.handle(get("/instances", {{"q", "NUMBER 1"}})));
  CHECK(hit["total"] == search(d, "number 1").size());

  const auto beyond = body(api.handle(get("/instances", {{"page", "9"}})));
  CHECK(beyond["items"].empty());
  CHECK(beyond["total"] == d.size());
  CHECK(api.handle(get("/instances", {{"page_size", "0"}})).status == 400);
}

TEST_CASE("insight endpoints") {
  ApiService api(config(), small_embeddings());
  const auto blobs = blob_corpus(300, 11);
  api.load_dataset(blobs.dataset);

  const auto density = body(api.handle(get("/attributes/Care/density")));
  double total = 0;
  for (const auto& p : density["groups"]["Red"]["probabilities"]) total += p["probability"].get<double>();
  CHECK(std::fabs(total - 1.0) < 1e-9);
  CHECK(api.handle(get("/attributes/Arousal/density")).status == 404);

  const auto sub = api.handle(get("/subgroups", {{"attrs", "Valence,Dominance"}, {"kmax", "10"}}));
  REQUIRE(sub.status == 200);
  CHECK(body(sub)["chosen_k"] == 3);
  CHECK(api.handle(get("/subgroups", {{"attrs", "Valence"}, {"kmax", "1"}})).status == 400);

  const auto trend = body(api.handle(get("/trend", {{"attrs", "Valence,Dominance"}, {"selection", "subgroup:2"}})));
  const auto members = body(sub)["subgroups"][1]["members"];
  CHECK(trend["lines"].size() == members.size());

  const auto summary = body(api.handle(get("/attributes/summary", {{"attrs", "Valence,Care"}})));
  CHECK(summary["attributes"].size() == 2);

  CHECK(api.handle(get("/attributes/Valence/cues")).status == 409);
  CHECK(api.handle(get("/eval/histogram")).status == 409);
}

TEST_CASE("GET endpoints are replay-safe") {
  ApiService api(config(), small_embeddings());
  api.load_dataset(fixtures::depth3());
  REQUIRE(api.handle(post("/tree/fit", R"({"max_depth": 3, "min_leaf": 2})")).status == 200);
  for (const auto& r : {get("/datasets/current"), get("/instances", {{"q", "post"}}), get("/attributes/summary"),
                        get("/attributes/Valence/density"), get("/subgroups", {{"kmax", "5"}}), get("/trend"),
                        get("/eval/histogram"), get("/tree")}) {
    const auto a = api.handle(r);
    const auto b = api.handle(r);
    CHECK(a.status == 200);
    CHECK(a.body == b.body);
  }
}

TEST_CASE("explain endpoint") {
  ApiService api(config(), small_embeddings());
  const auto d = fixtures::depth1();
  api.load_dataset(d);
  CHECK(api.handle(post("/explain", R"({"mode": "p", "fact_id": "2"})")).status == 409);
  REQUIRE(api.handle(post("/tree/fit", R"({"attributes": ["Valence", "Dominance", "Fairness"], "min_leaf": 1})"))
              .status == 200);

  const auto p = api.handle(post("/explain", R"({"mode": "p", "fact_id": "2"})"));
  REQUIRE(p.status == 200);
  const auto split = assign_split(d, {}, 7);
  const auto tree = fit_tree(split, {"Valence", "Dominance", "Fairness"}, Group::red, {4, 1});
  const auto direct = to_json(explain(tree, split, ContrastMode::p, "2"), tree);
  CHECK(p.body == render_artifact(direct));
  CHECK(body(p)["narrative"].get<std::string>().rfind("Instance 2 is classified as Red rather than Blue", 0) == 0);

  const auto same = api.handle(post("/explain", R"({"mode": "o", "fact_id": "2", "other_id": "3"})"));
  CHECK(same.status == 422);
  CHECK(body(same)["error"]["message"].get<std::string>().find("p-mode") != std::string::npos);
  CHECK(api.handle(post("/explain", R"({"mode": "p", "fact_id": "999"})")).status == 404);
  CHECK(api.handle(post("/explain", R"({"mode": "x", "fact_id": "2"})")).status == 400);
  CHECK(api.handle(post("/explain", "not json")).status == 400);
}

TEST_CASE("training jobs, metrics and cues") {
  ApiService api(config(), small_embeddings());
  PlantedCorpusConfig pc;
  pc.instances = 160;
  pc.seed = 3;
  const auto data = api.load_dataset(planted_corpus(pc));
  CHECK(api.handle(get("/models/Dominance")).status == 404);

  const auto started = api.handle(post("/models/Dominance/train", R"({"max_epochs": 4, "hidden_size": 4})"));
  REQUIRE(started.status == 202);
  CHECK(body(started)["config"]["lambda"] == 0.5);
  CHECK(api.handle(post("/models/Dominance/train", "{}")).status == 409);
  CHECK(api.handle(post("/models/Arousal/train", "{}")).status == 404);
  CHECK(api.handle(post("/models/Valence/train", R"({"lambda": 2})")).status == 400);
  api.wait_for_jobs();

  const auto status = body(api.handle(get("/models/Dominance")));
  CHECK(status["status"] == "done");
  CHECK(status["log"].size() >= 1);

  // Metrics equal a direct evaluation of the same snapshot.
  const auto snap = api.handle(get("/models/Dominance/snapshot"));
  REQUIRE(snap.status == 200);
  const auto model = model_from_json(json::parse(snap.body));
  const auto d = assign_split(planted_corpus(pc), {}, 7);
  CHECK(status["metrics"] == to_json(evaluate(model, d, small_embeddings()).metrics));

  // Unit weights reproduce the miner export byte for byte.
  const auto jsonl = api.handle(get("/attributes/Dominance/cues", {{"format", "jsonl"}, {"top", "0"}}));
  REQUIRE(jsonl.status == 200);
  CHECK(jsonl.content_type == "application/x-ndjson");
  CHECK(jsonl.body == cues_to_jsonl(mine(model, d, small_embeddings())));

  const auto top = body(api.handle(get("/attributes/Dominance/cues")));
  CHECK(top["cues"].size() == 10);
  const auto scaled = body(api.handle(get("/attributes/Dominance/cues", {{"u_p", "2"}, {"u_l", "2"}, {"u_r", "2"}, {"u_f", "2"}})));
  for (std::size_t i = 0; i < 10; ++i) CHECK(scaled["cues"][i]["instance_id"] == top["cues"][i]["instance_id"]);
  CHECK(api.handle(get("/attributes/Dominance/cues", {{"u_p", "0"}, {"u_l", "0"}})).status == 400);

  const auto hist = body(api.handle(get("/eval/histogram", {{"source", "neural"}, {"attribute", "Dominance"}})));
  CHECK(hist["histogram"]["total"] == d.bucket(SplitBucket::test).size());

  const auto items = body(api.handle(get("/instances", {{"page_size", "3"}})));
  CHECK(items["items"][0]["spans"].contains("Dominance"));
}

TEST_CASE("replacing the dataset drops every cache") {
  ApiService api(config(), small_embeddings());
  api.load_dataset(fixtures::depth3());
  REQUIRE(api.handle(post("/tree/fit", "{}")).status == 200);
  api.handle(get("/subgroups", {{"kmax", "4"}}));
  const auto next = api.load_dataset(fixtures::depth2());
  CHECK(api.handle(get("/tree")).status == 409);
  const auto sub = body(api.handle(get("/subgroups", {{"kmax", "4"}})));
  CHECK(sub["checksum"] == next["checksum"]);
  CHECK(body(api.handle(get("/instances")))["checksum"] == next["checksum"]);
}

TEST_CASE("HTTP transport") {
  auto cfg = config();
  cfg.port = 0;
  ApiService api(cfg, small_embeddings());
  api.load_dataset(fixtures::depth1());
  std::ostringstream log;
  std::thread server([&] { api.serve(log); });
  REQUIRE(api.wait_until_listening(5000));
  httplib::Client client("127.0.0.1", api.bound_port());
  const auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  const auto inst = client.Get("/instances?q=post&page_size=2");
  REQUIRE(inst);
  CHECK(json::parse(inst->body)["items"].size() == 2);
  const auto fit = client.Post("/tree/fit", "{\"min_leaf\": 1}", "application/json");
  REQUIRE(fit);
  CHECK(fit->status == 200);
  api.stop();
  server.join();
  std::istringstream lines(log.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    const auto j = json::parse(line);
    CHECK(j.contains("method"));
    CHECK(j.contains("ms"));
    ++n;
  }
  CHECK(n == 3);
}

}  // TEST_SUITE
