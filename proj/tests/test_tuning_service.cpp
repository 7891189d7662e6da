#include <future>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "fixtures.hpp"
#include "httplib.h"
#include "liquid/divergence_fit.hpp"
#include "liquid/model_io.hpp"
#include "liquid/synth.hpp"
#include "liquid/tuning_service.hpp"

using namespace liquid;

namespace {

ModelSpec three_char_spec() {
  ModelSpec spec;
  CharacteristicSpec disc;
  disc.name = "d";
  disc.column = "d";
  for (int code = 0; code < 3; ++code) disc.leading.push_back(AttributePredicate::code(std::to_string(code), code));
  spec.characteristics = {fixture::liquid_char("t", fixture::uniform_knots(0, 100, 21), Pattern::Ascending),
                          fixture::char965(), disc};
  return spec;
}

Dataset three_char_data(std::size_t n = 10000) {
  Dataset d = generate_synthetic(
      fixture::synth({fixture::tanh_char("t"), fixture::char965_synth(), fixture::noise_char("d")}, 11, n));
  for (double& v : d.values[2]) v = std::floor(v / 34.0);
  return d;
}

std::string csv_of(const Dataset& d) {
  std::ostringstream out;
  write_csv(d, out);
  return out.str();
}

Json create_body(const Dataset& d) {
  return {{"spec", model_spec_to_json(three_char_spec())},
          {"data_csv", csv_of(d)},
          {"split", {{"val_fraction", 0.3}, {"seed", 5}}}};
}

struct Fixture {
  TuningService service;
  Dataset data = three_char_data();
  std::string id;

  Fixture() {
    const ServiceResponse r = service.handle("POST", "/sessions", create_body(data).dump());
    REQUIRE(r.status == 201);
    id = r.body["session_id"].get<std::string>();
  }

  ServiceResponse post(const std::string& action, const Json& body) {
    return service.handle("POST", "/sessions/" + id + "/" + action, body.dump());
  }
};

FittedModel library_fit(const Dataset& full, const Lambda2Map& l2) {
  const DataSplit split = split_dataset(full, 0.3, 5);
  return fit(FitData(three_char_spec(), split.dev, &split.val), {l2, std::nullopt, {}});
}

}  // namespace

TEST_CASE("creating a session") {
  Fixture f;
  const ServiceResponse state = f.service.handle("GET", "/sessions/" + f.id + "/state", "");
  REQUIRE(state.status == 200);
  const Json& s = state.body;
  CHECK(s["locked"].empty());
  CHECK(s["ordering"].size() == 3);
  CHECK(s["grid"].size() == 22);
  CHECK(s["rows"]["dev"].get<int>() + s["rows"]["val"].get<int>() == 10000);

  const FittedModel base = library_fit(f.data, {});
  CHECK(s["baseline"]["val_divergence"].get<double>() == doctest::Approx(base.val_divergence).epsilon(1e-12));
  CHECK(s["baseline"]["dev_divergence"].get<double>() == doctest::Approx(base.dev_divergence).epsilon(1e-12));
  const std::string next = s["next"].get<std::string>();
  CHECK(next != "d");
  for (const auto& o : s["ordering"]) {
    if (o["name"] == next) continue;
    if (o["name"] == "d") continue;
    CHECK(o["contribution"].get<double>() <= s["ordering"][0]["contribution"].get<double>());
  }
  CHECK(f.service.session_count() == 1);
}

TEST_CASE("bad uploads") {
  TuningService service;
  Json no_outcome = create_body(three_char_data(500));
  std::string csv = no_outcome["data_csv"];
  csv.replace(csv.find("outcome"), 7, "result");
  no_outcome["data_csv"] = csv;
  const ServiceResponse r = service.handle("POST", "/sessions", no_outcome.dump());
  CHECK(r.status == 400);
  CHECK(r.body["code"] == "SCHEMA_VIOLATION");
  CHECK(r.body["detail"]["subject"] == "outcome");
  CHECK(r.body["message"].get<std::string>().find("outcome") != std::string::npos);

  Dataset one_class = three_char_data(500);
  std::fill(one_class.outcome.begin(), one_class.outcome.end(), 1);
  const ServiceResponse dc = service.handle("POST", "/sessions", create_body(one_class).dump());
  CHECK(dc.status == 422);
  CHECK(dc.body["code"] == "DEGENERATE_CLASSES");

  CHECK(service.handle("POST", "/sessions", "{not json").status == 400);
  CHECK(service.handle("POST", "/sessions", R"({"data_csv": "outcome,x\n1,1\n"})").status == 400);
  Json no_data = create_body(three_char_data(500));
  no_data.erase("data_csv");
  CHECK(service.handle("POST", "/sessions", no_data.dump()).status == 400);

  TuningService small({10, std::chrono::seconds(60), 1, 200});
  CHECK(small.handle("POST", "/sessions", create_body(three_char_data(500)).dump()).status == 400);
  CHECK(service.session_count() == 0);
}

TEST_CASE("refit: linear curve, caching and overrides") {
  Fixture f;
  const ServiceResponse r = f.post("refit", {{"lambda2", {{"char965", 1e10}}}});
  REQUIRE(r.status == 200);
  CHECK(r.body["cache_hit"] == false);
  CHECK(r.body["lambda2"]["char965"] == 1e10);
  REQUIRE(r.body["curves"].size() == 2);
  const Json& curve = r.body["curves"][1];
  CHECK(curve["name"] == "char965");
  const auto xs = curve["xs"].get<std::vector<double>>();
  const auto cs = curve["cs"].get<std::vector<double>>();
  CHECK(xs.size() == 200);
  CHECK(fixture::max_line_deviation(xs, cs) < 1e-3 * fixture::range_of(cs));
  CHECK(r.body["discrete"].size() == 2);

  const FittedModel direct = library_fit(f.data, {{"char965", 1e10}});
  CHECK(r.body["val_divergence"].get<double>() == doctest::Approx(direct.val_divergence).epsilon(1e-9));

  const ServiceResponse again = f.post("refit", {{"lambda2", {{"char965", 1e10}}}});
  CHECK(again.body["cache_hit"] == true);
  Json a = r.body, b = again.body;
  a.erase("cache_hit");
  b.erase("cache_hit");
  CHECK(a == b);

  const ServiceResponse pattern = f.post("refit", {{"patterns", {{"char965", "ascending"}}}});
  REQUIRE(pattern.status == 200);
  CHECK(pattern.body["patterns"]["char965"] == "ascending");
  CHECK(pattern.body["cache_hit"] == false);
  const auto pcs = pattern.body["curves"][1]["cs"].get<std::vector<double>>();
  for (std::size_t i = 1; i < pcs.size(); ++i) CHECK(pcs[i] >= pcs[i - 1] - 1e-9);

  CHECK(f.post("refit", {{"lambda2", {{"nope", 1.0}}}}).status == 404);
  CHECK(f.post("refit", {{"lambda2", {{"t", -1.0}}}}).status == 400);
  CHECK(f.post("refit", {{"patterns", {{"d", "ascending"}}}}).status == 400);
  CHECK(f.post("refit", {{"patterns", {{"t", "sideways"}}}}).status == 400);
  const ServiceResponse state = f.service.handle("GET", "/sessions/" + f.id, "");
  CHECK(state.body["lambda2"]["t"] == 0.0);
  CHECK(state.body["last"]["val_divergence"] == pattern.body["val_divergence"]);
}

TEST_CASE("lock flow to the end and replay") {
  Fixture f;
  const ServiceResponse first = f.service.handle("GET", "/sessions/" + f.id + "/state", "");
  std::string next = first.body["next"];
  CHECK(f.post("lock", {{"characteristic", "d"}}).status == 400);
  CHECK(f.post("lock", {{"characteristic", "zzz"}}).status == 404);
  CHECK(f.post("lock", Json::object()).status == 400);

  const std::vector<double> chosen{1e4, std::pow(10.0, 7.5)};
  Json last;
  for (std::size_t step = 0; step < 2; ++step) {
    const std::string name = next;
    const ServiceResponse r = f.post("lock", {{"characteristic", name}, {"lambda2", chosen[step]}});
    REQUIRE(r.status == 200);
    CHECK(r.body["locked"].back() == name);
    CHECK(r.body["lambda2"][name] == chosen[step]);
    CHECK(f.post("refit", {{"lambda2", {{name, 1.0}}}}).status == 409);
    CHECK(f.post("lock", {{"characteristic", name}}).status == 409);
    if (step == 0) {
      REQUIRE(r.body["next"].is_string());
      CHECK(r.body["next"] != name);
      CHECK(r.body["final"].is_null());
      next = r.body["next"];
    } else {
      CHECK(r.body["next"].is_null());
      REQUIRE(r.body["final"].is_object());
    }
    last = r.body;
  }
  const Json& fin = last["final"];
  Lambda2Map l2;
  for (const auto& [name, v] : fin["lambda2"].items()) l2[name] = v.get<double>();
  const FittedModel replay = library_fit(f.data, l2);
  const double reported = fin["val_divergence"].get<double>();
  CHECK(std::abs(replay.val_divergence - reported) <= 1e-9 * reported);
  CHECK(fin["baseline_val_divergence"] == first.body["baseline"]["val_divergence"]);
}

TEST_CASE("routing") {
  TuningService service;
  const ServiceResponse h = service.handle("GET", "/healthz", "");
  CHECK(h.status == 200);
  CHECK(h.body["status"] == "ok");
  CHECK(service.handle("POST", "/healthz", "").status == 405);
  CHECK(service.handle("GET", "/sessions", "").status == 405);
  CHECK(service.handle("GET", "/sessions/abc/state", "").status == 404);
  CHECK(service.handle("POST", "/sessions/abc/refit", "{}").status == 404);
  CHECK(service.handle("GET", "/nowhere", "").status == 404);
  const ServiceResponse missing = service.handle("GET", "/sessions/abc", "");
  CHECK(missing.body["code"] == "NOT_FOUND");
  CHECK(missing.body.contains("message"));
  CHECK(missing.body.contains("detail"));
}

TEST_CASE("expired sessions are dropped") {
  TuningService service({1'000'000, std::chrono::seconds(0), 1, 50});
  const ServiceResponse r = service.handle("POST", "/sessions", create_body(three_char_data(2000)).dump());
  REQUIRE(r.status == 201);
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  CHECK(service.handle("GET", "/sessions/" + r.body["session_id"].get<std::string>(), "").status == 404);
  CHECK(service.session_count() == 0);
}

TEST_CASE("one round trip over HTTP") {
  TuningService service;
  std::promise<int> bound;
  std::thread server([&] { service.serve("127.0.0.1", 0, [&](int port) { bound.set_value(port); }); });
  const int port = bound.get_future().get();
  httplib::Client client("127.0.0.1", port);
  const auto health = client.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(health->get_header_value("Content-Type") == "application/json");

  const auto created = client.Post("/sessions", create_body(three_char_data(2000)).dump(), "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const Json body = Json::parse(created->body);
  const auto state = client.Get("/sessions/" + body["session_id"].get<std::string>() + "/state");
  REQUIRE(state);
  CHECK(Json::parse(state->body)["session_id"] == body["session_id"]);
  service.stop();
  server.join();
}
