// Backend layer: request fingerprints, the fixture store, replay/record
// wrappers, and the live HTTP client against an in-process stub server.
#define CPPHTTPLIB_OPENSSL_SUPPORT  // must match backend.cpp's configuration
#include "httplib.h"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "symeval/backend.hpp"
#include "symeval/errors.hpp"
#include "test_util.hpp"

using namespace symeval;
using symeval::testing::TempDir;
using symeval::testing::read_file;
using symeval::testing::write_file;
using json = nlohmann::json;

namespace {

CompletionRequest make_req(const std::string& prompt) {
  CompletionRequest req;
  req.prompt = prompt;
  return req;
}

// Minimal deterministic inner backend for exercising RecordBackend.
class EchoBackend : public Backend {
 public:
  CompletionResponse complete(const CompletionRequest& req) override {
    ++calls_;
    CompletionResponse resp;
    resp.text = "echo:" + req.prompt;
    resp.model = "echo-model";
    return resp;
  }
  std::string name() const override { return "echo"; }
  int calls() const { return calls_.load(); }

 private:
  std::atomic<int> calls_{0};
};

// Runs an httplib server on a free localhost port for the lifetime of the
// object. The handler is installed by each test before requests are made.
class StubServer {
 public:
  StubServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

EndpointConfig stub_config(const StubServer& stub) {
  EndpointConfig cfg;
  cfg.base_url = stub.base_url();
  cfg.model = "stub-model";
  cfg.api_key_env = "";  // most tests do not exercise auth lookup
  cfg.retry.max_retries = 0;
  cfg.retry.initial_backoff = std::chrono::milliseconds(1);
  return cfg;
}

std::string ok_body(const std::string& text, const std::string& model = "") {
  json j;
  j["choices"] = json::array({json{{"text", text}}});
  if (!model.empty()) j["model"] = model;
  return j.dump();
}

}  // namespace

TEST_CASE("fingerprint matches the frozen canonical-json hash") {
  CompletionRequest req = make_req("hi");
  // sha256 over the canonical dump {"max_tokens":256,"prompt":"hi","temperature":0.0}.
  CHECK(fingerprint(req) ==
        "f2330cd0c9924c32e68255d05f033e5e3f49ecdb6454fbde4f1901b68d8e042f");
}

TEST_CASE("fingerprint shape and determinism") {
  CompletionRequest req = make_req("Q: what is 2+2? A:");
  const std::string fp = fingerprint(req);
  CHECK(fp.size() == 64);
  for (char c : fp) CHECK(((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')));
  CHECK(fingerprint(req) == fp);  // stable across calls
}

TEST_CASE("fingerprint is sensitive to every request field") {
  CompletionRequest base = make_req("prompt");
  const std::string fp = fingerprint(base);

  CompletionRequest p = base;
  p.prompt = "prompt!";
  CHECK(fingerprint(p) != fp);

  CompletionRequest m = base;
  m.max_tokens = 128;
  CHECK(fingerprint(m) != fp);

  CompletionRequest t = base;
  t.temperature = 0.7;
  CHECK(fingerprint(t) != fp);

  CompletionRequest s = base;
  s.stop = {"\n"};
  CHECK(fingerprint(s) != fp);

  // An explicitly empty stop list is the same request as no stop list.
  CompletionRequest empty_stop = base;
  empty_stop.stop.clear();
  CHECK(fingerprint(empty_stop) == fp);
}

TEST_CASE("fixture store create/append/load round trip") {
  TempDir tmp;
  const auto path = tmp / "fixtures.jsonl";
  FixtureStore store = FixtureStore::create(path, "test-model", "2026-01-02T03:04:05Z");
  CHECK(store.model_name() == "test-model");
  CHECK(store.created() == "2026-01-02T03:04:05Z");
  CHECK(store.size() == 0);

  FixtureEntry e;
  e.fingerprint = "abc";
  e.prompt = "the prompt";
  e.max_tokens = 50;
  e.temperature = 0.25;
  e.stop = {"\n", "Q:"};
  e.text = " the completion";
  store.append(e);
  CHECK(store.size() == 1);
  CHECK(store.contains("abc"));
  CHECK(store.lookup("abc") == std::string(" the completion"));
  CHECK_FALSE(store.contains("missing"));
  CHECK_FALSE(store.lookup("missing").has_value());

  // The meta header is the first JSONL line and carries the schema tag.
  {
    std::istringstream lines(read_file(path));
    std::string first;
    REQUIRE(std::getline(lines, first));
    json meta = json::parse(first);
    CHECK(meta.at("kind") == "symeval.fixtures");
    CHECK(meta.at("schema_version") == 1);
    CHECK(meta.at("model") == "test-model");
    CHECK(meta.at("created") == "2026-01-02T03:04:05Z");
  }

  FixtureStore loaded = FixtureStore::load(path);
  CHECK(loaded.model_name() == "test-model");
  CHECK(loaded.created() == "2026-01-02T03:04:05Z");
  REQUIRE(loaded.size() == 1);
  const FixtureEntry& back = loaded.entries().at("abc");
  CHECK(back.prompt == "the prompt");
  CHECK(back.max_tokens == 50);
  CHECK(back.temperature == 0.25);
  CHECK(back.stop == std::vector<std::string>{"\n", "Q:"});
  CHECK(back.text == " the completion");
}

TEST_CASE("fixture store create defaults the created timestamp to now") {
  TempDir tmp;
  FixtureStore store = FixtureStore::create(tmp / "f.jsonl", "m");
  CHECK_FALSE(store.created().empty());
}

TEST_CASE("repeated fingerprints: last entry wins") {
  TempDir tmp;
  const auto path = tmp / "fixtures.jsonl";
  FixtureStore store = FixtureStore::create(path, "m");
  FixtureEntry e;
  e.fingerprint = "dup";
  e.prompt = "p";
  e.text = "first";
  store.append(e);
  e.text = "second";
  store.append(e);
  CHECK(store.size() == 1);
  CHECK(store.lookup("dup") == std::string("second"));

  // Both lines are on disk; load keeps the later one.
  FixtureStore loaded = FixtureStore::load(path);
  CHECK(loaded.size() == 1);
  CHECK(loaded.lookup("dup") == std::string("second"));
}

TEST_CASE("a loaded store is read-only") {
  TempDir tmp;
  const auto path = tmp / "fixtures.jsonl";
  FixtureStore::create(path, "m");
  FixtureStore loaded = FixtureStore::load(path);
  FixtureEntry e;
  e.fingerprint = "x";
  e.prompt = "p";
  e.text = "t";
  CHECK_THROWS_WITH_AS(loaded.append(e), doctest::Contains("read-only"), BackendError);
}

TEST_CASE("open_append resumes an existing store and creates a missing one") {
  TempDir tmp;
  const auto path = tmp / "fixtures.jsonl";
  {
    FixtureStore store = FixtureStore::create(path, "m");
    FixtureEntry e;
    e.fingerprint = "a";
    e.prompt = "p";
    e.text = "t";
    store.append(e);
  }
  FixtureStore resumed = FixtureStore::open_append(path, "ignored-when-existing");
  CHECK(resumed.size() == 1);
  CHECK(resumed.model_name() == "m");
  FixtureEntry e2;
  e2.fingerprint = "b";
  e2.prompt = "q";
  e2.text = "u";
  resumed.append(e2);  // writable after open_append
  CHECK(FixtureStore::load(path).size() == 2);

  FixtureStore fresh = FixtureStore::open_append(tmp / "new.jsonl", "fresh-model");
  CHECK(fresh.model_name() == "fresh-model");
  CHECK(fresh.size() == 0);
  CHECK(FixtureStore::load(tmp / "new.jsonl").model_name() == "fresh-model");
}

TEST_CASE("fixture store load rejects malformed files") {
  TempDir tmp;

  SUBCASE("missing file") {
    CHECK_THROWS_AS(FixtureStore::load(tmp / "nope.jsonl"), BackendError);
  }
  SUBCASE("empty file") {
    write_file(tmp / "empty.jsonl", "");
    CHECK_THROWS_WITH_AS(FixtureStore::load(tmp / "empty.jsonl"),
                         doctest::Contains("missing meta header"), BackendError);
  }
  SUBCASE("first line is not a meta header") {
    write_file(tmp / "bad.jsonl", "{\"fingerprint\":\"x\"}\n");
    CHECK_THROWS_WITH_AS(FixtureStore::load(tmp / "bad.jsonl"),
                         doctest::Contains("not a fixture meta header"), BackendError);
  }
  SUBCASE("wrong kind tag") {
    write_file(tmp / "kind.jsonl", "{\"kind\":\"something.else\"}\n");
    CHECK_THROWS_WITH_AS(FixtureStore::load(tmp / "kind.jsonl"),
                         doctest::Contains("not a fixture meta header"), BackendError);
  }
  SUBCASE("invalid JSON line") {
    write_file(tmp / "json.jsonl",
               "{\"kind\":\"symeval.fixtures\",\"model\":\"m\"}\nnot json\n");
    CHECK_THROWS_WITH_AS(FixtureStore::load(tmp / "json.jsonl"),
                         doctest::Contains("invalid JSON on line 2"), BackendError);
  }
  SUBCASE("entry missing required fields") {
    write_file(tmp / "fields.jsonl",
               "{\"kind\":\"symeval.fixtures\",\"model\":\"m\"}\n{\"fingerprint\":\"x\"}\n");
    CHECK_THROWS_WITH_AS(FixtureStore::load(tmp / "fields.jsonl"),
                         doctest::Contains("line 2"), BackendError);
  }
  SUBCASE("blank lines are tolerated") {
    write_file(tmp / "blank.jsonl",
               "{\"kind\":\"symeval.fixtures\",\"model\":\"m\"}\n\n\n");
    CHECK(FixtureStore::load(tmp / "blank.jsonl").size() == 0);
  }
}

TEST_CASE("replay backend serves hits from the store") {
  TempDir tmp;
  FixtureStore store = FixtureStore::create(tmp / "f.jsonl", "fixture-model");
  CompletionRequest req = make_req("what is 6 times 7?");
  FixtureEntry e;
  e.fingerprint = fingerprint(req);
  e.prompt = req.prompt;
  e.text = " 42";
  store.append(e);

  ReplayBackend replay(FixtureStore::load(tmp / "f.jsonl"));
  CHECK(replay.name() == "replay");
  CompletionResponse resp = replay.complete(req);
  CHECK(resp.text == " 42");
  CHECK(resp.model == "fixture-model");
  CHECK(resp.from_cache);
}

TEST_CASE("replay backend misses identify the request") {
  TempDir tmp;
  FixtureStore::create(tmp / "f.jsonl", "m");
  ReplayBackend replay(FixtureStore::load(tmp / "f.jsonl"));

  const std::string long_prompt(120, 'x');
  CompletionRequest req = make_req(long_prompt);
  try {
    replay.complete(req);
    FAIL("expected FixtureMissError");
  } catch (const FixtureMissError& miss) {
    CHECK(miss.fingerprint == fingerprint(req));
    const std::string msg = miss.what();
    CHECK(msg.find(fingerprint(req)) != std::string::npos);
    // Only the first 80 characters of the prompt appear in the message.
    CHECK(msg.find(long_prompt.substr(0, 80)) != std::string::npos);
    CHECK(msg.find(long_prompt.substr(0, 81)) == std::string::npos);
  }
}

TEST_CASE("record backend records once and then serves from cache") {
  TempDir tmp;
  auto inner = std::make_shared<EchoBackend>();
  RecordBackend rec(inner, FixtureStore::create(tmp / "f.jsonl", "echo-model"));
  CHECK(rec.name() == "record");

  CompletionRequest req = make_req("p1");
  CompletionResponse first = rec.complete(req);
  CHECK(first.text == "echo:p1");
  CHECK_FALSE(first.from_cache);
  CHECK(inner->calls() == 1);
  CHECK(rec.recorded_count() == 1);
  CHECK(rec.cache_hits() == 0);

  CompletionResponse second = rec.complete(req);
  CHECK(second.text == "echo:p1");
  CHECK(second.from_cache);
  CHECK(inner->calls() == 1);  // served from the store, inner untouched
  CHECK(rec.recorded_count() == 1);
  CHECK(rec.cache_hits() == 1);

  rec.complete(make_req("p2"));
  CHECK(rec.recorded_count() == 2);
  CHECK(inner->calls() == 2);
}

TEST_CASE("record backend requires an inner backend") {
  TempDir tmp;
  CHECK_THROWS_AS(
      RecordBackend(nullptr, FixtureStore::create(tmp / "f.jsonl", "m")),
      ConfigError);
}

TEST_CASE("recorded fixtures replay the same completions") {
  TempDir tmp;
  const auto path = tmp / "f.jsonl";
  CompletionRequest a = make_req("alpha");
  CompletionRequest b = make_req("beta");
  {
    RecordBackend rec(std::make_shared<EchoBackend>(),
                      FixtureStore::create(path, "echo-model"));
    rec.complete(a);
    rec.complete(b);
  }
  ReplayBackend replay(FixtureStore::load(path));
  CHECK(replay.complete(a).text == "echo:alpha");
  CHECK(replay.complete(b).text == "echo:beta");
}

TEST_CASE("record backend resumes an interrupted store") {
  TempDir tmp;
  const auto path = tmp / "f.jsonl";
  CompletionRequest req = make_req("already there");
  {
    RecordBackend rec(std::make_shared<EchoBackend>(),
                      FixtureStore::create(path, "echo-model"));
    rec.complete(req);
  }
  auto inner = std::make_shared<EchoBackend>();
  RecordBackend resumed(inner, FixtureStore::open_append(path, "echo-model"));
  CompletionResponse resp = resumed.complete(req);
  CHECK(resp.from_cache);
  CHECK(inner->calls() == 0);
  CHECK(resumed.cache_hits() == 1);
  CHECK(resumed.recorded_count() == 0);
}

TEST_CASE("live backend posts the request and parses the response") {
  StubServer stub;
  std::mutex mu;
  std::string seen_body;
  std::string seen_auth;
  std::string seen_content_type;
  stub.server().Post("/v1/completions",
                     [&](const httplib::Request& r, httplib::Response& res) {
                       std::lock_guard<std::mutex> lock(mu);
                       seen_body = r.body;
                       seen_auth = r.get_header_value("Authorization");
                       seen_content_type = r.get_header_value("Content-Type");
                       res.set_content(ok_body(" 42", "served-model"),
                                       "application/json");
                     });

  ::setenv("SYMEVAL_TEST_KEY", "sekrit", 1);
  EndpointConfig cfg = stub_config(stub);
  cfg.api_key_env = "SYMEVAL_TEST_KEY";
  LiveBackend live(cfg);
  CHECK(live.name() == "live");

  CompletionRequest req = make_req("Q: 6*7? A:");
  req.max_tokens = 50;
  req.temperature = 0.5;
  req.stop = {"\n"};
  CompletionResponse resp = live.complete(req);
  CHECK(resp.text == " 42");
  CHECK(resp.model == "served-model");
  CHECK_FALSE(resp.from_cache);

  std::lock_guard<std::mutex> lock(mu);
  CHECK(seen_auth == "Bearer sekrit");
  CHECK(seen_content_type == "application/json");
  json body = json::parse(seen_body);
  CHECK(body.at("model") == "stub-model");
  CHECK(body.at("prompt") == "Q: 6*7? A:");
  CHECK(body.at("max_tokens") == 50);
  CHECK(body.at("temperature") == 0.5);
  CHECK(body.at("stop") == json::array({"\n"}));
}

TEST_CASE("live backend omits optional request fields") {
  StubServer stub;
  std::mutex mu;
  std::string seen_body;
  stub.server().Post("/v1/completions",
                     [&](const httplib::Request& r, httplib::Response& res) {
                       std::lock_guard<std::mutex> lock(mu);
                       seen_body = r.body;
                       res.set_content(ok_body("x"), "application/json");
                     });

  EndpointConfig cfg = stub_config(stub);
  cfg.model.clear();  // no model configured -> no model field sent
  LiveBackend live(cfg);
  CompletionResponse resp = live.complete(make_req("p"));  // no stop sequences

  std::lock_guard<std::mutex> lock(mu);
  json body = json::parse(seen_body);
  CHECK_FALSE(body.contains("model"));
  CHECK_FALSE(body.contains("stop"));
  // Response had no model field either; fall back to the configured name.
  CHECK(resp.model == "");
}

TEST_CASE("live backend falls back to the configured model name") {
  StubServer stub;
  stub.server().Post("/v1/completions",
                     [&](const httplib::Request&, httplib::Response& res) {
                       res.set_content(ok_body("x"), "application/json");
                     });
  EndpointConfig cfg = stub_config(stub);
  LiveBackend live(cfg);
  CHECK(live.complete(make_req("p")).model == "stub-model");
}

TEST_CASE("live backend supports custom auth headers") {
  StubServer stub;
  std::mutex mu;
  std::string seen_key;
  stub.server().Post("/v1/completions",
                     [&](const httplib::Request& r, httplib::Response& res) {
                       std::lock_guard<std::mutex> lock(mu);
                       seen_key = r.get_header_value("X-Api-Key");
                       res.set_content(ok_body("x"), "application/json");
                     });

  ::setenv("SYMEVAL_TEST_KEY", "sekrit", 1);
  EndpointConfig cfg = stub_config(stub);
  cfg.api_key_env = "SYMEVAL_TEST_KEY";
  cfg.auth_header = "X-Api-Key";
  cfg.auth_template = "{key}";
  LiveBackend live(cfg);
  live.complete(make_req("p"));

  std::lock_guard<std::mutex> lock(mu);
  CHECK(seen_key == "sekrit");
}

TEST_CASE("live backend configuration errors") {
  SUBCASE("empty base URL") {
    EndpointConfig cfg;
    cfg.base_url.clear();
    CHECK_THROWS_AS(LiveBackend{cfg}, ConfigError);
  }
  SUBCASE("missing API key environment variable") {
    EndpointConfig cfg;
    cfg.base_url = "http://127.0.0.1:1";
    cfg.api_key_env = "SYMEVAL_SURELY_UNSET_KEY_VAR";
    ::unsetenv("SYMEVAL_SURELY_UNSET_KEY_VAR");
    CHECK_THROWS_WITH_AS(LiveBackend{cfg},
                         doctest::Contains("SYMEVAL_SURELY_UNSET_KEY_VAR"),
                         ConfigError);
  }
}

TEST_CASE("live backend retries 5xx with doubling backoff") {
  StubServer stub;
  std::atomic<int> attempt{0};
  stub.server().Post("/v1/completions",
                     [&](const httplib::Request&, httplib::Response& res) {
                       if (attempt.fetch_add(1) < 2) {
                         res.status = 500;
                         res.set_content("boom", "text/plain");
                       } else {
                         res.set_content(ok_body(" ok"), "application/json");
                       }
                     });

  std::vector<std::chrono::milliseconds> sleeps;
  EndpointConfig cfg = stub_config(stub);
  cfg.retry.max_retries = 3;
  cfg.retry.initial_backoff = std::chrono::milliseconds(10);
  LiveBackend live(cfg, [&](std::chrono::milliseconds d) { sleeps.push_back(d); });

  CHECK(live.complete(make_req("p")).text == " ok");
  CHECK(attempt.load() == 3);
  REQUIRE(sleeps.size() == 2);
  CHECK(sleeps[0] == std::chrono::milliseconds(10));
  CHECK(sleeps[1] == std::chrono::milliseconds(20));
}

TEST_CASE("live backend retries 429 rate limits") {
  StubServer stub;
  std::atomic<int> attempt{0};
  stub.server().Post("/v1/completions",
                     [&](const httplib::Request&, httplib::Response& res) {
                       if (attempt.fetch_add(1) == 0) {
                         res.status = 429;
                       } else {
                         res.set_content(ok_body(" ok"), "application/json");
                       }
                     });

  std::vector<std::chrono::milliseconds> sleeps;
  EndpointConfig cfg = stub_config(stub);
  cfg.retry.max_retries = 2;
  cfg.retry.initial_backoff = std::chrono::milliseconds(5);
  LiveBackend live(cfg, [&](std::chrono::milliseconds d) { sleeps.push_back(d); });

  CHECK(live.complete(make_req("p")).text == " ok");
  CHECK(attempt.load() == 2);
  REQUIRE(sleeps.size() == 1);
  CHECK(sleeps[0] == std::chrono::milliseconds(5));
}

TEST_CASE("live backend gives up after exhausting retries") {
  StubServer stub;
  std::atomic<int> attempt{0};
  stub.server().Post("/v1/completions",
                     [&](const httplib::Request&, httplib::Response& res) {
                       attempt.fetch_add(1);
                       res.status = 503;
                     });

  std::vector<std::chrono::milliseconds> sleeps;
  EndpointConfig cfg = stub_config(stub);
  cfg.retry.max_retries = 2;
  cfg.retry.initial_backoff = std::chrono::milliseconds(10);
  LiveBackend live(cfg, [&](std::chrono::milliseconds d) { sleeps.push_back(d); });

  CHECK_THROWS_WITH_AS(live.complete(make_req("p")),
                       doctest::Contains("after 3 attempts"), BackendError);
  CHECK(attempt.load() == 3);
  REQUIRE(sleeps.size() == 2);
  CHECK(sleeps[0] == std::chrono::milliseconds(10));
  CHECK(sleeps[1] == std::chrono::milliseconds(20));
}

TEST_CASE("live backend does not retry other client errors") {
  StubServer stub;
  std::atomic<int> attempt{0};
  stub.server().Post("/v1/completions",
                     [&](const httplib::Request&, httplib::Response& res) {
                       attempt.fetch_add(1);
                       res.status = 404;
                       res.set_content("no such path", "text/plain");
                     });

  std::vector<std::chrono::milliseconds> sleeps;
  EndpointConfig cfg = stub_config(stub);
  cfg.retry.max_retries = 3;
  LiveBackend live(cfg, [&](std::chrono::milliseconds d) { sleeps.push_back(d); });

  CHECK_THROWS_WITH_AS(live.complete(make_req("p")), doctest::Contains("404"),
                       BackendError);
  CHECK(attempt.load() == 1);
  CHECK(sleeps.empty());
}

TEST_CASE("live backend rejects malformed response bodies without retrying") {
  StubServer stub;
  std::atomic<int> attempt{0};
  std::string body = "not json";
  std::mutex mu;
  stub.server().Post("/v1/completions",
                     [&](const httplib::Request&, httplib::Response& res) {
                       attempt.fetch_add(1);
                       std::lock_guard<std::mutex> lock(mu);
                       res.set_content(body, "application/json");
                     });

  EndpointConfig cfg = stub_config(stub);
  cfg.retry.max_retries = 3;
  LiveBackend live(cfg, [](std::chrono::milliseconds) {});

  CHECK_THROWS_WITH_AS(live.complete(make_req("p")),
                       doctest::Contains("malformed completion response body"),
                       BackendError);
  CHECK(attempt.load() == 1);

  {
    std::lock_guard<std::mutex> lock(mu);
    body = "{\"choices\":[]}";  // parseable but missing the completion text
  }
  CHECK_THROWS_WITH_AS(live.complete(make_req("p")),
                       doctest::Contains("malformed completion response body"),
                       BackendError);
}

TEST_CASE("live backend retries transport failures") {
  // Nothing listens on this port, so every attempt fails at connect time.
  EndpointConfig cfg;
  cfg.base_url = "http://127.0.0.1:1";
  cfg.api_key_env = "";
  cfg.retry.max_retries = 1;
  cfg.retry.initial_backoff = std::chrono::milliseconds(1);

  std::vector<std::chrono::milliseconds> sleeps;
  LiveBackend live(cfg, [&](std::chrono::milliseconds d) { sleeps.push_back(d); });

  try {
    live.complete(make_req("p"));
    FAIL("expected BackendError");
  } catch (const BackendError& err) {
    const std::string msg = err.what();
    CHECK(msg.find("after 2 attempts") != std::string::npos);
    CHECK(msg.find("connection error") != std::string::npos);
  }
  CHECK(sleeps.size() == 1);
}
