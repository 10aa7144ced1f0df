#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#include "doctest.h"
#include "fixtures.hpp"
#include "httplib.h"
#include "json.hpp"
#include "pedsim/decision.hpp"
#include "pedsim/errors.hpp"
#include "pedsim/oracle_gateway.hpp"

using namespace pedsim;

namespace {

// Chat-completions stand-in on 127.0.0.1.
struct FakeService {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> requests{0};
  std::atomic<int> fail_first{0};
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  int delay_ms = 0;
  std::string last_auth;
  std::string last_body;
  std::mutex mu;

  FakeService() {
    server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int now = ++in_flight;
      for (int p = peak; now > p && !peak.compare_exchange_weak(p, now);) {
      }
      if (delay_ms) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      const int n = ++requests;
      {
        std::lock_guard lock(mu);
        last_auth = req.get_header_value("Authorization");
        last_body = req.body;
      }
      --in_flight;
      if (n <= fail_first) {
        res.status = 503;
        res.set_content("busy", "text/plain");
        return;
      }
      nlohmann::json reply = {
          {"choices", {{{"message", {{"role", "assistant"}, {"content", "Decision: stop\nReason: wait\nConfidence: 3/5\nTrust: 2/5"}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~FakeService() {
    server.stop();
    thread.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions"; }
};

OracleConfig remote_config(const std::string& url) {
  OracleConfig c;
  c.backend = Backend::remote;
  c.endpoint = url;
  c.model = "test-model";
  c.credential_env = "PEDSIM_TEST_ORACLE_KEY";
  c.retry_backoff_s = 0;
  c.timeout_s = 5;
  return c;
}

struct Query {
  fixtures::TempDir dir{"remote"};
  PersonaProfile persona = fixtures::golden_persona();
  DecisionQuery q;
  Query() {
    std::ofstream(dir / "001.jpg", std::ios::binary) << "jpeg";
    q.profile = &persona;
    q.condition = parse_condition("light_stop");
    q.status = render_status(0);
    q.frames = {dir / "001.jpg"};
  }
};

}  // namespace

TEST_CASE("remote oracle needs the credential variable") {
  ::unsetenv("PEDSIM_TEST_ORACLE_KEY");
  CHECK_THROWS_AS(RemoteOracle(remote_config("http://127.0.0.1:9/x"), make_http_transport()), ConfigError);
  ::setenv("PEDSIM_TEST_ORACLE_KEY", "", 1);
  CHECK_THROWS_AS(RemoteOracle(remote_config("http://127.0.0.1:9/x"), make_http_transport()), ConfigError);
}

TEST_CASE("remote oracle round trip against a local service") {
  ::setenv("PEDSIM_TEST_ORACLE_KEY", "sk-test", 1);
  FakeService svc;
  Query query;
  RemoteOracle oracle(remote_config(svc.url()), make_http_transport());
  const auto reply = oracle.decide(query.q);
  CHECK(parse_decision_reply(reply).action == Action::stop);
  CHECK(svc.last_auth == "Bearer sk-test");
  const auto body = nlohmann::json::parse(svc.last_body);
  CHECK(body["model"] == "test-model");
  CHECK(body["messages"][0]["role"] == "system");
  CHECK(body["messages"].back()["content"][1]["image_url"]["url"].get<std::string>().rfind("data:image/jpeg;base64,", 0) == 0);
  CHECK(oracle.label() == "remote:test-model");
}

TEST_CASE("failed requests are retried up to the limit") {
  ::setenv("PEDSIM_TEST_ORACLE_KEY", "sk-test", 1);
  FakeService svc;
  svc.fail_first = 2;
  Query query;
  auto config = remote_config(svc.url());
  config.retry_limit = 2;
  RemoteOracle ok(config, make_http_transport());
  CHECK_NOTHROW(ok.decide(query.q));
  CHECK(svc.requests == 3);

  svc.requests = 0;
  svc.fail_first = 10;
  config.retry_limit = 1;
  RemoteOracle failing(config, make_http_transport());
  CHECK_THROWS_AS(failing.decide(query.q), TransportError);
  CHECK(svc.requests == 2);
}

TEST_CASE("unreachable service is a transport error") {
  ::setenv("PEDSIM_TEST_ORACLE_KEY", "sk-test", 1);
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  Query query;
  auto config = remote_config("http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions");
  config.retry_limit = 0;
  config.timeout_s = 1;
  RemoteOracle oracle(config, make_http_transport());
  CHECK_THROWS_AS(oracle.decide(query.q), TransportError);
}

TEST_CASE("in-flight requests are capped") {
  ::setenv("PEDSIM_TEST_ORACLE_KEY", "sk-test", 1);
  FakeService svc;
  svc.delay_ms = 50;
  Query query;
  auto config = remote_config(svc.url());
  config.max_in_flight = 2;
  RemoteOracle oracle(config, make_http_transport());
  std::vector<std::thread> callers;
  for (int i = 0; i < 6; ++i) callers.emplace_back([&] { oracle.decide(query.q); });
  for (auto& t : callers) t.join();
  CHECK(svc.requests == 6);
  CHECK(svc.peak <= 2);
}

TEST_CASE("request rate is limited") {
  ::setenv("PEDSIM_TEST_ORACLE_KEY", "sk-test", 1);
  FakeService svc;
  Query query;
  auto config = remote_config(svc.url());
  config.requests_per_second = 10;
  // The bucket starts with one second of burst; the remaining five calls wait.
  RemoteOracle slow(config, make_http_transport());
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 15; ++i) slow.decide(query.q);
  const double e2 = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(e2 >= 0.4);
}
