#include <doctest.h>

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <opencv2/imgcodecs.hpp>

#include "papercast/common/error.hpp"
#include "papercast/gateway/backends.hpp"
#include "papercast/gateway/prompts.hpp"
#include "papercast/gateway/schemas.hpp"
#include "support.hpp"

using namespace papercast;
using namespace papercast::gateway;

namespace {

json paper_input() {
  const auto& a = testing::fixture_assets();
  json sections = json::array(), assets = json::array();
  for (const auto& s : a.body_text) sections.push_back({{"heading", s.heading}, {"text", s.text}});
  for (const auto& i : a.images) assets.push_back({{"asset_id", i.asset_id}});
  return {{"title", a.title}, {"sections", sections}, {"assets", assets}};
}

ModelRequest flashtalk_request() {
  ModelRequest r;
  r.agent = AgentId::F;
  r.schema_id = "flashtalk_v1";
  r.prompt_text = with_input(bundled_prompt(AgentId::F), paper_input());
  return r;
}

ModelRequest feedback_request(const std::string& role) {
  ModelRequest r;
  r.agent = AgentId::feedback_sceneplan;
  r.schema_id = "feedback_v1";
  r.constraints = {{"metrics", {"Visual Relevance and Clarity"}}, {"score_min", 1}, {"score_max", 5}};
  r.prompt_text = with_input(bundled_prompt(r.agent), {{"role", role},
                                                       {"metric", {{"name", "Visual Relevance and Clarity"}}},
                                                       {"score_range", {1, 5}}});
  return r;
}

}  // namespace

TEST_SUITE("gateway") {
  TEST_CASE("mock flashtalk has exactly four sections in canonical order") {
    Gateway gw(std::make_shared<MockBackend>(42));
    auto resp = gw.complete_structured(flashtalk_request());
    REQUIRE(resp.valid);
    CHECK(resp.attempts == 1);
    const auto& sections = (*resp.parsed)["sections"];
    REQUIRE(sections.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(sections[i]["kind"] == std::string(kSectionKinds[i]));
  }

  TEST_CASE("mock output is a pure function of its inputs and seed") {
    Gateway a(std::make_shared<MockBackend>(7)), b(std::make_shared<MockBackend>(7));
    auto req = feedback_request("sceneplan");
    auto r1 = a.complete_structured(req);
    auto r2 = a.complete_structured(req);
    auto r3 = b.complete_structured(req);
    CHECK(r1.raw_text == r2.raw_text);
    CHECK(r1.raw_text == r3.raw_text);
    REQUIRE(r1.valid);
    int score = (*r1.parsed)["score"];
    CHECK((score >= 1 && score <= 5));
    CHECK((*r1.parsed)["metric"] == "Visual Relevance and Clarity");
  }

  TEST_CASE("mock reflection is the identity on empty feedback") {
    MockBackend mock(42);
    std::string p = bundled_prompt(AgentId::S);
    auto out = mock.respond(AgentId::reflection, "reflection_v1",
                            with_input(bundled_prompt(AgentId::reflection), {{"agent", "S"}, {"prompt", p}, {"feedback", ""}}),
                            {});
    CHECK(out["revised_prompt"] == p);
  }

  TEST_CASE("every known schema has a mock generator whose output validates") {
    MockBackend mock(3);
    // A sparse input: generators must still produce schema-valid output.
    std::string prompt = with_input("instructions", {{"agent", "F"}, {"prompt", bundled_prompt(AgentId::F)}});
    for (const auto& id : known_schemas()) {
      json out = mock.respond(AgentId::F, id, prompt, {});
      CHECK_MESSAGE(!validate(id, out).has_value(), id);
    }
    CHECK_THROWS_AS((void)mock.respond(AgentId::F, "nope_v1", "x", {}), Error);
  }

  TEST_CASE("garbage exhausts the retry budget and is flagged invalid") {
    auto backend = std::make_shared<ScriptedBackend>(std::vector<std::string>{"not json at all"});
    Gateway gw(backend);
    auto resp = gw.complete_structured(flashtalk_request());
    CHECK_FALSE(resp.valid);
    CHECK_FALSE(resp.parsed.has_value());
    CHECK(resp.attempts == 3);
    CHECK(backend->calls() == 3);
    // Re-prompts carry the validation error.
    auto reqs = backend->requests();
    CHECK(reqs[1].prompt.find("PREVIOUS ATTEMPT REJECTED") != std::string::npos);
    auto log = gw.log().snapshot();
    REQUIRE(log.size() == 1);
    CHECK_FALSE(log[0].valid);
  }

  TEST_CASE("a later valid attempt is accepted") {
    MockBackend mock(1);
    std::string good = mock.respond(AgentId::feedback_sceneplan, "feedback_v1", feedback_request("sceneplan").prompt_text, {}).dump();
    auto backend = std::make_shared<ScriptedBackend>(std::vector<std::string>{
        R"({"metric": "Visual Relevance and Clarity", "score": 9, "comment": "x"})", "```json\n" + good + "\n```"});
    Gateway gw(backend);
    auto resp = gw.complete_structured(feedback_request("sceneplan"));
    CHECK(resp.valid);
    CHECK(resp.attempts == 2);
  }

  TEST_CASE("score constraints narrow the accepted range") {
    json v = {{"metric", "Curiosity"}, {"score", 7}, {"comment", "ok"}};
    CHECK(validate("feedback_v1", v, {{"score_min", 1}, {"score_max", 5}}).has_value());
    v["score"] = 5;
    CHECK_FALSE(validate("feedback_v1", v, {{"score_min", 1}, {"score_max", 5}}).has_value());
    CHECK(validate("feedback_v1", v, {{"metrics", {"Clarity"}}}).has_value());
  }

  TEST_CASE("request preconditions") {
    Gateway gw(std::make_shared<MockBackend>(1));
    auto req = flashtalk_request();
    req.schema_id = "unknown_v9";
    CHECK_THROWS_WITH_AS(gw.complete_structured(req), doctest::Contains("unknown schema"), Error);
    req = flashtalk_request();
    req.prompt_text.clear();
    CHECK_THROWS_AS(gw.complete_structured(req), Error);

    Gateway small(std::make_shared<ScriptedBackend>(std::vector<std::string>{"{}"}, 2));
    req = flashtalk_request();
    for (int i = 0; i < 3; ++i) req.attached_images.push_back({"img" + std::to_string(i), "/nonexistent.png"});
    try {
      small.complete_structured(req);
      FAIL("expected PreconditionViolation");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::PreconditionViolation);
    }
  }

  TEST_CASE("temperatures alternate between the configured values") {
    Gateway gw(std::make_shared<MockBackend>(1));
    std::vector<double> seen;
    for (int i = 0; i < 4; ++i) seen.push_back(gw.complete_structured(feedback_request("text")).temperature);
    CHECK(seen == std::vector<double>{0.7, 0.9, 0.7, 0.9});
    auto req = feedback_request("text");
    req.temperature = 0.5;
    CHECK_THROWS_AS(gw.complete_structured(req), Error);
  }

  TEST_CASE("prompts embed an immutable schema block") {
    for (auto agent : kGenerationAgents) {
      auto p = bundled_prompt(agent);
      auto block = find_schema_block(p);
      CHECK_FALSE(block.empty());
      CHECK(block == schema_block(schema_for(agent)));
      CHECK(initial_prompt_state(agent).iteration == 0);
    }
    CHECK(find_schema_block("no block here").empty());
  }

  TEST_CASE("model json is recovered from fences and prose") {
    CHECK(parse_model_json("Sure!\n```json\n{\"a\": 1}\n```\nDone.").value()["a"] == 1);
    CHECK_FALSE(parse_model_json("nothing").has_value());
    auto in = extract_input(with_input("instructions", {{"k", "v"}}));
    REQUIRE(in.has_value());
    CHECK((*in)["k"] == "v");
  }

  TEST_CASE("remote backend speaks the chat completions protocol") {
    httplib::Server server;
    json last_body;
    std::string last_auth;
    std::mutex mu;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mu);
      last_body = json::parse(req.body);
      last_auth = req.get_header_value("Authorization");
      json envelope = {{"choices", {{{"message", {{"content", R"({"background": "#112233"})"}}}}}}};
      res.set_content(envelope.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    ::setenv("PAPERCAST_TEST_KEY", "secret", 1);
    RemoteOptions o;
    o.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    o.model = "m1";
    o.api_key_env = "PAPERCAST_TEST_KEY";
    Gateway gw(std::make_shared<OpenAICompatibleBackend>(o));
    ModelRequest req;
    req.agent = AgentId::B;
    req.schema_id = "background_v1";
    req.prompt_text = "pick a background";
    req.attached_images.push_back({"first_page", testing::fixture_assets().first_page().path});
    auto resp = gw.complete_structured(req);
    server.stop();
    t.join();

    REQUIRE(resp.valid);
    CHECK((*resp.parsed)["background"] == "#112233");
    CHECK(last_auth == "Bearer secret");
    CHECK(last_body["model"] == "m1");
    const auto& content = last_body["messages"][0]["content"];
    REQUIRE(content.size() == 2);
    CHECK(content[1]["image_url"]["url"].get<std::string>().rfind("data:image/png;base64,", 0) == 0);

    ::unsetenv("PAPERCAST_TEST_KEY");
    Gateway nokey(std::make_shared<OpenAICompatibleBackend>(o));
    CHECK_THROWS_AS(nokey.complete_structured(req), Error);
  }

  TEST_CASE("model-visible images are 360x640") {
    auto png = prepare_image_png(testing::fixture_assets().first_page().path, 360, 640);
    std::vector<std::uint8_t> bytes(png.begin(), png.end());
    cv::Mat m = cv::imdecode(bytes, cv::IMREAD_COLOR);
    CHECK(m.cols == 360);
    CHECK(m.rows == 640);
  }

  TEST_CASE("backend registry") {
    CHECK(make_backend({{"name", "mock"}}, 1)->name() == "mock");
    CHECK_THROWS_AS(make_backend({{"name", "nope"}}, 1), Error);
    CHECK(base64_encode("hello") == "aGVsbG8=");
  }
}
