#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include <opencv2/imgcodecs.hpp>

#include "papercast/common/error.hpp"
#include "papercast/common/rng.hpp"
#include "papercast/feedback/feedback.hpp"
#include "papercast/gateway/backends.hpp"
#include "support.hpp"

using namespace papercast;
using namespace papercast::feedback;
using gateway::initial_prompt_state;

namespace {

planning::SubScene any_sub() {
  planning::SubScene s;
  s.sub_scene_id = "brief_context_1";
  s.description = "Show the method figure.";
  s.duration_s = 3.0;
  return s;
}

compose::FrameSet fake_frames(int n) {
  compose::FrameSet f;
  for (int i = 0; i < n; ++i) f.frames.push_back("frame_" + std::to_string(i) + ".png");
  return f;
}

FeedbackContext context() {
  FeedbackContext c;
  c.sub_scene_id = "brief_context_1";
  c.description = "Show the method figure.";
  c.narration_slice = "We listen to the ground before the slope fails.";
  c.section_kind = "brief_context";
  return c;
}

FeedbackRecord record(FeedbackAgent agent, const std::string& metric, int score, const std::string& comment,
                      const std::string& sub = "aggressive_hook_1") {
  return {1, agent, sub, metric, score, comment};
}

std::vector<std::string> names(const std::vector<MetricSpec>& m) {
  std::vector<std::string> out;
  for (const auto& s : m) out.push_back(s.name);
  return out;
}

// Expected routing written out independently of route().
const std::map<std::string, std::set<std::string>>& expected_routes() {
  static const std::map<std::string, std::set<std::string>> r = {
      {"flashtalk", {"F"}}, {"sceneplan", {"S"}}, {"text", {"T", "L"}}};
  return r;
}

std::map<AgentId, PromptState> initial_prompts() {
  std::map<AgentId, PromptState> out;
  for (auto a : gateway::kGenerationAgents) out[a] = initial_prompt_state(a);
  return out;
}

}  // namespace

TEST_SUITE("feedback") {
  TEST_CASE("registry holds exactly the rubric metrics per agent") {
    std::map<std::string, std::set<std::string>> by_agent;
    for (const auto& m : metric_registry()) by_agent[to_string(m.agent)].insert(m.name);
    CHECK(by_agent["flashtalk"] == std::set<std::string>{"Clarity", "Curiosity", "Effectiveness"});
    CHECK(by_agent["sceneplan"] ==
          std::set<std::string>{"Narrative Coherence", "Timing and Pacing", "Visual Relevance and Clarity"});
    CHECK(by_agent["text"] == std::set<std::string>{"Clarity", "Key Information Coverage", "Timing and Alignment"});
    CHECK(metric_registry().size() == 9);
  }

  TEST_CASE("set_metrics under the experiment and full configs") {
    auto sub = any_sub();
    CHECK(names(set_metrics(sub, FeedbackAgent::flashtalk, MetricConfig::experiment)) == std::vector<std::string>{"Curiosity"});
    CHECK(names(set_metrics(sub, FeedbackAgent::sceneplan, MetricConfig::experiment)) ==
          std::vector<std::string>{"Visual Relevance and Clarity"});
    CHECK(names(set_metrics(sub, "text", MetricConfig::experiment)) == std::vector<std::string>{"Key Information Coverage"});
    CHECK(set_metrics(sub, FeedbackAgent::sceneplan, MetricConfig::full).size() == 3);
    try {
      (void)set_metrics(sub, "evaluation", MetricConfig::experiment);
      FAIL("expected UnknownAgent");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownAgent);
    }
    CHECK_THROWS_AS(parse_metric_config("some"), Error);
  }

  TEST_CASE("one record per metric, within range and deterministic") {
    auto gw = testing::mock_gateway(7);
    auto metrics = set_metrics(any_sub(), FeedbackAgent::sceneplan, MetricConfig::experiment);
    auto records = run_feedback_agent(FeedbackAgent::sceneplan, fake_frames(2), context(), metrics, *gw, 1);
    REQUIRE(records.size() == 1);
    CHECK((records[0].score >= 1 && records[0].score <= 5));
    CHECK(records[0].metric_name == "Visual Relevance and Clarity");

    auto curiosity = set_metrics(any_sub(), FeedbackAgent::flashtalk, MetricConfig::experiment);
    auto a = run_feedback_agent(FeedbackAgent::flashtalk, fake_frames(10), context(), curiosity, *gw, 1);
    auto b = run_feedback_agent(FeedbackAgent::flashtalk, fake_frames(10), context(), curiosity, *gw, 1);
    CHECK(a == b);

    auto full = set_metrics(any_sub(), FeedbackAgent::text, MetricConfig::full);
    CHECK(run_feedback_agent(FeedbackAgent::text, fake_frames(2), context(), full, *gw, 1).size() == 3);
    CHECK(record_from_json(to_json(records[0])) == records[0]);
  }

  TEST_CASE("out-of-range scores are excluded and logged") {
    auto backend = std::make_shared<gateway::ScriptedBackend>(
        std::vector<std::string>{R"({"metric": "Visual Relevance and Clarity", "score": 7, "comment": "great"})"});
    gateway::Gateway gw(backend);
    std::vector<std::string> excluded;
    auto records = run_feedback_agent(FeedbackAgent::sceneplan, fake_frames(2), context(),
                                      set_metrics(any_sub(), FeedbackAgent::sceneplan, MetricConfig::experiment), gw, 1,
                                      {}, &excluded);
    CHECK(records.empty());
    REQUIRE(excluded.size() == 1);
    CHECK(excluded[0].find("excluded") != std::string::npos);
    CHECK(backend->calls() == 3);
  }

  TEST_CASE("empty records give explicit empty summaries for all agents") {
    auto gw = testing::mock_gateway(1);
    auto s = summarize_feedback({}, *gw);
    CHECK(s.per_agent.size() == 6);
    for (const auto& [agent, slice] : s.per_agent) CHECK(slice.empty());
    CHECK(gw->log().snapshot().empty());
  }

  TEST_CASE("per-metric means") {
    auto gw = testing::mock_gateway(1);
    auto s = summarize_feedback({record(FeedbackAgent::sceneplan, "Visual Relevance and Clarity", 3, "a"),
                                 record(FeedbackAgent::sceneplan, "Visual Relevance and Clarity", 5, "b")},
                                *gw);
    // (3 + 5) / 2
    CHECK(s.per_agent.at(AgentId::S).means.at("Visual Relevance and Clarity") == doctest::Approx(4.0));
    CHECK_FALSE(s.per_agent.at(AgentId::S).empty());
    CHECK(s.per_agent.at(AgentId::F).empty());
    CHECK_THROWS_AS(summarize_feedback({record(FeedbackAgent::text, "Clarity", 3, "a"),
                                        {2, FeedbackAgent::text, "x", "Clarity", 3, "b"}},
                                       *gw),
                    Error);
  }

  TEST_CASE("text-only feedback reaches T but not F or S") {
    auto gw = testing::mock_gateway(1);
    auto s = summarize_feedback(
        {record(FeedbackAgent::text, "Key Information Coverage", 2, "Key numbers from the narration are missing.")}, *gw);
    CHECK(s.per_agent.at(AgentId::F).empty());
    CHECK(s.per_agent.at(AgentId::S).empty());
    CHECK_FALSE(s.per_agent.at(AgentId::T).empty());
  }

  TEST_CASE("routing soundness over random record sets") {
    // The summary calls are observed on the wire, so the check does not rely
    // on the routing table inside the library.
    auto mock = std::make_shared<gateway::MockBackend>(3);
    std::vector<gateway::BackendRequest> seen;
    auto spy = std::make_shared<gateway::ScriptedBackend>([&](const gateway::BackendRequest& r) {
      seen.push_back(r);
      return mock->complete(r);
    });
    gateway::Gateway gw(spy);
    Rng rng(99);
    std::size_t violations = 0;
    for (int trial = 0; trial < 100; ++trial) {
      seen.clear();
      std::vector<FeedbackRecord> records;
      for (int n = rng.uniform_int(0, 12); n > 0; --n) {
        auto agent = kFeedbackAgents[rng.uniform_int(0, 2)];
        std::vector<MetricSpec> pool;
        for (const auto& m : metric_registry())
          if (m.agent == agent) pool.push_back(m);
        const auto& m = pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
        records.push_back(record(agent, m.name, rng.uniform_int(1, 5),
                                 "Note from " + to_string(agent) + " number " + std::to_string(rng.uniform_int(0, 99)) + "."));
      }
      auto summary = summarize_feedback(records, gw);
      for (const auto& req : seen) {
        auto in = gateway::extract_input(req.prompt).value();
        std::string target = in["agent"];
        for (const auto& r : in["records"]) {
          const auto& allowed = expected_routes().at(r["feedback_agent"].get<std::string>());
          if (!allowed.count(target)) ++violations;
        }
      }
      for (const auto& [agent, slice] : summary.per_agent) {
        for (auto i : slice.record_indices)
          if (!expected_routes().at(to_string(records[i].agent)).count(gateway::to_string(agent))) ++violations;
        // Comments from unrouted agents never leak into the text.
        for (const auto& r : records)
          if (!expected_routes().at(to_string(r.agent)).count(gateway::to_string(agent)) &&
              slice.text.find(r.comment) != std::string::npos)
            ++violations;
        bool expects_records = std::any_of(records.begin(), records.end(), [&](const FeedbackRecord& r) {
          return expected_routes().at(to_string(r.agent)).count(gateway::to_string(agent)) > 0;
        });
        CHECK(slice.empty() == !expects_records);
      }
    }
    CHECK(violations == 0);
  }

  TEST_CASE("empty summary leaves the prompt byte-identical") {
    auto backend = std::make_shared<gateway::ScriptedBackend>(std::vector<std::string>{"{}"});
    gateway::Gateway gw(backend);
    auto p = initial_prompt_state(AgentId::E);
    auto r = reflect_prompt(p, AgentSummary{}, gw);
    CHECK(r.prompt.text == p.text);
    CHECK(r.prompt.iteration == 1);
    CHECK(backend->calls() == 0);
  }

  TEST_CASE("pacing feedback reaches S with the schema block intact") {
    auto gw = testing::mock_gateway(42);
    auto p = initial_prompt_state(AgentId::S);
    AgentSummary slice;
    slice.text = "Pacing too fast in the opening sub-scenes; hold each figure longer.";
    slice.means["Timing and Pacing"] = 2.0;
    auto r = reflect_prompt(p, slice, *gw);
    CHECK(r.warnings.empty());
    CHECK(r.prompt.text != p.text);
    CHECK(r.prompt.text.find("Pacing too fast") != std::string::npos);
    auto block = gateway::find_schema_block(p.text);
    REQUIRE_FALSE(block.empty());
    CHECK(r.prompt.text.find(block) != std::string::npos);
    CHECK(gateway::find_schema_block(r.prompt.text) == block);
  }

  TEST_CASE("a reflection that drops the schema twice keeps the old prompt") {
    auto backend = std::make_shared<gateway::ScriptedBackend>(
        std::vector<std::string>{R"({"revised_prompt": "Be better. No schema here."})"});
    gateway::Gateway gw(backend);
    auto p = initial_prompt_state(AgentId::T);
    AgentSummary slice;
    slice.text = "Trim the subtitles.";
    auto r = reflect_prompt(p, slice, gw);
    CHECK(r.prompt.text == p.text);
    CHECK(r.prompt.iteration == 1);
    CHECK(backend->calls() == 2);
    REQUIRE_FALSE(r.warnings.empty());
    CHECK(r.warnings.back().find("kept the previous") != std::string::npos);
    CHECK(backend->requests()[1].prompt.find("correction") != std::string::npos);
  }

  TEST_CASE("feedback routed only to T leaves every other prompt unchanged") {
    auto gw = testing::mock_gateway(5);
    FeedbackSummary s;
    for (auto a : gateway::kGenerationAgents) s.per_agent[a] = {};
    s.per_agent[AgentId::T].text = "The on-screen text is too long to read; trim the subtitle.";
    for (auto a : gateway::kGenerationAgents) {
      auto p = initial_prompt_state(a);
      auto r = reflect_prompt(p, s.per_agent.at(a), *gw);
      if (a == AgentId::T) CHECK(r.prompt.text != p.text);
      else CHECK(r.prompt.text == p.text);
    }
  }

  TEST_CASE("prompt store persistence") {
    testing::TempDir dir("feedback");
    PromptStore store(dir.path());
    auto p = initial_prompt_state(AgentId::L);
    store.put(p);
    store.put({AgentId::L, 1, p.text + "\nmore"});
    CHECK(store.latest(AgentId::L) == 1);
    CHECK(store.latest(AgentId::F) == -1);
    CHECK(store.lineage(AgentId::L).size() == 2);
    CHECK(store.get(AgentId::L, 0) == p);
    CHECK(store.path_for(AgentId::L, 1) == dir / "prompts/L/1.txt");
    CHECK_THROWS_AS((void)store.get(AgentId::L, 5), Error);
    CHECK_THROWS_AS(store.put({AgentId::evaluation, 0, "x"}), Error);
    CHECK_THROWS_AS(store.put({AgentId::F, 0, ""}), Error);
  }

  TEST_CASE("one feedback iteration over 4 scenes x 2 sub-scenes") {
    testing::TempDir dir("feedback");
    IterationInputs in;
    in.iteration = 2;
    double t = 0.0;
    for (auto kind : planning::kSectionOrder) {
      planning::Section sec;
      sec.kind = kind;
      sec.order_index = static_cast<int>(kind);
      sec.narration_text = "One two three four five six seven eight nine ten.";
      in.script.sections.push_back(sec);
      planning::Scene sc;
      sc.section_kind = kind;
      for (int k = 0; k < 2; ++k) {
        planning::SubScene sub;
        sub.sub_scene_id = planning::to_string(kind) + "_" + std::to_string(k + 1);
        sub.description = "Direction " + std::to_string(k);
        sub.start_s = 2.0 * k;
        sub.duration_s = 2.0;
        sc.sub_scenes.push_back(sub);
      }
      in.plan.scenes.push_back(sc);
      planning::AudioTrack a;
      a.section_kind = kind;
      a.duration_s = 4.0;
      in.audio.push_back(a);
      t += 4.0;
    }
    testing::write_test_video(dir / "video.mp4", t, 30);
    in.video = {dir / "video.mp4", t, 360, 640, 2};

    // Prompts for iteration 1 are loaded up front; reflection must not read
    // anything else from the store.
    PromptStore store(dir.path());
    for (auto a : gateway::kGenerationAgents) {
      store.put(initial_prompt_state(a));
      store.put({a, 1, initial_prompt_state(a).text});
    }
    std::map<AgentId, PromptState> prompts;
    for (auto a : gateway::kGenerationAgents) prompts[a] = store.get(a, 1);
    store.clear_reads();

    auto gw = testing::mock_gateway(42);
    auto fb = run_feedback_iteration(in, prompts, *gw, {}, dir / "iter2", &store);

    // 8 sub-scenes x 3 agents x 1 metric.
    CHECK(fb.attempted == 24);
    std::size_t feedback_calls = 0;
    for (const auto& c : gw->log().snapshot())
      if (c.schema_id == "feedback_v1") {
        ++feedback_calls;
        CHECK(c.context["iteration"] == 2);
      }
    CHECK(feedback_calls == 24);
    CHECK(fb.records.size() == 24);
    CHECK(testing::count_lines(dir / "iter2/feedback.jsonl") == 24);
    CHECK(store.reads().empty());

    std::size_t section_frames = 0, sub_frames = 0;
    for (const auto& e : fs::directory_iterator(dir / "iter2/feedback_frames")) {
      std::string name = e.path().filename().string();
      cv::Mat m = cv::imread(e.path().string());
      CHECK(m.cols == 360);
      CHECK(m.rows == 640);
      bool sub = name.find("_1_") != std::string::npos || name.find("_2_") != std::string::npos;
      (sub ? sub_frames : section_frames)++;
    }
    CHECK(section_frames == 4 * 10);
    CHECK(sub_frames == 8 * 2);

    for (auto a : gateway::kGenerationAgents) {
      CHECK(fb.prompts.at(a).iteration == 2);
      CHECK(store.has(a, 2));
      CHECK(gateway::find_schema_block(fb.prompts.at(a).text) == gateway::find_schema_block(prompts.at(a).text));
    }
    CHECK(fb.prompts.at(AgentId::B).text == prompts.at(AgentId::B).text);
    CHECK(fb.prompts.at(AgentId::E).text == prompts.at(AgentId::E).text);
    CHECK(fs::exists(dir / "iter2/feedback_summary.json"));

    in.video.iteration = 3;
    CHECK_THROWS_AS(run_feedback_iteration(in, prompts, *gw, {}, dir / "x"), Error);
    in.video.iteration = 2;
    prompts[AgentId::F].iteration = 0;
    CHECK_THROWS_AS(run_feedback_iteration(in, prompts, *gw, {}, dir / "x"), Error);
  }

  TEST_CASE("route table") {
    CHECK(route(FeedbackAgent::flashtalk) == std::vector<AgentId>{AgentId::F});
    CHECK(route(FeedbackAgent::sceneplan) == std::vector<AgentId>{AgentId::S});
    CHECK(route(FeedbackAgent::sceneplan, {true}) == std::vector<AgentId>{AgentId::S, AgentId::E});
    CHECK(route(FeedbackAgent::text) == std::vector<AgentId>{AgentId::T, AgentId::L});
    CHECK(parse_feedback_agent("feedback_text") == FeedbackAgent::text);
    CHECK_THROWS_AS(parse_feedback_agent("editor"), Error);
  }
}
