#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "papercast/common/error.hpp"
#include "papercast/common/rng.hpp"
#include "papercast/common/text.hpp"
#include "papercast/gateway/backends.hpp"
#include "papercast/gateway/schemas.hpp"
#include "papercast/media/audio.hpp"
#include "papercast/media/video.hpp"
#include "papercast/planning/planning.hpp"
#include "support.hpp"

using namespace papercast;
using namespace papercast::planning;

namespace {

std::string words(int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s += (i ? " w" : "w") + std::to_string(i);
  return s;
}

Section section_with(std::vector<std::string> ids, SectionKind kind = SectionKind::aggressive_hook) {
  Section s;
  s.kind = kind;
  s.order_index = static_cast<int>(kind);
  s.narration_text = words(30);
  s.assigned_image_ids = std::move(ids);
  return s;
}

AudioTrack track(double seconds, SectionKind kind = SectionKind::aggressive_hook) {
  AudioTrack a;
  a.section_kind = kind;
  a.duration_s = seconds;
  return a;
}

json sub(double d, std::vector<std::string> ids = {}) {
  json imgs = json::array();
  for (auto& id : ids) imgs.push_back({{"asset_id", id}});
  return {{"description", "direction"}, {"duration_s", d}, {"images", imgs}};
}

std::vector<std::string> sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

std::vector<std::string> scene_ids(const Scene& scene) {
  std::vector<std::string> out;
  for (const auto& s : scene.sub_scenes)
    for (const auto& i : s.images) out.push_back(i.asset_id);
  return out;
}

std::string flashtalk_json(const std::vector<std::vector<std::string>>& ids) {
  json sections = json::array();
  for (std::size_t i = 0; i < 4; ++i)
    sections.push_back({{"kind", std::string(gateway::kSectionKinds[i])},
                        {"narration", "Section number " + std::to_string(i) + " says something useful here."},
                        {"image_ids", ids[i]}});
  return json{{"sections", sections}}.dump();
}

}  // namespace

TEST_SUITE("planning") {
  TEST_CASE("mock flashtalk on the fixture paper") {
    const auto& assets = testing::fixture_assets();
    auto gw = testing::mock_gateway(42);
    auto script = generate_flashtalk(assets, gateway::initial_prompt_state(gateway::AgentId::F), *gw);
    CHECK_FALSE(check_script(script, assets).has_value());
    REQUIRE(script.sections.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(script.sections[i].kind == kSectionOrder[i]);
      CHECK(script.sections[i].order_index == static_cast<int>(i));
    }
    const auto& hook = script.sections[0].assigned_image_ids;
    CHECK(std::find(hook.begin(), hook.end(), "first_page") != hook.end());
    CHECK(script.target_duration_s == 120.0);
  }

  TEST_CASE("unknown asset references are dropped with a warning") {
    const auto& assets = testing::fixture_assets();
    gateway::Gateway gw(std::make_shared<gateway::ScriptedBackend>(
        std::vector<std::string>{flashtalk_json({{"first_page", "fig_99"}, {"fig_1"}, {}, {}})}));
    auto script = generate_flashtalk(assets, gateway::initial_prompt_state(gateway::AgentId::F), gw);
    CHECK(script.sections[0].assigned_image_ids == std::vector<std::string>{"first_page"});
    REQUIRE(script.warnings.size() == 1);
    CHECK(script.warnings[0].find("fig_99") != std::string::npos);
    CHECK_FALSE(check_script(script, assets).has_value());
  }

  TEST_CASE("a paper with no figures only ever assigns first_page") {
    testing::TempDir dir("planning");
    auto assets = ingest::extract_assets(ingest::fetch_paper(testing::fixture("single_page.pdf").string(), dir.path()));
    auto gw = testing::mock_gateway(5);
    auto script = generate_flashtalk(assets, gateway::initial_prompt_state(gateway::AgentId::F), *gw);
    CHECK_FALSE(check_script(script, assets).has_value());
    for (const auto& s : script.sections)
      for (const auto& id : s.assigned_image_ids) CHECK(id == "first_page");
  }

  TEST_CASE("target duration is kept within the flash-talk range") {
    const auto& assets = testing::fixture_assets();
    auto gw = testing::mock_gateway(1);
    CHECK(generate_flashtalk(assets, gateway::initial_prompt_state(gateway::AgentId::F), *gw, 20.0).target_duration_s == 60.0);
    CHECK_THROWS_AS(generate_flashtalk(assets, gateway::initial_prompt_state(gateway::AgentId::S), *gw), Error);
  }

  TEST_CASE("stub narration lasts words / 2.5 seconds") {
    testing::TempDir dir("planning");
    StubTts tts;
    auto s = section_with({});
    s.narration_text = words(25);
    auto a = synthesize_narration(s, tts, dir.path());
    // 25 words at 2.5 words per second.
    CHECK(a.duration_s == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(std::fabs(media::probe_audio_duration(a.path) - a.duration_s) <= 0.05);
    CHECK(synthesize_narration(s, tts, dir / "again").duration_s == a.duration_s);

    s.narration_text = "   ";
    try {
      (void)synthesize_narration(s, tts, dir.path());
      FAIL("expected PreconditionViolation");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::PreconditionViolation);
    }
  }

  TEST_CASE("stub avatar matches its audio; none yields no clip") {
    testing::TempDir dir("planning");
    StubTts tts;
    StubAvatar avatar;
    auto s = section_with({});
    s.narration_text = words(25);
    auto a = synthesize_narration(s, tts, dir / "audio");
    auto clip = render_avatar(s, a, avatar, dir / "avatar");
    REQUIRE(clip.path.has_value());
    double audio_len = media::decode_audio(a.path).duration_s();
    double video_len = media::probe_video(*clip.path, true).duration_s;
    CHECK(std::fabs(video_len - audio_len) <= 0.25);

    NoAvatar none;
    CHECK_FALSE(render_avatar(s, a, none, dir / "none").path.has_value());
    CHECK_THROWS_AS(make_avatar_backend("puppet"), Error);
    CHECK(make_tts_backend("stub")->name() == "stub");
  }

  TEST_CASE("proportional rescale") {
    // 5/5/5 over 12 s: each gets 12 * 5 / 15 = 4.
    auto d = rescale_durations({5, 5, 5}, 12.0);
    REQUIRE(d.size() == 3);
    for (double x : d) CHECK(x == doctest::Approx(4.0).epsilon(1e-12));
    auto e = rescale_durations({1, 3}, 8.0);
    CHECK(e[0] == doctest::Approx(2.0));
    CHECK(e[1] == doctest::Approx(6.0));
    auto f = rescale_durations({0, -1, NAN}, 9.0);
    for (double x : f) CHECK(x == doctest::Approx(3.0));
  }

  TEST_CASE("a single sub-scene takes the whole audio") {
    auto scene = build_scene(section_with({"first_page"}), track(7.3), json::array({sub(2.0, {"first_page"})}));
    REQUIRE(scene.sub_scenes.size() == 1);
    CHECK(scene.sub_scenes[0].duration_s == doctest::Approx(7.3));
    CHECK(scene.sub_scenes[0].images[0].duration_s == doctest::Approx(7.3));
  }

  TEST_CASE("images without hints are spread one per sub-scene") {
    auto scene = build_scene(section_with({"a", "b"}), track(8.0), json::array({sub(1), sub(1)}));
    REQUIRE(scene.sub_scenes.size() == 2);
    for (const auto& s : scene.sub_scenes) {
      REQUIRE(s.images.size() == 1);
      CHECK(s.images[0].duration_s == doctest::Approx(s.duration_s));
    }
    auto empty = build_scene(section_with({}), track(8.0), json::array({sub(1), sub(1)}));
    for (const auto& s : empty.sub_scenes) CHECK(s.images.empty());
  }

  TEST_CASE("image conservation over random model hints") {
    Rng rng(2024);
    const std::vector<std::string> pool = {"first_page", "fig_1", "fig_2", "fig_3", "table_1", "ghost"};
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<std::string> assigned;
      for (const auto& id : pool)
        if (id != "ghost" && rng.chance(0.5)) assigned.push_back(id);
      json subs = json::array();
      int n = rng.uniform_int(1, 5);
      for (int k = 0; k < n; ++k) {
        std::vector<std::string> hint;
        int m = rng.uniform_int(0, 3);
        for (int q = 0; q < m; ++q) hint.push_back(pool[static_cast<std::size_t>(rng.uniform_int(0, 5))]);
        subs.push_back(sub(rng.uniform(0.5, 6.0), hint));
      }
      double audio = rng.uniform(3.0, 40.0);
      auto scene = build_scene(section_with(assigned), track(audio), subs);
      CHECK(sorted(scene_ids(scene)) == sorted(assigned));
      CHECK(std::fabs(scene.duration_s() - audio) <= 0.25);
      double t = 0.0;
      for (const auto& s : scene.sub_scenes) {
        CHECK(std::fabs(s.start_s - t) < 1e-9);
        for (const auto& i : s.images) CHECK(i.duration_s <= s.duration_s + 1e-9);
        t += s.duration_s;
      }
    }
  }

  TEST_CASE("more than five sub-scenes twice is infeasible") {
    json six = json::array();
    for (int i = 0; i < 6; ++i) six.push_back(sub(1));
    auto backend = std::make_shared<gateway::ScriptedBackend>(std::vector<std::string>{json{{"sub_scenes", six}}.dump()});
    gateway::Gateway gw(backend);
    FlashtalkScript script;
    std::vector<AudioTrack> audio;
    for (auto kind : kSectionOrder) {
      script.sections.push_back(section_with({}, kind));
      audio.push_back(track(5.0, kind));
    }
    try {
      (void)generate_sceneplan(script, audio, gateway::initial_prompt_state(gateway::AgentId::S), gw);
      FAIL("expected InfeasiblePlan");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InfeasiblePlan);
    }
    REQUIRE(backend->calls() == 2);
    CHECK(backend->requests()[1].prompt.find("Return between 1 and 5 sub-scenes") != std::string::npos);
  }

  TEST_CASE("mock scene plan satisfies every plan invariant") {
    testing::TempDir dir("planning");
    const auto& assets = testing::fixture_assets();
    auto gw = testing::mock_gateway(11);
    auto script = generate_flashtalk(assets, gateway::initial_prompt_state(gateway::AgentId::F), *gw);
    StubTts tts;
    std::vector<AudioTrack> audio;
    for (const auto& s : script.sections) audio.push_back(synthesize_narration(s, tts, dir.path()));
    auto plan = generate_sceneplan(script, audio, gateway::initial_prompt_state(gateway::AgentId::S), *gw);
    CHECK_FALSE(check_plan(plan, script, audio).has_value());

    // Slices partition the section narration in order.
    for (std::size_t i = 0; i < plan.scenes.size(); ++i) {
      std::string joined;
      for (std::size_t k = 0; k < plan.scenes[i].sub_scenes.size(); ++k) {
        auto slice = narration_slice(script.sections[i], plan.scenes[i], k);
        if (!slice.empty()) joined += (joined.empty() ? "" : " ") + slice;
      }
      CHECK(joined == text::normalize_space(script.sections[i].narration_text));
    }

    auto back = plan_from_json(to_json(plan));
    REQUIRE(back.scenes.size() == plan.scenes.size());
    for (std::size_t i = 0; i < back.scenes.size(); ++i) CHECK(back.scenes[i] == plan.scenes[i]);
    auto s2 = script_from_json(to_json(script));
    CHECK(s2.sections == script.sections);
    auto a2 = audio_from_json(to_json(audio[0], dir.path()), dir.path());
    CHECK(a2.path == audio[0].path);
  }
}
