#include <doctest.h>

#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "papercast/common/error.hpp"
#include "papercast/compose/compose.hpp"
#include "papercast/media/audio.hpp"
#include "support.hpp"

using namespace papercast;
using namespace papercast::compose;
using editing::EffectKind;

namespace {

// A paper with one plain white square image.
ingest::PaperAssets white_square_assets(const fs::path& root) {
  ingest::PaperAssets a;
  a.paper_id = "synthetic";
  a.root = root;
  fs::create_directories(root / "assets");
  ingest::ImageAsset img;
  img.asset_id = "white";
  img.path = root / "assets" / "white.png";
  img.width_px = img.height_px = 100;
  cv::imwrite(img.path.string(), cv::Mat(100, 100, CV_8UC3, cv::Scalar(255, 255, 255)));
  a.images.push_back(img);
  return a;
}

planning::SubScene sub_scene(const std::string& id, double duration) {
  planning::SubScene s;
  s.sub_scene_id = id;
  s.description = "d";
  s.duration_s = duration;
  return s;
}

SceneDirectives plain(const std::string& id, double duration) {
  SceneDirectives d;
  d.sub_scene_id = id;
  d.duration_s = duration;
  return d;
}

cv::Rect bright_box(const cv::Mat& frame) {
  cv::Mat gray, mask;
  cv::cvtColor(frame, gray, cv::COLOR_BGR2GRAY);
  cv::threshold(gray, mask, 128, 255, cv::THRESH_BINARY);
  return cv::boundingRect(mask);
}

planning::AudioTrack silent_track(const fs::path& dir, planning::SectionKind kind, double seconds) {
  planning::AudioTrack t;
  t.section_kind = kind;
  t.path = dir / (planning::to_string(kind) + ".wav");
  t.duration_s = seconds;
  media::write_wav(t.path, media::make_silence(seconds));
  return t;
}

}  // namespace

TEST_SUITE("compose") {
  TEST_CASE("a 4 s sub-scene at 30 fps has 120 frames") {
    testing::TempDir dir("compose");
    auto assets = white_square_assets(dir.path());
    auto clip = build_subscene_clip(plain("s1", 4.0), assets, sub_scene("s1", 4.0), testing::small_video());
    // 4.0 s * 30 fps.
    CHECK(std::labs(clip.frame_count() - 120) <= 1);
    write_clip(clip, dir / "clip.mp4", testing::small_video());
    auto info = media::probe_video(dir / "clip.mp4", true);
    CHECK(std::labs(info.frame_count - 120) <= 1);
  }

  TEST_CASE("no images and no overlays renders the solid background") {
    testing::TempDir dir("compose");
    auto assets = white_square_assets(dir.path());
    auto d = plain("s1", 1.0);
    d.background = "#102030";
    auto clip = build_subscene_clip(d, assets, sub_scene("s1", 1.0), testing::small_video());
    cv::Mat f = clip.render(clip.frame_count() - 1);
    CHECK(f.cols == 360);
    CHECK(f.rows == 640);
    cv::Mat diff;
    cv::absdiff(f, cv::Mat(f.size(), CV_8UC3, cv::Scalar(0x30, 0x20, 0x10)), diff);
    CHECK(cv::countNonZero(diff.reshape(1)) == 0);
  }

  TEST_CASE("zoom-in 1.3 over the window scales the rendered box by 1.3") {
    testing::TempDir dir("compose");
    auto assets = white_square_assets(dir.path());
    auto d = plain("s1", 2.0);
    d.image_ids = {"white"};
    d.layout.placements["white"] = {0.25, 0.3, 0.5, 0.25};
    d.effects.push_back({EffectKind::zoom_in, "white", 0.0, 2.0, 1.3});
    auto clip = build_subscene_clip(d, assets, sub_scene("s1", 2.0), testing::small_video());
    cv::Rect first = bright_box(clip.render(0));
    cv::Rect last = bright_box(clip.render(clip.frame_count() - 1));
    REQUIRE(first.width > 50);
    CHECK(static_cast<double>(last.width) / first.width == doctest::Approx(1.3).epsilon(0.02));
    CHECK(static_cast<double>(last.height) / first.height == doctest::Approx(1.3).epsilon(0.02));
    // The zoom is centered on the slot.
    CHECK(std::abs((first.x + first.width / 2) - (last.x + last.width / 2)) <= 1);
    CHECK(clip.scale_at("white", 0) == doctest::Approx(1.0));
    CHECK(clip.scale_at("white", clip.frame_count() - 1) == doctest::Approx(1.3));
  }

  TEST_CASE("fades and overlay windows follow the timeline") {
    testing::TempDir dir("compose");
    auto assets = white_square_assets(dir.path());
    auto d = plain("s1", 2.0);
    d.image_ids = {"white"};
    d.layout.placements["white"] = {0.1, 0.1, 0.5, 0.5};
    d.effects.push_back({EffectKind::fade_in, "white", 0.0, 1.0, 1.0});
    editing::TextOverlay o;
    o.overlay_id = "text_1";
    o.content = "hi";
    o.position = {0.1, 0.8, 0.8, 0.1};
    o.start_s = 1.0;
    o.duration_s = 0.5;
    d.overlays.push_back(o);
    auto clip = build_subscene_clip(d, assets, sub_scene("s1", 2.0), testing::small_video());
    CHECK(clip.opacity_at("white", 0) == doctest::Approx(0.0));
    CHECK(clip.opacity_at("white", 40) == doctest::Approx(1.0));
    CHECK_FALSE(clip.overlay_visible(0, 29));
    CHECK(clip.overlay_visible(0, 30));
    CHECK_FALSE(clip.overlay_visible(0, 45));
  }

  TEST_CASE("a missing asset is reported") {
    testing::TempDir dir("compose");
    auto assets = white_square_assets(dir.path());
    auto d = plain("s1", 1.0);
    d.image_ids = {"ghost"};
    d.layout.placements["ghost"] = {0.1, 0.1, 0.5, 0.5};
    try {
      (void)build_subscene_clip(d, assets, sub_scene("s1", 1.0), testing::small_video());
      FAIL("expected MissingAsset");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingAsset);
    }
  }

  TEST_CASE("four scenes of 10/12/8/6 s assemble to 36 s and sample cleanly") {
    testing::TempDir dir("compose");
    auto assets = white_square_assets(dir.path());
    const double lengths[] = {10, 12, 8, 6};
    std::vector<std::vector<ClipSegment>> clips;
    std::vector<planning::AudioTrack> audio;
    double t = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      auto kind = planning::kSectionOrder[i];
      audio.push_back(silent_track(dir.path(), kind, lengths[i]));
      std::string id = planning::to_string(kind) + "_1";
      clips.push_back({build_subscene_clip(plain(id, lengths[i]), assets, sub_scene(id, lengths[i]), testing::small_video(), t)});
      t += lengths[i];
    }
    auto video = assemble_video(clips, audio, {}, dir / "video.mp4", testing::small_video(), 3);
    // 10 + 12 + 8 + 6.
    CHECK(std::fabs(video.duration_s - 36.0) <= 0.5);
    CHECK(video.iteration == 3);
    auto info = media::probe_video(video.path, true);
    CHECK(std::fabs(info.duration_s - 36.0) <= 0.5);
    CHECK(info.has_audio);
    CHECK(std::fabs(info.audio_duration_s - 36.0) <= 0.5);

    for (int count : {60, 10, 2}) {
      std::pair<double, double> span = count == 60 ? std::pair{0.0, video.duration_s}
                                       : count == 10 ? std::pair{10.0, 22.0}
                                                     : std::pair{22.0, 26.0};
      auto set = sample_frames(video.path, span, count, dir / ("frames" + std::to_string(count)));
      REQUIRE(set.frames.size() == static_cast<std::size_t>(count));
      double step = (span.second - span.first) / count;
      for (int i = 0; i < count; ++i) {
        CHECK(set.timestamps_s[static_cast<std::size_t>(i)] == doctest::Approx(span.first + (i + 0.5) * step));
        cv::Mat m = cv::imread(set.frames[static_cast<std::size_t>(i)].string());
        CHECK(m.cols == 360);
        CHECK(m.rows == 640);
      }
    }
    try {
      (void)sample_frames(video.path, {30.0, 50.0}, 2, dir / "bad");
      FAIL("expected SpanOutOfRange");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SpanOutOfRange);
    }
  }

  TEST_CASE("clips two seconds short of the narration are a duration mismatch") {
    testing::TempDir dir("compose");
    auto assets = white_square_assets(dir.path());
    auto audio = silent_track(dir.path(), planning::SectionKind::aggressive_hook, 6.0);
    std::vector<std::vector<ClipSegment>> clips = {
        {build_subscene_clip(plain("a", 4.0), assets, sub_scene("a", 4.0), testing::small_video())}};
    try {
      (void)assemble_video(clips, {audio}, {}, dir / "v.mp4", testing::small_video());
      FAIL("expected DurationMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DurationMismatch);
    }
  }

  TEST_CASE("large frames are downscaled to 360x640 for models") {
    testing::TempDir dir("compose");
    testing::write_test_video(dir / "big.mp4", 1.0, 30, 720, 1280);
    auto set = sample_frames(dir / "big.mp4", {0.0, 1.0}, 3, dir / "f");
    for (const auto& p : set.frames) {
      cv::Mat m = cv::imread(p.string());
      CHECK(m.cols == 360);
      CHECK(m.rows == 640);
    }
  }

  TEST_CASE("sub-scene spans chain scene by scene") {
    planning::ScenePlan plan;
    std::vector<planning::AudioTrack> audio;
    for (std::size_t i = 0; i < 2; ++i) {
      planning::Scene sc;
      sc.section_kind = planning::kSectionOrder[i];
      for (int k = 0; k < 2; ++k) {
        auto s = sub_scene("s" + std::to_string(i) + std::to_string(k), 2.0);
        s.start_s = 2.0 * k;
        sc.sub_scenes.push_back(s);
      }
      plan.scenes.push_back(sc);
      planning::AudioTrack a;
      a.section_kind = sc.section_kind;
      a.duration_s = 4.1;
      audio.push_back(a);
    }
    auto spans = sub_scene_spans(plan, audio);
    REQUIRE(spans.size() == 4);
    CHECK(spans[2].first == "s10");
    CHECK(spans[2].second.first == doctest::Approx(4.1));
  }
}
