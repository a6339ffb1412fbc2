#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>

#include <opencv2/core.hpp>
#include <unistd.h>

namespace papercast::testing {

fs::path fixture(const std::string& name) { return fs::path(PAPERCAST_FIXTURES) / name; }

namespace {
std::atomic<int> temp_counter{0};
}

TempDir::TempDir(const std::string& label) {
  path_ = fs::path(PAPERCAST_TEST_TMP) /
          (label + "_" + std::to_string(::getpid()) + "_" + std::to_string(temp_counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

const ingest::PaperAssets& fixture_assets() {
  static TempDir dir("assets");
  static const ingest::PaperAssets assets =
      ingest::extract_assets(ingest::fetch_paper(fixture("fixture_paper.pdf").string(), dir.path()));
  return assets;
}

media::VideoSettings small_video() {
  media::VideoSettings v;
  v.width = 360;
  v.height = 640;
  v.fps = 30;
  v.profile = media::CodecProfile::production;
  return v;
}

orchestrator::PipelineConfig small_config(const fs::path& workdir, int iterations) {
  orchestrator::PipelineConfig c;
  c.workdir = workdir;
  c.iterations = iterations;
  c.video = small_video();
  return c;
}

std::shared_ptr<gateway::Gateway> mock_gateway(std::uint64_t seed) {
  return std::make_shared<gateway::Gateway>(std::make_shared<gateway::MockBackend>(seed));
}

void write_test_video(const fs::path& path, double seconds, int fps, int width, int height) {
  media::VideoSettings s;
  s.width = width;
  s.height = height;
  s.fps = fps;
  s.profile = media::CodecProfile::lossless_test;
  media::VideoEncoder enc(path, s);
  auto frames = static_cast<long>(seconds * fps + 0.5);
  for (long i = 0; i < frames; ++i) {
    // Brightness ramps so frames at different times are distinguishable.
    auto level = static_cast<double>(i * 255 / std::max(1L, frames - 1));
    enc.write(cv::Mat(height, width, CV_8UC3, cv::Scalar(level, 64, 255 - level)));
  }
  enc.finish();
}

std::size_t count_lines(const fs::path& path) {
  std::ifstream in(path);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n;
}

long overlap_cells(const GridRect& a, const GridRect& b) {
  long n = 0;
  for (int cx = std::max(a.x, b.x); cx < std::min(a.x + a.w, b.x + b.w); ++cx)
    for (int cy = std::max(a.y, b.y); cy < std::min(a.y + a.h, b.y + b.h); ++cy) ++n;
  return n;
}

std::vector<std::size_t> oracle_prune(const std::vector<GridRect>& rs) {
  std::vector<bool> alive(rs.size(), true);
  for (;;) {
    long best = 0;
    std::size_t victim = rs.size();
    for (std::size_t i = 0; i < rs.size(); ++i) {
      if (!alive[i]) continue;
      long total = 0;
      for (std::size_t j = 0; j < rs.size(); ++j)
        if (i != j && alive[j]) total += overlap_cells(rs[i], rs[j]);
      if (total > 0 && total >= best) {
        best = total;
        victim = i;
      }
    }
    if (victim == rs.size()) break;
    alive[victim] = false;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rs.size(); ++i)
    if (alive[i]) out.push_back(i);
  return out;
}

std::vector<GridRect> random_grid_rects(Rng& rng, int count) {
  std::vector<GridRect> out;
  for (int i = 0; i < count; ++i) {
    int w = rng.uniform_int(4, 40), h = rng.uniform_int(2, 16);
    out.push_back({rng.uniform_int(0, 64 - w), rng.uniform_int(0, 64 - h), w, h});
  }
  return out;
}

}  // namespace papercast::testing
