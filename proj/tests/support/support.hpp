#pragma once

#include <memory>
#include <string>

#include "papercast/common/io.hpp"
#include "papercast/common/rng.hpp"
#include "papercast/editing/editing.hpp"
#include "papercast/gateway/backends.hpp"
#include "papercast/gateway/gateway.hpp"
#include "papercast/ingest/ingest.hpp"
#include "papercast/media/video.hpp"
#include "papercast/orchestrator/orchestrator.hpp"

namespace papercast::testing {

fs::path fixture(const std::string& name);

// Fresh directory under the build tree, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& label = "t");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

// The fixture paper ingested once per process into a shared work directory.
const ingest::PaperAssets& fixture_assets();

// 360x640 keeps encoding cheap in unit tests.
media::VideoSettings small_video();

// All-mock pipeline config writing into `workdir`.
orchestrator::PipelineConfig small_config(const fs::path& workdir, int iterations = 1);

std::shared_ptr<gateway::Gateway> mock_gateway(std::uint64_t seed = 42);

// Clip whose colour ramps over `seconds` at `fps`, written with the lossless profile.
void write_test_video(const fs::path& path, double seconds, int fps, int width = 360, int height = 640);

// Number of lines in a file.
std::size_t count_lines(const fs::path& path);

// Rectangles on a 1/64 grid, handled with integer cell coordinates.
struct GridRect {
  int x, y, w, h;
  [[nodiscard]] editing::Rect to_rect() const { return {x / 64.0, y / 64.0, w / 64.0, h / 64.0}; }
};

long overlap_cells(const GridRect& a, const GridRect& b);

// Brute-force greedy pruning: repeatedly drop the overlay with the largest
// total overlap against the other survivors; on ties the later one goes.
std::vector<std::size_t> oracle_prune(const std::vector<GridRect>& rs);

std::vector<GridRect> random_grid_rects(Rng& rng, int count);

}  // namespace papercast::testing
