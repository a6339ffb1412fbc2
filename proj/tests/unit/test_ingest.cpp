#include <doctest.h>

#include <array>
#include <cstdio>
#include <memory>
#include <set>
#include <thread>

#include <httplib.h>
#include <opencv2/imgcodecs.hpp>

#include "papercast/common/error.hpp"
#include "papercast/ingest/ingest.hpp"
#include "support.hpp"

using namespace papercast;
using testing::fixture;

namespace {

// Independent census: image XObjects of at least 64 px on both sides, as
// counted by pypdf.
int pypdf_figure_count(const fs::path& pdf) {
  std::string cmd = "python3 -c \"import pypdf,sys\n"
                    "r=pypdf.PdfReader(sys.argv[1])\n"
                    "print(sum(1 for p in r.pages for i in p.images if min(i.image.size)>=64))\" '" +
                    pdf.string() + "' 2>/dev/null";
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  if (!pipe) return -1;
  std::array<char, 64> buf{};
  std::string out;
  while (fgets(buf.data(), buf.size(), pipe.get())) out += buf.data();
  try {
    return std::stoi(out);
  } catch (...) {
    return -1;
  }
}

std::size_t count_kind(const ingest::PaperAssets& a, ingest::AssetKind kind) {
  std::size_t n = 0;
  for (const auto& i : a.images) n += i.kind == kind;
  return n;
}

// Serves a fake arXiv with one paper id.
class FakeArxiv {
 public:
  explicit FakeArxiv(bool serve_paper = true) {
    if (serve_paper) {
      std::string html = read_file(fixture("html/paper.html"));
      server_.Get("/html/2401.01234/", [html](const httplib::Request&, httplib::Response& res) {
        res.set_content(html, "text/html");
      });
      server_.Get(R"(/html/2401\.01234/([a-z0-9]+\.png))", [](const httplib::Request& req, httplib::Response& res) {
        res.set_content(read_file(fixture("html/" + req.matches[1].str())), "image/png");
      });
      std::string pdf = read_file(fixture("fixture_paper.pdf"));
      server_.Get("/pdf/2401.01234", [pdf](const httplib::Request&, httplib::Response& res) {
        res.set_content(pdf, "application/pdf");
      });
    }
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeArxiv() {
    server_.stop();
    thread_.join();
  }
  [[nodiscard]] std::string base() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_SUITE("ingest") {
  TEST_CASE("local fixture pdf yields its figures and a first_page screenshot") {
    testing::TempDir dir("ingest");
    auto bundle = ingest::fetch_paper(fixture("fixture_paper.pdf").string(), dir.path());
    CHECK(bundle.pdf.has_value());
    CHECK_FALSE(bundle.html.has_value());
    auto assets = ingest::extract_assets(bundle);

    int census = pypdf_figure_count(fixture("fixture_paper.pdf"));
    REQUIRE_MESSAGE(census >= 0, "pypdf census unavailable");
    CHECK(census == 3);
    CHECK(count_kind(assets, ingest::AssetKind::figure) + count_kind(assets, ingest::AssetKind::table) ==
          static_cast<std::size_t>(census));
    CHECK(count_kind(assets, ingest::AssetKind::screenshot) == 1);
    CHECK(assets.first_page().asset_id == "first_page");
    CHECK(assets.text_source == "pdf");
    CHECK_FALSE(assets.full_text().empty());
  }

  TEST_CASE("manifest round trip and decodable assets") {
    const auto& assets = testing::fixture_assets();
    auto back = ingest::read_manifest(assets.manifest_path);
    CHECK(back.images == assets.images);
    CHECK(back.body_text == assets.body_text);
    std::set<std::string> ids;
    for (const auto& img : back.images) {
      CHECK(ids.insert(img.asset_id).second);
      REQUIRE(fs::exists(img.path));
      cv::Mat m = cv::imread(img.path.string());
      CHECK_FALSE(m.empty());
      CHECK(m.cols == img.width_px);
      CHECK(m.rows == img.height_px);
    }
  }

  TEST_CASE("single page pdf without figures yields only first_page") {
    testing::TempDir dir("ingest");
    auto assets = ingest::extract_assets(ingest::fetch_paper(fixture("single_page.pdf").string(), dir.path()));
    REQUIRE(assets.images.size() == 1);
    CHECK(assets.images[0].asset_id == "first_page");
    CHECK(assets.images[0].kind == ingest::AssetKind::screenshot);
  }

  TEST_CASE("malformed identifier is NotFound") {
    testing::TempDir dir("ingest");
    try {
      (void)ingest::fetch_paper("not-a-paper", dir.path());
      FAIL("expected NotFound");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NotFound);
    }
  }

  TEST_CASE("local html copies its images; icons are discarded") {
    testing::TempDir dir("ingest");
    auto bundle = ingest::fetch_paper(fixture("html/paper.html").string(), dir.path());
    CHECK(bundle.html.has_value());
    auto assets = ingest::extract_assets(bundle);
    CHECK(assets.text_source == "html");
    CHECK(assets.title == "Granular Avalanche Forecasting with Sparse Seismic Arrays");
    CHECK(count_kind(assets, ingest::AssetKind::figure) == 2);
    CHECK(count_kind(assets, ingest::AssetKind::table) == 1);
    CHECK(assets.find("first_page") != nullptr);
    for (const auto& s : assets.body_text) CHECK(s.text.find("not a heading") == std::string::npos);
  }

  TEST_CASE("arXiv abs url fetches both html and pdf") {
    FakeArxiv server;
    testing::TempDir dir("ingest");
    ingest::FetchOptions opts;
    opts.arxiv_base = server.base();
    auto bundle = ingest::fetch_paper(server.base() + "/abs/2401.01234", dir.path(), opts);
    CHECK(bundle.paper_id == "2401_01234");
    REQUIRE(bundle.html.has_value());
    REQUIRE(bundle.pdf.has_value());
    CHECK(bundle.html_resources.size() == 4);

    auto assets = ingest::extract_assets(bundle);
    CHECK(assets.text_source == "html");
    CHECK(count_kind(assets, ingest::AssetKind::figure) == 2);
    // The screenshot is always rendered from the pdf when there is one.
    cv::Mat shot = cv::imread(assets.first_page().path.string());
    CHECK(shot.cols == ingest::kScreenshotWidth);

    auto reloaded = ingest::load_bundle(bundle.root);
    CHECK(reloaded.html == bundle.html);
    CHECK(reloaded.pdf == bundle.pdf);
  }

  TEST_CASE("unknown arXiv id is NotFound") {
    FakeArxiv server(false);
    testing::TempDir dir("ingest");
    ingest::FetchOptions opts;
    opts.arxiv_base = server.base();
    try {
      (void)ingest::fetch_paper(server.base() + "/abs/2401.99999", dir.path(), opts);
      FAIL("expected NotFound");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NotFound);
    }
  }

  TEST_CASE("unreachable host is a NetworkError") {
    testing::TempDir dir("ingest");
    try {
      (void)ingest::fetch_paper("http://127.0.0.1:1/paper.pdf", dir.path());
      FAIL("expected NetworkError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NetworkError);
    }
  }
}
