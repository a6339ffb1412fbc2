#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <opencv2/imgcodecs.hpp>

#include "papercast/common/error.hpp"
#include "papercast/common/rng.hpp"
#include "papercast/evaluate/evaluate.hpp"
#include "papercast/gateway/backends.hpp"
#include "support.hpp"

using namespace papercast;
using namespace papercast::evaluate;

namespace {

EvaluationReport full_report(int score, const std::string& condition = kMultiAgent, int iteration = 1) {
  EvaluationReport r;
  r.paper_id = "p";
  r.iteration = iteration;
  r.condition = condition;
  for (const auto& m : rubric()) r.scores[m.id] = score;
  return r;
}

const AggregateRow* find_row(const AggregateSummary& s, const std::string& metric, const std::string& condition = kMultiAgent) {
  for (const auto& r : s.rows)
    if (r.metric == metric && r.condition == condition) return &r;
  return nullptr;
}

}  // namespace

TEST_SUITE("evaluate") {
  TEST_CASE("rubric has ten metrics in four categories") {
    CHECK(rubric().size() == 10);
    REQUIRE(categories().size() == 4);
    CHECK(categories()[0].first == "Content Accuracy");
    CHECK(categories()[3].second == std::vector<std::string>{"AR", "Pacing", "CTA", "HE"});
  }

  TEST_CASE("confidence half-width") {
    // Sample sd of {3,4,5} is 1.
    auto ci = ci_half_width({3.0, 4.0, 5.0});
    REQUIRE(ci.has_value());
    CHECK(std::abs(*ci - 1.96 / std::sqrt(3.0)) < 1e-9);
    CHECK_FALSE(ci_half_width({4.0}).has_value());
    CHECK_FALSE(ci_half_width({}).has_value());
    CHECK(*ci_half_width({2.0, 2.0}) == 0.0);
  }

  TEST_CASE("category means") {
    auto m = category_means({{"SI", 4}, {"KCC", 2}, {"LF", 5}});
    CHECK(m.at("Content Accuracy") == doctest::Approx(3.0));
    CHECK(m.count("Clarity") == 0);
    auto f = category_means(full_report(3).scores);
    CHECK(f.size() == 4);
  }

  TEST_CASE("ten-report fixture matches the reference statistics") {
    json fx = read_json(testing::fixture("ten_reports.json"));
    std::vector<EvaluationReport> reports;
    for (const auto& r : fx["reports"]) reports.push_back(report_from_json(r));
    auto s = aggregate_scores(reports);
    CHECK(s.reports_used == 10);
    for (const auto& [metric, exp] : fx["expected"].items()) {
      const auto* row = find_row(s, metric);
      REQUIRE_MESSAGE(row, metric);
      CHECK(row->n == 10);
      CHECK(std::abs(row->mean - exp["mean"].get<double>()) < 1e-9);
      REQUIRE(row->ci_half_width.has_value());
      CHECK(std::abs(*row->ci_half_width - exp["ci"].get<double>()) < 1e-9);
    }
  }

  TEST_CASE("aggregation does not depend on report order") {
    json fx = read_json(testing::fixture("ten_reports.json"));
    std::vector<EvaluationReport> reports;
    for (const auto& r : fx["reports"]) reports.push_back(report_from_json(r));
    std::string reference = to_csv(aggregate_scores(reports));
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
      std::shuffle(reports.begin(), reports.end(), std::mt19937_64(rng.next()));
      CHECK(to_csv(aggregate_scores(reports)) == reference);
    }
  }

  TEST_CASE("conditions, dropping and empty input") {
    std::vector<EvaluationReport> reports = {full_report(4), full_report(2), full_report(3, kSingleAgent)};
    auto bad = full_report(5);
    bad.scores.erase("CTA");
    bad.excluded = {"CTA"};
    reports.push_back(bad);
    auto s = aggregate_scores(reports);
    CHECK(s.reports_used == 3);
    CHECK(s.reports_dropped == 1);
    std::size_t si_rows = std::count_if(s.rows.begin(), s.rows.end(), [](const AggregateRow& r) { return r.metric == "SI"; });
    CHECK(si_rows == 2);
    CHECK(find_row(s, "SI")->mean == doctest::Approx(3.0));
    CHECK_FALSE(find_row(s, "SI", kSingleAgent)->ci_half_width.has_value());

    Grouping keep;
    keep.drop_incomplete = false;
    CHECK(aggregate_scores(reports, keep).reports_used == 4);
    CHECK(find_row(aggregate_scores(reports, keep), "CTA")->n == 2);

    try {
      (void)aggregate_scores({bad});
      FAIL("expected EmptyInput");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyInput);
    }
  }

  TEST_CASE("csv layout") {
    auto csv = to_csv(aggregate_scores({full_report(4), full_report(5)}));
    CHECK(csv.rfind("condition,iteration,paper_id,metric,n,mean,ci_half_width,ci_defined\n", 0) == 0);
    CHECK(csv.find("multi_agent,1,,SI,2,4.500000,") != std::string::npos);
    CHECK(csv.find("\"Visual & Audio Sync\"") == std::string::npos);
    CHECK(csv.find("multi_agent,1,,Visual & Audio Sync,2,") != std::string::npos);
    auto single = to_csv(aggregate_scores({full_report(4)}));
    CHECK(single.find(",,false\n") != std::string::npos);
  }

  TEST_CASE("evaluate_video consumes sixty frames at 360x640") {
    testing::TempDir dir("evaluate");
    testing::write_test_video(dir / "v.mp4", 6.0, 30);
    auto mock = std::make_shared<gateway::MockBackend>(42);
    std::vector<gateway::BackendRequest> seen;
    auto spy = std::make_shared<gateway::ScriptedBackend>([&](const gateway::BackendRequest& r) {
      seen.push_back(r);
      return mock->complete(r);
    });
    gateway::Gateway gw(spy);
    EvaluateOptions opts;
    opts.paper_id = "p";
    opts.iteration = 2;
    auto report = evaluate_video(dir / "v.mp4", "A narration.", gw, dir / "frames", opts);
    REQUIRE(seen.size() == 1);
    CHECK(seen[0].images.size() == 60);
    CHECK(seen[0].schema_id == "evaluation_v1");
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir / "frames")) {
      cv::Mat m = cv::imread(e.path().string());
      CHECK(m.cols == 360);
      CHECK(m.rows == 640);
      ++files;
    }
    CHECK(files == 60);
    CHECK(report.complete());
    CHECK(report.iteration == 2);
    for (const auto& [id, s] : report.scores) CHECK((s >= 1 && s <= 5));

    auto again = evaluate_video(dir / "v.mp4", "A narration.", gw, dir / "frames2", opts);
    CHECK(to_json(again).dump() == to_json(report).dump());
    CHECK(report_from_json(to_json(report)).scores == report.scores);
  }

  TEST_CASE("partially valid scores are kept per metric") {
    testing::TempDir dir("evaluate");
    testing::write_test_video(dir / "v.mp4", 2.0, 30);
    json answer = {{"scores", {{"SI", 4}, {"KCC", 9}, {"LF", "high"}}}, {"comments", {{"SI", "accurate"}}}};
    auto backend = std::make_shared<gateway::ScriptedBackend>(std::vector<std::string>{answer.dump()});
    gateway::Gateway gw(backend);
    auto report = evaluate_video(dir / "v.mp4", "", gw, dir / "frames", {});
    CHECK(report.scores == std::map<std::string, int>{{"SI", 4}});
    CHECK(report.comments.at("SI") == "accurate");
    CHECK(report.excluded.size() == 9);
    CHECK_FALSE(report.complete());
    CHECK(report.category_means.empty());
  }
}
