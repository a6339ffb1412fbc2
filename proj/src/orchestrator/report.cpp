#include <algorithm>

#include <spdlog/spdlog.h>

#include "papercast/common/error.hpp"
#include "papercast/orchestrator/orchestrator.hpp"

namespace papercast::orchestrator {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::UnknownAgent: return kExitUsage;
    case ErrorCode::BackendUnavailable:
    case ErrorCode::NetworkError:
    case ErrorCode::TTSBackendError:
    case ErrorCode::AvatarBackendError: return kExitBackendFailure;
    default: return kExitStageFailure;
  }
}

evaluate::AggregateSummary write_report(const fs::path& workdir, const fs::path& out_dir,
                                        const evaluate::Grouping& grouping) {
  if (!fs::is_directory(workdir)) raise(ErrorCode::NotFound, "workdir " + workdir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& paper : fs::directory_iterator(workdir)) {
    if (!paper.is_directory()) continue;
    for (const auto& e : fs::directory_iterator(paper.path())) {
      std::string name = e.path().filename().string();
      if (e.is_directory() && (name.rfind("iter", 0) == 0 || name == "baseline") &&
          fs::exists(e.path() / "evaluation.json"))
        files.push_back(e.path() / "evaluation.json");
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<evaluate::EvaluationReport> reports;
  for (const auto& f : files) reports.push_back(evaluate::report_from_json(read_json(f)));
  auto summary = evaluate::aggregate_scores(reports, grouping);
  fs::create_directories(out_dir);
  evaluate::write_csv(summary, out_dir / "aggregate.csv");
  spdlog::info("aggregated {} report(s), dropped {}, into {}", summary.reports_used, summary.reports_dropped,
               (out_dir / "aggregate.csv").string());
  return summary;
}

}  // namespace papercast::orchestrator
