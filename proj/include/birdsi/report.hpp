#pragma once

#include <optional>
#include <string>
#include <vector>

#include "birdsi/groundtruth.hpp"
#include "birdsi/runner.hpp"
#include "birdsi/scoring.hpp"

namespace birdsi::report {

// Pre-recorded ranked responses, one block per query:
//   query <link-id>
//   <ranked id, best first, one per line>
// blocks separated by a blank line.
struct ResultsFile {
  std::vector<std::pair<std::string, std::vector<std::string>>> entries;
};

std::string serialize_results(const ResultsFile& results);
ResultsFile parse_results(std::string_view text);
ResultsFile load_results(const std::filesystem::path& path);
void save_results(const ResultsFile& results, const std::filesystem::path& path);

// The Ok responses of a live run, in query_id order, ready for rescoring.
ResultsFile record_responses(const runner::RunResult& run);

struct OfflineResult {
  scoring::BenchmarkScore score;
  std::vector<runner::PreparedQuery> prepared;
  std::vector<bool> missing;  // parallel to score.per_query
};

// Scores pre-recorded responses against the ground truth under the given
// config (window, penalty, normalization, exclude_self; no server involved).
// Queries absent from the results score worst case and are flagged missing.
// Result ids that match no query are an input error.
OfflineResult score_results(const groundtruth::GroundTruthFile& gt,
                            const ResultsFile& results,
                            const runner::RunConfig& config);

struct ReportRow {
  std::string query_id;
  Count gt_size = 0, window = 0, found = 0, missed = 0;
  Rational retrieval_rank, relative_rank, normalized;
  std::optional<runner::Duration> response_time;
  std::string outcome;  // OK, TIMEOUT, PROTOCOL_ERROR, TRANSPORT_ERROR, MISSING
};

struct Report {
  int format_version = 1;
  std::string timestamp;
  std::vector<std::pair<std::string, std::string>> config;  // echo, in order
  std::int64_t gt_version = 0;
  Count g_max = 0;
  Count query_count = 0;
  Rational score;  // S
  std::vector<ReportRow> rows;
  runner::TimingStats stats;
  Count failures = 0;
};

Report report_from_run(const runner::RunResult& run, std::string timestamp);
Report report_from_offline(const OfflineResult& offline,
                           const groundtruth::GroundTruthFile& gt,
                           const runner::RunConfig& config,
                           std::string timestamp);

// Fixed-width table; the first line carries the leading indicators
// (S and mean response time).
std::string render_text(const Report& report);

// Structured rendering; metric values appear both as 6-decimal strings and
// as exact fractions.
std::string render_json(const Report& report);

}  // namespace birdsi::report
