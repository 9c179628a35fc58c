#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "birdsi/groundtruth.hpp"
#include "birdsi/scoring.hpp"
#include "birdsi/window.hpp"

namespace birdsi::runner {

using Duration = std::chrono::nanoseconds;

enum class QueryOutcome { Ok, Timeout, ProtocolError, TransportError };

std::string to_string(QueryOutcome outcome);

struct QueryTiming {
  std::string query_id;
  QueryOutcome outcome = QueryOutcome::Ok;
  Duration response_time{0};    // request-send to last-byte, Ok only
  Duration failure_elapsed{0};  // time until the failure, non-Ok only
  std::string detail;           // failure description, empty on Ok
};

struct QueryOrder {
  enum class Kind { GtOrder, Shuffled };
  Kind kind = Kind::GtOrder;
  std::uint64_t seed = 0;
};

struct RunConfig {
  std::string host = "127.0.0.1";
  int port = 0;
  window::WindowSpec window;  // g_max filled from the loaded ground truth
  scoring::PenaltyPolicy penalty = scoring::PenaltyPolicy::w_plus_one();
  scoring::NormalizationMode normalization = scoring::NormalizationMode::Shifted;
  bool exclude_self = false;  // score against vectors without the query image
  int concurrency = 1;
  std::chrono::milliseconds per_query_timeout{30000};
  Count warmup_queries = 0;
  QueryOrder order;
};

struct TimingStats {
  bool present = false;  // false when no query succeeded
  Duration mean{0}, median{0}, p95{0}, p99{0}, min{0}, max{0};
};

// Nearest-rank percentiles; the median averages the two middle values for
// even sample counts. `present` is false for an empty Ok set.
TimingStats timing_stats(const std::vector<QueryTiming>& timings);

struct QueryResult {
  scoring::QueryScore score;
  QueryTiming timing;
  std::vector<std::string> response;  // parsed ids, for recording / rescoring
};

struct RunResult {
  RunConfig config;
  Count gt_version = 0;
  Count g_max = 0;
  std::vector<QueryResult> per_query;  // sorted by query_id
  scoring::BenchmarkScore score;
  TimingStats stats;
  Count failures = 0;
};

// One wire query: GET /query?id=<query_id>&n=<n>. Returns the ranked ids on
// success; failures carry the outcome classification and elapsed time.
struct IssueOutcome {
  QueryOutcome outcome = QueryOutcome::Ok;
  std::vector<std::string> ids;  // at most n, Ok only
  Duration elapsed{0};
  std::string detail;
};

IssueOutcome issue_query(const std::string& host, int port,
                         const std::string& query_id, Count n,
                         std::chrono::milliseconds timeout);

// Pure protocol-parsing core of issue_query, exposed for tests.
// status < 0 encodes a transport failure.
IssueOutcome parse_query_response(int status, std::string_view body, Count n);

// Scoring vectors and windows for every query of a ground-truth file, as the
// runner and the offline scorer both use them. Applies exclude_self, selects
// W per query, and rejects windows below G. Queries whose vector would be
// empty under exclude_self are dropped.
struct PreparedQuery {
  scoring::GroundTruthVector gt;
  Count window = 0;
};
std::vector<PreparedQuery> prepare_queries(const groundtruth::GroundTruthFile& gt,
                                           const window::WindowSpec& window_spec,
                                           bool exclude_self);

// Issues every prepared query exactly once (after warmup), scores the
// responses, and aggregates timing statistics. Failed queries score worst
// case and count as failures. Throws IoError when the handshake fails.
RunResult run_benchmark(const RunConfig& config,
                        const groundtruth::GroundTruthFile& gt);

}  // namespace birdsi::runner
