#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>

#include "birdsi/errors.hpp"
#include "birdsi/groundtruth.hpp"
#include "birdsi/mockserver.hpp"
#include "birdsi/report.hpp"
#include "birdsi/runner.hpp"

using namespace birdsi;
using namespace birdsi::groundtruth;
using namespace birdsi::report;
using namespace std::chrono_literals;

namespace {

std::string fake_id(int i) {
  return hash_image(std::string_view{"synthetic-image-" + std::to_string(i)});
}

GroundTruthFile make_gt(const std::vector<std::vector<int>>& category_members) {
  std::vector<Category> categories;
  int c = 0;
  for (const auto& members : category_members) {
    Category category;
    category.name = "cat" + std::to_string(c++);
    for (int i : members)
      category.members.push_back(
          ImageRef{fake_id(i), category.name + "/img" + std::to_string(i) + ".png"});
    categories.push_back(std::move(category));
  }
  return compile_ground_truth(categories);
}

}  // namespace

TEST_CASE("results files round-trip") {
  ResultsFile results;
  results.entries.emplace_back(fake_id(0),
                               std::vector<std::string>{fake_id(0), fake_id(1)});
  results.entries.emplace_back(fake_id(2), std::vector<std::string>{});
  results.entries.emplace_back(fake_id(3), std::vector<std::string>{fake_id(4)});
  std::string text = serialize_results(results);
  ResultsFile parsed = parse_results(text);
  CHECK(parsed.entries == results.entries);
  CHECK(serialize_results(parsed) == text);
}

TEST_CASE("results parsing rejects malformed input") {
  CHECK_THROWS_AS(parse_results("ranked-id-without-a-block\n"), InputError);
  CHECK_THROWS_AS(parse_results("query a\nx\n\nquery a\ny\n"), InputError);
  CHECK(parse_results("").entries.empty());
  CHECK(parse_results("\n\n").entries.empty());
}

TEST_CASE("offline scoring of verbatim ground truth is perfect") {
  GroundTruthFile gt = make_gt({{0, 1, 2}, {3, 4}});
  ResultsFile results;
  for (const Query& q : gt.queries)
    results.entries.emplace_back(q.image.link_id, q.ground_truth);
  runner::RunConfig config;
  OfflineResult offline = score_results(gt, results, config);
  CHECK(offline.score.score == 0);
  for (bool missing : offline.missing) CHECK_FALSE(missing);
}

TEST_CASE("an empty recording scores one with every query flagged") {
  GroundTruthFile gt = make_gt({{0, 1, 2}});
  runner::RunConfig config;
  OfflineResult offline = score_results(gt, ResultsFile{}, config);
  CHECK(offline.score.score == 1);
  for (bool missing : offline.missing) CHECK(missing);
  Report rep = report_from_offline(offline, gt, config, "t");
  CHECK(rep.failures == 3);
  for (const ReportRow& row : rep.rows) CHECK(row.outcome == "MISSING");
}

TEST_CASE("the interleaved worked example scores one third") {
  // gt {A,B}, response [X, A, X2, B, X3], W = 5
  GroundTruthFile gt = make_gt({{0, 1}});
  const Query& q = gt.queries.front();
  std::string other =
      q.ground_truth[0] == q.image.link_id ? q.ground_truth[1] : q.ground_truth[0];
  ResultsFile results;
  results.entries.emplace_back(
      q.image.link_id,
      std::vector<std::string>{fake_id(100), q.image.link_id, fake_id(101), other,
                               fake_id(102)});
  // only score this one query: restrict the gt to its category... both
  // queries share the vector, so provide the second one too, perfectly
  const Query& p = gt.queries.back();
  results.entries.emplace_back(p.image.link_id, p.ground_truth);

  runner::RunConfig config;
  config.window = window::parse_window_spec("fixed:5");
  OfflineResult offline = score_results(gt, results, config);
  REQUIRE(offline.score.per_query.size() == 2);
  for (const scoring::QueryScore& s : offline.score.per_query)
    if (s.query_id == q.image.link_id) CHECK(s.normalized == Rational(1, 3));
  CHECK(offline.score.score == Rational(1, 6));
}

TEST_CASE("unknown query ids in a results file are an input error") {
  GroundTruthFile gt = make_gt({{0, 1}});
  ResultsFile results;
  results.entries.emplace_back(std::string(64, 'e'), std::vector<std::string>{});
  runner::RunConfig config;
  CHECK_THROWS_AS(score_results(gt, results, config), InputError);
}

TEST_CASE("recorded live runs rescore to the same S offline") {
  GroundTruthFile gt = make_gt({{0, 1, 2, 3}, {4, 5, 6, 7}});
  mockserver::OracleMode noisy;
  noisy.kind = mockserver::OracleMode::Kind::Noisy;
  noisy.swap_rate = 0.25;
  noisy.seed = 7;
  mockserver::MockServer server(gt, noisy);
  server.start("127.0.0.1", 0);

  runner::RunConfig config;
  config.host = "127.0.0.1";
  config.port = server.port();
  runner::RunResult live = runner::run_benchmark(config, gt);
  ResultsFile recorded = record_responses(live);
  OfflineResult offline = score_results(gt, recorded, config);
  CHECK(offline.score.score == live.score.score);
  CHECK(live.score.score > 0);
}

TEST_CASE("rescoring identical noisy responses, a tighter window is harsher") {
  GroundTruthFile gt = make_gt({{0, 1, 2, 3, 4}, {5, 6, 7, 8, 9}});
  mockserver::OracleMode noisy;
  noisy.kind = mockserver::OracleMode::Kind::Noisy;
  noisy.swap_rate = 0.4;
  noisy.seed = 21;
  mockserver::MockServer server(gt, noisy);
  server.start("127.0.0.1", 0);

  runner::RunConfig config;
  config.host = "127.0.0.1";
  config.port = server.port();
  runner::RunResult live = runner::run_benchmark(config, gt);
  ResultsFile recorded = record_responses(live);

  runner::RunConfig convex = config;
  convex.window = window::parse_window_spec("convex:1,2");
  runner::RunConfig mpeg = config;
  mpeg.window = window::parse_window_spec("mpeg7");
  Rational s_convex = score_results(gt, recorded, convex).score.score;
  Rational s_mpeg = score_results(gt, recorded, mpeg).score.score;
  CHECK(s_convex >= s_mpeg);
  CHECK(s_convex > 0);
}

TEST_CASE("report rendering is deterministic and leads with the indicators") {
  GroundTruthFile gt = make_gt({{0, 1}, {2, 3}});
  mockserver::MockServer server(gt, mockserver::OracleMode{});
  server.start("127.0.0.1", 0);
  runner::RunConfig config;
  config.host = "127.0.0.1";
  config.port = server.port();
  runner::RunResult live = runner::run_benchmark(config, gt);

  Report rep = report_from_run(live, "2026-01-02T03:04:05Z");
  std::string text_a = render_text(rep);
  std::string text_b = render_text(rep);
  CHECK(text_a == text_b);
  std::string json_a = render_json(rep);
  CHECK(json_a == render_json(rep));

  // leading indicators on the very first line
  std::string first_line = text_a.substr(0, text_a.find('\n'));
  CHECK(first_line.find("S=0.000000") == 0);
  CHECK(first_line.find("mean_response_ms=") != std::string::npos);
  CHECK(first_line.find("failures=0") != std::string::npos);
  CHECK(text_a.find("timestamp: 2026-01-02T03:04:05Z") != std::string::npos);

  // structured rendering carries the exact score
  CHECK(json_a.find("\"S_exact\": \"0\"") != std::string::npos);
  CHECK(json_a.find("\"timestamp\": \"2026-01-02T03:04:05Z\"") !=
        std::string::npos);
}

TEST_CASE("offline reports mark the absent timing block") {
  GroundTruthFile gt = make_gt({{0, 1}});
  ResultsFile results;
  for (const Query& q : gt.queries)
    results.entries.emplace_back(q.image.link_id, q.ground_truth);
  runner::RunConfig config;
  OfflineResult offline = score_results(gt, results, config);
  Report rep = report_from_offline(offline, gt, config, "t0");
  std::string text = render_text(rep);
  CHECK(text.find("mean_response_ms=n/a") != std::string::npos);
  CHECK(text.find("timing_ms: none") != std::string::npos);
  std::string json = render_json(rep);
  CHECK(json.find("\"timing_ns\": null") != std::string::npos);
}
