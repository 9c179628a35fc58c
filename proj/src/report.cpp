#include "birdsi/report.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "birdsi/errors.hpp"

namespace birdsi::report {

std::string serialize_results(const ResultsFile& results) {
  std::ostringstream out;
  bool first = true;
  for (const auto& [query_id, ids] : results.entries) {
    if (!first) out << "\n";
    first = false;
    out << "query " << query_id << "\n";
    for (const std::string& id : ids) out << id << "\n";
  }
  return out.str();
}

ResultsFile parse_results(std::string_view text) {
  ResultsFile results;
  std::map<std::string, std::size_t> seen;
  std::size_t start = 0, line_no = 0;
  bool in_block = false;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string_view line = nl == std::string_view::npos
                                ? text.substr(start)
                                : text.substr(start, nl - start);
    ++line_no;
    if (line.empty()) {
      in_block = false;
    } else if (line.rfind("query ", 0) == 0) {
      std::string id(line.substr(6));
      if (id.empty()) throw InputError("results line " + std::to_string(line_no) +
                                       ": empty query id");
      if (!seen.emplace(id, results.entries.size()).second)
        throw InputError("results line " + std::to_string(line_no) +
                         ": duplicate block for query '" + id + "'");
      results.entries.emplace_back(std::move(id), std::vector<std::string>{});
      in_block = true;
    } else {
      if (!in_block)
        throw InputError("results line " + std::to_string(line_no) +
                         ": ranked id outside a query block");
      results.entries.back().second.emplace_back(line);
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
    if (start == text.size()) break;  // trailing newline
  }
  return results;
}

ResultsFile load_results(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open results file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_results(buffer.str());
}

void save_results(const ResultsFile& results, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write results file '" + path.string() + "'");
  out << serialize_results(results);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

ResultsFile record_responses(const runner::RunResult& run) {
  ResultsFile results;
  for (const runner::QueryResult& entry : run.per_query)
    if (entry.timing.outcome == runner::QueryOutcome::Ok)
      results.entries.emplace_back(entry.timing.query_id, entry.response);
  return results;
}

OfflineResult score_results(const groundtruth::GroundTruthFile& gt,
                            const ResultsFile& results,
                            const runner::RunConfig& config) {
  OfflineResult offline;
  offline.prepared =
      runner::prepare_queries(gt, config.window, config.exclude_self);

  std::map<std::string, const std::vector<std::string>*> by_id;
  for (const auto& [query_id, ids] : results.entries)
    by_id.emplace(query_id, &ids);
  {
    std::map<std::string, bool> known;
    for (const runner::PreparedQuery& item : offline.prepared)
      known.emplace(item.gt.query_id, true);
    for (const auto& [query_id, ids] : results.entries)
      if (!known.count(query_id))
        throw InputError("results file names unknown query '" + query_id + "'");
  }

  std::vector<scoring::QueryScore> scores;
  scores.reserve(offline.prepared.size());
  for (const runner::PreparedQuery& item : offline.prepared) {
    auto pos = by_id.find(item.gt.query_id);
    bool missing = pos == by_id.end();
    scoring::RetrievedList retrieved{item.gt.query_id,
                                     missing ? std::vector<std::string>{}
                                             : *pos->second};
    scores.push_back(scoring::score_query(retrieved, item.gt, item.window,
                                          config.penalty, config.normalization));
    offline.missing.push_back(missing);
  }
  offline.score = scoring::score_benchmark(std::move(scores));
  return offline;
}

namespace {

std::string format_ms(runner::Duration d) {
  auto us = (d.count() + 500) / 1000;  // microseconds, rounded
  std::ostringstream out;
  out << us / 1000 << "." << std::setw(3) << std::setfill('0') << us % 1000;
  return out.str();
}

std::vector<std::pair<std::string, std::string>> config_echo(
    const runner::RunConfig& config, const std::string& mode) {
  std::vector<std::pair<std::string, std::string>> echo;
  echo.emplace_back("mode", mode);
  if (mode == "live")
    echo.emplace_back("server",
                      config.host + ":" + std::to_string(config.port));
  echo.emplace_back("window", config.window.to_string());
  echo.emplace_back("penalty", config.penalty.to_string());
  echo.emplace_back("normalization",
                    config.normalization == scoring::NormalizationMode::Shifted
                        ? "shifted"
                        : "unshifted");
  echo.emplace_back("exclude_self", config.exclude_self ? "true" : "false");
  if (mode == "live") {
    echo.emplace_back("concurrency", std::to_string(config.concurrency));
    echo.emplace_back("timeout_ms",
                      std::to_string(config.per_query_timeout.count()));
    echo.emplace_back("warmup", std::to_string(config.warmup_queries));
    echo.emplace_back("order",
                      config.order.kind == runner::QueryOrder::Kind::GtOrder
                          ? "gt"
                          : "shuffled:" + std::to_string(config.order.seed));
    using period = std::chrono::steady_clock::period;
    echo.emplace_back("clock_resolution_ns",
                      std::to_string(1000000000LL * period::num / period::den));
  }
  return echo;
}

}  // namespace

Report report_from_run(const runner::RunResult& run, std::string timestamp) {
  Report report;
  report.timestamp = std::move(timestamp);
  report.config = config_echo(run.config, "live");
  report.gt_version = run.gt_version;
  report.g_max = run.g_max;
  report.query_count = run.score.query_count;
  report.score = run.score.score;
  report.stats = run.stats;
  report.failures = run.failures;
  for (const runner::QueryResult& entry : run.per_query) {
    ReportRow row;
    row.query_id = entry.score.query_id;
    row.gt_size = entry.score.gt_size;
    row.window = entry.score.window;
    row.found = entry.score.found;
    row.missed = entry.score.missed;
    row.retrieval_rank = entry.score.retrieval_rank;
    row.relative_rank = entry.score.relative_rank;
    row.normalized = entry.score.normalized;
    row.outcome = runner::to_string(entry.timing.outcome);
    if (entry.timing.outcome == runner::QueryOutcome::Ok)
      row.response_time = entry.timing.response_time;
    report.rows.push_back(std::move(row));
  }
  return report;
}

Report report_from_offline(const OfflineResult& offline,
                           const groundtruth::GroundTruthFile& gt,
                           const runner::RunConfig& config,
                           std::string timestamp) {
  Report report;
  report.timestamp = std::move(timestamp);
  report.config = config_echo(config, "offline");
  report.gt_version = gt.version;
  report.g_max = gt.g_max;
  report.query_count = offline.score.query_count;
  report.score = offline.score.score;
  report.stats.present = false;
  for (std::size_t i = 0; i < offline.score.per_query.size(); ++i) {
    const scoring::QueryScore& score = offline.score.per_query[i];
    ReportRow row;
    row.query_id = score.query_id;
    row.gt_size = score.gt_size;
    row.window = score.window;
    row.found = score.found;
    row.missed = score.missed;
    row.retrieval_rank = score.retrieval_rank;
    row.relative_rank = score.relative_rank;
    row.normalized = score.normalized;
    row.outcome = offline.missing[i] ? "MISSING" : "OK";
    if (offline.missing[i]) ++report.failures;
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string render_text(const Report& report) {
  std::ostringstream out;
  out << "S=" << format_fixed(report.score)
      << " mean_response_ms=" << (report.stats.present ? format_ms(report.stats.mean) : "n/a")
      << " queries=" << report.query_count << " failures=" << report.failures
      << "\n";
  out << "format: birdsi-report " << report.format_version << "\n";
  out << "timestamp: " << report.timestamp << "\n";
  out << "gt: version=" << report.gt_version << " gmax=" << report.g_max << "\n";
  out << "config:";
  for (const auto& [key, value] : report.config) out << " " << key << "=" << value;
  out << "\n";
  if (report.stats.present) {
    out << "timing_ms: mean=" << format_ms(report.stats.mean)
        << " median=" << format_ms(report.stats.median)
        << " p95=" << format_ms(report.stats.p95)
        << " p99=" << format_ms(report.stats.p99)
        << " min=" << format_ms(report.stats.min)
        << " max=" << format_ms(report.stats.max) << "\n";
  } else {
    out << "timing_ms: none\n";
  }
  out << "\n";

  std::vector<std::array<std::string, 10>> table;
  table.push_back({"query", "G", "W", "F", "mu", "R", "RR", "NRR", "ms", "outcome"});
  for (const ReportRow& row : report.rows) {
    table.push_back({row.query_id, std::to_string(row.gt_size),
                     std::to_string(row.window), std::to_string(row.found),
                     std::to_string(row.missed), format_fixed(row.retrieval_rank),
                     format_fixed(row.relative_rank), format_fixed(row.normalized),
                     row.response_time ? format_ms(*row.response_time) : "-",
                     row.outcome});
  }
  std::array<std::size_t, 10> widths{};
  for (const auto& cells : table)
    for (std::size_t c = 0; c < cells.size(); ++c)
      widths[c] = std::max(widths[c], cells[c].size());
  for (const auto& cells : table) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) out << "  ";
      if (c == 0 || c == 9)  // left-align text columns
        out << cells[c] << std::string(widths[c] - cells[c].size(), ' ');
      else
        out << std::string(widths[c] - cells[c].size(), ' ') << cells[c];
    }
    out << "\n";
  }
  return out.str();
}

std::string render_json(const Report& report) {
  nlohmann::ordered_json doc;
  doc["format_version"] = report.format_version;
  doc["timestamp"] = report.timestamp;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [key, value] : report.config) config[key] = value;
  doc["config"] = std::move(config);
  doc["gt_version"] = report.gt_version;
  doc["g_max"] = report.g_max;
  doc["query_count"] = report.query_count;
  doc["failures"] = report.failures;
  doc["score"] = {{"S", format_fixed(report.score)},
                  {"S_exact", to_fraction_string(report.score)}};
  if (report.stats.present) {
    doc["timing_ns"] = {{"mean", report.stats.mean.count()},
                        {"median", report.stats.median.count()},
                        {"p95", report.stats.p95.count()},
                        {"p99", report.stats.p99.count()},
                        {"min", report.stats.min.count()},
                        {"max", report.stats.max.count()}};
  } else {
    doc["timing_ns"] = nullptr;
  }
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const ReportRow& row : report.rows) {
    nlohmann::ordered_json item;
    item["id"] = row.query_id;
    item["G"] = row.gt_size;
    item["W"] = row.window;
    item["F"] = row.found;
    item["mu"] = row.missed;
    item["R"] = format_fixed(row.retrieval_rank);
    item["RR"] = format_fixed(row.relative_rank);
    item["NRR"] = format_fixed(row.normalized);
    item["NRR_exact"] = to_fraction_string(row.normalized);
    if (row.response_time)
      item["response_time_ns"] = row.response_time->count();
    else
      item["response_time_ns"] = nullptr;
    item["outcome"] = row.outcome;
    rows.push_back(std::move(item));
  }
  doc["queries"] = std::move(rows);
  return doc.dump(2) + "\n";
}

}  // namespace birdsi::report
