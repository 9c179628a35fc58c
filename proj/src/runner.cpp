#include "birdsi/runner.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <random>
#include <thread>
#include <unordered_set>

#include "birdsi/errors.hpp"

namespace birdsi::runner {

std::string to_string(QueryOutcome outcome) {
  switch (outcome) {
    case QueryOutcome::Ok:
      return "OK";
    case QueryOutcome::Timeout:
      return "TIMEOUT";
    case QueryOutcome::ProtocolError:
      return "PROTOCOL_ERROR";
    case QueryOutcome::TransportError:
      return "TRANSPORT_ERROR";
  }
  return "?";
}

IssueOutcome parse_query_response(int status, std::string_view body, Count n) {
  IssueOutcome out;
  auto protocol_error = [&](const std::string& detail) {
    out.outcome = QueryOutcome::ProtocolError;
    out.detail = detail;
    out.ids.clear();
    return out;
  };
  if (status < 0) {
    out.outcome = QueryOutcome::TransportError;
    out.detail = "no response";
    return out;
  }
  if (status == 404) return protocol_error("server reports unknown id");
  if (status != 200)
    return protocol_error("unexpected status " + std::to_string(status));

  std::size_t nl = body.find('\n');
  if (nl == std::string_view::npos) return protocol_error("missing header line");
  std::string_view header = body.substr(0, nl);
  if (header.rfind("OK ", 0) != 0) return protocol_error("missing OK header");
  std::string_view count_text = header.substr(3);
  Count declared = 0;
  if (count_text.empty() || count_text.size() > 18)
    return protocol_error("malformed result count");
  for (char c : count_text) {
    if (c < '0' || c > '9') return protocol_error("malformed result count");
    declared = declared * 10 + (c - '0');
  }

  std::unordered_set<std::string_view> seen;
  std::size_t pos = nl + 1;
  for (Count i = 0; i < declared; ++i) {
    std::size_t end = body.find('\n', pos);
    if (end == std::string_view::npos)
      return protocol_error("truncated response: " + std::to_string(declared) +
                            " ids declared, " + std::to_string(i) + " found");
    std::string_view id = body.substr(pos, end - pos);
    if (id.empty() || id.find(' ') != std::string_view::npos ||
        id.find('\r') != std::string_view::npos)
      return protocol_error("malformed id line at rank " + std::to_string(i + 1));
    if (!seen.insert(id).second)
      return protocol_error("duplicate id '" + std::string(id) + "' in response");
    out.ids.emplace_back(id);
    pos = end + 1;
  }
  if (pos != body.size())
    return protocol_error("trailing bytes after declared ids");
  if (static_cast<Count>(out.ids.size()) > n) out.ids.resize(n);
  return out;
}

namespace {

IssueOutcome issue_on(httplib::Client& client, const std::string& query_id,
                      Count n, std::chrono::milliseconds timeout) {
  std::string path = "/query?id=" + query_id + "&n=" + std::to_string(n);
  auto started = std::chrono::steady_clock::now();
  httplib::Result res = client.Get(path);
  auto elapsed = std::chrono::duration_cast<Duration>(
      std::chrono::steady_clock::now() - started);

  IssueOutcome out;
  if (!res) {
    httplib::Error err = res.error();
    bool timed_out = err == httplib::Error::ConnectionTimeout ||
                     ((err == httplib::Error::Read || err == httplib::Error::Write) &&
                      elapsed >= timeout);
    out.outcome = timed_out ? QueryOutcome::Timeout : QueryOutcome::TransportError;
    out.detail = httplib::to_string(err);
    out.elapsed = elapsed;
    return out;
  }
  out = parse_query_response(res->status, res->body, n);
  out.elapsed = elapsed;
  return out;
}

httplib::Client make_client(const std::string& host, int port,
                            std::chrono::milliseconds timeout) {
  httplib::Client client(host, port);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  return client;
}

}  // namespace

IssueOutcome issue_query(const std::string& host, int port,
                         const std::string& query_id, Count n,
                         std::chrono::milliseconds timeout) {
  httplib::Client client = make_client(host, port, timeout);
  return issue_on(client, query_id, n, timeout);
}

TimingStats timing_stats(const std::vector<QueryTiming>& timings) {
  std::vector<Duration> ok;
  for (const QueryTiming& t : timings)
    if (t.outcome == QueryOutcome::Ok) ok.push_back(t.response_time);
  TimingStats stats;
  if (ok.empty()) return stats;
  std::sort(ok.begin(), ok.end());
  stats.present = true;
  Duration::rep sum = 0;
  for (Duration d : ok) sum += d.count();
  auto n = static_cast<Count>(ok.size());
  stats.mean = Duration(sum / n);
  stats.median = n % 2 == 1
                     ? ok[n / 2]
                     : Duration((ok[n / 2 - 1].count() + ok[n / 2].count()) / 2);
  auto nearest_rank = [&](Count percent) {
    Count rank = (percent * n + 99) / 100;  // ceil(percent * n / 100)
    return ok[std::max<Count>(rank, 1) - 1];
  };
  stats.p95 = nearest_rank(95);
  stats.p99 = nearest_rank(99);
  stats.min = ok.front();
  stats.max = ok.back();
  return stats;
}

std::vector<PreparedQuery> prepare_queries(const groundtruth::GroundTruthFile& gt,
                                           const window::WindowSpec& window_spec,
                                           bool exclude_self) {
  std::vector<PreparedQuery> prepared;
  prepared.reserve(gt.queries.size());
  for (const groundtruth::Query& query : gt.queries) {
    std::vector<std::string> members = query.ground_truth;
    if (exclude_self) {
      members.erase(
          std::remove(members.begin(), members.end(), query.image.link_id),
          members.end());
      if (members.empty()) continue;  // no relevant images left to retrieve
    }
    PreparedQuery item;
    item.gt = scoring::make_ground_truth_vector(query.image.link_id,
                                                std::move(members));
    prepared.push_back(std::move(item));
  }
  if (prepared.empty())
    throw ConfigError("no scorable queries in the ground truth");

  window::WindowSpec spec = window_spec;
  spec.g_max = 0;
  for (const PreparedQuery& item : prepared)
    spec.g_max = std::max(spec.g_max, item.gt.size());

  for (PreparedQuery& item : prepared) {
    window::WindowChoice choice = window::select_window(item.gt.size(), spec);
    if (choice.positivity == window::WindowPositivity::BelowG)
      throw ConfigError("window " + spec.to_string() + " gives W=" +
                        std::to_string(choice.w) + " below G=" +
                        std::to_string(item.gt.size()) + " for query '" +
                        item.gt.query_id + "'");
    item.window = choice.w;
  }
  return prepared;
}

RunResult run_benchmark(const RunConfig& config,
                        const groundtruth::GroundTruthFile& gt) {
  if (config.concurrency < 1) throw ConfigError("concurrency must be >= 1");
  std::vector<PreparedQuery> prepared =
      prepare_queries(gt, config.window, config.exclude_self);

  {  // handshake: fail fast when the server is missing or not speaking
    httplib::Client client = make_client(config.host, config.port,
                                         config.per_query_timeout);
    httplib::Result res = client.Get("/ping");
    if (!res)
      throw IoError("server " + config.host + ":" + std::to_string(config.port) +
                    " unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200 || res->body != "PONG")
      throw IoError("server " + config.host + ":" + std::to_string(config.port) +
                    " failed the ping handshake");
  }

  std::vector<std::size_t> order(prepared.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (config.order.kind == QueryOrder::Kind::Shuffled) {
    // explicit Fisher-Yates so the order is stable across standard libraries
    std::mt19937_64 rng(config.order.seed);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng() % i]);
  }

  if (config.warmup_queries > 0) {
    httplib::Client client = make_client(config.host, config.port,
                                         config.per_query_timeout);
    for (Count i = 0; i < config.warmup_queries; ++i) {
      const PreparedQuery& item = prepared[order[i % order.size()]];
      issue_on(client, item.gt.query_id, item.window, config.per_query_timeout);
    }
  }

  std::vector<IssueOutcome> outcomes(prepared.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    httplib::Client client = make_client(config.host, config.port,
                                         config.per_query_timeout);
    for (;;) {
      std::size_t slot = next.fetch_add(1);
      if (slot >= order.size()) break;
      const PreparedQuery& item = prepared[order[slot]];
      outcomes[order[slot]] =
          issue_on(client, item.gt.query_id, item.window, config.per_query_timeout);
    }
  };
  std::vector<std::thread> threads;
  int workers = std::min<int>(config.concurrency,
                              static_cast<int>(prepared.size()));
  for (int i = 1; i < workers; ++i) threads.emplace_back(worker);
  worker();
  for (std::thread& t : threads) t.join();

  RunResult result;
  result.config = config;
  result.gt_version = gt.version;
  result.g_max = gt.g_max;
  std::vector<scoring::QueryScore> scores;
  scores.reserve(prepared.size());
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    const PreparedQuery& item = prepared[i];
    const IssueOutcome& outcome = outcomes[i];
    QueryResult entry;
    entry.timing.query_id = item.gt.query_id;
    entry.timing.outcome = outcome.outcome;
    entry.timing.detail = outcome.detail;
    if (outcome.outcome == QueryOutcome::Ok) {
      entry.timing.response_time = outcome.elapsed;
      entry.response = outcome.ids;
      entry.score = scoring::score_query(
          scoring::RetrievedList{item.gt.query_id, outcome.ids}, item.gt,
          item.window, config.penalty, config.normalization);
    } else {
      entry.timing.failure_elapsed = outcome.elapsed;
      // a failed query scores as a total miss; the failure count reports it
      entry.score = scoring::score_query(
          scoring::RetrievedList{item.gt.query_id, {}}, item.gt, item.window,
          config.penalty, config.normalization);
      ++result.failures;
    }
    scores.push_back(entry.score);
    result.per_query.push_back(std::move(entry));
  }
  // prepared queries are already sorted by query_id, so per_query is too
  result.score = scoring::score_benchmark(std::move(scores));
  std::vector<QueryTiming> timings;
  timings.reserve(result.per_query.size());
  for (const QueryResult& entry : result.per_query) timings.push_back(entry.timing);
  result.stats = timing_stats(timings);
  return result;
}

}  // namespace birdsi::runner
