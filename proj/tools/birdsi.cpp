// birdsi - CBIR benchmark harness: ground-truth compilation, window tables,
// offline scoring, live benchmark runs, and a reference mock server.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <thread>

#include "birdsi/errors.hpp"
#include "birdsi/groundtruth.hpp"
#include "birdsi/mockserver.hpp"
#include "birdsi/report.hpp"
#include "birdsi/runner.hpp"
#include "birdsi/scoring.hpp"
#include "birdsi/window.hpp"

namespace {

using namespace birdsi;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;  // validation / score-policy failures
constexpr int kExitUsage = 2;
constexpr int kExitStartup = 3;  // environment / startup problems

std::string now_utc() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool parse_host_port(const std::string& text, std::string& host, int& port,
                     bool allow_zero = false) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    return false;
  host = text.substr(0, colon);
  try {
    std::size_t pos = 0;
    port = std::stoi(text.substr(colon + 1), &pos);
    if (pos != text.size() - colon - 1) return false;
  } catch (const std::exception&) {
    return false;
  }
  return (port > 0 || allow_zero) && port >= 0 && port < 65536;
}

std::vector<Count> parse_g_list(const std::string& text) {
  std::vector<Count> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::string item = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    std::size_t pos = 0;
    long long v = std::stoll(item, &pos);
    if (pos != item.size() || v < 0) throw InputError("bad G value '" + item + "'");
    values.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (values.empty()) throw InputError("empty G list");
  return values;
}

struct CommonScoreFlags {
  std::string window_spec = "convex:1,2";
  std::string penalty_spec = "w+1";
  std::string normalization = "shifted";
  bool exclude_self = false;
  bool allow_naive_window = false;
  std::string json_path;
  std::string timestamp;
};

void add_score_flags(CLI::App* cmd, CommonScoreFlags& flags) {
  cmd->add_option("--window", flags.window_spec,
                  "window function: mpeg7 | convex:<k>,<m> | fixed:<n> | "
                  "equal-g | double-g")
      ->capture_default_str();
  cmd->add_option("--penalty", flags.penalty_spec,
                  "missed-image penalty: w+1 | multiplier:<factor>")
      ->capture_default_str();
  cmd->add_option("--normalization", flags.normalization,
                  "rank normalization: shifted (perfect scores 0) | unshifted")
      ->check(CLI::IsMember({"shifted", "unshifted"}))
      ->capture_default_str();
  cmd->add_flag("--exclude-self", flags.exclude_self,
                "score against ground-truth vectors without the query image");
  cmd->add_flag("--allow-naive-window", flags.allow_naive_window,
                "permit equal-g/fixed windows although they violate W > G");
  cmd->add_option("--json", flags.json_path, "also write a JSON report here");
  cmd->add_option("--timestamp", flags.timestamp,
                  "fixed report timestamp (for reproducible output)");
}

// Re-throws bad flag values as usage errors (exit 2).
template <typename Fn>
auto usage_checked(const char* flag, Fn&& fn) {
  try {
    return fn();
  } catch (const InputError& e) {
    throw CLI::ValidationError(flag, e.what());
  }
}

// Fills config from the flags. Bad spec strings are usage errors; a window
// that cannot guarantee W > G is a score-policy error unless opted in.
void apply_score_flags(const CommonScoreFlags& flags, runner::RunConfig& config) {
  config.window = usage_checked(
      "--window", [&] { return window::parse_window_spec(flags.window_spec); });
  config.penalty = usage_checked("--penalty", [&] {
    return scoring::parse_penalty_policy(flags.penalty_spec);
  });
  config.normalization = flags.normalization == "shifted"
                             ? scoring::NormalizationMode::Shifted
                             : scoring::NormalizationMode::Unshifted;
  config.exclude_self = flags.exclude_self;
  if (!config.window.canonical())
    std::cerr << "warning: window " << config.window.to_string()
              << " is outside the published k,m in {1,2} family\n";
  bool naive = config.window.kind == window::WindowKind::EqualG ||
               config.window.kind == window::WindowKind::Fixed;
  if (naive && !flags.allow_naive_window)
    throw ConfigError("window " + config.window.to_string() +
                      " does not guarantee W > G; pass --allow-naive-window "
                      "to score with it");
}

void write_reports(const report::Report& rep, const CommonScoreFlags& flags) {
  std::cout << report::render_text(rep);
  if (!flags.json_path.empty()) {
    std::ofstream out(flags.json_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write JSON report '" + flags.json_path + "'");
    out << report::render_json(rep);
  }
}

int do_gt_compile(const std::string& root, const std::string& out_path,
                  const std::string& previous_path, const std::string& query_dir,
                  bool opaque) {
  groundtruth::ScanResult scan = groundtruth::scan_collection(root);
  for (const std::string& warning : scan.warnings)
    std::cerr << "warning: " << warning << "\n";

  groundtruth::GroundTruthFile previous;
  const groundtruth::GroundTruthFile* previous_ptr = nullptr;
  if (!previous_path.empty()) {
    previous = groundtruth::load_ground_truth(previous_path);
    previous_ptr = &previous;
  }
  groundtruth::GroundTruthFile gt =
      groundtruth::compile_ground_truth(std::move(scan.categories), previous_ptr);
  groundtruth::save_ground_truth(gt, out_path);
  std::cout << "wrote " << out_path << ": version=" << gt.version
            << " categories=" << gt.categories.size()
            << " images=" << gt.queries.size() << " gmax=" << gt.g_max << "\n";
  if (!query_dir.empty()) {
    Count links = groundtruth::emit_query_directory(
        gt, query_dir,
        opaque ? groundtruth::QueryDirMode::Opaque
               : groundtruth::QueryDirMode::Symlink,
        root);
    std::cout << "query directory " << query_dir << ": " << links
              << " entries\n";
  }
  return kExitOk;
}

int do_gt_validate(const std::string& old_path, const std::string& new_path) {
  groundtruth::GroundTruthFile old_gt = groundtruth::load_ground_truth(old_path);
  groundtruth::GroundTruthFile new_gt = groundtruth::load_ground_truth(new_path);
  groundtruth::SuccessionReport report =
      groundtruth::validate_succession(old_gt, new_gt);
  if (report.pass) {
    std::cout << "PASS: version " << old_gt.version << " -> " << new_gt.version
              << " is append-only\n";
    return kExitOk;
  }
  std::cout << "FAIL: " << report.violations.size() << " violation(s)\n";
  for (const std::string& violation : report.violations)
    std::cout << "  " << violation << "\n";
  return kExitFailure;
}

int do_window_table(Count g_max, const std::string& g_list, bool csv) {
  std::vector<Count> g_values =
      usage_checked("--g", [&] { return parse_g_list(g_list); });
  for (Count g : g_values)
    if (g > g_max)
      throw CLI::ValidationError("--g", "G=" + std::to_string(g) +
                                            " exceeds --gmax=" +
                                            std::to_string(g_max));
  window::WindowTable table = window::window_table(g_values, g_max);
  std::cout << (csv ? window::render_table_csv(table)
                    : window::render_table_text(table));
  return kExitOk;
}

int do_score(const std::string& gt_path, const std::string& results_path,
             const CommonScoreFlags& flags) {
  runner::RunConfig config;
  apply_score_flags(flags, config);
  groundtruth::GroundTruthFile gt = groundtruth::load_ground_truth(gt_path);
  report::ResultsFile results = report::load_results(results_path);
  report::OfflineResult offline = report::score_results(gt, results, config);
  report::Report rep = report::report_from_offline(
      offline, gt, config, flags.timestamp.empty() ? now_utc() : flags.timestamp);
  write_reports(rep, flags);
  return kExitOk;
}

int do_run(const std::string& gt_path, const std::string& server,
           const CommonScoreFlags& flags, int concurrency, long long timeout_ms,
           Count warmup, const std::string& order_spec,
           const std::string& record_path) {
  runner::RunConfig config;
  apply_score_flags(flags, config);
  if (!parse_host_port(server, config.host, config.port))
    throw CLI::ValidationError("--server",
                               "'" + server + "' is not host:port");
  if (concurrency < 1)
    throw CLI::ValidationError("--concurrency", "must be >= 1");
  if (timeout_ms < 1) throw CLI::ValidationError("--timeout", "must be positive");
  if (warmup < 0) throw CLI::ValidationError("--warmup", "must be >= 0");
  config.concurrency = concurrency;
  config.per_query_timeout = std::chrono::milliseconds(timeout_ms);
  config.warmup_queries = warmup;
  if (order_spec == "gt") {
    config.order.kind = runner::QueryOrder::Kind::GtOrder;
  } else if (order_spec.rfind("shuffled:", 0) == 0) {
    config.order.kind = runner::QueryOrder::Kind::Shuffled;
    try {
      config.order.seed = std::stoull(order_spec.substr(9));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--order", "bad seed in '" + order_spec + "'");
    }
  } else {
    throw CLI::ValidationError("--order", "'" + order_spec +
                                              "' is not gt or shuffled:<seed>");
  }

  groundtruth::GroundTruthFile gt = groundtruth::load_ground_truth(gt_path);
  runner::RunResult run = runner::run_benchmark(config, gt);
  if (!record_path.empty())
    report::save_results(report::record_responses(run), record_path);
  report::Report rep = report::report_from_run(
      run, flags.timestamp.empty() ? now_utc() : flags.timestamp);
  write_reports(rep, flags);
  return kExitOk;
}

std::atomic<bool> g_stop{false};

int do_mock(const std::string& gt_path, const std::string& mode_spec,
            const std::string& bind) {
  mockserver::OracleMode mode = usage_checked(
      "--mode", [&] { return mockserver::parse_oracle_mode(mode_spec); });
  std::string host;
  int port = 0;
  if (!parse_host_port(bind, host, port, /*allow_zero=*/true))
    throw CLI::ValidationError("--bind", "'" + bind + "' is not host:port");
  groundtruth::GroundTruthFile gt = groundtruth::load_ground_truth(gt_path);
  mockserver::MockServer server(std::move(gt), mode);
  server.start(host, port);
  std::cout << "mock server (" << mode.to_string() << ") on " << host << ":"
            << server.port() << "\n";
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  while (!g_stop)
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CBIR retrieval benchmark harness"};
  app.require_subcommand(1);

  // gt compile / gt validate
  auto* gt_cmd = app.add_subcommand("gt", "ground-truth compilation and checks");
  gt_cmd->require_subcommand(1);
  std::string root, out_path, previous_path, query_dir;
  bool opaque = false;
  auto* compile_cmd =
      gt_cmd->add_subcommand("compile", "compile a categorized image tree");
  compile_cmd->add_option("--root", root, "collection root directory")
      ->required();
  compile_cmd->add_option("--out", out_path, "ground-truth file to write")
      ->required();
  compile_cmd->add_option("--previous", previous_path,
                          "previous version (append-only check)");
  compile_cmd->add_option("--query-dir", query_dir,
                          "also emit the hashed query directory here");
  compile_cmd->add_flag("--opaque", opaque,
                        "query-dir entries withhold source paths");

  std::string old_path, new_path;
  auto* validate_cmd =
      gt_cmd->add_subcommand("validate", "check append-only succession");
  validate_cmd->add_option("--old", old_path, "older ground-truth file")
      ->required();
  validate_cmd->add_option("--new", new_path, "newer ground-truth file")
      ->required();

  // window-table
  Count g_max = 100;
  std::string g_list = "0,1,5,10,30,49,50,51,75,100";
  bool csv = false;
  auto* table_cmd =
      app.add_subcommand("window-table", "compare scoring-window functions");
  table_cmd->add_option("--gmax", g_max, "largest ground-truth size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  table_cmd->add_option("--g", g_list, "comma-separated G values")
      ->capture_default_str();
  table_cmd->add_flag("--csv", csv, "emit CSV instead of aligned text");

  // score (offline)
  std::string score_gt, results_path;
  CommonScoreFlags score_flags;
  auto* score_cmd =
      app.add_subcommand("score", "score a pre-recorded results file");
  score_cmd->add_option("--gt", score_gt, "ground-truth file")->required();
  score_cmd->add_option("--results", results_path, "recorded responses")
      ->required();
  add_score_flags(score_cmd, score_flags);

  // run (live)
  std::string run_gt, server;
  CommonScoreFlags run_flags;
  int concurrency = 1;
  long long default_timeout_ms = 30000;
  if (const char* env = std::getenv("BIRDSI_TIMEOUT_MS")) {
    try {
      std::size_t pos = 0;
      default_timeout_ms = std::stoll(env, &pos);
      if (pos != std::string(env).size() || default_timeout_ms < 1)
        throw std::invalid_argument("range");
    } catch (const std::exception&) {
      std::cerr << "error: BIRDSI_TIMEOUT_MS='" << env
                << "' is not a positive integer\n";
      return kExitUsage;
    }
  }
  long long timeout_ms = default_timeout_ms;
  Count warmup = 0;
  std::string order_spec = "gt", record_path;
  auto* run_cmd = app.add_subcommand("run", "run a live benchmark");
  run_cmd->add_option("--gt", run_gt, "ground-truth file")->required();
  run_cmd->add_option("--server", server, "CBIR server host:port")->required();
  add_score_flags(run_cmd, run_flags);
  run_cmd->add_option("--concurrency", concurrency, "parallel virtual users")
      ->capture_default_str();
  run_cmd
      ->add_option("--timeout", timeout_ms,
                   "per-query timeout in ms (default from BIRDSI_TIMEOUT_MS)")
      ->capture_default_str();
  run_cmd->add_option("--warmup", warmup, "unscored warmup queries")
      ->capture_default_str();
  run_cmd->add_option("--order", order_spec, "query order: gt | shuffled:<seed>")
      ->capture_default_str();
  run_cmd->add_option("--record", record_path,
                      "write received responses here for offline rescoring");

  // mock
  std::string mock_gt, mode_spec = "perfect", bind = "127.0.0.1:7311";
  auto* mock_cmd = app.add_subcommand("mock", "serve the reference oracle");
  mock_cmd->add_option("--gt", mock_gt, "ground-truth file")->required();
  mock_cmd
      ->add_option("--mode", mode_spec,
                   "perfect | empty | reversed | noisy:<rate>,<seed> | "
                   "delayed:<ms>,<base>")
      ->capture_default_str();
  mock_cmd->add_option("--bind", bind, "host:port (port 0 picks one)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (compile_cmd->parsed())
      return do_gt_compile(root, out_path, previous_path, query_dir, opaque);
    if (validate_cmd->parsed()) return do_gt_validate(old_path, new_path);
    if (table_cmd->parsed()) return do_window_table(g_max, g_list, csv);
    if (score_cmd->parsed()) return do_score(score_gt, results_path, score_flags);
    if (run_cmd->parsed())
      return do_run(run_gt, server, run_flags, concurrency, timeout_ms, warmup,
                    order_spec, record_path);
    if (mock_cmd->parsed()) return do_mock(mock_gt, mode_spec, bind);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStartup;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
