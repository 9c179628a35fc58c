// Acceptance suite: runs every acceptance criterion end to end and prints
// one PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

#include <json.hpp>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "birdsi/errors.hpp"
#include "birdsi/groundtruth.hpp"
#include "birdsi/mockserver.hpp"
#include "birdsi/report.hpp"
#include "birdsi/runner.hpp"
#include "birdsi/scoring.hpp"
#include "birdsi/window.hpp"

using namespace birdsi;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
  bool ok = true;
  void expect(bool condition, const std::string& what) {
    if (!condition) {
      ok = false;
      std::cout << "      failed: " << what << "\n";
    }
  }
};

struct Harness {
  bool all_ok = true;
  void run(const std::string& name, const std::function<void(Criterion&)>& body) {
    Criterion c;
    try {
      body(c);
    } catch (const std::exception& e) {
      c.ok = false;
      std::cout << "      exception: " << e.what() << "\n";
    }
    std::cout << (c.ok ? "PASS" : "FAIL") << "  " << name << "\n";
    all_ok &= c.ok;
  }
};

struct TempDir {
  fs::path path;
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path = fs::temp_directory_path() / ("birdsi-accept-" + std::to_string(rng()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

struct CmdResult {
  int exit_code = -1;
  std::string output;
};

CmdResult run_cli(const std::string& args) {
  CmdResult result;
  std::string cmd = std::string(BIRDSI_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return result;
  std::array<char, 4096> buffer;
  while (std::size_t got = std::fread(buffer.data(), 1, buffer.size(), pipe))
    result.output.append(buffer.data(), got);
  int status = pclose(pipe);
  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  return result;
}

void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// categories x images_per synthetic tree with pairwise distinct contents
void build_tree(const fs::path& root, int categories, int images_per) {
  for (int c = 0; c < categories; ++c)
    for (int i = 0; i < images_per; ++i)
      write_file(root / ("cat" + std::to_string(c)) /
                     ("img" + std::to_string(i) + ".jpg"),
                 "content-" + std::to_string(c) + "-" + std::to_string(i));
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Straight-line transcription of the metric definition (window walk, match
// count and position sum, miss penalty, closed-form normalization), used as
// the independent reference for the exhaustive check.
struct Reference {
  Count found;
  Rational rank, normalized;
};

Reference reference_eval(const std::vector<std::string>& ranked,
                         const std::set<std::string>& gt, Count window) {
  Reference ref{};
  Count g = static_cast<Count>(gt.size());
  Count position_sum = 0;
  for (Count w = 1; w <= window && w <= static_cast<Count>(ranked.size()); ++w)
    if (gt.count(ranked[w - 1])) {
      ref.found += 1;
      position_sum += w;
    }
  Rational pi(window + 1);
  ref.rank = Rational(position_sum) + Rational(g - ref.found) * pi;
  Rational relative = ref.rank / g;
  Rational best(1 + g, 2);
  ref.normalized = (relative - best) / (pi - best);
  return ref;
}

const char* kGoldenGridCsv =
    "G,W_mpeg,W=G,W=2G,W(1,1),W(1,2),W(2,1)\n"
    "0,0,0,0,0,0,0\n"
    "1,4,1,2,2,2,4\n"
    "5,20,5,10,10,10,20\n"
    "10,40,10,20,19,20,38\n"
    "30,120,30,60,51,56,102\n"
    "49,196,49,98,74,86,148\n"
    "50,200,50,100,75,88,150\n"
    "51,200,51,102,76,89,152\n"
    "75,200,75,150,94,122,188\n"
    "100,200,100,200,100,150,200\n";

void criterion_window_grid(Criterion& c) {
  auto start = Clock::now();
  CmdResult cli = run_cli("window-table --csv");
  c.expect(cli.exit_code == 0, "window-table exits 0");
  c.expect(cli.output == kGoldenGridCsv, "CSV matches the published grid");

  window::WindowTable table = window::window_table(
      {0, 1, 5, 10, 30, 49, 50, 51, 75, 100}, 100);
  c.expect(window::render_table_csv(table) == kGoldenGridCsv,
           "library rendering matches the published grid");
  c.expect(seconds_since(start) < 1.0, "runs in under 1 s");
}

void criterion_closed_forms(Criterion& c) {
  std::mt19937_64 rng(2001);
  for (int i = 0; i < 1000; ++i) {
    Count g = 1 + static_cast<Count>(rng() % 500);
    Count w = g + static_cast<Count>(rng() % 500);
    c.expect(scoring::rr_best(g) == Rational(1 + g, 2), "best rank closed form");
    c.expect(scoring::rr_worst(w, scoring::PenaltyPolicy::w_plus_one()) ==
                 Rational(w + 1),
             "worst rank closed form");
  }
}

void criterion_exhaustive_endpoints(Criterion& c) {
  auto start = Clock::now();
  const std::vector<std::string> universe{"u0", "u1", "u2", "u3", "u4", "u5"};
  scoring::PenaltyPolicy policy = scoring::PenaltyPolicy::w_plus_one();

  std::vector<std::vector<std::string>> gt_sets;
  for (unsigned mask = 1; mask < (1u << universe.size()); ++mask) {
    std::vector<std::string> members;
    for (unsigned i = 0; i < universe.size(); ++i)
      if (mask & (1u << i)) members.push_back(universe[i]);
    if (members.size() <= 3) gt_sets.push_back(std::move(members));
  }

  std::vector<std::vector<std::string>> lists;
  std::vector<std::string> current;
  auto extend = [&](auto&& self) -> void {
    lists.push_back(current);
    if (current.size() == universe.size()) return;
    for (const std::string& id : universe) {
      if (std::find(current.begin(), current.end(), id) != current.end())
        continue;
      current.push_back(id);
      self(self);
      current.pop_back();
    }
  };
  extend(extend);

  long long cases = 0;
  bool all_equal = true, endpoints_ok = true;
  for (const auto& members : gt_sets) {
    scoring::GroundTruthVector gt =
        scoring::make_ground_truth_vector(members[0], members);
    std::set<std::string> gt_set(members.begin(), members.end());
    Count g = gt.size();
    for (const auto& ranked : lists) {
      for (Count window = g; window <= 7; ++window) {
        scoring::QueryScore got = scoring::score_query(
            scoring::RetrievedList{"q", ranked}, gt, window, policy);
        Reference want = reference_eval(ranked, gt_set, window);
        all_equal &= got.found == want.found &&
                     got.retrieval_rank == want.rank &&
                     got.normalized == want.normalized;
        // endpoint semantics: perfect prefix iff 0; nothing found iff 1
        bool perfect = got.found == g && got.retrieval_rank == Rational(g * (g + 1), 2);
        endpoints_ok &= (got.normalized == 0) == perfect;
        endpoints_ok &= (got.normalized == 1) == (got.found == 0);
        ++cases;
      }
    }
  }
  c.expect(all_equal, "implementation equals the straight-line reference");
  c.expect(endpoints_ok, "normalized rank is 0 iff perfect, 1 iff total miss");
  c.expect(cases > 400000, "enumeration is exhaustive (" + std::to_string(cases) +
                               " cases)");
  c.expect(seconds_since(start) < 10.0, "runs in under 10 s");
}

void criterion_order_invariance(Criterion& c) {
  std::mt19937_64 rng(404);
  scoring::PenaltyPolicy policy = scoring::PenaltyPolicy::w_plus_one();
  auto pick = [&](Count n) {
    return static_cast<Count>(rng() % static_cast<std::uint64_t>(n));
  };
  for (int trial = 0; trial < 1000; ++trial) {
    Count g = 1 + pick(6);
    Count window = g + pick(10);
    std::vector<std::string> members;
    for (Count i = 0; i < g; ++i) members.push_back("m" + std::to_string(i));
    scoring::GroundTruthVector gt =
        scoring::make_ground_truth_vector(members[0], members);

    Count len = 1 + pick(window);
    Count placed = std::min(g, 1 + pick(len));
    std::vector<Count> slots(len);
    for (Count i = 0; i < len; ++i) slots[i] = i;
    std::shuffle(slots.begin(), slots.end(), rng);
    slots.resize(placed);

    std::vector<std::string> ranked(len);
    for (Count i = 0; i < len; ++i) ranked[i] = "x" + std::to_string(i);
    for (Count i = 0; i < placed; ++i) ranked[slots[i]] = members[i];
    Rational base = scoring::score_query(scoring::RetrievedList{"q", ranked}, gt,
                                         window, policy)
                        .retrieval_rank;

    std::vector<Count> shuffled(placed);
    for (Count i = 0; i < placed; ++i) shuffled[i] = i;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (Count i = 0; i < placed; ++i) ranked[slots[i]] = members[shuffled[i]];
    Rational permuted = scoring::score_query(scoring::RetrievedList{"q", ranked},
                                             gt, window, policy)
                            .retrieval_rank;
    c.expect(base == permuted, "rank unchanged under member permutation");
    if (base != permuted) return;
  }
}

void criterion_window_positivity(Criterion& c) {
  bool positivity = true, boundary = true, tight = true, strict = false;
  for (Count g = 1; g <= 100; ++g) {
    positivity &= window::w_convex(g, 100, 1, 2) > g;
    if (g < 100) boundary &= window::w_convex(g, 100, 1, 1) > g;
    Count convex = window::w_convex(g, 100, 1, 2);
    Count mpeg = window::w_mpeg(g, 100);
    tight &= convex <= mpeg;
    strict |= convex < mpeg;
  }
  boundary &= window::w_convex(100, 100, 1, 1) == 100;
  c.expect(positivity, "W(1,2) > G on [1,100]");
  c.expect(boundary, "W(1,1) touches G only at G = 100");
  c.expect(tight && strict, "W(1,2) <= W_mpeg, strictly somewhere");
}

void criterion_perfect_end_to_end(Criterion& c) {
  auto start = Clock::now();
  TempDir dir;
  build_tree(dir.path / "tree", 6, 10);
  groundtruth::GroundTruthFile gt = groundtruth::compile_ground_truth(
      groundtruth::scan_collection(dir.path / "tree").categories);
  c.expect(gt.queries.size() == 60, "60 distinct images compiled");
  groundtruth::save_ground_truth(gt, dir.path / "gt.txt");

  mockserver::MockServer server(gt, mockserver::OracleMode{});
  server.start("127.0.0.1", 0);

  fs::path json_path = dir.path / "report.json";
  CmdResult cli = run_cli("run --gt " + (dir.path / "gt.txt").string() +
                          " --server 127.0.0.1:" + std::to_string(server.port()) +
                          " --json " + json_path.string() +
                          " --timestamp 2026-01-01T00:00:00Z");
  c.expect(cli.exit_code == 0, "run exits 0");
  nlohmann::json doc = nlohmann::json::parse(read_file(json_path));
  c.expect(doc["score"]["S_exact"] == "0", "S is exactly 0");
  c.expect(doc["failures"] == 0, "no failures");
  c.expect(doc["query_count"] == 60, "all 60 queries scored");
  c.expect(seconds_since(start) < 5.0, "runs in under 5 s");
}

void criterion_worst_end_to_end(Criterion& c) {
  TempDir dir;
  build_tree(dir.path / "tree", 6, 10);
  groundtruth::GroundTruthFile gt = groundtruth::compile_ground_truth(
      groundtruth::scan_collection(dir.path / "tree").categories);
  mockserver::OracleMode empty;
  empty.kind = mockserver::OracleMode::Kind::Empty;
  mockserver::MockServer server(gt, empty);
  server.start("127.0.0.1", 0);
  runner::RunConfig config;
  config.host = "127.0.0.1";
  config.port = server.port();
  runner::RunResult run = runner::run_benchmark(config, gt);
  c.expect(run.score.score == 1, "S is exactly 1");
  c.expect(run.failures == 0, "empty answers are valid protocol, not failures");
}

void criterion_delay_lower_bound(Criterion& c) {
  TempDir dir;
  build_tree(dir.path / "tree", 2, 5);  // 10 queries
  groundtruth::GroundTruthFile gt = groundtruth::compile_ground_truth(
      groundtruth::scan_collection(dir.path / "tree").categories);
  mockserver::OracleMode delayed;
  delayed.delay = std::chrono::milliseconds(50);
  mockserver::MockServer server(gt, delayed);
  server.start("127.0.0.1", 0);

  runner::RunConfig config;
  config.host = "127.0.0.1";
  config.port = server.port();
  config.concurrency = 1;
  auto run_started = Clock::now();
  runner::RunResult run = runner::run_benchmark(config, gt);
  c.expect(seconds_since(run_started) >= 0.5,
           "10 sequential queries at 50 ms each take at least 500 ms");
  c.expect(run.per_query.size() == 10, "10 queries issued");
  c.expect(run.failures == 0, "no failures");
  c.expect(run.score.score == 0, "delay does not change the score");
  bool all_delayed = true;
  for (const runner::QueryResult& entry : run.per_query)
    all_delayed &= entry.timing.response_time >= std::chrono::milliseconds(50);
  c.expect(all_delayed, "every response took at least the injected 50 ms");
  c.expect(run.stats.present && run.stats.mean >= std::chrono::milliseconds(50),
           "mean response time at least 50 ms");
}

void criterion_versioning(Criterion& c) {
  TempDir dir;
  build_tree(dir.path / "tree", 3, 3);
  groundtruth::GroundTruthFile v1 = groundtruth::compile_ground_truth(
      groundtruth::scan_collection(dir.path / "tree").categories);
  groundtruth::save_ground_truth(v1, dir.path / "v1.txt");

  // determinism: recompiling the identical tree is byte-identical
  groundtruth::GroundTruthFile again = groundtruth::compile_ground_truth(
      groundtruth::scan_collection(dir.path / "tree").categories);
  c.expect(groundtruth::serialize(v1) == groundtruth::serialize(again),
           "identical trees compile to identical bytes");

  // append one image: succession passes
  write_file(dir.path / "tree/cat0/extra.jpg", "content-extra");
  groundtruth::GroundTruthFile v2 = groundtruth::compile_ground_truth(
      groundtruth::scan_collection(dir.path / "tree").categories, &v1);
  groundtruth::save_ground_truth(v2, dir.path / "v2.txt");
  CmdResult pass = run_cli("gt validate --old " + (dir.path / "v1.txt").string() +
                           " --new " + (dir.path / "v2.txt").string());
  c.expect(pass.exit_code == 0, "append-only succession validates");

  // removal: succession fails and names the pair
  std::string removed_id = v1.categories[1].members[0].link_id;
  std::vector<groundtruth::Category> reduced = v1.categories;
  reduced[1].members.erase(reduced[1].members.begin());
  groundtruth::GroundTruthFile broken = groundtruth::compile_ground_truth(reduced);
  broken.version = 2;
  groundtruth::save_ground_truth(broken, dir.path / "broken.txt");
  CmdResult fail = run_cli("gt validate --old " + (dir.path / "v1.txt").string() +
                           " --new " + (dir.path / "broken.txt").string());
  c.expect(fail.exit_code == 1, "removal fails validation with exit 1");
  c.expect(fail.output.find(removed_id) != std::string::npos,
           "the offending member is named");
  c.expect(fail.output.find("cat1") != std::string::npos,
           "the offending category is named");
}

void criterion_offline_online(Criterion& c) {
  TempDir dir;
  build_tree(dir.path / "tree", 6, 10);
  groundtruth::GroundTruthFile gt = groundtruth::compile_ground_truth(
      groundtruth::scan_collection(dir.path / "tree").categories);
  groundtruth::save_ground_truth(gt, dir.path / "gt.txt");

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
  c.expect(live.score.score > 0, "noise moved the score off zero");

  report::ResultsFile recorded = report::record_responses(live);
  report::save_results(recorded, dir.path / "responses.txt");

  // library-level equality
  report::OfflineResult offline = report::score_results(gt, recorded, config);
  c.expect(offline.score.score == live.score.score,
           "offline rescoring equals the live score exactly");

  // and through the CLI
  fs::path json_path = dir.path / "offline.json";
  CmdResult cli = run_cli("score --gt " + (dir.path / "gt.txt").string() +
                          " --results " + (dir.path / "responses.txt").string() +
                          " --json " + json_path.string() + " --timestamp t0");
  c.expect(cli.exit_code == 0, "score exits 0");
  nlohmann::json doc = nlohmann::json::parse(read_file(json_path));
  c.expect(doc["score"]["S_exact"] == to_fraction_string(live.score.score),
           "CLI offline S matches the live run exactly");
}

void criterion_scale(Criterion& c) {
  TempDir dir;
  auto start = Clock::now();
  build_tree(dir.path / "tree", 100, 100);
  groundtruth::GroundTruthFile gt = groundtruth::compile_ground_truth(
      groundtruth::scan_collection(dir.path / "tree").categories);
  double compile_seconds = seconds_since(start);
  c.expect(compile_seconds < 60.0, "10,000 images compile in under 60 s (" +
                                       std::to_string(compile_seconds) + " s)");
  c.expect(gt.queries.size() == 10000, "10,000 queries derived");
  c.expect(gt.g_max == 100, "g_max reflects the category size");

  groundtruth::save_ground_truth(gt, dir.path / "gt.txt");
  groundtruth::GroundTruthFile loaded =
      groundtruth::load_ground_truth(dir.path / "gt.txt");
  c.expect(groundtruth::serialize(loaded) == read_file(dir.path / "gt.txt"),
           "round-trip is byte-identical");
}

}  // namespace

int main() {
  Harness harness;
  harness.run("1. published window grid, all 60 cells exact, < 1 s",
              criterion_window_grid);
  harness.run("2. best/worst rank closed forms over 1000 random (G, W)",
              criterion_closed_forms);
  harness.run("3. exhaustive endpoint + reference agreement, < 10 s",
              criterion_exhaustive_endpoints);
  harness.run("4. retrieval rank invariant under member permutation (1000x)",
              criterion_order_invariance);
  harness.run("5. window positivity and tightness on [1,100]",
              criterion_window_positivity);
  harness.run("6. perfect oracle end to end: S = 0, no failures, < 5 s",
              criterion_perfect_end_to_end);
  harness.run("7. empty oracle end to end: S = 1 exactly",
              criterion_worst_end_to_end);
  harness.run("8. 50 ms injected delay bounds every response time",
              criterion_delay_lower_bound);
  harness.run("9. append-only versioning, removals named, deterministic bytes",
              criterion_versioning);
  harness.run("10. offline rescoring of a recorded noisy run matches exactly",
              criterion_offline_online);
  harness.run("11. 10,000-image compile under 60 s, byte-stable round-trip",
              criterion_scale);
  return harness.all_ok ? 0 : 1;
}
