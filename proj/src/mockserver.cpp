#include "birdsi/mockserver.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "birdsi/errors.hpp"

namespace birdsi::mockserver {

std::string OracleMode::to_string() const {
  std::string base;
  switch (kind) {
    case Kind::Perfect:
      base = "perfect";
      break;
    case Kind::Empty:
      base = "empty";
      break;
    case Kind::Reversed:
      base = "reversed";
      break;
    case Kind::Noisy: {
      std::ostringstream out;
      out << "noisy:" << swap_rate << "," << seed;
      base = out.str();
      break;
    }
  }
  if (delay.count() > 0)
    return "delayed:" + std::to_string(delay.count()) + "," + base;
  return base;
}

OracleMode parse_oracle_mode(const std::string& text) {
  OracleMode mode;
  const std::string delayed = "delayed:";
  if (text.rfind(delayed, 0) == 0) {
    std::string args = text.substr(delayed.size());
    auto comma = args.find(',');
    if (comma == std::string::npos)
      throw InputError("oracle mode '" + text + "' needs delayed:<ms>,<base>");
    std::size_t pos = 0;
    long long ms = 0;
    try {
      ms = std::stoll(args.substr(0, comma), &pos);
    } catch (const std::exception&) {
      throw InputError("bad delay in oracle mode '" + text + "'");
    }
    if (pos != comma || ms < 0)
      throw InputError("bad delay in oracle mode '" + text + "'");
    mode = parse_oracle_mode(args.substr(comma + 1));
    mode.delay = std::chrono::milliseconds(ms);
    return mode;
  }
  if (text == "perfect") return mode;
  if (text == "empty") {
    mode.kind = OracleMode::Kind::Empty;
    return mode;
  }
  if (text == "reversed") {
    mode.kind = OracleMode::Kind::Reversed;
    return mode;
  }
  const std::string noisy = "noisy:";
  if (text.rfind(noisy, 0) == 0) {
    std::string args = text.substr(noisy.size());
    auto comma = args.find(',');
    if (comma == std::string::npos)
      throw InputError("oracle mode '" + text + "' needs noisy:<rate>,<seed>");
    try {
      mode.swap_rate = std::stod(args.substr(0, comma));
      mode.seed = std::stoull(args.substr(comma + 1));
    } catch (const std::exception&) {
      throw InputError("bad noisy parameters in oracle mode '" + text + "'");
    }
    if (mode.swap_rate < 0.0 || mode.swap_rate > 1.0)
      throw InputError("noisy swap rate must be in [0,1]");
    mode.kind = OracleMode::Kind::Noisy;
    return mode;
  }
  throw InputError("unknown oracle mode '" + text +
                   "' (expected perfect, empty, reversed, noisy:<rate>,<seed>, "
                   "delayed:<ms>,<base>)");
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t hash = 1469598103934665603ull;
  for (char c : s) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ull;
  }
  return hash;
}

// 53-bit uniform in [0,1); avoids distribution objects so the stream is
// identical on every standard library.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

const groundtruth::Query* find_query(const groundtruth::GroundTruthFile& gt,
                                     const std::string& query_id) {
  auto pos = std::lower_bound(gt.queries.begin(), gt.queries.end(), query_id,
                              [](const groundtruth::Query& q, const std::string& id) {
                                return q.image.link_id < id;
                              });
  if (pos == gt.queries.end() || pos->image.link_id != query_id) return nullptr;
  return &*pos;
}

std::vector<std::string> perfect_answer(const groundtruth::GroundTruthFile& gt,
                                        const groundtruth::Query& query, Count n) {
  std::vector<std::string> answer;
  answer.push_back(query.image.link_id);
  for (const std::string& member : query.ground_truth)
    if (member != query.image.link_id) answer.push_back(member);
  // pad with the lexicographically smallest non-members
  if (static_cast<Count>(answer.size()) < n) {
    for (const groundtruth::Query& candidate : gt.queries) {
      if (static_cast<Count>(answer.size()) >= n) break;
      const std::string& id = candidate.image.link_id;
      if (std::binary_search(query.ground_truth.begin(), query.ground_truth.end(), id))
        continue;
      if (id == query.image.link_id) continue;
      answer.push_back(id);
    }
  }
  if (static_cast<Count>(answer.size()) > n) answer.resize(n);
  return answer;
}

}  // namespace

std::vector<std::string> oracle_answer(const groundtruth::GroundTruthFile& gt,
                                       const std::string& query_id, Count n,
                                       const OracleMode& mode) {
  const groundtruth::Query* query = find_query(gt, query_id);
  if (!query) throw InputError("unknown query id '" + query_id + "'");
  if (n < 0) n = 0;
  if (mode.kind == OracleMode::Kind::Empty) return {};

  std::vector<std::string> answer = perfect_answer(gt, *query, n);
  switch (mode.kind) {
    case OracleMode::Kind::Perfect:
    case OracleMode::Kind::Empty:
      break;
    case OracleMode::Kind::Reversed:
      std::reverse(answer.begin(), answer.end());
      break;
    case OracleMode::Kind::Noisy: {
      if (mode.swap_rate <= 0.0 || answer.size() < 2) break;
      std::mt19937_64 rng(mode.seed ^ fnv1a(query_id));
      auto passes = static_cast<std::size_t>(
          std::ceil(mode.swap_rate * static_cast<double>(answer.size())));
      for (std::size_t pass = 0; pass < passes; ++pass)
        for (std::size_t i = 0; i + 1 < answer.size(); ++i)
          if (uniform01(rng) < mode.swap_rate)
            std::swap(answer[i], answer[i + 1]);
      break;
    }
  }
  return answer;
}

struct MockServer::Impl {
  groundtruth::GroundTruthFile gt;
  OracleMode mode;
  httplib::Server server;
  std::thread thread;
  mutable std::mutex log_mutex;
  std::vector<std::string> seen_ids;
};

MockServer::MockServer(groundtruth::GroundTruthFile gt, OracleMode mode)
    : impl_(std::make_unique<Impl>()) {
  impl_->gt = std::move(gt);
  impl_->mode = mode;

  impl_->server.Get("/ping", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("PONG", "text/plain");
  });
  impl_->server.Get("/query", [this](const httplib::Request& req,
                                     httplib::Response& res) {
    if (!req.has_param("id") || !req.has_param("n")) {
      res.status = 400;
      res.set_content("ERR bad-request", "text/plain");
      return;
    }
    std::string id = req.get_param_value("id");
    Count n = 0;
    try {
      std::size_t pos = 0;
      std::string n_text = req.get_param_value("n");
      n = std::stoll(n_text, &pos);
      if (pos != n_text.size() || n < 1) throw std::invalid_argument("n");
    } catch (const std::exception&) {
      res.status = 400;
      res.set_content("ERR bad-request", "text/plain");
      return;
    }
    {
      std::lock_guard<std::mutex> lock(impl_->log_mutex);
      impl_->seen_ids.push_back(id);
    }
    if (impl_->mode.delay.count() > 0)
      std::this_thread::sleep_for(impl_->mode.delay);
    std::vector<std::string> answer;
    try {
      answer = oracle_answer(impl_->gt, id, n, impl_->mode);
    } catch (const InputError&) {
      res.status = 404;
      res.set_content("ERR unknown-id", "text/plain");
      return;
    }
    std::string body = "OK " + std::to_string(answer.size()) + "\n";
    for (const std::string& entry : answer) {
      body += entry;
      body += '\n';
    }
    res.set_content(body, "text/plain");
  });
}

MockServer::~MockServer() { stop(); }

void MockServer::start(const std::string& host, int port) {
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
    if (port_ < 0) throw IoError("cannot bind mock server on " + host);
  } else {
    if (!impl_->server.bind_to_port(host, port))
      throw IoError("cannot bind mock server on " + host + ":" +
                    std::to_string(port));
    port_ = port;
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void MockServer::stop() {
  if (!impl_) return;
  if (impl_->thread.joinable()) {
    impl_->server.stop();
    impl_->thread.join();
  }
}

std::vector<std::string> MockServer::request_ids() const {
  std::lock_guard<std::mutex> lock(impl_->log_mutex);
  return impl_->seen_ids;
}

}  // namespace birdsi::mockserver
