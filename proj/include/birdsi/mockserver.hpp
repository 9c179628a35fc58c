#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "birdsi/groundtruth.hpp"
#include "birdsi/rational.hpp"

namespace birdsi::mockserver {

// Deterministic oracle behaviors for the reference server. `delay` composes
// with any base kind (a delayed oracle answers like its base, later).
struct OracleMode {
  enum class Kind { Perfect, Empty, Reversed, Noisy };
  Kind kind = Kind::Perfect;
  double swap_rate = 0.0;  // Noisy only, in [0,1]
  std::uint64_t seed = 0;  // Noisy only
  std::chrono::milliseconds delay{0};

  std::string to_string() const;
};

// "perfect", "empty", "reversed", "noisy:<rate>,<seed>",
// "delayed:<ms>,<base-spec>".
OracleMode parse_oracle_mode(const std::string& text);

// The ideal answer for a query under the given mode, at most n entries,
// no duplicates, deterministic in all arguments (including the seed).
//   Perfect:  query image first, the other ground-truth members in
//             ascending link_id order, padded to n with the smallest
//             non-member images of the collection.
//   Empty:    nothing.
//   Reversed: the Perfect list, reversed.
//   Noisy:    the Perfect list after seeded adjacent-swap passes.
// Throws InputError for a query_id that is not in the ground truth.
std::vector<std::string> oracle_answer(const groundtruth::GroundTruthFile& gt,
                                       const std::string& query_id, Count n,
                                       const OracleMode& mode);

// HTTP server speaking the benchmark wire protocol:
//   GET /ping                     -> 200 "PONG"
//   GET /query?id=<link>&n=<int>  -> 200 "OK <k>\n" + k id lines
//   unknown id                    -> 404 "ERR unknown-id"
class MockServer {
 public:
  MockServer(groundtruth::GroundTruthFile gt, OracleMode mode);
  ~MockServer();

  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  // Binds and serves on a background thread. Throws IoError if the port
  // cannot be bound. With port 0, picks a free port (see port()).
  void start(const std::string& host, int port);
  void stop();

  int port() const { return port_; }

  // Test support: ids seen on /query, in arrival order.
  std::vector<std::string> request_ids() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace birdsi::mockserver
