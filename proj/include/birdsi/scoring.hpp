#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "birdsi/rational.hpp"

namespace birdsi::scoring {

// The relevant images for one query. Members are kept sorted and unique;
// the query image itself is normally one of them.
struct GroundTruthVector {
  std::string query_id;
  std::vector<std::string> members;  // sorted, no duplicates, size >= 1

  Count size() const { return static_cast<Count>(members.size()); }
};

// Builds a validated vector: sorts members, rejects duplicates and empty sets.
GroundTruthVector make_ground_truth_vector(std::string query_id,
                                           std::vector<std::string> members);

// Ranked server answer for one query, best match first (rank 1).
struct RetrievedList {
  std::string query_id;
  std::vector<std::string> ranked;
};

enum class PenaltyKind { WPlusOne, Multiplier };

// Cost charged per missed ground-truth image. Must exceed the last window
// rank, so a multiplier has to be > 1.
class PenaltyPolicy {
 public:
  static PenaltyPolicy w_plus_one();
  static PenaltyPolicy multiplier(const Rational& factor);  // throws if <= 1

  Rational value(Count window) const;  // the penalty for a window of that size
  PenaltyKind kind() const { return kind_; }
  const Rational& factor() const { return factor_; }
  std::string to_string() const;

 private:
  PenaltyPolicy(PenaltyKind kind, Rational factor)
      : kind_(kind), factor_(std::move(factor)) {}
  PenaltyKind kind_;
  Rational factor_;
};

// "w+1" or "multiplier:<factor>".
PenaltyPolicy parse_penalty_policy(const std::string& text);

// How the relative rank is mapped onto [0,1]. Shifted subtracts the best
// achievable rank before dividing, so a perfect retrieval scores exactly 0.
// Unshifted divides the raw relative rank by the interval width; kept as a
// compatibility mode (its output is not anchored at 0).
enum class NormalizationMode { Shifted, Unshifted };

struct QueryScore {
  std::string query_id;
  Count gt_size = 0;   // G
  Count window = 0;    // W
  Count found = 0;     // F, correct images inside the window
  Count missed = 0;    // mu = G - F
  Rational retrieval_rank;   // R = sum of correct ranks + missed * penalty
  Rational relative_rank;    // RR = R / G
  Rational best_rank;        // (1 + G) / 2
  Rational worst_rank;       // penalty(W)
  Rational normalized;       // NRR in [0,1] under Shifted
};

struct BenchmarkScore {
  Count query_count = 0;
  std::vector<QueryScore> per_query;
  Rational score;  // S = mean NRR, in [0,1]
};

// True iff the image identifier is a member of the ground-truth set.
bool matches(std::string_view image_id, const GroundTruthVector& gt);

// Number of correct images in the first min(window, |ranked|) positions.
Count found_count(const RetrievedList& retrieved, const GroundTruthVector& gt,
                  Count window);

Count missed_count(Count found, Count gt_size);

// Sum of the 1-based rank positions of the correct images in the window.
Count rank_sum(const RetrievedList& retrieved, const GroundTruthVector& gt,
               Count window);

Rational penalty(Count window, const PenaltyPolicy& policy);

Rational retrieval_rank(Count sigma, Count missed, const Rational& pi);

Rational relative_rank(const Rational& rank, Count gt_size);

Rational rr_best(Count gt_size);

Rational rr_worst(Count window, const PenaltyPolicy& policy);

Rational normalized_rank(const Rational& rr, const Rational& rr_best,
                         const Rational& rr_worst,
                         NormalizationMode mode = NormalizationMode::Shifted);

// Full per-query evaluation. Truncates the retrieved list to the first
// `window` entries. Throws ConfigError if window < G and InputError on
// duplicate identifiers in the retrieved list.
QueryScore score_query(const RetrievedList& retrieved,
                       const GroundTruthVector& gt, Count window,
                       const PenaltyPolicy& policy,
                       NormalizationMode mode = NormalizationMode::Shifted);

// Mean of the per-query normalized ranks. Throws InputError when empty.
BenchmarkScore score_benchmark(std::vector<QueryScore> per_query);

struct PrecisionRecall {
  Rational precision;
  Rational recall;
};

// Supplementary precision/recall at the window cutoff.
PrecisionRecall precision_recall_at_w(const RetrievedList& retrieved,
                                      const GroundTruthVector& gt,
                                      Count window);

}  // namespace birdsi::scoring
