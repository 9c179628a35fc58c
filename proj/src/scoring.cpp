#include "birdsi/scoring.hpp"

#include <algorithm>
#include <cassert>
#include <unordered_set>

#include "birdsi/errors.hpp"

namespace birdsi::scoring {

GroundTruthVector make_ground_truth_vector(std::string query_id,
                                           std::vector<std::string> members) {
  std::sort(members.begin(), members.end());
  auto dup = std::adjacent_find(members.begin(), members.end());
  if (dup != members.end())
    throw InputError("ground-truth vector for query '" + query_id +
                     "' contains duplicate member '" + *dup + "'");
  if (members.empty())
    throw InputError("ground-truth vector for query '" + query_id +
                     "' is empty");
  return GroundTruthVector{std::move(query_id), std::move(members)};
}

PenaltyPolicy PenaltyPolicy::w_plus_one() {
  return PenaltyPolicy(PenaltyKind::WPlusOne, Rational(0));
}

PenaltyPolicy PenaltyPolicy::multiplier(const Rational& factor) {
  if (factor <= 1)
    throw InputError("penalty multiplier must exceed 1, got " +
                     to_fraction_string(factor));
  return PenaltyPolicy(PenaltyKind::Multiplier, factor);
}

Rational PenaltyPolicy::value(Count window) const {
  if (kind_ == PenaltyKind::WPlusOne) return Rational(window + 1);
  return factor_ * window;
}

std::string PenaltyPolicy::to_string() const {
  if (kind_ == PenaltyKind::WPlusOne) return "w+1";
  return "multiplier:" + to_fraction_string(factor_);
}

PenaltyPolicy parse_penalty_policy(const std::string& text) {
  if (text == "w+1") return PenaltyPolicy::w_plus_one();
  const std::string prefix = "multiplier:";
  if (text.rfind(prefix, 0) == 0)
    return PenaltyPolicy::multiplier(parse_rational(text.substr(prefix.size())));
  throw InputError("unknown penalty policy '" + text +
                   "' (expected 'w+1' or 'multiplier:<factor>')");
}

bool matches(std::string_view image_id, const GroundTruthVector& gt) {
  return std::binary_search(gt.members.begin(), gt.members.end(), image_id);
}

Count found_count(const RetrievedList& retrieved, const GroundTruthVector& gt,
                  Count window) {
  Count limit = std::min<Count>(window, retrieved.ranked.size());
  Count found = 0;
  for (Count w = 0; w < limit; ++w)
    if (matches(retrieved.ranked[w], gt)) ++found;
  return found;
}

Count missed_count(Count found, Count gt_size) {
  if (found < 0 || found > gt_size)
    throw std::logic_error("found count " + std::to_string(found) +
                           " outside [0, G=" + std::to_string(gt_size) + "]");
  return gt_size - found;
}

Count rank_sum(const RetrievedList& retrieved, const GroundTruthVector& gt,
               Count window) {
  Count limit = std::min<Count>(window, retrieved.ranked.size());
  Count sum = 0;
  for (Count w = 0; w < limit; ++w)
    if (matches(retrieved.ranked[w], gt)) sum += w + 1;
  return sum;
}

Rational penalty(Count window, const PenaltyPolicy& policy) {
  return policy.value(window);
}

Rational retrieval_rank(Count sigma, Count missed, const Rational& pi) {
  return Rational(sigma) + Rational(missed) * pi;
}

Rational relative_rank(const Rational& rank, Count gt_size) {
  return rank / gt_size;
}

Rational rr_best(Count gt_size) { return Rational(1 + gt_size, 2); }

Rational rr_worst(Count window, const PenaltyPolicy& policy) {
  // Worst case: every ground-truth image missed, R = G * penalty, RR = penalty.
  return policy.value(window);
}

Rational normalized_rank(const Rational& rr, const Rational& rr_best,
                         const Rational& rr_worst, NormalizationMode mode) {
  if (rr < rr_best || rr > rr_worst)
    throw std::logic_error("relative rank " + to_fraction_string(rr) +
                           " outside [" + to_fraction_string(rr_best) + ", " +
                           to_fraction_string(rr_worst) + "]");
  Rational span = rr_worst - rr_best;
  if (mode == NormalizationMode::Unshifted) return rr / span;
  return (rr - rr_best) / span;
}

QueryScore score_query(const RetrievedList& retrieved,
                       const GroundTruthVector& gt, Count window,
                       const PenaltyPolicy& policy, NormalizationMode mode) {
  Count gt_size = gt.size();
  if (window < gt_size)
    throw ConfigError("query '" + gt.query_id + "': window W=" +
                      std::to_string(window) + " is smaller than G=" +
                      std::to_string(gt_size));
  std::unordered_set<std::string_view> seen;
  for (const std::string& id : retrieved.ranked)
    if (!seen.insert(id).second)
      throw InputError("retrieved list for query '" + retrieved.query_id +
                       "' contains duplicate identifier '" + id + "'");

  QueryScore score;
  score.query_id = gt.query_id;
  score.gt_size = gt_size;
  score.window = window;
  score.found = found_count(retrieved, gt, window);
  score.missed = missed_count(score.found, gt_size);
  Count sigma = rank_sum(retrieved, gt, window);
  Rational pi = penalty(window, policy);
  score.retrieval_rank = retrieval_rank(sigma, score.missed, pi);
  score.relative_rank = relative_rank(score.retrieval_rank, gt_size);
  score.best_rank = rr_best(gt_size);
  score.worst_rank = rr_worst(window, policy);
  score.normalized =
      normalized_rank(score.relative_rank, score.best_rank, score.worst_rank, mode);
  return score;
}

BenchmarkScore score_benchmark(std::vector<QueryScore> per_query) {
  if (per_query.empty())
    throw InputError("cannot aggregate a benchmark score over zero queries");
  BenchmarkScore result;
  result.query_count = static_cast<Count>(per_query.size());
  Rational sum(0);
  for (const QueryScore& q : per_query) sum += q.normalized;
  result.score = sum / result.query_count;
  result.per_query = std::move(per_query);
  return result;
}

PrecisionRecall precision_recall_at_w(const RetrievedList& retrieved,
                                      const GroundTruthVector& gt,
                                      Count window) {
  Count found = found_count(retrieved, gt, window);
  Count scored = std::min<Count>(window, retrieved.ranked.size());
  PrecisionRecall pr;
  pr.precision = scored == 0 ? Rational(0) : Rational(found, scored);
  pr.recall = Rational(found, gt.size());
  return pr;
}

}  // namespace birdsi::scoring
