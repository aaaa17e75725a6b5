#include "privrec/trust.hpp"

#include <algorithm>
#include <cmath>

#include "privrec/errors.hpp"

namespace privrec::trust {

namespace {

/// H = log2(N) - (1/N) * sum n_k log2 n_k, with 0 log 0 = 0.
double entropy_from_counts(std::span<const Index> counts, Index n) {
  if (n == 0) return 0.0;
  double acc = 0.0;
  for (Index c : counts) {
    if (c > 0) acc += static_cast<double>(c) * std::log2(static_cast<double>(c));
  }
  return std::log2(static_cast<double>(n)) - acc / static_cast<double>(n);
}

}  // namespace

std::vector<int> discretize(std::span<const Scalar> values, int z, RatingRange range) {
  if (z < 2) throw DomainError("need at least two rating states");
  if (!(range.lo < range.hi)) throw DomainError("degenerate range");
  std::vector<int> states;
  states.reserve(values.size());
  const Scalar width = range.hi - range.lo;
  for (Scalar v : values) {
    int s = static_cast<int>(std::floor((v - range.lo) / width * static_cast<Scalar>(z)));
    states.push_back(std::clamp(s, 0, z - 1));
  }
  return states;
}

TrustStats joint_stats(std::span<const Scalar> target, std::span<const Scalar> participant, int z,
                       RatingRange range) {
  if (target.size() != participant.size()) throw UsageError("co-rated sequences differ in length");
  TrustStats stats;
  stats.z = z;
  stats.n = static_cast<Index>(target.size());
  stats.target_counts.assign(static_cast<std::size_t>(z), 0);
  stats.joint.assign(static_cast<std::size_t>(z), std::vector<Index>(static_cast<std::size_t>(z), 0));

  const auto a = discretize(target, z, range);
  const auto b = discretize(participant, z, range);
  std::vector<Index> other_counts(static_cast<std::size_t>(z), 0);
  for (std::size_t k = 0; k < a.size(); ++k) {
    ++stats.target_counts[static_cast<std::size_t>(a[k])];
    ++other_counts[static_cast<std::size_t>(b[k])];
    ++stats.joint[static_cast<std::size_t>(a[k])][static_cast<std::size_t>(b[k])];
  }

  std::vector<Index> joint_flat;
  joint_flat.reserve(a.size());
  for (const auto& row : stats.joint)
    for (Index c : row)
      if (c > 0) joint_flat.push_back(c);

  stats.h_target = entropy_from_counts(stats.target_counts, stats.n);
  const double h_joint = entropy_from_counts(joint_flat, stats.n);
  const double h_other = entropy_from_counts(other_counts, stats.n);
  stats.h_target_given_other = h_joint - h_other;
  return stats;
}

TrustScore compute_trust(std::span<const Scalar> target, std::span<const Scalar> participant,
                         int z, RatingRange range, Index min_shared) {
  if (target.size() != participant.size()) throw UsageError("co-rated sequences differ in length");
  if (static_cast<Index>(target.size()) < min_shared) {
    throw InsufficientOverlapError("fewer co-rated items than the configured minimum");
  }
  TrustStats stats = joint_stats(target, participant, z, range);
  const auto distinct_states = std::count_if(stats.target_counts.begin(), stats.target_counts.end(),
                                             [](Index c) { return c > 0; });
  if (distinct_states <= 1) {
    throw UndefinedTrustError("target rates every co-rated item identically");
  }
  double t = (stats.h_target - stats.h_target_given_other) / stats.h_target;
  TrustScore score;
  score.value = std::clamp(t, 0.0, 1.0);
  score.n_shared = stats.n;
  return score;
}

double degenerate_trust(std::span<const Scalar> target, std::span<const Scalar> participant, int z,
                        RatingRange range) {
  TrustStats stats = joint_stats(target, participant, z, range);
  const auto distinct_states = std::count_if(stats.target_counts.begin(), stats.target_counts.end(),
                                             [](Index c) { return c > 0; });
  if (distinct_states > 1) throw UsageError("target entropy is not degenerate");
  const auto b = discretize(participant, z, range);
  const bool constant = std::all_of(b.begin(), b.end(), [&](int s) { return s == b.front(); });
  return (constant && !b.empty()) ? 1.0 : 0.0;
}

std::vector<TrustScore> filter_by_threshold(const std::vector<TrustScore>& scores, double theta) {
  if (theta < 0.0 || theta > 1.0) throw DomainError("threshold must lie in [0, 1]");
  std::vector<TrustScore> out;
  for (const auto& s : scores)
    if (s.value > theta) out.push_back(s);
  return out;
}

}  // namespace privrec::trust
