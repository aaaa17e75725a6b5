#pragma once

#include <span>
#include <string>
#include <vector>

#include "privrec/types.hpp"

namespace privrec::trust {

/// Discretization plus empirical entropy bookkeeping for one pair of
/// co-rated rating sequences. All entropies are in bits.
struct TrustStats {
  int z = 0;                                 // rating states
  Index n = 0;                               // co-rated count
  std::vector<Index> target_counts;          // n_i
  std::vector<std::vector<Index>> joint;     // n_ij (target state i, other state j)
  double h_target = 0.0;                     // H(a)
  double h_target_given_other = 0.0;         // H(a | b)
};

struct TrustScore {
  double value = 0.0;  // in [0, 1]
  std::string target;
  std::string participant;
  Index n_shared = 0;
};

/// Equal-width binning of `range` into z states. A value on an interior
/// bin edge lands in the bin it begins (floor rule); the range maximum,
/// which begins no bin, goes to state z-1. Out-of-range values clamp.
std::vector<int> discretize(std::span<const Scalar> values, int z, RatingRange range);

/// Joint/marginal counts and entropies of the discretized pair.
TrustStats joint_stats(std::span<const Scalar> target, std::span<const Scalar> participant, int z,
                       RatingRange range);

/// T = (H(a) - H(a|b)) / H(a), clamped to [0, 1]. Throws
/// InsufficientOverlapError when fewer than min_shared co-rated items,
/// UndefinedTrustError when H(a) = 0.
TrustScore compute_trust(std::span<const Scalar> target, std::span<const Scalar> participant,
                         int z, RatingRange range, Index min_shared = 2);

/// Convention for a constant-rating target (H(a) = 0): a constant
/// participant predicts it perfectly (1), a varying one gets 0.
double degenerate_trust(std::span<const Scalar> target, std::span<const Scalar> participant, int z,
                        RatingRange range);

/// Strictly-greater-than filter, preserving order.
std::vector<TrustScore> filter_by_threshold(const std::vector<TrustScore>& scores, double theta);

}  // namespace privrec::trust
