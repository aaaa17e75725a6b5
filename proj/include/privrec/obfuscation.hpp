#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "privrec/rating_matrix.hpp"
#include "privrec/types.hpp"

namespace privrec::obf {

/// One trust interval [lo, hi) mapped to an embedding dimension. The
/// last interval is closed at 1.
struct TrustInterval {
  double lo = 0.0;
  double hi = 1.0;
  Index d = 1;
};

/// Parameters of the distance-preserving obfuscation: vertical subset
/// width, Gaussian bandwidth, core-point count per subset, neighbour
/// count of the geodesic graph, trust->dimension map, rotation angle
/// range, and the seed every random draw derives from.
struct ObfuscationPlan {
  Index subset_width = 8;        // L
  Scalar sigma = 1.0;
  Index core_count = 1;          // clusters per subset (K)
  Index neighbor_count = 4;      // k-nn per point in the geodesic graph
  std::vector<TrustInterval> trust_intervals = {{0.0, 1.0, 8}};
  Scalar angle_min = 0.0;        // radians
  Scalar angle_max = 0.0;
  std::uint64_t rng_seed = 0;

  /// Throws ConfigError on any violated invariant (intervals must
  /// partition [0,1] with non-decreasing d, sigma > 0, ...).
  void validate() const;
  std::string fingerprint() const;
};

/// Column indices of one vertical subset. The final subset of an uneven
/// partition is topped up with columns already assigned elsewhere; those
/// duplicates stay visible in the layout.
struct SubsetLayout {
  std::vector<Index> columns;

  bool operator==(const SubsetLayout&) const = default;
};

/// Contiguous width-L column blocks; an incomplete tail block borrows
/// random already-assigned columns. Width above n_columns collapses to a
/// single subset (the caller records the warning).
std::vector<SubsetLayout> partition_vertical(Index n_columns, Index width, std::uint64_t seed);

/// Gaussian influence exp(-d(a,b)^2 / (2 sigma^2)) in (0, 1].
template <class DerivedA, class DerivedB>
Scalar influence(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                 Scalar sigma) {
  const Scalar d2 = (a - b).squaredNorm();
  return std::exp(-d2 / (2.0 * sigma * sigma));
}

/// Field value of a point: total Gaussian influence from every row of
/// the dataset (a point inside the dataset influences itself with 1).
Scalar field_at(const RowVec& point, const Mat& dataset, Scalar sigma);

struct ClusterResult {
  std::vector<Index> assignment;  // per row: cluster id in [0, k)
  std::vector<Index> cores;       // row index of each cluster's core point
  Vec field_values;               // per row
};

/// Core points are the k rows with the highest field values (ties to the
/// lower row index); every row joins the core with the largest influence
/// on it (ties to the lower core index).
ClusterResult lla_cluster(const Mat& rows, Index k, Scalar sigma);

/// All-pairs geodesic distances through the symmetric k-nn graph with
/// Euclidean edge lengths. Disconnected components are bridged by
/// iteratively adding the globally shortest inter-component edge.
Mat knn_geodesic(const Mat& cluster_points, Index neighbor_count);

struct MdsResult {
  Mat coords;                        // n x d_used, centred at the origin
  Index d_used = 0;                  // min(requested d, positive rank)
  Scalar truncated_negative_mass = 0.0;  // |negative spectrum| / total |spectrum|
};

/// Classical multidimensional scaling: double-centre the squared
/// distance matrix, keep the top-d nonnegative eigenpairs, scale
/// eigenvectors by sqrt(eigenvalue). Negative eigenvalues are truncated
/// and reported as a diagnostic.
MdsResult classical_mds(const Mat& distances, Index d);

/// Dimension for a trust level: the interval containing it (half-open,
/// last closed). Throws ConfigError if the intervals do not cover it.
Index select_d(const ObfuscationPlan& plan, double trust_value);

/// Planar rotation by theta applied to columns (a, b) of every row; all
/// other columns untouched. Exact isometry of the row set.
void rotate_pair(Mat& points, Index a, Index b, Scalar theta);

/// Rigid (orthogonal + translation) alignment of an embedding onto the
/// reference configuration it was derived from: zero-pads the embedding
/// to the reference width, then solves the orthogonal Procrustes problem
/// against the centred reference. Pairwise distances of the embedding
/// are preserved exactly; at full rank the reference is recovered.
Mat align_to_reference(const Mat& embedding, const Mat& reference);

struct ObfuscatedProfile {
  Mat matrix;  // same shape as the input
  std::vector<SubsetLayout> subset_layout;
  std::vector<std::vector<Index>> cluster_assignment;  // [subset][row]
  std::vector<std::vector<Index>> d_used;              // [subset][cluster]
  std::string plan_fingerprint;
  Scalar truncated_negative_mass = 0.0;  // worst cluster diagnostic
  std::vector<std::string> warnings;
};

/// Full pipeline over a dense matrix: partition columns, cluster rows
/// per subset, embed each cluster through its geodesic distances at the
/// trust-selected dimension (capped by cluster size - 1 and L), place
/// the embedding back in the subset's original frame, then apply one
/// seeded random pair-rotation per cluster.
ObfuscatedProfile obfuscate(const Mat& data, const ObfuscationPlan& plan, double trust_value);

struct ObfuscatedRatings {
  ObfuscatedProfile profile;
  BoolGrid rated_mask;  // cells that held real ratings before zero imputation
};

/// Zero-imputes unrated cells, runs the pipeline, and carries the
/// imputation mask so downstream metrics can exclude imputed cells.
ObfuscatedRatings obfuscate_ratings(const RatingMatrix& m, const ObfuscationPlan& plan,
                                    double trust_value);

/// Mean relative error between intra-cluster pairwise distances of the
/// original and obfuscated matrices (diagnostic used by reports).
Scalar intra_cluster_distance_error(const Mat& original, const ObfuscatedProfile& profile);

}  // namespace privrec::obf
