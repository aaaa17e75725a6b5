#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "privrec/errors.hpp"
#include "privrec/obfuscation.hpp"
#include "privrec/random.hpp"
#include "privrec/rating_matrix.hpp"

using namespace privrec;
using namespace privrec::obf;

namespace {

Mat pairwise(const Mat& points) {
  Mat d = Mat::Zero(points.rows(), points.rows());
  for (Index i = 0; i < points.rows(); ++i)
    for (Index j = 0; j < points.rows(); ++j) d(i, j) = (points.row(i) - points.row(j)).norm();
  return d;
}

ObfuscationPlan fidelity_plan(Index width, Index d) {
  ObfuscationPlan plan;
  plan.subset_width = width;
  plan.sigma = 20.0;
  plan.core_count = 1;
  plan.neighbor_count = 1 << 20;  // complete graph
  plan.trust_intervals = {{0.0, 1.0, d}};
  plan.angle_min = 0.0;
  plan.angle_max = 0.0;
  plan.rng_seed = 3;
  return plan;
}

/// Two far-apart rings, each with a dominant-density centre point.
Mat two_ring_blobs(Scalar jitter_amplitude, std::uint64_t seed) {
  Randomness rng(seed);
  Mat points(14, 2);
  auto fill_blob = [&](Index base, Scalar offset_x) {
    points(base, 0) = offset_x;
    points(base, 1) = 0.0;
    for (int k = 0; k < 6; ++k) {
      const Scalar angle = static_cast<Scalar>(k) * 1.0471975511965976;  // 60 degrees
      points(base + 1 + k, 0) = offset_x + std::cos(angle) + rng.uniform(-jitter_amplitude, jitter_amplitude);
      points(base + 1 + k, 1) = std::sin(angle) + rng.uniform(-jitter_amplitude, jitter_amplitude);
    }
  };
  fill_blob(0, 0.0);
  fill_blob(7, 40.0);
  return points;
}

}  // namespace

TEST_CASE("plan validation rejects broken interval maps") {
  ObfuscationPlan plan = fidelity_plan(8, 4);
  CHECK_NOTHROW(plan.validate());

  plan.trust_intervals = {{0.0, 0.5, 4}};  // does not reach 1
  CHECK_THROWS_AS(plan.validate(), ConfigError);
  plan.trust_intervals = {{0.0, 0.6, 4}, {0.5, 1.0, 8}};  // overlap
  CHECK_THROWS_AS(plan.validate(), ConfigError);
  plan.trust_intervals = {{0.0, 0.5, 8}, {0.5, 1.0, 4}};  // d shrinks with trust
  CHECK_THROWS_AS(plan.validate(), ConfigError);
  plan.trust_intervals = {{0.0, 1.0, 4}};
  plan.sigma = 0.0;
  CHECK_THROWS_AS(plan.validate(), ConfigError);
}

TEST_CASE("partition_vertical covers exact and uneven divisions") {
  const auto even = partition_vertical(10, 5, 1);
  REQUIRE(even.size() == 2);
  CHECK(even[0].columns == std::vector<Index>{0, 1, 2, 3, 4});
  CHECK(even[1].columns == std::vector<Index>{5, 6, 7, 8, 9});

  const auto uneven = partition_vertical(10, 4, 1);
  REQUIRE(uneven.size() == 3);
  CHECK(uneven[0].columns.size() == 4);
  CHECK(uneven[1].columns.size() == 4);
  REQUIRE(uneven[2].columns.size() == 4);
  CHECK(uneven[2].columns[0] == 8);
  CHECK(uneven[2].columns[1] == 9);
  for (std::size_t i = 2; i < 4; ++i) CHECK(uneven[2].columns[i] < 8);  // borrowed columns
  CHECK(partition_vertical(10, 4, 1) == std::vector<SubsetLayout>(uneven));  // seeded

  const auto identity = partition_vertical(10, 10, 1);
  REQUIRE(identity.size() == 1);
  CHECK(identity[0].columns.size() == 10);

  const auto oversized = partition_vertical(5, 9, 1);
  REQUIRE(oversized.size() == 1);
  CHECK(oversized[0].columns.size() == 5);
}

TEST_CASE("influence function values") {
  RowVec a(2), b(2);
  a << 1.0, 2.0;
  b = a;
  CHECK(influence(a, b, 1.5) == doctest::Approx(1.0));

  b << 1.0 + std::sqrt(2.0), 2.0;  // distance sigma * sqrt(2) at sigma 1
  CHECK(influence(a, b, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  double previous = 1.0;
  for (double d : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    b << 1.0 + d, 2.0;
    const double f = influence(a, b, 1.0);
    CHECK(f < previous);
    previous = f;
  }
}

TEST_CASE("field function sums influences") {
  RowVec x(1);
  x << 3.0;
  Mat singleton(1, 1);
  singleton << 3.0;
  CHECK(field_at(x, singleton, 1.0) == doctest::Approx(1.0));

  Mat copies = Mat::Constant(5, 1, 3.0);
  CHECK(field_at(x, copies, 1.0) == doctest::Approx(5.0));

  Mat collinear(3, 1);
  collinear << 0.0, 1.0, 2.0;
  RowVec middle(1);
  middle << 1.0;
  CHECK(field_at(middle, collinear, 1.0) == doctest::Approx(1.0 + 2.0 * std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("lla clustering recovers well-separated blobs") {
  const Mat points = two_ring_blobs(0.02, 9);
  const ClusterResult clusters = lla_cluster(points, 2, 1.0);
  CHECK(clusters.cores == std::vector<Index>{0, 7});  // the two density peaks
  for (Index r = 0; r < points.rows(); ++r) {
    CHECK(clusters.assignment[static_cast<std::size_t>(r)] == (r < 7 ? 0 : 1));
  }
}

TEST_CASE("lla cluster edge cases") {
  Mat distinct(4, 1);
  distinct << 0.0, 10.0, 20.0, 30.0;
  const ClusterResult own = lla_cluster(distinct, 4, 1.0);
  std::set<Index> ids(own.assignment.begin(), own.assignment.end());
  CHECK(ids.size() == 4);  // every point its own cluster

  Mat identical = Mat::Constant(5, 2, 1.5);
  const ClusterResult one = lla_cluster(identical, 1, 1.0);
  for (Index v : one.assignment) CHECK(v == 0);

  CHECK_THROWS_AS(lla_cluster(identical, 6, 1.0), DomainError);
}

TEST_CASE("geodesic distances over a sparse chain add up") {
  Mat chain(3, 1);
  chain << 0.0, 1.0, 2.0;
  const Mat g = knn_geodesic(chain, 1);
  CHECK(g(0, 2) == doctest::Approx(2.0));
  CHECK(g(0, 1) == doctest::Approx(1.0));
  CHECK(g == g.transpose());
}

TEST_CASE("complete graphs reduce geodesics to Euclidean distances") {
  Randomness rng(4);
  Mat points(7, 3);
  for (Index r = 0; r < 7; ++r)
    for (Index c = 0; c < 3; ++c) points(r, c) = rng.uniform(-5.0, 5.0);
  const Mat g = knn_geodesic(points, 6);
  CHECK((g - pairwise(points)).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("disconnected components are bridged by the shortest edge") {
  Mat points(4, 2);
  points << 0.0, 0.0, 0.0, 1.0, 10.0, 0.0, 10.0, 1.0;
  const Mat g = knn_geodesic(points, 1);
  // Reference: the two intra-pair edges plus the single shortest bridge (0,2).
  const Mat expected = oracles::floyd_warshall(
      4, {{0, 1, 1.0}, {2, 3, 1.0}, {0, 2, 10.0}});
  CHECK((g - expected).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-12));

  CHECK(knn_geodesic(Mat::Zero(1, 3), 2).isZero());
}

TEST_CASE("classical MDS embeds collinear points exactly") {
  Mat d(3, 3);
  d << 0, 1, 2, 1, 0, 1, 2, 1, 0;
  const MdsResult r = classical_mds(d, 1);
  REQUIRE(r.d_used == 1);
  Vec coords = r.coords.col(0);
  if (coords(0) > coords(2)) coords = -coords;  // orientation is free
  CHECK(coords(0) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(coords(1) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(coords(2) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("classical MDS at full rank reproduces Euclidean distance matrices") {
  Randomness rng(12);
  Mat cloud(9, 4);
  for (Index r = 0; r < cloud.rows(); ++r)
    for (Index c = 0; c < cloud.cols(); ++c) cloud(r, c) = rng.uniform(-3.0, 3.0);
  const Mat d = pairwise(cloud);
  const MdsResult r = classical_mds(d, cloud.rows() - 1);
  CHECK(r.d_used <= 4);  // rank of a 4-d configuration
  CHECK((pairwise(r.coords) - d).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(r.truncated_negative_mass <= 1e-9);
}

TEST_CASE("select_d picks the interval containing the trust level") {
  ObfuscationPlan plan = fidelity_plan(16, 4);
  plan.trust_intervals = {{0.0, 0.5, 4}, {0.5, 1.0, 16}};
  CHECK(select_d(plan, 0.7) == 16);
  CHECK(select_d(plan, 0.5) == 16);  // upper interval is closed below
  CHECK(select_d(plan, 0.0) == 4);
  CHECK(select_d(plan, 1.0) == 16);
  CHECK_THROWS_AS(select_d(plan, 1.5), DomainError);
}

TEST_CASE("rotate_pair is an exact isometry") {
  Randomness rng(5);
  Mat points(6, 4);
  for (Index r = 0; r < 6; ++r)
    for (Index c = 0; c < 4; ++c) points(r, c) = rng.uniform(-2.0, 2.0);

  Mat unchanged = points;
  rotate_pair(unchanged, 0, 2, 0.0);
  CHECK((unchanged - points).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  Mat quarter = points;
  rotate_pair(quarter, 1, 3, M_PI_2);
  for (Index r = 0; r < 6; ++r) {
    CHECK(quarter(r, 1) == doctest::Approx(-points(r, 3)).epsilon(1e-12));
    CHECK(quarter(r, 3) == doctest::Approx(points(r, 1)).epsilon(1e-12));
    CHECK(quarter(r, 0) == points(r, 0));
  }

  const Mat before = pairwise(points);
  Mat rotated = points;
  rotate_pair(rotated, 0, 3, 1.234567);
  CHECK((pairwise(rotated) - before).cwiseAbs().maxCoeff() <= 1e-12);

  CHECK_THROWS_AS(rotate_pair(points, 2, 2, 1.0), UsageError);
}

TEST_CASE("alignment places a full-rank embedding back onto the source points") {
  Randomness rng(6);
  Mat points(8, 3);
  for (Index r = 0; r < 8; ++r)
    for (Index c = 0; c < 3; ++c) points(r, c) = rng.uniform(-4.0, 4.0);
  const MdsResult mds = classical_mds(pairwise(points), 7);
  const Mat aligned = align_to_reference(mds.coords, points);
  CHECK((aligned - points).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("obfuscate preserves shape and is deterministic") {
  const RatingMatrix data = synthesize_clustered({30, 12, 3, 0.8, 2.0, {}, 21});
  ObfuscationPlan plan = fidelity_plan(5, 3);
  plan.angle_min = 0.1;
  plan.angle_max = 2.8;
  plan.core_count = 2;
  plan.neighbor_count = 4;
  const ObfuscatedRatings a = obf::obfuscate_ratings(data, plan, 0.4);
  const ObfuscatedRatings b = obf::obfuscate_ratings(data, plan, 0.4);
  CHECK(a.profile.matrix.rows() == 30);
  CHECK(a.profile.matrix.cols() == 12);
  CHECK((a.profile.matrix - b.profile.matrix).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.profile.plan_fingerprint == b.profile.plan_fingerprint);
  CHECK(a.rated_mask.count() == data.rated_mask().count());
}

TEST_CASE("full-width single-cluster obfuscation is an isometry and recovers values") {
  const RatingMatrix data = synthesize_clustered({30, 12, 2, 1.0, 2.0, {}, 22});
  const Mat original = data.zero_imputed();
  const ObfuscationPlan plan = fidelity_plan(12, 12);
  const ObfuscatedProfile profile = obfuscate(original, plan, 1.0);

  CHECK(intra_cluster_distance_error(original, profile) <= 1e-9);
  // Full-rank geodesics over a complete graph are the Euclidean
  // distances of the rows, so the aligned embedding is the rows.
  CHECK((profile.matrix - original).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("rotation angles change values but not distances") {
  const RatingMatrix data = synthesize_clustered({24, 10, 2, 1.0, 2.0, {}, 23});
  const Mat original = data.zero_imputed();
  ObfuscationPlan plan = fidelity_plan(10, 10);
  const ObfuscatedProfile plain = obfuscate(original, plan, 1.0);
  plan.angle_min = 0.2;
  plan.angle_max = 3.0;
  const ObfuscatedProfile rotated = obfuscate(original, plan, 1.0);

  const double err_plain = intra_cluster_distance_error(original, plain);
  const double err_rotated = intra_cluster_distance_error(original, rotated);
  CHECK(std::abs(err_plain - err_rotated) <= 1e-12);
  CHECK((rotated.matrix - plain.matrix).cwiseAbs().maxCoeff() > 0.1);  // values did move
}

TEST_CASE("a 1-dimensional embedding flattens each cluster onto a line") {
  const RatingMatrix data = synthesize_clustered({20, 6, 2, 1.0, 2.0, {}, 24});
  ObfuscationPlan plan = fidelity_plan(6, 1);
  const ObfuscatedProfile profile = obfuscate(data.zero_imputed(), plan, 1.0);
  const Mat block = profile.matrix;
  const Mat centred = block.rowwise() - block.colwise().mean();
  Eigen::JacobiSVD<Mat> svd(centred);
  CHECK(svd.singularValues()(1) <= 1e-8 * std::max(1.0, svd.singularValues()(0)));
  for (const auto& per_subset : profile.d_used)
    for (Index d : per_subset) CHECK(d <= 1);
}

TEST_CASE("distance distortion shrinks as the embedding dimension grows") {
  const RatingMatrix data = synthesize_clustered({60, 20, 3, 1.0, 3.0, {}, 25});
  const Mat original = data.zero_imputed();
  std::vector<double> dims, errors;
  for (Index d : {2, 4, 8, 16, 20}) {
    ObfuscationPlan plan = fidelity_plan(20, d);
    plan.core_count = 2;
    const ObfuscatedProfile profile = obfuscate(original, plan, 1.0);
    dims.push_back(static_cast<double>(d));
    errors.push_back(intra_cluster_distance_error(original, profile));
  }
  // Spearman rank correlation of a strictly improving fidelity sweep.
  std::vector<std::size_t> order(dims.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  double rho_num = 0.0;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    // ranks of dims are 1..n ascending; ranks of errors computed directly
    std::size_t rank_err = 1;
    for (std::size_t j = 0; j < errors.size(); ++j)
      if (errors[j] < errors[i]) ++rank_err;
    const double di = static_cast<double>(i + 1) - static_cast<double>(rank_err);
    rho_num += di * di;
  }
  const double n = static_cast<double>(dims.size());
  const double rho = 1.0 - 6.0 * rho_num / (n * (n * n - 1.0));
  CHECK(rho <= -0.9);
  CHECK(errors.front() > errors.back());
  CHECK(errors.back() <= 1e-9);
}

TEST_CASE("seeded 50x20 matrix: distortion at full width is below distortion at d=2") {
  const RatingMatrix data = synthesize_clustered({50, 20, 4, 0.9, 2.5, {}, 26});
  const Mat original = data.zero_imputed();
  ObfuscationPlan low = fidelity_plan(20, 2);
  low.core_count = 2;
  ObfuscationPlan high = fidelity_plan(20, 20);
  high.core_count = 2;
  const double err_low = intra_cluster_distance_error(original, obfuscate(original, low, 1.0));
  const double err_high = intra_cluster_distance_error(original, obfuscate(original, high, 1.0));
  CHECK(err_high < err_low);
}
