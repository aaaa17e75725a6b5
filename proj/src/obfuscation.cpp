#include "privrec/obfuscation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include "privrec/errors.hpp"
#include "privrec/random.hpp"

namespace privrec::obf {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

/// Union-find over cluster graph components.
struct DisjointSet {
  std::vector<Index> parent;
  explicit DisjointSet(Index n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), Index{0});
  }
  Index find(Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  bool unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[static_cast<std::size_t>(b)] = a;
    return true;
  }
};

Mat pairwise_euclidean(const Mat& points) {
  const Index n = points.rows();
  Mat d = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const Scalar v = (points.row(i) - points.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  return d;
}

}  // namespace

void ObfuscationPlan::validate() const {
  if (subset_width < 1) throw ConfigError("subset_width must be >= 1");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (core_count < 1) throw ConfigError("core_count must be >= 1");
  if (neighbor_count < 1) throw ConfigError("neighbor_count must be >= 1");
  if (!(angle_min <= angle_max)) throw ConfigError("angle_min must not exceed angle_max");
  if (trust_intervals.empty()) throw ConfigError("trust_intervals must not be empty");
  double cursor = 0.0;
  Index last_d = 0;
  for (std::size_t i = 0; i < trust_intervals.size(); ++i) {
    const auto& iv = trust_intervals[i];
    if (iv.lo != cursor) throw ConfigError("trust_intervals must partition [0,1] without gaps");
    if (!(iv.lo < iv.hi)) throw ConfigError("trust interval is empty or inverted");
    if (iv.d < 1) throw ConfigError("interval dimension must be >= 1");
    if (iv.d < last_d) throw ConfigError("higher trust may not map to a smaller dimension");
    last_d = iv.d;
    cursor = iv.hi;
  }
  if (cursor != 1.0) throw ConfigError("trust_intervals must end at 1");
}

std::string ObfuscationPlan::fingerprint() const {
  std::ostringstream os;
  os << subset_width << '|' << sigma << '|' << core_count << '|' << neighbor_count << '|';
  for (const auto& iv : trust_intervals) os << iv.lo << ',' << iv.hi << ',' << iv.d << ';';
  os << '|' << angle_min << '|' << angle_max << '|' << rng_seed;
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(os.str())));
  return std::string(buf);
}

std::vector<SubsetLayout> partition_vertical(Index n_columns, Index width, std::uint64_t seed) {
  if (width < 1) throw ConfigError("subset width must be >= 1");
  if (n_columns < 1) throw ConfigError("need at least one column");
  if (width >= n_columns) {
    SubsetLayout all;
    all.columns.resize(static_cast<std::size_t>(n_columns));
    std::iota(all.columns.begin(), all.columns.end(), Index{0});
    return {all};
  }
  std::vector<SubsetLayout> subsets;
  for (Index start = 0; start < n_columns; start += width) {
    SubsetLayout s;
    for (Index c = start; c < std::min(start + width, n_columns); ++c) s.columns.push_back(c);
    subsets.push_back(std::move(s));
  }
  auto& tail = subsets.back().columns;
  if (static_cast<Index>(tail.size()) < width) {
    // Top up the incomplete subset with distinct columns already assigned
    // to the full subsets; duplicates stay visible in the layout.
    std::vector<Index> pool(static_cast<std::size_t>(tail.front()));
    std::iota(pool.begin(), pool.end(), Index{0});
    Randomness rng(mix_seed(seed, 0x7a47ULL));
    rng.shuffle(pool);
    for (std::size_t p = 0; static_cast<Index>(tail.size()) < width; ++p) {
      tail.push_back(pool[p % pool.size()]);
    }
  }
  return subsets;
}

Scalar field_at(const RowVec& point, const Mat& dataset, Scalar sigma) {
  if (dataset.rows() == 0) throw DomainError("field over an empty dataset");
  Scalar total = 0.0;
  for (Index r = 0; r < dataset.rows(); ++r) total += influence(dataset.row(r), point, sigma);
  return total;
}

ClusterResult lla_cluster(const Mat& rows, Index k, Scalar sigma) {
  const Index n = rows.rows();
  if (k < 1 || k > n) throw DomainError("cluster count must lie in [1, row count]");

  ClusterResult result;
  result.field_values.resize(n);
  for (Index i = 0; i < n; ++i) result.field_values(i) = field_at(rows.row(i), rows, sigma);

  // Highest field values become core points; ties break to the lower row.
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return result.field_values(a) > result.field_values(b);
  });
  result.cores.assign(order.begin(), order.begin() + k);
  std::sort(result.cores.begin(), result.cores.end());

  result.assignment.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    Scalar best_influence = -1.0;
    for (std::size_t c = 0; c < result.cores.size(); ++c) {
      const Scalar f = influence(rows.row(result.cores[c]), rows.row(i), sigma);
      if (f > best_influence) {
        best_influence = f;
        best = static_cast<Index>(c);
      }
    }
    result.assignment[static_cast<std::size_t>(i)] = best;
  }
  return result;
}

Mat knn_geodesic(const Mat& cluster_points, Index neighbor_count) {
  const Index n = cluster_points.rows();
  if (n == 1) return Mat::Zero(1, 1);
  if (n < 1) throw DomainError("geodesic matrix of an empty cluster");
  if (neighbor_count < 1) throw ConfigError("neighbor_count must be >= 1");

  const Mat euclid = pairwise_euclidean(cluster_points);

  // Symmetric k-nn adjacency: an edge survives if either endpoint lists
  // the other among its nearest neighbours (ties to the lower index).
  std::vector<std::vector<std::pair<Index, Scalar>>> adjacency(static_cast<std::size_t>(n));
  auto add_edge = [&](Index a, Index b) {
    for (const auto& [t, w] : adjacency[static_cast<std::size_t>(a)])
      if (t == b) return;
    adjacency[static_cast<std::size_t>(a)].emplace_back(b, euclid(a, b));
    adjacency[static_cast<std::size_t>(b)].emplace_back(a, euclid(a, b));
  };
  const Index k = std::min<Index>(neighbor_count, n - 1);
  for (Index i = 0; i < n; ++i) {
    std::vector<Index> order;
    order.reserve(static_cast<std::size_t>(n - 1));
    for (Index j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return euclid(i, a) < euclid(i, b); });
    for (Index r = 0; r < k; ++r) add_edge(i, order[static_cast<std::size_t>(r)]);
  }

  // Bridge disconnected components with the globally shortest
  // inter-component edge (ties to the lexicographically first pair).
  DisjointSet components(n);
  for (Index i = 0; i < n; ++i)
    for (const auto& [j, w] : adjacency[static_cast<std::size_t>(i)]) components.unite(i, j);
  while (true) {
    Index best_a = -1, best_b = -1;
    Scalar best_w = std::numeric_limits<Scalar>::infinity();
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) {
        if (components.find(i) == components.find(j)) continue;
        if (euclid(i, j) < best_w) {
          best_w = euclid(i, j);
          best_a = i;
          best_b = j;
        }
      }
    if (best_a < 0) break;
    add_edge(best_a, best_b);
    components.unite(best_a, best_b);
  }

  // All-pairs shortest paths: Dijkstra from every node.
  Mat geodesic = Mat::Constant(n, n, std::numeric_limits<Scalar>::infinity());
  using Entry = std::pair<Scalar, Index>;
  for (Index src = 0; src < n; ++src) {
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    geodesic(src, src) = 0.0;
    queue.emplace(0.0, src);
    while (!queue.empty()) {
      auto [dist, node] = queue.top();
      queue.pop();
      if (dist > geodesic(src, node)) continue;
      for (const auto& [next, w] : adjacency[static_cast<std::size_t>(node)]) {
        const Scalar cand = dist + w;
        if (cand < geodesic(src, next)) {
          geodesic(src, next) = cand;
          queue.emplace(cand, next);
        }
      }
    }
  }
  return geodesic;
}

MdsResult classical_mds(const Mat& distances, Index d) {
  const Index n = distances.rows();
  MdsResult result;
  if (n < 2) {
    result.coords = Mat::Zero(n, 0);
    return result;
  }
  if (d < 1 || d > n - 1) throw DomainError("target dimension must lie in [1, size - 1]");

  // Double-centred Gram matrix: G_ij = -1/2 (S_ij - rowmean - colmean + mean).
  const Mat s = distances.array().square().matrix();
  const Vec row_means = s.rowwise().mean();
  const Scalar total_mean = s.mean();
  Mat gram(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      gram(i, j) = -0.5 * (s(i, j) - row_means(i) - row_means(j) + total_mean);
  gram = ((gram + gram.transpose()) * 0.5).eval();

  Eigen::SelfAdjointEigenSolver<Mat> solver(gram);
  const Vec& eigenvalues = solver.eigenvalues();  // ascending

  // Eigenvalues within numerical noise of zero count as rank-deficient.
  const Scalar tol = std::max<Scalar>(eigenvalues.cwiseAbs().maxCoeff(), 1.0) * 1e-12;
  Scalar positive_mass = 0.0, negative_mass = 0.0;
  Index positive_rank = 0;
  for (Index i = 0; i < n; ++i) {
    if (eigenvalues(i) > tol) {
      positive_mass += eigenvalues(i);
      ++positive_rank;
    } else if (eigenvalues(i) < -tol) {
      negative_mass += -eigenvalues(i);
    }
  }
  result.truncated_negative_mass =
      (positive_mass + negative_mass) > 0.0 ? negative_mass / (positive_mass + negative_mass) : 0.0;

  result.d_used = std::min(d, positive_rank);
  result.coords = Mat::Zero(n, result.d_used);
  for (Index c = 0; c < result.d_used; ++c) {
    const Index src = n - 1 - c;  // descending eigenvalue order
    result.coords.col(c) = solver.eigenvectors().col(src) * std::sqrt(eigenvalues(src));
  }
  return result;
}

Index select_d(const ObfuscationPlan& plan, double trust_value) {
  if (trust_value < 0.0 || trust_value > 1.0) throw DomainError("trust value must lie in [0, 1]");
  for (std::size_t i = 0; i < plan.trust_intervals.size(); ++i) {
    const auto& iv = plan.trust_intervals[i];
    const bool last = (i + 1 == plan.trust_intervals.size());
    if (trust_value >= iv.lo && (trust_value < iv.hi || (last && trust_value <= iv.hi))) {
      return iv.d;
    }
  }
  throw ConfigError("trust intervals do not cover the trust value");
}

void rotate_pair(Mat& points, Index a, Index b, Scalar theta) {
  if (points.cols() < 2) return;  // flagged by the caller
  if (a == b || a < 0 || b < 0 || a >= points.cols() || b >= points.cols()) {
    throw UsageError("rotation columns must be distinct and in range");
  }
  const Scalar c = std::cos(theta);
  const Scalar s = std::sin(theta);
  for (Index r = 0; r < points.rows(); ++r) {
    const Scalar va = points(r, a);
    const Scalar vb = points(r, b);
    points(r, a) = c * va - s * vb;
    points(r, b) = s * va + c * vb;
  }
}

Mat align_to_reference(const Mat& embedding, const Mat& reference) {
  const Index n = reference.rows();
  const Index width = reference.cols();
  if (embedding.rows() != n) throw UsageError("embedding and reference row counts differ");
  if (embedding.cols() > width) throw UsageError("embedding is wider than the reference");

  const RowVec centroid = reference.colwise().mean();
  const Mat centred = reference.rowwise() - centroid;
  Mat padded = Mat::Zero(n, width);
  padded.leftCols(embedding.cols()) = embedding;

  // Orthogonal Procrustes: rotation/reflection Q minimising
  // ||padded * Q - centred||_F, via the SVD of padded^T * centred.
  Eigen::JacobiSVD<Mat> svd(padded.transpose() * centred,
                            Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat q = svd.matrixU() * svd.matrixV().transpose();
  return (padded * q).rowwise() + centroid;
}

ObfuscatedProfile obfuscate(const Mat& data, const ObfuscationPlan& plan, double trust_value) {
  plan.validate();
  const Index n_rows = data.rows();
  const Index n_cols = data.cols();
  if (n_rows < 1 || n_cols < 1) throw DomainError("cannot obfuscate an empty matrix");
  if (!data.allFinite()) throw DomainError("obfuscation input must be dense and finite");

  ObfuscatedProfile out;
  out.matrix = data;
  out.plan_fingerprint = plan.fingerprint();
  if (plan.subset_width > n_cols) {
    out.warnings.push_back("subset width exceeds column count: using a single subset");
  }
  if (n_cols < 2) out.warnings.push_back("fewer than two columns: rotation step skipped");
  out.subset_layout = partition_vertical(n_cols, plan.subset_width, plan.rng_seed);

  const Index d_requested = select_d(plan, trust_value);

  for (std::size_t s = 0; s < out.subset_layout.size(); ++s) {
    const auto& columns = out.subset_layout[s].columns;
    const Index width = static_cast<Index>(columns.size());
    Mat subset(n_rows, width);
    for (Index c = 0; c < width; ++c) subset.col(c) = data.col(columns[static_cast<std::size_t>(c)]);

    const Index k = std::min<Index>(plan.core_count, n_rows);
    ClusterResult clusters = lla_cluster(subset, k, plan.sigma);
    out.cluster_assignment.push_back(clusters.assignment);
    out.d_used.emplace_back();

    Mat transformed = subset;
    for (Index c = 0; c < k; ++c) {
      std::vector<Index> members;
      for (Index r = 0; r < n_rows; ++r)
        if (clusters.assignment[static_cast<std::size_t>(r)] == c) members.push_back(r);
      if (members.empty()) {
        out.d_used.back().push_back(0);
        continue;
      }

      Mat points(static_cast<Index>(members.size()), width);
      for (std::size_t m = 0; m < members.size(); ++m) points.row(static_cast<Index>(m)) = subset.row(members[m]);

      Mat placed;
      Index d_used = 0;
      if (members.size() == 1) {
        placed = points;  // a single point has no distances to preserve
      } else {
        const Mat geodesic = knn_geodesic(points, plan.neighbor_count);
        const Index cap = std::min<Index>({d_requested, static_cast<Index>(members.size()) - 1, width});
        MdsResult mds = classical_mds(geodesic, cap);
        d_used = mds.d_used;
        out.truncated_negative_mass = std::max(out.truncated_negative_mass, mds.truncated_negative_mass);
        placed = align_to_reference(mds.coords, points);
      }
      out.d_used.back().push_back(d_used);

      // One seeded pair-rotation per cluster; the draw order is fixed by
      // (plan seed, subset, cluster) so results never depend on scheduling.
      if (width >= 2) {
        Randomness cluster_rng(mix_seed(plan.rng_seed, static_cast<std::uint64_t>(s),
                                        static_cast<std::uint64_t>(c)));
        const Index a = static_cast<Index>(cluster_rng.below(static_cast<std::uint64_t>(width)));
        Index b = static_cast<Index>(cluster_rng.below(static_cast<std::uint64_t>(width - 1)));
        if (b >= a) ++b;
        const Scalar theta = cluster_rng.uniform(plan.angle_min, plan.angle_max);
        rotate_pair(placed, a, b, theta);
      }

      for (std::size_t m = 0; m < members.size(); ++m)
        transformed.row(members[m]) = placed.row(static_cast<Index>(m));
    }

    // Later subsets overwrite duplicated columns; subsets are processed
    // in ascending order, so the result is deterministic.
    for (Index c = 0; c < width; ++c)
      out.matrix.col(columns[static_cast<std::size_t>(c)]) = transformed.col(c);
  }
  return out;
}

ObfuscatedRatings obfuscate_ratings(const RatingMatrix& m, const ObfuscationPlan& plan,
                                    double trust_value) {
  ObfuscatedRatings out{obfuscate(m.zero_imputed(), plan, trust_value), m.rated_mask()};
  return out;
}

Scalar intra_cluster_distance_error(const Mat& original, const ObfuscatedProfile& profile) {
  Scalar total_error = 0.0;
  Index pairs = 0;
  for (std::size_t s = 0; s < profile.subset_layout.size(); ++s) {
    const auto& columns = profile.subset_layout[s].columns;
    const auto& assignment = profile.cluster_assignment[s];
    const Index width = static_cast<Index>(columns.size());
    Mat before(original.rows(), width), after(original.rows(), width);
    for (Index c = 0; c < width; ++c) {
      before.col(c) = original.col(columns[static_cast<std::size_t>(c)]);
      after.col(c) = profile.matrix.col(columns[static_cast<std::size_t>(c)]);
    }
    const Index k = assignment.empty() ? 0 : *std::max_element(assignment.begin(), assignment.end()) + 1;
    for (Index cluster = 0; cluster < k; ++cluster) {
      std::vector<Index> members;
      for (Index r = 0; r < original.rows(); ++r)
        if (assignment[static_cast<std::size_t>(r)] == cluster) members.push_back(r);
      for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j) {
          const Scalar d0 = (before.row(members[i]) - before.row(members[j])).norm();
          const Scalar d1 = (after.row(members[i]) - after.row(members[j])).norm();
          if (d0 > 0) {
            total_error += std::abs(d1 - d0) / d0;
            ++pairs;
          }
        }
    }
  }
  return pairs ? total_error / static_cast<Scalar>(pairs) : 0.0;
}

}  // namespace privrec::obf
