#include "privrec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "privrec/errors.hpp"
#include "privrec/trust.hpp"

namespace privrec::eval {

double mae(std::span<const Scalar> predicted, std::span<const Scalar> actual) {
  if (predicted.size() != actual.size()) throw UsageError("mae length mismatch");
  if (predicted.empty()) throw UsageError("mae of empty vectors");
  double total = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) total += std::abs(predicted[i] - actual[i]);
  return total / static_cast<double>(predicted.size());
}

double discrete_entropy(std::span<const Scalar> values, int z, RatingRange range) {
  if (values.empty()) throw UsageError("entropy of an empty sequence");
  const auto states = trust::discretize(values, z, range);
  std::vector<Index> counts(static_cast<std::size_t>(z), 0);
  for (int s : states) ++counts[static_cast<std::size_t>(s)];
  const double n = static_cast<double>(values.size());
  double acc = 0.0;
  for (Index c : counts)
    if (c > 0) acc += static_cast<double>(c) * std::log2(static_cast<double>(c));
  return std::log2(n) - acc / n;
}

double vi(std::span<const Scalar> x, std::span<const Scalar> y, int z, RatingRange range) {
  if (x.size() != y.size()) throw UsageError("vi length mismatch");
  if (x.empty()) throw UsageError("vi of empty sequences");
  const auto a = trust::discretize(x, z, range);
  const auto b = trust::discretize(y, z, range);
  std::vector<std::vector<Index>> joint(static_cast<std::size_t>(z),
                                        std::vector<Index>(static_cast<std::size_t>(z), 0));
  for (std::size_t k = 0; k < a.size(); ++k)
    ++joint[static_cast<std::size_t>(a[k])][static_cast<std::size_t>(b[k])];

  const double n = static_cast<double>(x.size());
  auto plogp = [](double c) { return c > 0 ? c * std::log2(c) : 0.0; };
  double h_joint_acc = 0.0;
  std::vector<double> row_sum(static_cast<std::size_t>(z), 0.0), col_sum(static_cast<std::size_t>(z), 0.0);
  for (int i = 0; i < z; ++i)
    for (int j = 0; j < z; ++j) {
      const double c = static_cast<double>(joint[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
      h_joint_acc += plogp(c);
      row_sum[static_cast<std::size_t>(i)] += c;
      col_sum[static_cast<std::size_t>(j)] += c;
    }
  const double h_joint = std::log2(n) - h_joint_acc / n;
  double hx_acc = 0.0, hy_acc = 0.0;
  for (int i = 0; i < z; ++i) {
    hx_acc += plogp(row_sum[static_cast<std::size_t>(i)]);
    hy_acc += plogp(col_sum[static_cast<std::size_t>(i)]);
  }
  const double hx = std::log2(n) - hx_acc / n;
  const double hy = std::log2(n) - hy_acc / n;
  // H(x) + H(y) - 2 I = 2 H(xy) - H(x) - H(y)
  return std::max(0.0, 2.0 * h_joint - hx - hy);
}

double matrix_vi(const Mat& a, const Mat& b, int z, RatingRange range) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw UsageError("matrix shape mismatch");
  std::vector<Scalar> xs, ys;
  xs.reserve(static_cast<std::size_t>(a.size()));
  ys.reserve(static_cast<std::size_t>(b.size()));
  for (Index c = 0; c < a.cols(); ++c)
    for (Index r = 0; r < a.rows(); ++r) {
      xs.push_back(a(r, c));
      ys.push_back(b(r, c));
    }
  return vi(xs, ys, z, range);
}

std::optional<double> weighted_cf_predict(const Mat& values, const BoolGrid& rated,
                                          std::span<const double> trusts, double theta, Index item,
                                          double target_mean) {
  if (static_cast<Index>(trusts.size()) != values.rows()) throw UsageError("one trust per row required");
  if (item < 0 || item >= values.cols()) throw UsageError("item index out of range");

  double column_sum = 0.0;
  Index raters = 0;
  for (Index r = 0; r < values.rows(); ++r) {
    if (rated(r, item)) {
      column_sum += values(r, item);
      ++raters;
    }
  }
  if (raters == 0) return std::nullopt;
  const double column_mean = column_sum / static_cast<double>(raters);

  double trust_sum = 0.0;
  double weighted = 0.0;
  bool any = false;
  for (Index r = 0; r < values.rows(); ++r) {
    const double t = trusts[static_cast<std::size_t>(r)];
    if (std::isnan(t) || !(t > theta) || !rated(r, item)) continue;
    trust_sum += t;
    weighted += t * (values(r, item) - column_mean);
    any = true;
  }
  if (!any || trust_sum <= 0.0) return std::nullopt;
  return target_mean + weighted / trust_sum;
}

std::optional<double> clear_cf_oracle(const RatingMatrix& train,
                                      const std::vector<std::pair<Index, Scalar>>& target_visible,
                                      std::span<const double> trusts, double theta, Index item) {
  if (target_visible.empty()) throw UsageError("target has no visible ratings");
  return weighted_cf_predict(train.zero_imputed(), train.rated_mask(), trusts, theta, item,
                             mean_of(target_visible));
}

double mean_of(const std::vector<std::pair<Index, Scalar>>& ratings) {
  if (ratings.empty()) throw UsageError("mean of an empty profile");
  double acc = 0.0;
  for (const auto& [item, value] : ratings) acc += value;
  return acc / static_cast<double>(ratings.size());
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("spearman needs two equally long sequences");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double num = 0, dx = 0, dy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  if (dx == 0 || dy == 0) return 0.0;
  return num / std::sqrt(dx * dy);
}

double linear_fit_r2(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("fit needs two equally long sequences");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0) return 0.0;
  const double slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double mean_y = sy / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double fit = intercept + slope * x[i];
    ss_res += (y[i] - fit) * (y[i] - fit);
    ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
  }
  if (ss_tot == 0) return 1.0;
  return 1.0 - ss_res / ss_tot;
}

}  // namespace privrec::eval
