#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "privrec/rating_matrix.hpp"
#include "privrec/types.hpp"

namespace privrec::eval {

/// Mean absolute error between predicted and actual values.
double mae(std::span<const Scalar> predicted, std::span<const Scalar> actual);

/// Entropy (bits) of the discretized values.
double discrete_entropy(std::span<const Scalar> values, int z, RatingRange range);

/// Variation of information between the discretized sequences:
/// H(x) + H(y) - 2 I(x, y), in bits. Zero iff the discretized sequences
/// determine each other.
double vi(std::span<const Scalar> x, std::span<const Scalar> y, int z, RatingRange range);

/// Cell-wise VI between two dense matrices of identical shape.
double matrix_vi(const Mat& a, const Mat& b, int z, RatingRange range);

/// Plaintext weighted collaborative-filtering prediction:
///   p = target_mean + sum_j (T_j / sum T) * (v_{j,q} - mean_q)
/// over rows with trusts[j] > theta that rated q (mean_q is the column
/// mean over raters). Ineligible rows carry NaN trust. Returns nothing
/// when no row qualifies.
std::optional<double> weighted_cf_predict(const Mat& values, const BoolGrid& rated,
                                          std::span<const double> trusts, double theta, Index item,
                                          double target_mean);

/// The ground-truth oracle for protocol equivalence: same formula over a
/// clear rating matrix. target_visible supplies the requesting user's
/// own (item, rating) pairs for the target mean.
std::optional<double> clear_cf_oracle(const RatingMatrix& train,
                                      const std::vector<std::pair<Index, Scalar>>& target_visible,
                                      std::span<const double> trusts, double theta, Index item);

/// Spearman rank correlation of two equally long sequences (average
/// ranks on ties).
double spearman(std::span<const double> x, std::span<const double> y);

/// Coefficient of determination of the least-squares line y ~ a + b x.
double linear_fit_r2(std::span<const double> x, std::span<const double> y);

double mean_of(const std::vector<std::pair<Index, Scalar>>& ratings);

}  // namespace privrec::eval
