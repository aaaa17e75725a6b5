#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "privrec/types.hpp"

namespace privrec {

/// Dense users x items rating grid. Unrated cells hold a NaN marker that
/// never participates in arithmetic; all access goes through is_rated /
/// rating. Immutable after construction-time population.
class RatingMatrix {
 public:
  RatingMatrix(Index n_users, Index n_items, RatingRange range = {});

  Index n_users() const { return grid_.rows(); }
  Index n_items() const { return grid_.cols(); }
  RatingRange range() const { return range_; }

  bool is_rated(Index user, Index item) const;
  /// Value of a rated cell; throws UsageError on an unrated cell.
  Scalar rating(Index user, Index item) const;
  /// Sets a cell; throws DomainError if v is outside the declared range.
  void set(Index user, Index item, Scalar v);
  void clear(Index user, Index item);

  Index rated_count(Index user) const { return rated_count_[static_cast<std::size_t>(user)]; }
  std::vector<Index> rated_items(Index user) const;

  /// Dense copy with unrated cells imputed to zero, plus the mask of
  /// genuinely rated cells. The zero fill exists only for consumers that
  /// need a dense grid; storage keeps true missingness.
  Mat zero_imputed() const;
  BoolGrid rated_mask() const;

  /// NaN-marked raw grid (unrated == NaN).
  const Mat& raw() const { return grid_; }

  bool operator==(const RatingMatrix& other) const;

 private:
  Mat grid_;
  std::vector<Index> rated_count_;
  RatingRange range_;
};

/// Mean over the raters of one item; throws DomainError when nobody
/// rated it.
Scalar item_mean(const RatingMatrix& m, Index item);

/// Per-item means with NaN for items nobody rated.
Vec item_means_or_nan(const RatingMatrix& m);

// ---------------------------------------------------------------------------
// Delimiter-separated ingestion. Row format:
//   rated_count <delim> rating_1 <delim> ... <delim> rating_M
// with a sentinel literal marking unrated cells (99 by convention).
// ---------------------------------------------------------------------------

struct RatingsFileFormat {
  char delimiter = ',';
  Scalar sentinel = 99.0;
  RatingRange range = {};
};

RatingMatrix load_ratings(const std::filesystem::path& path,
                          const RatingsFileFormat& format = {});
void save_ratings(const RatingMatrix& m, const std::filesystem::path& path,
                  const RatingsFileFormat& format = {});

// ---------------------------------------------------------------------------
// Item meta-data: opaque id plus categorical feature strings, stored as
// JSON lines: {"item_id": ..., "features": [...]}.
// ---------------------------------------------------------------------------

struct ItemMeta {
  std::string item_id;
  std::vector<std::string> features;

  bool operator==(const ItemMeta&) const = default;
};

std::vector<ItemMeta> load_item_meta(const std::filesystem::path& path);
void save_item_meta(const std::vector<ItemMeta>& items,
                    const std::filesystem::path& path);

/// Catalog stand-in when no meta-data file is supplied.
ItemMeta default_item_meta(Index item);
std::vector<ItemMeta> default_catalog(Index n_items);

// ---------------------------------------------------------------------------
// Train/test splitting.
// ---------------------------------------------------------------------------

struct SplitSpec {
  double train_fraction = 0.8;
  Index holdout_per_user = 2;
  std::uint64_t rng_seed = 0;
};

struct TestUserProfile {
  Index user;  // row index in the source matrix
  std::vector<std::pair<Index, Scalar>> visible;
  std::vector<std::pair<Index, Scalar>> held_out;
};

struct SplitResult {
  RatingMatrix train;
  std::vector<Index> train_users;  // source rows of the train matrix
  std::vector<TestUserProfile> test;
  std::vector<std::string> warnings;
};

SplitResult split(const RatingMatrix& m, const SplitSpec& spec);

// ---------------------------------------------------------------------------
// Seeded synthetic data for desk-scale runs.
// ---------------------------------------------------------------------------

struct UniformSyntheticSpec {
  Index n_users = 100;
  Index n_items = 50;
  double density = 0.5;  // probability a cell is rated
  RatingRange range = {};
  std::uint64_t seed = 0;
};

struct ClusteredSyntheticSpec {
  Index n_users = 100;
  Index n_items = 50;
  Index n_archetypes = 4;  // shared preference profiles
  double density = 0.5;
  Scalar noise_sd = 2.0;
  RatingRange range = {};
  std::uint64_t seed = 0;
};

RatingMatrix synthesize_uniform(const UniformSyntheticSpec& spec);
RatingMatrix synthesize_clustered(const ClusteredSyntheticSpec& spec);

}  // namespace privrec
