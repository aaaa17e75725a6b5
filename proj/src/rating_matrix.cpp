#include "privrec/rating_matrix.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "privrec/errors.hpp"
#include "privrec/random.hpp"

namespace privrec {

namespace {

constexpr Scalar kUnrated = std::numeric_limits<Scalar>::quiet_NaN();

std::string row_msg(const std::string& what, std::size_t row) {
  std::ostringstream os;
  os << what << " (row " << row << ")";
  return os.str();
}

Scalar parse_number(std::string_view field, std::size_t row) {
  // Trim surrounding whitespace; from_chars is locale-independent.
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
    field.remove_suffix(1);
  Scalar value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw ParseError(row_msg("unparsable number '" + std::string(field) + "'", row));
  }
  return value;
}

std::string format_number(Scalar v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

RatingMatrix::RatingMatrix(Index n_users, Index n_items, RatingRange range)
    : grid_(Mat::Constant(n_users, n_items, kUnrated)),
      rated_count_(static_cast<std::size_t>(n_users), 0),
      range_(range) {
  if (n_users < 1 || n_items < 1) throw DomainError("rating matrix needs at least one user and one item");
  if (!(range.lo < range.hi)) throw DomainError("degenerate rating range");
}

bool RatingMatrix::is_rated(Index user, Index item) const {
  return !std::isnan(grid_(user, item));
}

Scalar RatingMatrix::rating(Index user, Index item) const {
  Scalar v = grid_(user, item);
  if (std::isnan(v)) throw UsageError("cell is unrated");
  return v;
}

void RatingMatrix::set(Index user, Index item, Scalar v) {
  if (std::isnan(v)) throw DomainError("use clear() to mark a cell unrated");
  if (v < range_.lo || v > range_.hi) throw DomainError("rating outside declared range");
  if (!is_rated(user, item)) ++rated_count_[static_cast<std::size_t>(user)];
  grid_(user, item) = v;
}

void RatingMatrix::clear(Index user, Index item) {
  if (is_rated(user, item)) --rated_count_[static_cast<std::size_t>(user)];
  grid_(user, item) = kUnrated;
}

std::vector<Index> RatingMatrix::rated_items(Index user) const {
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(rated_count(user)));
  for (Index i = 0; i < n_items(); ++i)
    if (is_rated(user, i)) out.push_back(i);
  return out;
}

Mat RatingMatrix::zero_imputed() const {
  Mat out = grid_;
  for (Index u = 0; u < out.rows(); ++u)
    for (Index i = 0; i < out.cols(); ++i)
      if (std::isnan(out(u, i))) out(u, i) = 0.0;
  return out;
}

BoolGrid RatingMatrix::rated_mask() const {
  BoolGrid mask(grid_.rows(), grid_.cols());
  for (Index u = 0; u < grid_.rows(); ++u)
    for (Index i = 0; i < grid_.cols(); ++i) mask(u, i) = is_rated(u, i);
  return mask;
}

bool RatingMatrix::operator==(const RatingMatrix& other) const {
  if (n_users() != other.n_users() || n_items() != other.n_items()) return false;
  for (Index u = 0; u < n_users(); ++u)
    for (Index i = 0; i < n_items(); ++i) {
      if (is_rated(u, i) != other.is_rated(u, i)) return false;
      if (is_rated(u, i) && grid_(u, i) != other.grid_(u, i)) return false;
    }
  return true;
}

Scalar item_mean(const RatingMatrix& m, Index item) {
  Scalar sum = 0;
  Index count = 0;
  for (Index u = 0; u < m.n_users(); ++u) {
    if (m.is_rated(u, item)) {
      sum += m.rating(u, item);
      ++count;
    }
  }
  if (count == 0) throw DomainError("undefined item mean: no raters");
  return sum / static_cast<Scalar>(count);
}

Vec item_means_or_nan(const RatingMatrix& m) {
  Vec means(m.n_items());
  for (Index i = 0; i < m.n_items(); ++i) {
    Scalar sum = 0;
    Index count = 0;
    for (Index u = 0; u < m.n_users(); ++u)
      if (m.is_rated(u, i)) {
        sum += m.rating(u, i);
        ++count;
      }
    means(i) = count ? sum / static_cast<Scalar>(count) : kUnrated;
  }
  return means;
}

RatingMatrix load_ratings(const std::filesystem::path& path, const RatingsFileFormat& format) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open ratings file: " + path.string());

  std::vector<std::vector<Scalar>> rows;  // parsed ratings (sentinel kept)
  std::vector<Index> declared;
  std::string line;
  std::size_t row_index = 0;
  std::size_t n_fields = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<std::string_view> fields;
    std::string_view rest = line;
    while (true) {
      auto pos = rest.find(format.delimiter);
      fields.push_back(rest.substr(0, pos));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    if (fields.size() < 2) throw ParseError(row_msg("wrong field count", row_index));
    if (n_fields == 0) {
      n_fields = fields.size();
    } else if (fields.size() != n_fields) {
      throw ParseError(row_msg("wrong field count", row_index));
    }
    Scalar count_field = parse_number(fields[0], row_index);
    if (count_field < 0 || count_field != std::floor(count_field)) {
      throw ParseError(row_msg("rated count must be a non-negative integer", row_index));
    }
    declared.push_back(static_cast<Index>(count_field));
    std::vector<Scalar> values;
    values.reserve(fields.size() - 1);
    for (std::size_t f = 1; f < fields.size(); ++f) values.push_back(parse_number(fields[f], row_index));
    rows.push_back(std::move(values));
    ++row_index;
  }
  if (rows.empty()) throw ParseError("no rows");

  const Index n_users = static_cast<Index>(rows.size());
  const Index n_items = static_cast<Index>(rows.front().size());
  RatingMatrix m(n_users, n_items, format.range);
  for (Index u = 0; u < n_users; ++u) {
    Index actual = 0;
    for (Index i = 0; i < n_items; ++i) {
      Scalar v = rows[static_cast<std::size_t>(u)][static_cast<std::size_t>(i)];
      if (v == format.sentinel) continue;
      if (v < format.range.lo || v > format.range.hi) {
        throw ParseError(row_msg("rating outside declared range", static_cast<std::size_t>(u)));
      }
      m.set(u, i, v);
      ++actual;
    }
    if (actual != declared[static_cast<std::size_t>(u)]) {
      std::ostringstream os;
      os << "rated count mismatch: row " << u << " declares " << declared[static_cast<std::size_t>(u)]
         << ", contains " << actual;
      throw IntegrityError(os.str());
    }
  }
  return m;
}

void save_ratings(const RatingMatrix& m, const std::filesystem::path& path,
                  const RatingsFileFormat& format) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw UsageError("cannot open output file: " + path.string());
  const std::string sentinel = format_number(format.sentinel);
  for (Index u = 0; u < m.n_users(); ++u) {
    out << m.rated_count(u);
    for (Index i = 0; i < m.n_items(); ++i) {
      out << format.delimiter;
      out << (m.is_rated(u, i) ? format_number(m.rating(u, i)) : sentinel);
    }
    out << '\n';
  }
}

std::vector<ItemMeta> load_item_meta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open item meta file: " + path.string());
  std::vector<ItemMeta> items;
  std::string line;
  std::size_t row = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("item_id") || !j.contains("features")) {
      throw ParseError(row_msg("malformed item meta line", row));
    }
    ItemMeta meta;
    meta.item_id = j.at("item_id").is_string() ? j.at("item_id").get<std::string>()
                                               : j.at("item_id").dump();
    for (const auto& f : j.at("features")) {
      meta.features.push_back(f.is_string() ? f.get<std::string>() : f.dump());
    }
    if (!seen.insert(meta.item_id).second) {
      throw IntegrityError("duplicate item_id: " + meta.item_id);
    }
    items.push_back(std::move(meta));
    ++row;
  }
  return items;
}

void save_item_meta(const std::vector<ItemMeta>& items, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw UsageError("cannot open output file: " + path.string());
  for (const auto& meta : items) {
    nlohmann::json j;
    j["item_id"] = meta.item_id;
    j["features"] = meta.features;
    out << j.dump() << '\n';
  }
}

ItemMeta default_item_meta(Index item) {
  return ItemMeta{"item-" + std::to_string(item), {}};
}

std::vector<ItemMeta> default_catalog(Index n_items) {
  std::vector<ItemMeta> items;
  items.reserve(static_cast<std::size_t>(n_items));
  for (Index i = 0; i < n_items; ++i) items.push_back(default_item_meta(i));
  return items;
}

SplitResult split(const RatingMatrix& m, const SplitSpec& spec) {
  if (spec.train_fraction <= 0.0 || spec.train_fraction >= 1.0) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  if (spec.holdout_per_user < 0) throw ConfigError("holdout_per_user must be >= 0");

  Randomness rng(spec.rng_seed);
  std::vector<Index> order(static_cast<std::size_t>(m.n_users()));
  for (Index u = 0; u < m.n_users(); ++u) order[static_cast<std::size_t>(u)] = u;
  rng.shuffle(order);

  const Index n_train = static_cast<Index>(
      std::llround(spec.train_fraction * static_cast<double>(m.n_users())));
  std::vector<Index> train_users(order.begin(), order.begin() + n_train);
  std::vector<Index> test_users(order.begin() + n_train, order.end());
  std::sort(train_users.begin(), train_users.end());
  std::sort(test_users.begin(), test_users.end());

  RatingMatrix train(std::max<Index>(n_train, 1), m.n_items(), m.range());
  for (std::size_t r = 0; r < train_users.size(); ++r) {
    Index src = train_users[r];
    for (Index i = 0; i < m.n_items(); ++i)
      if (m.is_rated(src, i)) train.set(static_cast<Index>(r), i, m.rating(src, i));
  }

  SplitResult result{std::move(train), std::move(train_users), {}, {}};
  for (Index user : test_users) {
    auto rated = m.rated_items(user);
    if (static_cast<Index>(rated.size()) <= spec.holdout_per_user && spec.holdout_per_user > 0) {
      result.warnings.push_back("user " + std::to_string(user) +
                                " excluded: fewer rated items than held-out count");
      continue;
    }
    Randomness user_rng(mix_seed(spec.rng_seed, 0x5eedULL, static_cast<std::uint64_t>(user)));
    user_rng.shuffle(rated);
    TestUserProfile profile;
    profile.user = user;
    std::vector<Index> hidden(rated.begin(), rated.begin() + spec.holdout_per_user);
    std::vector<Index> visible(rated.begin() + spec.holdout_per_user, rated.end());
    std::sort(hidden.begin(), hidden.end());
    std::sort(visible.begin(), visible.end());
    for (Index i : visible) profile.visible.emplace_back(i, m.rating(user, i));
    for (Index i : hidden) profile.held_out.emplace_back(i, m.rating(user, i));
    result.test.push_back(std::move(profile));
  }
  return result;
}

RatingMatrix synthesize_uniform(const UniformSyntheticSpec& spec) {
  if (spec.density <= 0.0 || spec.density > 1.0) throw ConfigError("density must lie in (0, 1]");
  Randomness rng(spec.seed);
  RatingMatrix m(spec.n_users, spec.n_items, spec.range);
  for (Index u = 0; u < spec.n_users; ++u)
    for (Index i = 0; i < spec.n_items; ++i)
      if (rng.uniform(0.0, 1.0) < spec.density) m.set(u, i, rng.uniform(spec.range.lo, spec.range.hi));
  return m;
}

RatingMatrix synthesize_clustered(const ClusteredSyntheticSpec& spec) {
  if (spec.density <= 0.0 || spec.density > 1.0) throw ConfigError("density must lie in (0, 1]");
  if (spec.n_archetypes < 1) throw ConfigError("need at least one archetype");
  Randomness rng(spec.seed);
  Mat centers(spec.n_archetypes, spec.n_items);
  for (Index a = 0; a < spec.n_archetypes; ++a)
    for (Index i = 0; i < spec.n_items; ++i) centers(a, i) = rng.uniform(spec.range.lo, spec.range.hi);

  RatingMatrix m(spec.n_users, spec.n_items, spec.range);
  for (Index u = 0; u < spec.n_users; ++u) {
    Index archetype = static_cast<Index>(rng.below(static_cast<std::uint64_t>(spec.n_archetypes)));
    for (Index i = 0; i < spec.n_items; ++i) {
      if (rng.uniform(0.0, 1.0) >= spec.density) continue;
      Scalar v = centers(archetype, i) + rng.gaussian(0.0, spec.noise_sd);
      v = std::clamp(v, spec.range.lo, spec.range.hi);
      m.set(u, i, v);
    }
  }
  return m;
}

}  // namespace privrec
