#include "privrec/lsh.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <limits>
#include <set>

#include "privrec/errors.hpp"
#include "privrec/random.hpp"

namespace privrec::lsh {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

/// Seeded hash of a shingle for band `index`.
std::uint64_t band_hash(std::uint64_t seed, std::uint64_t index, const std::string& shingle) {
  return mix64(fnv1a(shingle) ^ mix64(seed ^ (index * 0x9e3779b97f4a7c15ULL)));
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

}  // namespace

LshScheme make_scheme(std::uint64_t seed, int signature_length, int sketch_bits) {
  if (signature_length < 16) throw ConfigError("signature_length must be at least 16");
  if (sketch_bits < 1 || sketch_bits > 64) throw ConfigError("sketch_bits must be in [1, 64]");
  LshScheme scheme{seed, signature_length, sketch_bits, ""};
  scheme.scheme_id =
      hex16(mix_seed(seed, static_cast<std::uint64_t>(signature_length),
                     static_cast<std::uint64_t>(sketch_bits)));
  return scheme;
}

std::vector<std::string> shingles(const std::string& token) {
  if (token.size() <= 3) return {token};
  std::vector<std::string> out;
  out.reserve(token.size() - 2);
  for (std::size_t i = 0; i + 3 <= token.size(); ++i) out.push_back(token.substr(i, 3));
  return out;
}

LshSignature hash_tokens(const std::vector<std::string>& tokens, const LshScheme& scheme) {
  if (scheme.scheme_id.empty()) throw UsageError("scheme must come from make_scheme");
  std::set<std::string> shingle_set;
  for (const auto& token : tokens)
    for (auto& s : shingles(token)) shingle_set.insert(std::move(s));
  if (shingle_set.empty()) shingle_set.insert("");

  LshSignature sig;
  sig.scheme_id = scheme.scheme_id;
  sig.sketch_width = scheme.sketch_bits;
  sig.bands.resize(static_cast<std::size_t>(scheme.signature_length));
  for (int b = 0; b < scheme.signature_length; ++b) {
    std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
    for (const auto& s : shingle_set) best = std::min(best, band_hash(scheme.seed, static_cast<std::uint64_t>(b), s));
    sig.bands[static_cast<std::size_t>(b)] = best;
  }
  for (int b = 0; b < scheme.sketch_bits; ++b) {
    std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
    // A dedicated hash family (offset past the band indices) samples one
    // bit per position: P(bit equal) = (1 + Jaccard) / 2.
    for (const auto& s : shingle_set)
      best = std::min(best, band_hash(scheme.seed, 0x10000ULL + static_cast<std::uint64_t>(b), s));
    sig.bit_sketch |= (best & 1ULL) << b;
  }
  return sig;
}

LshSignature hash_item(const ItemMeta& item, const LshScheme& scheme) {
  std::vector<std::string> tokens;
  tokens.push_back(item.item_id);
  tokens.insert(tokens.end(), item.features.begin(), item.features.end());
  LshSignature sig = hash_tokens(tokens, scheme);
  sig.id_only = item.features.empty();
  return sig;
}

double similarity(const LshSignature& a, const LshSignature& b, SimilarityMetric metric) {
  if (a.scheme_id != b.scheme_id) throw UsageError("signatures from different schemes");
  if (a.bands.size() != b.bands.size()) throw UsageError("signature width mismatch");
  switch (metric) {
    case SimilarityMetric::hamming: {
      if (a.sketch_width != b.sketch_width) throw UsageError("sketch width mismatch");
      const std::uint64_t diff = a.bit_sketch ^ b.bit_sketch;
      return 1.0 - static_cast<double>(std::popcount(diff)) / static_cast<double>(a.sketch_width);
    }
    case SimilarityMetric::dice: {
      std::vector<std::uint64_t> sa = a.bands;
      std::vector<std::uint64_t> sb = b.bands;
      std::sort(sa.begin(), sa.end());
      std::sort(sb.begin(), sb.end());
      std::size_t i = 0, j = 0, common = 0;
      while (i < sa.size() && j < sb.size()) {
        if (sa[i] == sb[j]) {
          ++common, ++i, ++j;
        } else if (sa[i] < sb[j]) {
          ++i;
        } else {
          ++j;
        }
      }
      return 2.0 * static_cast<double>(common) / static_cast<double>(sa.size() + sb.size());
    }
  }
  throw UsageError("unknown similarity metric");
}

std::vector<std::pair<std::size_t, std::size_t>> match_items(std::span<const LshSignature> query,
                                                             std::span<const LshSignature> local,
                                                             double threshold,
                                                             SimilarityMetric metric) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t qi = 0; qi < query.size(); ++qi) {
    for (std::size_t li = 0; li < local.size(); ++li) {
      if (query[qi].same_value(local[li]) ||
          similarity(query[qi], local[li], metric) >= threshold) {
        out.emplace_back(qi, li);
      }
    }
  }
  return out;
}

std::string serialize(const LshSignature& sig) {
  std::string out = sig.scheme_id;
  out += ':';
  for (std::uint64_t band : sig.bands) out += hex16(band);
  out += ':';
  out += hex16(sig.bit_sketch);
  return out;
}

LshSignature parse_signature(const std::string& text, const LshScheme& scheme) {
  const std::size_t band_chars = static_cast<std::size_t>(scheme.signature_length) * 16;
  const std::size_t expected = scheme.scheme_id.size() + 1 + band_chars + 1 + 16;
  if (text.size() != expected || text.compare(0, scheme.scheme_id.size(), scheme.scheme_id) != 0) {
    throw ParseError("malformed signature text");
  }
  LshSignature sig;
  sig.scheme_id = scheme.scheme_id;
  sig.sketch_width = scheme.sketch_bits;
  std::size_t pos = scheme.scheme_id.size() + 1;
  for (int b = 0; b < scheme.signature_length; ++b) {
    sig.bands.push_back(std::stoull(text.substr(pos, 16), nullptr, 16));
    pos += 16;
  }
  pos += 1;
  sig.bit_sketch = std::stoull(text.substr(pos, 16), nullptr, 16);
  return sig;
}

}  // namespace privrec::lsh
