#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "privrec/rating_matrix.hpp"

namespace privrec::lsh {

/// Parameters of one hash family. Signatures from different schemes are
/// incomparable; scheme_id fingerprints (seed, lengths).
struct LshScheme {
  std::uint64_t seed = 0;
  int signature_length = 16;  // minhash bands, >= 16
  int sketch_bits = 64;       // bit-sampling sketch width, 1..64
  std::string scheme_id;
};

LshScheme make_scheme(std::uint64_t seed, int signature_length = 16, int sketch_bits = 64);

struct LshSignature {
  std::vector<std::uint64_t> bands;  // minhash values
  std::uint64_t bit_sketch = 0;
  int sketch_width = 64;
  std::string scheme_id;
  bool id_only = false;  // set when an empty feature list forced an id-only hash

  bool same_value(const LshSignature& other) const {
    return scheme_id == other.scheme_id && bands == other.bands && bit_sketch == other.bit_sketch;
  }
};

/// Character 3-shingles of a token; tokens of length <= 3 shingle to
/// themselves, so short atomic tokens keep exact set semantics.
std::vector<std::string> shingles(const std::string& token);

/// Minhash + bit sketch over the union of the tokens' shingles.
LshSignature hash_tokens(const std::vector<std::string>& tokens, const LshScheme& scheme);

/// Hashes item_id plus every feature string. An empty feature list falls
/// back to the id alone and flags the signature.
LshSignature hash_item(const ItemMeta& item, const LshScheme& scheme);

enum class SimilarityMetric { hamming, dice };

/// Similarity in [0, 1]. hamming compares bit sketches; dice compares
/// band multisets: 2|A n B| / (|A| + |B|).
double similarity(const LshSignature& a, const LshSignature& b, SimilarityMetric metric);

/// Pairs (query index, local index) with similarity >= threshold.
/// Exact signature matches are always included.
std::vector<std::pair<std::size_t, std::size_t>> match_items(
    std::span<const LshSignature> query, std::span<const LshSignature> local, double threshold,
    SimilarityMetric metric = SimilarityMetric::hamming);

/// "<scheme_id>:<bands hex>:<sketch hex>", fixed width per scheme.
std::string serialize(const LshSignature& sig);
LshSignature parse_signature(const std::string& text, const LshScheme& scheme);

}  // namespace privrec::lsh
