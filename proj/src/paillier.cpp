#include "privrec/paillier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "privrec/errors.hpp"

namespace privrec::paillier {

namespace {

BigInt powm(const BigInt& base, const BigInt& exp, const BigInt& mod) {
  BigInt out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return out;
}

/// Draws r in [1, n-1] with gcd(r, n) = 1.
BigInt draw_unit(const BigInt& n, Randomness& rng) {
  for (int attempt = 0; attempt < 4096; ++attempt) {
    BigInt r = rng.mpz_below(n - 1) + 1;
    BigInt g;
    mpz_gcd(g.get_mpz_t(), r.get_mpz_t(), n.get_mpz_t());
    if (g == 1) return r;
  }
  throw RetryableError("could not draw a unit modulo n");
}

KeyPair assemble(const BigInt& p, const BigInt& q, unsigned key_bits) {
  if (!(p < q)) throw DomainError("keygen requires p < q");
  if (mpz_divisible_p(BigInt(q - 1).get_mpz_t(), p.get_mpz_t())) {
    throw DomainError("keygen requires p not dividing q - 1");
  }
  KeyPair kp;
  kp.pub.n = p * q;
  kp.pub.g = kp.pub.n + 1;
  kp.pub.key_bits = key_bits ? key_bits : static_cast<unsigned>(mpz_sizeinbase(kp.pub.n.get_mpz_t(), 2));
  kp.pub.n_squared = kp.pub.n * kp.pub.n;
  kp.pub.key_id = fingerprint(kp.pub.n);

  BigInt lambda;
  mpz_lcm(lambda.get_mpz_t(), BigInt(p - 1).get_mpz_t(), BigInt(q - 1).get_mpz_t());
  BigInt mu;
  if (!mpz_invert(mu.get_mpz_t(), lambda.get_mpz_t(), kp.pub.n.get_mpz_t())) {
    throw DomainError("lambda is not invertible modulo n");
  }
  kp.sec = SecretKey{lambda, mu, kp.pub.n, kp.pub.n_squared, kp.pub.key_id};
  return kp;
}

BigInt next_prime_with_top_bits(unsigned bits, Randomness& rng) {
  // Top two bits forced so that the product of two such primes keeps the
  // requested modulus weight.
  BigInt candidate = rng.mpz_bits(bits);
  mpz_setbit(candidate.get_mpz_t(), bits - 1);
  mpz_setbit(candidate.get_mpz_t(), bits - 2);
  BigInt prime;
  mpz_nextprime(prime.get_mpz_t(), candidate.get_mpz_t());
  return prime;
}

}  // namespace

std::string fingerprint(const BigInt& n) {
  // FNV-1a over the decimal form, rendered as fixed-width hex.
  const std::string dec = n.get_str(10);
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : dec) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

KeyPair keygen(unsigned key_bits, Randomness& rng) {
  if (key_bits < 128) throw DomainError("key_bits must be at least 128");
  const unsigned p_bits = key_bits / 2;
  const unsigned q_bits = key_bits - p_bits;
  for (int attempt = 0; attempt < 256; ++attempt) {
    BigInt a = next_prime_with_top_bits(p_bits, rng);
    BigInt b = next_prime_with_top_bits(q_bits, rng);
    if (a == b) continue;
    BigInt p = std::min(a, b);
    BigInt q = std::max(a, b);
    if (mpz_divisible_p(BigInt(q - 1).get_mpz_t(), p.get_mpz_t())) continue;
    if (mpz_sizeinbase(BigInt(p * q).get_mpz_t(), 2) != key_bits) continue;
    return assemble(p, q, key_bits);
  }
  throw RetryableError("prime search exhausted");
}

KeyPair keypair_from_primes(const BigInt& p, const BigInt& q) {
  if (mpz_probab_prime_p(p.get_mpz_t(), 32) == 0 || mpz_probab_prime_p(q.get_mpz_t(), 32) == 0) {
    throw DomainError("both factors must be prime");
  }
  return assemble(p, q, 0);
}

Ciphertext encrypt(const PublicKey& pk, const BigInt& m, Randomness& rng) {
  if (m < 0 || m >= pk.n) throw DomainError("plaintext outside Z_n");
  BigInt r = draw_unit(pk.n, rng);
  // g = n + 1 makes g^m = 1 + m*n (mod n^2): one multiplication.
  BigInt g_m = (1 + m * pk.n) % pk.n_squared;
  BigInt value = (g_m * powm(r, pk.n, pk.n_squared)) % pk.n_squared;
  return Ciphertext{value, pk.key_id, 1};
}

BigInt decrypt(const SecretKey& sk, const Ciphertext& c) {
  if (c.key_id != sk.key_id) throw UsageError("ciphertext was produced under a different key");
  BigInt g;
  mpz_gcd(g.get_mpz_t(), c.value.get_mpz_t(), sk.n.get_mpz_t());
  if (g != 1) throw CorruptionError("ciphertext shares a factor with n");
  BigInt u = powm(c.value % sk.n_squared, sk.lambda, sk.n_squared);
  BigInt l = (u - 1) / sk.n;
  return (l * sk.mu) % sk.n;
}

Ciphertext hom_add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
  if (a.key_id != b.key_id || a.key_id != pk.key_id) throw UsageError("key mismatch in hom_add");
  if (a.layer != b.layer) throw UsageError("layer mismatch in hom_add");
  return Ciphertext{(a.value * b.value) % pk.n_squared, a.key_id, a.layer};
}

Ciphertext hom_scalar_mul(const PublicKey& pk, const Ciphertext& c, const BigInt& k) {
  if (c.key_id != pk.key_id) throw UsageError("key mismatch in hom_scalar_mul");
  if (k < 0) throw DomainError("scalar must be non-negative");
  return Ciphertext{powm(c.value, k, pk.n_squared), c.key_id, c.layer};
}

Ciphertext reblind(const PublicKey& pk, const Ciphertext& c, Randomness& rng) {
  if (c.key_id != pk.key_id) throw UsageError("key mismatch in reblind");
  BigInt r = draw_unit(pk.n, rng);
  BigInt value = (c.value * powm(r, pk.n, pk.n_squared)) % pk.n_squared;
  return Ciphertext{value, c.key_id, c.layer};
}

Ciphertext double_encrypt(const PublicKey& outer, const PublicKey& inner, const BigInt& m,
                          Randomness& rng) {
  if (inner.n_squared > outer.n) {
    throw ConfigError("outer key too small to wrap inner ciphertexts (needs >= 2x inner bits + 2)");
  }
  Ciphertext inner_ct = encrypt(inner, m, rng);
  Ciphertext outer_ct = encrypt(outer, inner_ct.value, rng);
  outer_ct.layer = 2;
  return outer_ct;
}

Ciphertext strip_layer(const SecretKey& outer, const PublicKey& inner, const Ciphertext& c) {
  if (c.layer != 2) throw UsageError("strip_layer expects a layer-2 ciphertext");
  BigInt value = decrypt(outer, c);
  if (value >= inner.n_squared) {
    throw CorruptionError("stripped value does not fit the inner ciphertext space");
  }
  return Ciphertext{value, inner.key_id, 1};
}

BigInt FixedPointCodec::encode(Scalar x) const {
  if (scale <= 0) throw ConfigError("fixed-point scale must be positive");
  const Scalar scaled = x * static_cast<Scalar>(scale);
  if (!std::isfinite(scaled) || std::abs(scaled) >= 9.0e18) {
    throw DomainError("non-finite or oversized value in fixed-point encode");
  }
  BigInt magnitude(static_cast<long>(std::abs(std::llround(scaled))));
  if (2 * magnitude >= modulus) throw DomainError("fixed-point magnitude overflow");
  if (scaled < 0 && magnitude != 0) return modulus - magnitude;
  return magnitude;
}

Scalar FixedPointCodec::decode(const BigInt& v) const {
  if (v < 0 || v >= modulus) throw DomainError("encoded value outside Z_n");
  BigInt signed_value = v;
  if (2 * v > modulus) signed_value = v - modulus;
  return signed_value.get_d() / static_cast<Scalar>(scale);
}

nlohmann::json to_json(const PublicKey& pk) {
  return {{"n", pk.n.get_str(16)}, {"g", pk.g.get_str(16)}, {"key_bits", pk.key_bits}};
}

nlohmann::json to_json(const SecretKey& sk) {
  return {{"lambda", sk.lambda.get_str(16)}, {"mu", sk.mu.get_str(16)}, {"n", sk.n.get_str(16)}};
}

nlohmann::json to_json(const Ciphertext& c) {
  return {{"value", c.value.get_str(16)}, {"key_id", c.key_id}, {"layer", c.layer}};
}

PublicKey public_key_from_json(const nlohmann::json& j) {
  PublicKey pk;
  pk.n = BigInt(j.at("n").get<std::string>(), 16);
  pk.g = BigInt(j.at("g").get<std::string>(), 16);
  pk.key_bits = j.at("key_bits").get<unsigned>();
  pk.n_squared = pk.n * pk.n;
  pk.key_id = fingerprint(pk.n);
  return pk;
}

SecretKey secret_key_from_json(const nlohmann::json& j) {
  SecretKey sk;
  sk.lambda = BigInt(j.at("lambda").get<std::string>(), 16);
  sk.mu = BigInt(j.at("mu").get<std::string>(), 16);
  sk.n = BigInt(j.at("n").get<std::string>(), 16);
  sk.n_squared = sk.n * sk.n;
  sk.key_id = fingerprint(sk.n);
  return sk;
}

Ciphertext ciphertext_from_json(const nlohmann::json& j) {
  return Ciphertext{BigInt(j.at("value").get<std::string>(), 16),
                    j.at("key_id").get<std::string>(), j.at("layer").get<int>()};
}

}  // namespace privrec::paillier
