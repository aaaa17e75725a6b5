#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "privrec/random.hpp"
#include "privrec/types.hpp"

namespace privrec::paillier {

using BigInt = mpz_class;

/// Public key: modulus n = p*q, generator g = n + 1 (its order divides n,
/// so the standard generator condition holds by construction).
struct PublicKey {
  BigInt n;
  BigInt g;
  unsigned key_bits = 0;
  BigInt n_squared;
  std::string key_id;  // short fingerprint of n
};

/// Secret key: lambda = lcm(p-1, q-1) and mu = lambda^{-1} mod n,
/// precomputed so decryption is two modular operations.
struct SecretKey {
  BigInt lambda;
  BigInt mu;
  BigInt n;
  BigInt n_squared;
  std::string key_id;
};

struct KeyPair {
  PublicKey pub;
  SecretKey sec;
};

/// Ciphertext in Z*_{n^2} of the outermost key. layer 2 marks a
/// ciphertext whose plaintext is itself a layer-1 ciphertext value.
struct Ciphertext {
  BigInt value;
  std::string key_id;
  int layer = 1;
};

/// Generates a fresh key pair. Primes satisfy p < q and p does not
/// divide q - 1; n has exactly the requested bit length's weight
/// (n >= 2^(key_bits-1)). Deterministic under the randomness seed.
KeyPair keygen(unsigned key_bits, Randomness& rng);

/// Builds a key pair from explicit primes (small-prime oracle paths).
/// Validates p < q and p not dividing q - 1.
KeyPair keypair_from_primes(const BigInt& p, const BigInt& q);

Ciphertext encrypt(const PublicKey& pk, const BigInt& m, Randomness& rng);
BigInt decrypt(const SecretKey& sk, const Ciphertext& c);

/// Homomorphic addition: modular product of ciphertexts; decrypts to
/// (m1 + m2) mod n.
Ciphertext hom_add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b);

/// Homomorphic scalar multiplication: c^k; decrypts to (k*m) mod n.
Ciphertext hom_scalar_mul(const PublicKey& pk, const Ciphertext& c, const BigInt& k);

/// Re-randomizes a ciphertext by multiplying with a fresh r^n; the
/// plaintext is unchanged.
Ciphertext reblind(const PublicKey& pk, const Ciphertext& c, Randomness& rng);

/// Encrypts m under the inner key, then wraps the resulting ciphertext
/// value under the outer key (layer 2). The inner ciphertext space must
/// embed in the outer plaintext space: inner n^2 <= outer n, i.e. the
/// outer key needs at least 2x the inner key bits + 2.
Ciphertext double_encrypt(const PublicKey& outer, const PublicKey& inner, const BigInt& m,
                          Randomness& rng);

/// Removes the outer layer of a layer-2 ciphertext, yielding the inner
/// layer-1 ciphertext without exposing the inner plaintext.
Ciphertext strip_layer(const SecretKey& outer, const PublicKey& inner, const Ciphertext& c);

/// Signed fixed-point codec over Z_n: x -> round(x*S) with negatives as
/// n - |round(x*S)|. Requires |x|*S < n/2.
struct FixedPointCodec {
  std::int64_t scale;  // S
  BigInt modulus;      // n of the active key

  BigInt encode(Scalar x) const;
  Scalar decode(const BigInt& v) const;
};

nlohmann::json to_json(const PublicKey& pk);
nlohmann::json to_json(const SecretKey& sk);
nlohmann::json to_json(const Ciphertext& c);
PublicKey public_key_from_json(const nlohmann::json& j);
SecretKey secret_key_from_json(const nlohmann::json& j);
Ciphertext ciphertext_from_json(const nlohmann::json& j);

std::string fingerprint(const BigInt& n);

}  // namespace privrec::paillier
