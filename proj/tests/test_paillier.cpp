#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "privrec/errors.hpp"
#include "privrec/paillier.hpp"

using namespace privrec;
using namespace privrec::paillier;

namespace {

KeyPair toy_key() { return keypair_from_primes(5, 7); }

}  // namespace

TEST_CASE("toy key parameters match the hand computation") {
  const KeyPair kp = toy_key();
  CHECK(kp.pub.n == 35);
  CHECK(kp.pub.g == 36);
  CHECK(kp.sec.lambda == 12);          // lcm(4, 6)
  CHECK((kp.sec.lambda * kp.sec.mu) % kp.pub.n == 1);
}

TEST_CASE("prime constraints are enforced") {
  CHECK_THROWS_AS(keypair_from_primes(3, 7), DomainError);   // 3 divides 6
  CHECK_THROWS_AS(keypair_from_primes(7, 5), DomainError);   // p < q violated
  CHECK_THROWS_AS(keypair_from_primes(4, 7), DomainError);   // not prime
}

TEST_CASE("toy key: exhaustive encrypt/decrypt round trip over Z_35") {
  const KeyPair kp = toy_key();
  Randomness rng(1);
  for (long m = 0; m < 35; ++m) {
    const Ciphertext c = encrypt(kp.pub, m, rng);
    CHECK(decrypt(kp.sec, c) == m);
  }
}

TEST_CASE("toy key: hand-checked ciphertext of m=9") {
  const KeyPair kp = toy_key();
  // g^m * r^N mod N^2 with r = 2: 36^9 * 2^35 mod 1225.
  BigInt expected;
  {
    BigInt g_m, r_n;
    const BigInt n2 = 1225;
    mpz_powm(g_m.get_mpz_t(), BigInt(36).get_mpz_t(), BigInt(9).get_mpz_t(), n2.get_mpz_t());
    mpz_powm(r_n.get_mpz_t(), BigInt(2).get_mpz_t(), BigInt(35).get_mpz_t(), n2.get_mpz_t());
    expected = (g_m * r_n) % n2;
  }
  CHECK(decrypt(kp.sec, Ciphertext{expected, kp.pub.key_id, 1}) == 9);
}

TEST_CASE("plaintext domain is checked") {
  const KeyPair kp = toy_key();
  Randomness rng(2);
  CHECK_THROWS_AS(encrypt(kp.pub, 35, rng), DomainError);
  CHECK_THROWS_AS(encrypt(kp.pub, -1, rng), DomainError);
  CHECK(decrypt(kp.sec, encrypt(kp.pub, 0, rng)) == 0);
}

TEST_CASE("wrong key is rejected at decryption") {
  const KeyPair kp = toy_key();
  const KeyPair other = keypair_from_primes(3, 11);
  Randomness rng(3);
  const Ciphertext c = encrypt(kp.pub, 9, rng);
  CHECK_THROWS_AS(decrypt(other.sec, c), UsageError);
}

TEST_CASE("homomorphic addition and scalar multiplication on the toy key") {
  const KeyPair kp = toy_key();
  Randomness rng(4);
  const Ciphertext e3 = encrypt(kp.pub, 3, rng);
  const Ciphertext e4 = encrypt(kp.pub, 4, rng);
  CHECK(decrypt(kp.sec, hom_add(kp.pub, e3, e4)) == 7);
  CHECK(decrypt(kp.sec, hom_scalar_mul(kp.pub, e3, 5)) == 15);
  CHECK(decrypt(kp.sec, hom_scalar_mul(kp.pub, e3, 1)) == 3);
  CHECK(decrypt(kp.sec, hom_scalar_mul(kp.pub, e3, 0)) == 0);
  const Ciphertext e0 = encrypt(kp.pub, 0, rng);
  CHECK(decrypt(kp.sec, hom_add(kp.pub, e3, e0)) == 3);
}

TEST_CASE("toy key: full homomorphic addition table") {
  const KeyPair kp = toy_key();
  Randomness rng(5);
  for (long m1 = 0; m1 < 35; m1 += 3)
    for (long m2 = 0; m2 < 35; m2 += 4) {
      const Ciphertext sum = hom_add(kp.pub, encrypt(kp.pub, m1, rng), encrypt(kp.pub, m2, rng));
      CHECK(decrypt(kp.sec, sum) == (m1 + m2) % 35);
    }
}

TEST_CASE("keygen produces working keys deterministically") {
  Randomness rng_a(17), rng_b(17);
  const KeyPair a = keygen(128, rng_a);
  const KeyPair b = keygen(128, rng_b);
  CHECK(a.pub.n == b.pub.n);
  CHECK(mpz_sizeinbase(a.pub.n.get_mpz_t(), 2) == 128);

  Randomness rng(18);
  for (int i = 0; i < 20; ++i) {
    const BigInt m = rng.mpz_below(a.pub.n);
    CHECK(decrypt(a.sec, encrypt(a.pub, m, rng)) == m);
  }
  CHECK_THROWS_AS(keygen(64, rng), DomainError);
}

TEST_CASE("encrypting the same plaintext twice yields distinct ciphertexts") {
  const KeyPair kp = toy_key();
  Randomness rng(6);
  int distinct = 0;
  for (int i = 0; i < 40; ++i) {
    const Ciphertext a = encrypt(kp.pub, 9, rng);
    const Ciphertext b = encrypt(kp.pub, 9, rng);
    if (a.value != b.value) ++distinct;
  }
  CHECK(distinct >= 38);  // collisions of the 24 valid r values are possible but rare
}

TEST_CASE("reblind preserves the plaintext and changes the ciphertext") {
  Randomness rng(7);
  const KeyPair kp = keygen(128, rng);
  const Ciphertext c = encrypt(kp.pub, 9, rng);
  for (int i = 0; i < 100; ++i) {
    const Ciphertext r = reblind(kp.pub, c, rng);
    CHECK(r.value != c.value);
    CHECK(decrypt(kp.sec, r) == 9);
  }
  const Ciphertext twice = reblind(kp.pub, reblind(kp.pub, c, rng), rng);
  CHECK(decrypt(kp.sec, twice) == 9);
}

TEST_CASE("fixed-point codec encodes signed reals") {
  const FixedPointCodec codec{1000, 1000000007};
  CHECK(codec.encode(2.5) == 2500);
  CHECK(codec.decode(2500) == doctest::Approx(2.5));
  CHECK(codec.encode(-2.5) == BigInt(1000000007) - 2500);
  CHECK(codec.decode(codec.encode(-2.5)) == doctest::Approx(-2.5));
  const BigInt sum = (codec.encode(2.5) + codec.encode(-2.5)) % 1000000007;
  CHECK(codec.decode(sum) == doctest::Approx(0.0));
  CHECK_THROWS_AS(codec.encode(1e9), DomainError);

  // round-trip error bounded by half a step
  for (double x : {0.0001234, -3.14159, 9.99949, -0.4995}) {
    CHECK(std::abs(codec.decode(codec.encode(x)) - x) <= 0.5 / 1000.0 + 1e-12);
  }
}

TEST_CASE("double encryption round-trips through both layers") {
  Randomness rng(8);
  const KeyPair inner = keygen(128, rng);
  const KeyPair outer = keygen(258, rng);
  const Ciphertext wrapped = double_encrypt(outer.pub, inner.pub, 42, rng);
  CHECK(wrapped.layer == 2);
  const Ciphertext stripped = strip_layer(outer.sec, inner.pub, wrapped);
  CHECK(stripped.layer == 1);
  CHECK(decrypt(inner.sec, stripped) == 42);
}

TEST_CASE("double encryption rejects an undersized outer key") {
  Randomness rng(9);
  const KeyPair inner = keygen(128, rng);
  const KeyPair outer = keygen(128, rng);
  CHECK_THROWS_AS(double_encrypt(outer.pub, inner.pub, 1, rng), ConfigError);
}

TEST_CASE("stripping with the wrong outer key fails loudly") {
  Randomness rng(10);
  const KeyPair inner = keygen(128, rng);
  const KeyPair outer = keygen(258, rng);
  const KeyPair rogue = keygen(258, rng);
  const Ciphertext wrapped = double_encrypt(outer.pub, inner.pub, 42, rng);
  CHECK_THROWS_AS(strip_layer(rogue.sec, inner.pub, wrapped), UsageError);
}

TEST_CASE("outer-layer products add inner ciphertext values, not inner plaintexts") {
  Randomness rng(11);
  const KeyPair inner = keygen(128, rng);
  const KeyPair outer = keygen(258, rng);

  const Ciphertext in1 = encrypt(inner.pub, 3, rng);
  const Ciphertext in2 = encrypt(inner.pub, 4, rng);
  Ciphertext w1 = encrypt(outer.pub, in1.value, rng);
  w1.layer = 2;
  Ciphertext w2 = encrypt(outer.pub, in2.value, rng);
  w2.layer = 2;

  const Ciphertext product = hom_add(outer.pub, w1, w2);
  const BigInt outer_decrypted = decrypt(outer.sec, product);

  // The outer homomorphism adds the inner ciphertext VALUES...
  CHECK(outer_decrypted == (in1.value + in2.value) % outer.pub.n);

  // ...which is not an inner encryption of 3 + 4.
  bool equals_plain_sum = false;
  try {
    const Ciphertext as_inner{outer_decrypted % inner.pub.n_squared, inner.pub.key_id, 1};
    equals_plain_sum = decrypt(inner.sec, as_inner) == 7;
  } catch (const Error&) {
    equals_plain_sum = false;
  }
  CHECK_FALSE(equals_plain_sum);

  // The sound route: strip the outer layer first, then multiply inner
  // ciphertexts.
  const Ciphertext stripped1 = strip_layer(outer.sec, inner.pub, w1);
  const Ciphertext stripped2 = strip_layer(outer.sec, inner.pub, w2);
  CHECK(decrypt(inner.sec, hom_add(inner.pub, stripped1, stripped2)) == 7);
}

TEST_CASE("key and ciphertext JSON round-trips") {
  Randomness rng(12);
  const KeyPair kp = keygen(128, rng);
  const PublicKey pk = public_key_from_json(to_json(kp.pub));
  CHECK(pk.n == kp.pub.n);
  CHECK(pk.g == kp.pub.g);
  CHECK(pk.key_id == kp.pub.key_id);
  const SecretKey sk = secret_key_from_json(to_json(kp.sec));
  CHECK(sk.lambda == kp.sec.lambda);

  const Ciphertext c = encrypt(kp.pub, 5, rng);
  const Ciphertext back = ciphertext_from_json(to_json(c));
  CHECK(back.value == c.value);
  CHECK(back.key_id == c.key_id);
  CHECK(back.layer == 1);
  CHECK(decrypt(sk, back) == 5);
}
