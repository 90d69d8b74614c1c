#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "rollsim/da.hpp"
#include "rollsim/rng.hpp"

using namespace rollsim;

namespace {

// Bitwise carryless multiply reduced mod x^16 + x^12 + x^3 + x + 1,
// independent of the log/exp tables.
std::uint16_t slow_mul(std::uint16_t a, std::uint16_t b) {
    std::uint32_t acc = 0;
    for (int i = 0; i < 16; ++i)
        if (b & (1u << i)) acc ^= static_cast<std::uint32_t>(a) << i;
    for (int bit = 31; bit >= 16; --bit)
        if (acc & (1u << bit)) acc ^= 0x1100Bu << (bit - 16);
    return static_cast<std::uint16_t>(acc);
}

Bytes random_payload(SplitMix64& rng, std::size_t size) {
    Bytes out(size);
    for (auto& b : out) b = static_cast<std::uint8_t>(rng.bounded(256));
    return out;
}

}  // namespace

TEST_CASE("splitmix64 matches the reference stream", "[da]") {
    SplitMix64 rng{0};
    REQUIRE(rng.next() == 0xe220a8397b1dcdafull);
    REQUIRE(rng.next() == 0x6e789e6aa1b965f4ull);
    REQUIRE(rng.next() == 0x06c45d188009454full);
    REQUIRE(rng.next() == 0xf88bb8a8724c81ecull);

    SECTION("determinism and bound behavior") {
        SplitMix64 a{42}, b{42};
        for (int i = 0; i < 100; ++i) REQUIRE(a.next() == b.next());
        REQUIRE(a.bounded(1) == 0);
        std::vector<int> buckets(10, 0);
        for (int i = 0; i < 10000; ++i) ++buckets[a.bounded(10)];
        for (int c : buckets) {
            REQUIRE(c > 800);
            REQUIRE(c < 1200);
        }
    }
}

TEST_CASE("substreams split by label", "[da]") {
    REQUIRE(derive_seed(7, "mining") != derive_seed(7, "sampling"));
    REQUIRE(derive_seed(7, "mining") != derive_seed(8, "mining"));
    REQUIRE(substream(7, "mining").next() == substream(7, "mining").next());
    REQUIRE(substream(7, "a").next() != substream(7, "b").next());
}

TEST_CASE("sampling without replacement is exact", "[da]") {
    SplitMix64 rng{1};
    for (std::uint32_t n : {1u, 5u, 16u, 64u}) {
        for (std::uint32_t s : {1u, 3u, n}) {
            auto pick = sample_without_replacement(rng, n, s);
            REQUIRE(pick.size() == std::min(s, n));
            std::set<std::uint32_t> uniq(pick.begin(), pick.end());
            REQUIRE(uniq.size() == pick.size());
            for (auto i : pick) REQUIRE(i < n);
        }
    }
    // full draw is a permutation
    auto perm = sample_without_replacement(rng, 8, 8);
    REQUIRE(std::set<std::uint32_t>(perm.begin(), perm.end()).size() == 8);
    // per-seed determinism
    SplitMix64 r1{9}, r2{9};
    REQUIRE(sample_without_replacement(r1, 16, 3) == sample_without_replacement(r2, 16, 3));
}

TEST_CASE("field tables agree with bitwise arithmetic", "[da]") {
    const auto& t = gf16::tables();
    REQUIRE(t.exp[0] == 1);
    REQUIRE(t.exp[65535] == 1);  // full multiplicative cycle: the polynomial is primitive
    REQUIRE(gf16::mul(0, 0x1234) == 0);
    REQUIRE(gf16::mul(1, 0x1234) == 0x1234);

    SplitMix64 rng{3};
    for (int i = 0; i < 20000; ++i) {
        auto a = static_cast<std::uint16_t>(rng.next());
        auto b = static_cast<std::uint16_t>(rng.next());
        REQUIRE(gf16::mul(a, b) == slow_mul(a, b));
    }
    for (int i = 0; i < 1000; ++i) {
        auto a = static_cast<std::uint16_t>(rng.bounded(65535) + 1);
        auto b = static_cast<std::uint16_t>(rng.bounded(65535) + 1);
        REQUIRE(gf16::mul(a, gf16::inv(a)) == 1);
        REQUIRE(gf16::div(gf16::mul(a, b), b) == a);
    }
}

TEST_CASE("erasure code reconstructs from any k chunks", "[da]") {
    SplitMix64 rng{11};
    struct Shape {
        std::uint32_t n, k;
    };
    for (Shape sh : {Shape{4, 2}, Shape{16, 8}, Shape{8, 3}, Shape{12, 12}}) {
        for (std::size_t size : {std::size_t{1}, std::size_t{37}, std::size_t{1000}}) {
            Bytes payload = random_payload(rng, size);
            DaEncoding enc = da_encode(payload, sh.n, sh.k);
            REQUIRE(enc.chunks.size() == sh.n);
            for (const auto& c : enc.chunks) REQUIRE(c.size() == enc.chunks[0].size());
            REQUIRE(enc.root == da_root(enc.chunks));

            auto take = [&](std::vector<std::uint32_t> idx) {
                std::map<std::uint32_t, Bytes> have;
                for (auto i : idx) have[i] = enc.chunks[i];
                return da_decode(sh.n, sh.k, have);
            };
            std::vector<std::uint32_t> first(sh.k), last(sh.k);
            for (std::uint32_t i = 0; i < sh.k; ++i) {
                first[i] = i;
                last[i] = sh.n - 1 - i;
            }
            REQUIRE(take(first) == payload);
            REQUIRE(take(last) == payload);
            REQUIRE(take(sample_without_replacement(rng, sh.n, sh.k)) == payload);
        }
    }
}

TEST_CASE("all k-subsets of a small code agree", "[da]") {
    SplitMix64 rng{13};
    Bytes payload = random_payload(rng, 123);
    DaEncoding enc = da_encode(payload, 8, 4);
    std::vector<std::uint32_t> idx = {0, 1, 2, 3};
    int combos = 0;
    while (true) {
        std::map<std::uint32_t, Bytes> have;
        for (auto i : idx) have[i] = enc.chunks[i];
        REQUIRE(da_decode(8, 4, have) == payload);
        ++combos;
        // next 4-combination of {0..7}
        int pos = 3;
        while (pos >= 0 && idx[static_cast<std::size_t>(pos)] ==
                               static_cast<std::uint32_t>(4 + pos))
            --pos;
        if (pos < 0) break;
        ++idx[static_cast<std::size_t>(pos)];
        for (std::size_t q = static_cast<std::size_t>(pos) + 1; q < 4; ++q)
            idx[q] = idx[q - 1] + 1;
    }
    REQUIRE(combos == 70);
}

TEST_CASE("decode rejects malformed inputs", "[da]") {
    SplitMix64 rng{17};
    DaEncoding enc = da_encode(random_payload(rng, 64), 8, 4);
    std::map<std::uint32_t, Bytes> have;
    have[0] = enc.chunks[0];
    have[1] = enc.chunks[1];
    have[2] = enc.chunks[2];
    REQUIRE_FALSE(da_decode(8, 4, have).has_value());  // one short
    have[9] = enc.chunks[3];
    REQUIRE_FALSE(da_decode(8, 4, have).has_value());  // index out of range
    have.erase(9);
    have[3] = Bytes(enc.chunks[3].size() + 2, 0);
    REQUIRE_FALSE(da_decode(8, 4, have).has_value());  // ragged sizes
    REQUIRE_THROWS(da_encode(Bytes{}, 4, 0));
    REQUIRE_THROWS(da_encode(Bytes{}, 2, 4));
}

TEST_CASE("detection probability oracle", "[da]") {
    // 1 - C(7,3)/C(16,3) = 1 - 35/560
    REQUIRE(da_detection_probability(16, 9, 3) == 0.9375);
    // 1 - C(15,3)/C(16,3) = 1 - 455/560
    REQUIRE(da_detection_probability(16, 1, 3) == 0.1875);
    // 1 - C(5,2)/C(10,2) = 7/9
    REQUIRE(da_detection_probability(10, 5, 2) == Catch::Approx(7.0 / 9.0));
    REQUIRE(da_detection_probability(16, 0, 3) == 0.0);
    REQUIRE(da_detection_probability(16, 9, 0) == 0.0);
    REQUIRE(da_detection_probability(5, 3, 3) == 1.0);   // too few visible chunks
    REQUIRE(da_detection_probability(16, 16, 1) == 1.0);
}

TEST_CASE("sampling empirics track the oracle", "[da]") {
    const std::uint32_t n = 16, s = 3, w = 9;
    SplitMix64 hide = substream(2026, "hide");
    auto hidden_vec = sample_without_replacement(hide, n, w);
    std::set<std::uint32_t> hidden(hidden_vec.begin(), hidden_vec.end());

    SplitMix64 rng = substream(2026, "sample");
    int hits = 0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i)
        if (da_sample_hits(da_sample(rng, n, s), hidden)) ++hits;
    double freq = static_cast<double>(hits) / trials;
    REQUIRE(std::abs(freq - da_detection_probability(n, w, s)) < 0.02);
}

TEST_CASE("incorrect-coding proofs", "[da]") {
    SplitMix64 rng{23};
    Bytes payload = random_payload(rng, 200);
    DaEncoding enc = da_encode(payload, 16, 8);

    SECTION("an honest codeword proves nothing") {
        REQUIRE_FALSE(generate_incorrect_coding_proof(enc.chunks, 8).has_value());
    }
    SECTION("a corrupted parity chunk is exposed") {
        auto chunks = enc.chunks;
        chunks[12][5] ^= 0xFF;
        auto proof = generate_incorrect_coding_proof(chunks, 8);
        REQUIRE(proof.has_value());
        REQUIRE(proof->witnesses.size() == 9);
        REQUIRE(verify_incorrect_coding(*proof));
        REQUIRE(proof->root == da_root(chunks));

        IncorrectCodingProof bad = *proof;
        bad.root.bytes[0] ^= 1;
        REQUIRE_FALSE(verify_incorrect_coding(bad));  // wrong commitment
        bad = *proof;
        bad.witnesses[3].chunk[0] ^= 1;
        REQUIRE_FALSE(verify_incorrect_coding(bad));  // chunk no longer committed
        bad = *proof;
        bad.witnesses[8] = bad.witnesses[0];
        REQUIRE_FALSE(verify_incorrect_coding(bad));  // duplicate index
        bad = *proof;
        bad.witnesses.pop_back();
        REQUIRE_FALSE(verify_incorrect_coding(bad));  // too few witnesses
    }
    SECTION("a corrupted data chunk is exposed") {
        auto chunks = enc.chunks;
        chunks[2][0] ^= 0x5A;
        auto proof = generate_incorrect_coding_proof(chunks, 8);
        REQUIRE(proof.has_value());
        REQUIRE(verify_incorrect_coding(*proof));
    }
    SECTION("hand-built proof over consistent chunks fails closed") {
        IncorrectCodingProof p;
        p.root = enc.root;
        p.n = 16;
        p.k = 8;
        for (std::uint32_t i = 0; i < 9; ++i)
            p.witnesses.push_back(DaChunkWitness{i, enc.chunks[i], merkle_prove(enc.chunks, i)});
        REQUIRE_FALSE(verify_incorrect_coding(p));
    }
}
