#pragma once

// Transactions and predicates.
//
// Canonical encoding (version byte 0x01) covers kind payload, inputs with
// their spent-output claims, and outputs; txid = hash_leaf(canonical bytes).
// A stateless-mode witness bundle can ride along on the wire but is framing,
// not content: it is stripped before inclusion and never part of the txid.
//
// The signing hash covers outpoints, kind payload and outputs only — not
// claims and not witnesses — so block producers can attach or correct claim
// metadata without touching anyone's authorization.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rollsim/bytes.hpp"
#include "rollsim/digest.hpp"
#include "rollsim/smt.hpp"

namespace rollsim {

inline constexpr std::uint8_t kTxVersion = 0x01;
inline constexpr std::uint8_t kSignDomain = 0x08;  // sign-hash domain tag

struct Outpoint {
    Digest txid;
    std::uint32_t index = 0;
    auto operator<=>(const Outpoint&) const = default;
};

struct Predicate {
    enum class Kind : std::uint8_t { PayToKey = 0, HashLock = 1, TimeLock = 2, Burn = 3 };

    Kind kind = Kind::PayToKey;
    std::string owner_id;                     // PayToKey
    Digest hash_image;                        // HashLock
    std::uint64_t unlock_height = 0;          // TimeLock
    std::shared_ptr<const Predicate> inner;   // TimeLock
    std::string parent_recipient;             // Burn

    static Predicate pay_to_key(std::string owner) {
        Predicate p;
        p.kind = Kind::PayToKey;
        p.owner_id = std::move(owner);
        return p;
    }
    static Predicate hash_lock(const Digest& image) {
        Predicate p;
        p.kind = Kind::HashLock;
        p.hash_image = image;
        return p;
    }
    static Predicate time_lock(std::uint64_t unlock_height, Predicate inner) {
        Predicate p;
        p.kind = Kind::TimeLock;
        p.unlock_height = unlock_height;
        p.inner = std::make_shared<Predicate>(std::move(inner));
        return p;
    }
    static Predicate burn(std::string parent_recipient) {
        Predicate p;
        p.kind = Kind::Burn;
        p.parent_recipient = std::move(parent_recipient);
        return p;
    }

    bool operator==(const Predicate& o) const {
        if (kind != o.kind) return false;
        switch (kind) {
            case Kind::PayToKey: return owner_id == o.owner_id;
            case Kind::HashLock: return hash_image == o.hash_image;
            case Kind::TimeLock:
                return unlock_height == o.unlock_height && inner && o.inner && *inner == *o.inner;
            case Kind::Burn: return parent_recipient == o.parent_recipient;
        }
        return false;
    }
};

struct Output {
    std::uint64_t value = 0;
    Predicate predicate;
    bool operator==(const Output&) const = default;
};

struct Input {
    Outpoint outpoint;
    Bytes witness;
    Output claim;  // producer-attested copy of the output being spent
    bool operator==(const Input&) const = default;
};

// Stateless-mode transport: one witness per input against a recent root.
struct StatelessWitness {
    std::uint64_t created_height = 0;
    SmtProof proof;
    bool operator==(const StatelessWitness&) const = default;
};

struct WitnessBundle {
    std::uint64_t reference_root_height = 0;
    std::vector<StatelessWitness> witnesses;
    bool operator==(const WitnessBundle&) const = default;
};

struct Transaction {
    enum class Kind : std::uint8_t { Transfer = 0, DepositClaim = 1, Burn = 2 };

    Kind kind = Kind::Transfer;
    std::uint64_t deposit_id = 0;      // DepositClaim
    std::uint64_t amount = 0;          // DepositClaim / Burn
    std::string recipient;             // DepositClaim
    std::string parent_recipient;      // Burn
    std::vector<Input> inputs;
    std::vector<Output> outputs;
    std::optional<WitnessBundle> bundle;  // wire framing only

    bool operator==(const Transaction&) const = default;
};

// ---- encoding ----

namespace detail {

inline constexpr unsigned kMaxPredicateDepth = 16;

inline void encode_predicate(ByteWriter& w, const Predicate& p, unsigned depth = 0) {
    if (depth >= kMaxPredicateDepth) throw std::length_error("predicate nesting too deep");
    w.u8(static_cast<std::uint8_t>(p.kind));
    switch (p.kind) {
        case Predicate::Kind::PayToKey: w.str(p.owner_id); break;
        case Predicate::Kind::HashLock: w.digest(p.hash_image); break;
        case Predicate::Kind::TimeLock:
            w.u64(p.unlock_height);
            encode_predicate(w, *p.inner, depth + 1);
            break;
        case Predicate::Kind::Burn: w.str(p.parent_recipient); break;
    }
}

inline Predicate decode_predicate(ByteReader& r, unsigned depth = 0) {
    if (depth >= kMaxPredicateDepth) throw DecodeError("predicate nesting too deep");
    Predicate p;
    switch (r.u8()) {
        case 0:
            p.kind = Predicate::Kind::PayToKey;
            p.owner_id = r.str();
            break;
        case 1:
            p.kind = Predicate::Kind::HashLock;
            p.hash_image = r.digest();
            break;
        case 2:
            p.kind = Predicate::Kind::TimeLock;
            p.unlock_height = r.u64();
            p.inner = std::make_shared<Predicate>(decode_predicate(r, depth + 1));
            break;
        case 3:
            p.kind = Predicate::Kind::Burn;
            p.parent_recipient = r.str();
            break;
        default: throw DecodeError("predicate kind");
    }
    return p;
}

inline void encode_output(ByteWriter& w, const Output& o) {
    w.u64(o.value);
    encode_predicate(w, o.predicate);
}

inline Output decode_output(ByteReader& r) {
    Output o;
    o.value = r.u64();
    o.predicate = decode_predicate(r);
    return o;
}

inline void encode_outpoint(ByteWriter& w, const Outpoint& o) {
    w.digest(o.txid);
    w.u32(o.index);
}

inline Outpoint decode_outpoint(ByteReader& r) {
    Outpoint o;
    o.txid = r.digest();
    o.index = r.u32();
    return o;
}

inline void encode_kind_payload(ByteWriter& w, const Transaction& tx) {
    switch (tx.kind) {
        case Transaction::Kind::Transfer: break;
        case Transaction::Kind::DepositClaim:
            w.u64(tx.deposit_id);
            w.u64(tx.amount);
            w.str(tx.recipient);
            break;
        case Transaction::Kind::Burn:
            w.u64(tx.amount);
            w.str(tx.parent_recipient);
            break;
    }
}

}  // namespace detail

inline Bytes encode_output(const Output& o) {
    ByteWriter w;
    detail::encode_output(w, o);
    return std::move(w).take();
}

inline Output decode_output(std::span<const std::uint8_t> data) {
    ByteReader r(data);
    Output o = detail::decode_output(r);
    r.expect_end();
    return o;
}

inline Bytes encode_outpoint(const Outpoint& o) {
    ByteWriter w;
    detail::encode_outpoint(w, o);
    return std::move(w).take();
}

// Canonical bytes: everything except the witness bundle.
inline Bytes encode_tx_canonical(const Transaction& tx) {
    ByteWriter w;
    w.u8(kTxVersion);
    w.u8(static_cast<std::uint8_t>(tx.kind));
    detail::encode_kind_payload(w, tx);
    w.u32(static_cast<std::uint32_t>(tx.inputs.size()));
    for (const auto& in : tx.inputs) {
        detail::encode_outpoint(w, in.outpoint);
        w.var_bytes(in.witness);
        detail::encode_output(w, in.claim);
    }
    w.u32(static_cast<std::uint32_t>(tx.outputs.size()));
    for (const auto& out : tx.outputs) detail::encode_output(w, out);
    return std::move(w).take();
}

// Wire bytes: canonical plus the optional stateless witness bundle.
inline Bytes encode_tx(const Transaction& tx) {
    ByteWriter w;
    w.raw(encode_tx_canonical(tx));
    w.u8(tx.bundle ? 1 : 0);
    if (tx.bundle) {
        w.u64(tx.bundle->reference_root_height);
        w.u32(static_cast<std::uint32_t>(tx.bundle->witnesses.size()));
        for (const auto& sw : tx.bundle->witnesses) {
            w.u64(sw.created_height);
            w.var_bytes(encode_smt_proof(sw.proof));
        }
    }
    return std::move(w).take();
}

inline Transaction decode_tx(std::span<const std::uint8_t> data) {
    ByteReader r(data);
    if (r.u8() != kTxVersion) throw DecodeError("tx version");
    Transaction tx;
    switch (r.u8()) {
        case 0: tx.kind = Transaction::Kind::Transfer; break;
        case 1:
            tx.kind = Transaction::Kind::DepositClaim;
            tx.deposit_id = r.u64();
            tx.amount = r.u64();
            tx.recipient = r.str();
            break;
        case 2:
            tx.kind = Transaction::Kind::Burn;
            tx.amount = r.u64();
            tx.parent_recipient = r.str();
            break;
        default: throw DecodeError("tx kind");
    }
    std::uint32_t nin = r.u32();
    for (std::uint32_t i = 0; i < nin; ++i) {
        Input in;
        in.outpoint = detail::decode_outpoint(r);
        in.witness = r.var_bytes();
        in.claim = detail::decode_output(r);
        tx.inputs.push_back(std::move(in));
    }
    std::uint32_t nout = r.u32();
    for (std::uint32_t i = 0; i < nout; ++i) tx.outputs.push_back(detail::decode_output(r));
    switch (r.u8()) {
        case 0: break;
        case 1: {
            WitnessBundle b;
            b.reference_root_height = r.u64();
            std::uint32_t n = r.u32();
            for (std::uint32_t i = 0; i < n; ++i) {
                StatelessWitness sw;
                sw.created_height = r.u64();
                sw.proof = decode_smt_proof(r.var_bytes());
                b.witnesses.push_back(std::move(sw));
            }
            tx.bundle = std::move(b);
            break;
        }
        default: throw DecodeError("bundle flag");
    }
    r.expect_end();
    return tx;
}

// Canonical-only decode, used for txs embedded in blocks (no bundle byte).
inline Transaction decode_tx_canonical(std::span<const std::uint8_t> data) {
    Bytes wire(data.begin(), data.end());
    wire.push_back(0);  // "no bundle"
    return decode_tx(wire);
}

inline Digest tx_id(const Transaction& tx) { return hash_leaf(encode_tx_canonical(tx)); }

// ---- signing ----

inline Digest tx_sign_hash(const Transaction& tx) {
    ByteWriter w;
    w.u8(kTxVersion);
    w.u8(static_cast<std::uint8_t>(tx.kind));
    detail::encode_kind_payload(w, tx);
    w.u32(static_cast<std::uint32_t>(tx.inputs.size()));
    for (const auto& in : tx.inputs) detail::encode_outpoint(w, in.outpoint);
    w.u32(static_cast<std::uint32_t>(tx.outputs.size()));
    for (const auto& out : tx.outputs) detail::encode_output(w, out);
    return tagged_hash(kSignDomain, std::move(w).take());
}

// Simulation-grade authorization: a keyed MAC standing in for a signature.
// The "secret" is derived from the owner id alone, which is fine for a
// closed deterministic simulation — what the system under test enforces is
// that the witness commits to the signing hash.
inline Digest owner_secret(const std::string& owner_id) {
    return tagged_hash(tag::kKeyGen,
                       std::span<const std::uint8_t>(
                           reinterpret_cast<const std::uint8_t*>(owner_id.data()),
                           owner_id.size()));
}

inline Bytes make_pay_witness(const std::string& owner_id, const Digest& sign_hash) {
    Digest mac = tagged_hash(tag::kMac, owner_secret(owner_id).bytes, sign_hash.bytes);
    return Bytes(mac.bytes.begin(), mac.bytes.end());
}

inline bool check_predicate(const Predicate& p, const Bytes& witness, const Digest& sign_hash,
                            std::uint64_t block_height) {
    switch (p.kind) {
        case Predicate::Kind::PayToKey: {
            if (witness.size() != 32) return false;
            Digest expect = tagged_hash(tag::kMac, owner_secret(p.owner_id).bytes, sign_hash.bytes);
            return std::equal(witness.begin(), witness.end(), expect.bytes.begin());
        }
        case Predicate::Kind::HashLock:
            return sha256(witness) == p.hash_image;
        case Predicate::Kind::TimeLock:
            return block_height >= p.unlock_height && p.inner &&
                   check_predicate(*p.inner, witness, sign_hash, block_height);
        case Predicate::Kind::Burn:
            return false;  // burned outputs are unspendable on the side chain
    }
    return false;
}

// ---- state tree keys and values ----

inline Digest utxo_key(const Outpoint& o) {
    return tagged_hash(tag::kUtxoKey, encode_outpoint(o));
}

inline Digest utxo_value_hash(const Output& output, std::uint64_t created_height) {
    ByteWriter w;
    detail::encode_output(w, output);
    w.u64(created_height);
    return sha256(std::move(w).take());
}

inline Digest deposit_key(std::uint64_t deposit_id) {
    ByteWriter w;
    w.u64(deposit_id);
    return tagged_hash(tag::kDepositKey, std::move(w).take());
}

inline Digest deposit_claimed_marker() {
    static const Digest marker = sha256(std::string_view("deposit-claimed"));
    return marker;
}

}  // namespace rollsim
