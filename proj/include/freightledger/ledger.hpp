#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "freightledger/bytes.hpp"
#include "freightledger/crypto.hpp"

// Append-only hash-chained ledgers for the trade-logistics and trade-finance
// networks. Records are immutable once appended; the only mutation path is
// append(). record_hash = SHA256(seq_be64 || kind_byte || payload || prev_hash).

namespace freightledger {

enum class PayloadKind : std::uint8_t {
    ServiceContract = 0,
    MilestoneEvent = 1,
    PartialInvoice = 2,
    Policy = 3,
    Installment = 4,
    Settlement = 5,
    ImportedInvoice = 6,
    Reward = 7,
};

inline const char* to_string(PayloadKind k) {
    switch (k) {
        case PayloadKind::ServiceContract: return "ServiceContract";
        case PayloadKind::MilestoneEvent: return "MilestoneEvent";
        case PayloadKind::PartialInvoice: return "PartialInvoice";
        case PayloadKind::Policy: return "Policy";
        case PayloadKind::Installment: return "Installment";
        case PayloadKind::Settlement: return "Settlement";
        case PayloadKind::ImportedInvoice: return "ImportedInvoice";
        case PayloadKind::Reward: return "Reward";
    }
    throw std::invalid_argument("unknown payload kind");
}

inline PayloadKind payload_kind_from(std::uint8_t raw) {
    if (raw > static_cast<std::uint8_t>(PayloadKind::Reward)) {
        throw std::invalid_argument("payload kind byte out of range");
    }
    return static_cast<PayloadKind>(raw);
}

struct LedgerRecord {
    std::uint64_t sequence_no = 0;
    PayloadKind payload_kind = PayloadKind::ServiceContract;
    Bytes payload_bytes;
    Digest prev_hash = kZeroDigest;
    Digest record_hash = kZeroDigest;
};

inline Digest record_digest(std::uint64_t sequence_no, PayloadKind kind, BytesView payload,
                            const Digest& prev_hash) {
    Bytes preimage;
    preimage.reserve(8 + 1 + payload.size() + prev_hash.size());
    append_u64_be(preimage, sequence_no);
    preimage.push_back(static_cast<std::uint8_t>(kind));
    preimage.insert(preimage.end(), payload.begin(), payload.end());
    preimage.insert(preimage.end(), prev_hash.begin(), prev_hash.end());
    return sha256(preimage);
}

struct NetworkMember {
    std::string member_id;
    Bytes key;  // HMAC key; signing and verification use the same bytes
};

struct NetworkIdentity {
    std::string network_id;
    std::vector<NetworkMember> members;
    std::size_t quorum_threshold = 0;
};

// Requires a strict majority quorum when members are present. Memberless
// identities are allowed for read-only ledgers loaded from snapshots.
inline void validate_identity(const NetworkIdentity& net) {
    if (net.network_id.empty()) throw std::invalid_argument("network_id must be nonempty");
    if (net.members.empty()) return;
    std::size_t majority = (net.members.size() + 2) / 2;  // ceil((n+1)/2)
    if (net.quorum_threshold < majority || net.quorum_threshold > net.members.size()) {
        throw std::invalid_argument("quorum_threshold must be a strict majority of members");
    }
}

class Ledger {
public:
    explicit Ledger(NetworkIdentity identity) : identity_(std::move(identity)) {
        validate_identity(identity_);
    }

    const NetworkIdentity& identity() const { return identity_; }

    const LedgerRecord& append(PayloadKind kind, Bytes payload) {
        if (payload.empty()) {
            throw std::invalid_argument("refusing to append empty payload (serialization failed?)");
        }
        LedgerRecord rec;
        rec.sequence_no = records_.size();
        rec.payload_kind = kind;
        rec.payload_bytes = std::move(payload);
        rec.prev_hash = state_hash();
        rec.record_hash = record_digest(rec.sequence_no, rec.payload_kind,
                                        BytesView(rec.payload_bytes.data(), rec.payload_bytes.size()),
                                        rec.prev_hash);
        records_.push_back(std::move(rec));
        return records_.back();
    }

    // Head record hash, or the all-zero digest for an empty ledger.
    Digest state_hash() const {
        return records_.empty() ? kZeroDigest : records_.back().record_hash;
    }

    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    const std::vector<LedgerRecord>& records() const { return records_; }

    const LedgerRecord& at(std::uint64_t sequence_no) const {
        if (sequence_no >= records_.size()) throw std::out_of_range("no such sequence_no");
        return records_[sequence_no];
    }

    std::vector<LedgerRecord> query(PayloadKind kind,
                                    const std::function<bool(const LedgerRecord&)>& predicate = {}) const {
        std::vector<LedgerRecord> out;
        for (const auto& rec : records_) {
            if (rec.payload_kind != kind) continue;
            if (predicate && !predicate(rec)) continue;
            out.push_back(rec);
        }
        return out;
    }

    // Full rescan of the chain. Returns the first bad sequence_no, or nullopt
    // when every link and digest checks out.
    std::optional<std::uint64_t> first_broken_link() const {
        Digest prev = kZeroDigest;
        for (const auto& rec : records_) {
            if (rec.prev_hash != prev) return rec.sequence_no;
            Digest expect = record_digest(rec.sequence_no, rec.payload_kind,
                                          BytesView(rec.payload_bytes.data(), rec.payload_bytes.size()),
                                          rec.prev_hash);
            if (expect != rec.record_hash) return rec.sequence_no;
            prev = rec.record_hash;
        }
        return std::nullopt;
    }

    bool verify_chain() const { return !first_broken_link().has_value(); }

    // ---- Snapshot persistence ------------------------------------------------
    // Header: "FLGR" | u32 version=1 | u32 network_id length | network_id bytes.
    // Then one length-prefixed record per sequence number:
    //   u32 record length | seq u64 | kind u8 | u32 payload length | payload
    //   | prev_hash (32) | record_hash (32)
    // All integers big-endian. Round-trips bit-exactly.

    void save_snapshot(std::ostream& os) const {
        Bytes out;
        out.insert(out.end(), {'F', 'L', 'G', 'R'});
        append_u32_be(out, 1);
        append_u32_be(out, static_cast<std::uint32_t>(identity_.network_id.size()));
        out.insert(out.end(), identity_.network_id.begin(), identity_.network_id.end());
        for (const auto& rec : records_) {
            Bytes body;
            append_u64_be(body, rec.sequence_no);
            body.push_back(static_cast<std::uint8_t>(rec.payload_kind));
            append_u32_be(body, static_cast<std::uint32_t>(rec.payload_bytes.size()));
            body.insert(body.end(), rec.payload_bytes.begin(), rec.payload_bytes.end());
            body.insert(body.end(), rec.prev_hash.begin(), rec.prev_hash.end());
            body.insert(body.end(), rec.record_hash.begin(), rec.record_hash.end());
            append_u32_be(out, static_cast<std::uint32_t>(body.size()));
            out.insert(out.end(), body.begin(), body.end());
        }
        os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
        if (!os) throw std::runtime_error("snapshot write failed");
    }

    void save_snapshot(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open snapshot for writing: " + path);
        save_snapshot(f);
    }

    static Ledger load_snapshot(std::istream& is) {
        Bytes raw((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
        BytesView in(raw.data(), raw.size());
        if (in.size() < 12 || in[0] != 'F' || in[1] != 'L' || in[2] != 'G' || in[3] != 'R') {
            throw std::runtime_error("bad snapshot magic (expected FLGR)");
        }
        std::uint32_t version = read_u32_be(in, 4);
        if (version != 1) throw std::runtime_error("unsupported snapshot version " + std::to_string(version));
        std::uint32_t id_len = read_u32_be(in, 8);
        std::size_t pos = 12;
        if (pos + id_len > in.size()) throw std::runtime_error("truncated snapshot header");
        NetworkIdentity net;
        net.network_id = std::string(raw.begin() + static_cast<std::ptrdiff_t>(pos),
                                     raw.begin() + static_cast<std::ptrdiff_t>(pos + id_len));
        pos += id_len;
        Ledger ledger(std::move(net));
        while (pos < in.size()) {
            std::uint32_t rec_len = read_u32_be(in, pos);
            pos += 4;
            if (pos + rec_len > in.size()) throw std::runtime_error("truncated snapshot record");
            std::size_t end = pos + rec_len;
            LedgerRecord rec;
            rec.sequence_no = read_u64_be(in, pos);
            pos += 8;
            rec.payload_kind = payload_kind_from(in[pos]);
            pos += 1;
            std::uint32_t payload_len = read_u32_be(in, pos);
            pos += 4;
            if (pos + payload_len + 64 != end) throw std::runtime_error("snapshot record length mismatch");
            rec.payload_bytes.assign(raw.begin() + static_cast<std::ptrdiff_t>(pos),
                                     raw.begin() + static_cast<std::ptrdiff_t>(pos + payload_len));
            pos += payload_len;
            std::copy_n(raw.begin() + static_cast<std::ptrdiff_t>(pos), 32, rec.prev_hash.begin());
            pos += 32;
            std::copy_n(raw.begin() + static_cast<std::ptrdiff_t>(pos), 32, rec.record_hash.begin());
            pos += 32;
            ledger.records_.push_back(std::move(rec));
        }
        return ledger;
    }

    static Ledger load_snapshot(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open snapshot: " + path);
        return load_snapshot(f);
    }

private:
    NetworkIdentity identity_;
    std::vector<LedgerRecord> records_;
};

}  // namespace freightledger
