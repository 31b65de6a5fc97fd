#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

#include "freightledger/ledger.hpp"

using namespace freightledger;

namespace {

NetworkIdentity test_network(const std::string& id = "stl") {
    NetworkIdentity net;
    net.network_id = id;
    net.members = {{"m1", to_bytes("key-one")}, {"m2", to_bytes("key-two")}, {"m3", to_bytes("key-three")}};
    net.quorum_threshold = 2;
    return net;
}

}  // namespace

TEST_CASE("genesis append has sequence 0 and zero prev hash") {
    Ledger ledger(test_network());
    REQUIRE(ledger.state_hash() == kZeroDigest);
    const auto& rec = ledger.append(PayloadKind::ServiceContract, to_bytes("contract-1"));
    CHECK(rec.sequence_no == 0);
    CHECK(rec.prev_hash == kZeroDigest);
    CHECK(ledger.state_hash() == rec.record_hash);
}

TEST_CASE("identical payloads hash differently at different sequence numbers") {
    Ledger ledger(test_network());
    const auto r0 = ledger.append(PayloadKind::MilestoneEvent, to_bytes("same"));
    const auto r1 = ledger.append(PayloadKind::MilestoneEvent, to_bytes("same"));
    CHECK(r0.record_hash != r1.record_hash);
    CHECK(r1.prev_hash == r0.record_hash);
}

TEST_CASE("replaying a fixed 10-record script yields identical head digests") {
    auto run_script = [] {
        Ledger ledger(test_network());
        for (int i = 0; i < 10; ++i) {
            ledger.append(static_cast<PayloadKind>(i % 8), to_bytes("payload-" + std::to_string(i)));
        }
        return ledger.state_hash();
    };
    CHECK(run_script() == run_script());
}

TEST_CASE("empty payload append is rejected and leaves the ledger unchanged") {
    Ledger ledger(test_network());
    ledger.append(PayloadKind::Policy, to_bytes("p"));
    Digest before = ledger.state_hash();
    CHECK_THROWS_AS(ledger.append(PayloadKind::Policy, Bytes{}), std::invalid_argument);
    CHECK(ledger.state_hash() == before);
    CHECK(ledger.size() == 1);
}

TEST_CASE("query on empty ledger returns nothing") {
    Ledger ledger(test_network());
    CHECK(ledger.query(PayloadKind::Installment).empty());
}

TEST_CASE("query returns matching records in append order") {
    Ledger ledger(test_network());
    ledger.append(PayloadKind::MilestoneEvent, to_bytes("e0"));
    ledger.append(PayloadKind::PartialInvoice, to_bytes("i0"));
    ledger.append(PayloadKind::MilestoneEvent, to_bytes("e1"));
    ledger.append(PayloadKind::MilestoneEvent, to_bytes("e2"));
    auto events = ledger.query(PayloadKind::MilestoneEvent);
    REQUIRE(events.size() == 3);
    CHECK(to_string(BytesView(events[0].payload_bytes.data(), events[0].payload_bytes.size())) == "e0");
    CHECK(to_string(BytesView(events[2].payload_bytes.data(), events[2].payload_bytes.size())) == "e2");
    CHECK(events[0].sequence_no < events[1].sequence_no);
    CHECK(events[1].sequence_no < events[2].sequence_no);
}

TEST_CASE("query over 1000 mixed appends matches a linear-scan oracle") {
    Ledger ledger(test_network());
    std::mt19937_64 rng(20260809);
    std::vector<std::pair<PayloadKind, std::string>> script;
    for (int i = 0; i < 1000; ++i) {
        auto kind = static_cast<PayloadKind>(rng() % 8);
        std::string payload = "p" + std::to_string(rng() % 17);
        script.emplace_back(kind, payload);
        ledger.append(kind, to_bytes(payload));
    }
    auto wanted = [](const LedgerRecord& r) { return r.payload_bytes.back() == '3'; };
    auto got = ledger.query(PayloadKind::Settlement, wanted);

    // brute-force oracle over the original script
    std::vector<std::uint64_t> expect;
    for (std::size_t i = 0; i < script.size(); ++i) {
        if (script[i].first == PayloadKind::Settlement && script[i].second.back() == '3') {
            expect.push_back(i);
        }
    }
    REQUIRE(got.size() == expect.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].sequence_no == expect[i]);
}

TEST_CASE("chain integrity verifies and localizes tampering") {
    Ledger ledger(test_network());
    for (int i = 0; i < 20; ++i) {
        ledger.append(PayloadKind::MilestoneEvent, to_bytes("event " + std::to_string(i)));
    }
    REQUIRE(ledger.verify_chain());
    for (std::size_t i = 1; i < ledger.size(); ++i) {
        CHECK(ledger.records()[i].prev_hash == ledger.records()[i - 1].record_hash);
    }
}

TEST_CASE("identity requires a strict majority quorum") {
    NetworkIdentity net = test_network();
    net.quorum_threshold = 1;  // below ceil(4/2) = 2
    CHECK_THROWS_AS(Ledger(net), std::invalid_argument);
    net.quorum_threshold = 4;  // above member count
    CHECK_THROWS_AS(Ledger(net), std::invalid_argument);
    net.quorum_threshold = 3;
    CHECK_NOTHROW(Ledger(net));
}

TEST_CASE("snapshot round-trips bit-exactly") {
    Ledger ledger(test_network("stl-snapshot"));
    std::mt19937_64 rng(7);
    for (int i = 0; i < 25; ++i) {
        Bytes payload;
        auto len = 1 + rng() % 64;
        for (std::size_t b = 0; b < len; ++b) payload.push_back(static_cast<std::uint8_t>(rng()));
        ledger.append(static_cast<PayloadKind>(rng() % 8), payload);
    }

    std::ostringstream first;
    ledger.save_snapshot(first);
    std::istringstream in(first.str());
    Ledger loaded = Ledger::load_snapshot(in);

    CHECK(loaded.identity().network_id == "stl-snapshot");
    CHECK(loaded.size() == ledger.size());
    CHECK(loaded.state_hash() == ledger.state_hash());
    CHECK(loaded.verify_chain());

    std::ostringstream second;
    loaded.save_snapshot(second);
    CHECK(first.str() == second.str());
}

TEST_CASE("snapshot tampering is detected with the offending sequence number") {
    Ledger ledger(test_network());
    for (int i = 0; i < 10; ++i) {
        ledger.append(PayloadKind::MilestoneEvent, to_bytes("payload-" + std::to_string(i)));
    }
    std::ostringstream os;
    ledger.save_snapshot(os);
    std::string raw = os.str();

    // flip one payload byte in the middle of the file
    std::size_t victim = raw.find("payload-5");
    REQUIRE(victim != std::string::npos);
    raw[victim] ^= 0x01;

    std::istringstream in(raw);
    Ledger tampered = Ledger::load_snapshot(in);
    auto broken = tampered.first_broken_link();
    REQUIRE(broken.has_value());
    CHECK(*broken == 5);
}

TEST_CASE("read operations leave state untouched") {
    Ledger ledger(test_network());
    ledger.append(PayloadKind::Reward, to_bytes("r"));
    const Ledger& view = ledger;
    Digest before = view.state_hash();
    (void)view.query(PayloadKind::Reward);
    (void)view.records();
    (void)view.verify_chain();
    CHECK(view.state_hash() == before);
    CHECK(view.size() == 1);
}
