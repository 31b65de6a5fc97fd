#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>
#include <tuple>

#include "freightledger/logistics.hpp"

using namespace freightledger;
using namespace freightledger::logistics;

namespace {

ShippingLane one_hop_lane() {
    ShippingLane lane;
    lane.lane_id = "SGSIN-NLRTM-USNYC";
    lane.ports = {{"SGSIN", PortRole::Origin},
                  {"NLRTM", PortRole::Transshipment},
                  {"USNYC", PortRole::Destination}};
    lane.dwell_limit_days = {{"SGSIN", 1}, {"NLRTM", 1}};
    validate_lane(lane);
    return lane;
}

ServiceContract paper_example_contract() {
    ServiceContract sc;
    sc.contract_id = "SC-1";
    sc.shipper_id = "shipper-a";
    sc.carrier_id = "carrier-x";
    sc.lane_id = "SGSIN-NLRTM-USNYC";
    ChargeDefinition base{"BASE_FREIGHT", PlanKind::Planned, CompKind::Fixed,
                          {{"flat_amount", 900000}}, std::nullopt};
    ChargeDefinition dwell{"DWELL_EXCESS_FEE", PlanKind::Unplanned, CompKind::Variable,
                           {{"base_per_day", 10000}, {"increment_per_day", 10000}},
                           ChargeTrigger{std::nullopt, "NLRTM"}};
    sc.charges = {base, dwell};
    validate_contract(sc);
    return sc;
}

MilestoneEvent make_event(const std::string& shipment, Milestone m, EventStatus st,
                          const std::string& source, Hours occurs, Hours emitted) {
    MilestoneEvent e;
    e.shipment_id = shipment;
    e.milestone = std::move(m);
    e.status = st;
    e.source = source;
    e.occurrence_time = occurs;
    e.emitted_at = emitted;
    return e;
}

}  // namespace

TEST_CASE("re-emitted estimate supersedes the earlier one") {
    Timeline tl;
    tl.record(make_event("S1", arrival("NLRTM"), EventStatus::Estimated, "drayage", 100, 10));
    tl.record(make_event("S1", arrival("NLRTM"), EventStatus::Estimated, "drayage", 104, 12));
    auto eff = tl.effective_event("S1", arrival("NLRTM"), EventStatus::Estimated);
    REQUIRE(eff.has_value());
    CHECK(eff->occurrence_time == 104);
}

TEST_CASE("single recorded event is effective") {
    Timeline tl;
    tl.record(make_event("S1", departure("SGSIN"), EventStatus::Actual, "carrier", 50, 50));
    auto eff = tl.effective_preferring_actual("S1", departure("SGSIN"));
    REQUIRE(eff.has_value());
    CHECK(eff->occurrence_time == 50);
    CHECK(eff->status == EventStatus::Actual);
}

TEST_CASE("duplicate Actual event for the same milestone conflicts") {
    Timeline tl;
    tl.record(make_event("S1", arrival("NLRTM"), EventStatus::Actual, "carrier", 200, 200));
    CHECK_THROWS_AS(
        tl.record(make_event("S1", arrival("NLRTM"), EventStatus::Actual, "port-authority", 201, 201)),
        EventConflict);
    // same milestone on another shipment is fine
    CHECK_NOTHROW(tl.record(make_event("S2", arrival("NLRTM"), EventStatus::Actual, "carrier", 205, 205)));
}

TEST_CASE("randomized emissions match the per-key max-emission_seq oracle") {
    std::mt19937_64 rng(42);
    Timeline tl;
    struct Emission {
        MilestoneEvent event;
        std::uint64_t seq;
    };
    std::vector<Emission> log;
    std::vector<std::string> shipments = {"S1", "S2", "S3"};
    std::vector<std::string> sources = {"carrier", "drayage", "port-authority"};
    std::vector<Milestone> milestones = {loaded_on_vessel(), departure("SGSIN"), arrival("NLRTM"),
                                         departure("NLRTM"), arrival("USNYC")};
    for (int i = 0; i < 50; ++i) {
        auto st = static_cast<EventStatus>(rng() % 2);  // Planned / Estimated only, no conflicts
        auto e = make_event(shipments[rng() % shipments.size()], milestones[rng() % milestones.size()],
                            st, sources[rng() % sources.size()], static_cast<Hours>(rng() % 500),
                            static_cast<Hours>(i));
        const auto& rec = tl.record(e);
        log.push_back({rec, rec.emission_seq});
    }

    // oracle: group every emission by key, keep max seq
    std::map<std::tuple<std::string, Milestone, EventStatus, std::string>, Emission> oracle;
    for (const auto& em : log) {
        auto key = std::make_tuple(em.event.shipment_id, em.event.milestone, em.event.status,
                                   em.event.source);
        auto it = oracle.find(key);
        if (it == oracle.end() || em.seq > it->second.seq) oracle[key] = em;
    }

    auto effective = tl.effective_events();
    REQUIRE(effective.size() == oracle.size());
    for (const auto& e : effective) {
        auto key = std::make_tuple(e.shipment_id, e.milestone, e.status, e.source);
        REQUIRE(oracle.count(key) == 1);
        CHECK(e.emission_seq == oracle.at(key).seq);
        CHECK(e.occurrence_time == oracle.at(key).event.occurrence_time);
    }
}

TEST_CASE("dwell time subtracts arrival from departure") {
    Timeline tl;
    tl.record(make_event("S1", arrival("NLRTM"), EventStatus::Actual, "carrier", 240, 240));
    tl.record(make_event("S1", departure("NLRTM"), EventStatus::Actual, "carrier", 312, 312));
    auto dwell = tl.dwell_time("S1", "NLRTM");
    REQUIRE(dwell.has_value());
    CHECK(dwell->hours == 72);
    CHECK(dwell->arrival_status == EventStatus::Actual);
    CHECK_FALSE(dwell->mixed_status());
}

TEST_CASE("dwell time is absent when an endpoint is missing") {
    Timeline tl;
    tl.record(make_event("S1", arrival("NLRTM"), EventStatus::Actual, "carrier", 240, 240));
    CHECK_FALSE(tl.dwell_time("S1", "NLRTM").has_value());
    CHECK_FALSE(tl.actual_dwell_hours("S1", "NLRTM").has_value());
}

TEST_CASE("departure before arrival is a data error") {
    Timeline tl;
    tl.record(make_event("S1", arrival("NLRTM"), EventStatus::Actual, "carrier", 100, 100));
    tl.record(make_event("S1", departure("NLRTM"), EventStatus::Actual, "carrier", 90, 101));
    CHECK_THROWS_AS(tl.dwell_time("S1", "NLRTM"), DataError);
}

TEST_CASE("dwell prefers matching-status endpoints before mixing") {
    Timeline tl;
    tl.record(make_event("S1", arrival("NLRTM"), EventStatus::Estimated, "drayage", 240, 10));
    tl.record(make_event("S1", departure("NLRTM"), EventStatus::Estimated, "drayage", 300, 11));
    tl.record(make_event("S1", arrival("NLRTM"), EventStatus::Actual, "carrier", 250, 250));
    auto dwell = tl.dwell_time("S1", "NLRTM");
    REQUIRE(dwell.has_value());
    // both estimated endpoints exist, so the pure-Estimated pair wins over a mix
    CHECK(dwell->hours == 60);
    CHECK(dwell->arrival_status == EventStatus::Estimated);

    // once the actual departure lands, the Actual pair takes over
    tl.record(make_event("S1", departure("NLRTM"), EventStatus::Actual, "carrier", 322, 322));
    dwell = tl.dwell_time("S1", "NLRTM");
    REQUIRE(dwell.has_value());
    CHECK(dwell->hours == 72);
    CHECK(dwell->arrival_status == EventStatus::Actual);
}

// ---- dwell excess fee -----------------------------------------------------

TEST_CASE("dwell fee: paper worked value") {
    CHECK(dwell_excess_fee(3, 1, 10000, 10000) == 30000);  // $100 day 2 + $200 day 3
}

TEST_CASE("dwell fee: at or below limit is free") {
    CHECK(dwell_excess_fee(1, 1, 10000, 10000) == 0);
    CHECK(dwell_excess_fee(0, 1, 10000, 10000) == 0);
    CHECK(dwell_excess_fee(0, 0, 10000, 10000) == 0);
}

TEST_CASE("dwell fee: direct summation") {
    // dwell=4, limit=1: 100 + 200 + 300 = 600 dollars
    CHECK(dwell_excess_fee(4, 1, 10000, 10000) == 60000);
}

TEST_CASE("dwell fee closed form matches summation up to n = 1000") {
    const Cents base = 10000, inc = 10000;
    const std::int64_t limit = 3;
    Cents running = 0;
    std::int64_t prev_fee = 0;
    for (std::int64_t dwell = 0; dwell <= limit + 1000; ++dwell) {
        if (dwell > limit) running += base + inc * (dwell - limit - 1);
        Cents fee = dwell_excess_fee(dwell, limit, base, inc);
        REQUIRE(fee == running);
        REQUIRE(fee >= prev_fee);  // nondecreasing in dwell_days
        prev_fee = fee;
    }
}

// ---- invoice engine ---------------------------------------------------------

TEST_CASE("iteration 1 invoice carries only planned fixed charges") {
    auto lane = one_hop_lane();
    auto sc = paper_example_contract();
    Timeline tl;
    tl.record(make_event("S1", loaded_on_vessel(), EventStatus::Actual, "carrier", 96, 96));

    auto inv = compute_invoice(sc, lane, tl, "S1", {}, 1, loaded_on_vessel());
    REQUIRE(inv.lines.size() == 1);
    CHECK(inv.lines[0].charge_code == "BASE_FREIGHT");
    CHECK(inv.lines[0].amount == 900000);
    CHECK(inv.lines[0].basis == ChargeBasis::Actual);
    CHECK(inv.total_actual == 900000);
    CHECK(inv.total_predicted == 0);
    CHECK_FALSE(inv.final_invoice);
}

TEST_CASE("a dwell prediction adds a predicted line at the predicted fee") {
    auto lane = one_hop_lane();
    auto sc = paper_example_contract();
    Timeline tl;
    tl.record(make_event("S1", loaded_on_vessel(), EventStatus::Actual, "carrier", 96, 96));
    tl.record(make_event("S1", departure("SGSIN"), EventStatus::Actual, "carrier", 100, 100));

    ChargePrediction pred{"DWELL_EXCESS_FEE", 2, 700000, departure("SGSIN")};
    auto inv = compute_invoice(sc, lane, tl, "S1", {pred}, 2, departure("SGSIN"));
    REQUIRE(inv.lines.size() == 2);
    const auto* dwell = inv.find_line("DWELL_EXCESS_FEE");
    REQUIRE(dwell != nullptr);
    CHECK(dwell->amount == 10000);  // predicted 2d vs limit 1d -> $100
    CHECK(dwell->basis == ChargeBasis::Predicted);
    CHECK(dwell->confidence_ppm == 700000);
    CHECK(inv.total_actual == 900000);
    CHECK(inv.total_predicted == 10000);
}

TEST_CASE("final invoice resolves predictions into actuals") {
    auto lane = one_hop_lane();
    auto sc = paper_example_contract();
    Timeline tl;
    tl.record(make_event("S1", loaded_on_vessel(), EventStatus::Actual, "carrier", 96, 96));
    tl.record(make_event("S1", departure("SGSIN"), EventStatus::Actual, "carrier", 100, 100));
    tl.record(make_event("S1", arrival("NLRTM"), EventStatus::Actual, "carrier", 336, 336));
    tl.record(make_event("S1", departure("NLRTM"), EventStatus::Actual, "carrier", 336 + 60, 396));
    tl.record(make_event("S1", arrival("USNYC"), EventStatus::Actual, "carrier", 700, 700));
    tl.record(make_event("S1", delivery_complete(), EventStatus::Actual, "carrier", 720, 720));

    auto inv = compute_invoice(sc, lane, tl, "S1", {}, 6, delivery_complete());
    CHECK(inv.final_invoice);
    const auto* dwell = inv.find_line("DWELL_EXCESS_FEE");
    REQUIRE(dwell != nullptr);
    // 60h dwell -> ceil to 3 days, limit 1: 100 + 200 dollars
    CHECK(dwell->amount == 30000);
    CHECK(dwell->basis == ChargeBasis::Actual);
    CHECK(inv.total_actual == 930000);
    CHECK(inv.total_predicted == 0);

    Cents line_sum = 0;
    for (const auto& l : inv.lines) line_sum += l.amount;
    CHECK(inv.total_actual + inv.total_predicted == line_sum);
}

TEST_CASE("unknown charge_code in predictions is rejected") {
    auto lane = one_hop_lane();
    auto sc = paper_example_contract();
    Timeline tl;
    tl.record(make_event("S1", loaded_on_vessel(), EventStatus::Actual, "carrier", 96, 96));
    ChargePrediction bogus{"NO_SUCH_CHARGE", 1, 500000, loaded_on_vessel()};
    CHECK_THROWS_AS(compute_invoice(sc, lane, tl, "S1", {bogus}, 1, loaded_on_vessel()),
                    std::invalid_argument);
}

TEST_CASE("actual dwell line never demotes back to predicted") {
    auto lane = one_hop_lane();
    auto sc = paper_example_contract();
    Timeline tl;
    tl.record(make_event("S1", loaded_on_vessel(), EventStatus::Actual, "carrier", 96, 96));
    tl.record(make_event("S1", arrival("NLRTM"), EventStatus::Actual, "carrier", 336, 336));
    tl.record(make_event("S1", departure("NLRTM"), EventStatus::Actual, "carrier", 396, 396));

    ChargePrediction pred{"DWELL_EXCESS_FEE", 2, 700000, arrival("NLRTM")};
    auto at_k = compute_invoice(sc, lane, tl, "S1", {pred}, 4, departure("NLRTM"));
    const auto* line_k = at_k.find_line("DWELL_EXCESS_FEE");
    REQUIRE(line_k != nullptr);
    CHECK(line_k->basis == ChargeBasis::Actual);

    // later iterations keep the same actual amount even with a fresh prediction
    ChargePrediction newer{"DWELL_EXCESS_FEE", 4, 900000, arrival("USNYC")};
    auto at_k1 = compute_invoice(sc, lane, tl, "S1", {newer}, 5, arrival("USNYC"));
    const auto* line_k1 = at_k1.find_line("DWELL_EXCESS_FEE");
    REQUIRE(line_k1 != nullptr);
    CHECK(line_k1->basis == ChargeBasis::Actual);
    CHECK(line_k1->amount == line_k->amount);
}

TEST_CASE("invoice totals equal line sums per basis on randomized scenarios") {
    auto lane = one_hop_lane();
    auto sc = paper_example_contract();
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        Timeline tl;
        tl.record(make_event("S1", loaded_on_vessel(), EventStatus::Actual, "carrier", 96, 96));
        bool have_dwell = rng() % 2 == 0;
        if (have_dwell) {
            Hours arr = 200 + static_cast<Hours>(rng() % 100);
            Hours dep = arr + static_cast<Hours>(rng() % 120);
            tl.record(make_event("S1", arrival("NLRTM"), EventStatus::Actual, "carrier", arr, arr));
            tl.record(make_event("S1", departure("NLRTM"), EventStatus::Actual, "carrier", dep, dep));
        }
        std::vector<ChargePrediction> preds;
        if (rng() % 2 == 0) {
            preds.push_back({"DWELL_EXCESS_FEE", static_cast<std::int64_t>(1 + rng() % 4),
                             static_cast<Ppm>(rng() % kPpmOne), departure("SGSIN")});
        }
        auto inv = compute_invoice(sc, lane, tl, "S1", preds, 2, departure("SGSIN"));
        Cents actual = 0, predicted = 0;
        for (const auto& l : inv.lines) {
            (l.basis == ChargeBasis::Actual ? actual : predicted) += l.amount;
            REQUIRE(l.amount >= 0);
            if (l.basis == ChargeBasis::Actual) REQUIRE(l.confidence_ppm == kPpmOne);
        }
        REQUIRE(inv.total_actual == actual);
        REQUIRE(inv.total_predicted == predicted);
    }
}

TEST_CASE("milestone names round-trip through their string form") {
    for (const auto& m : {loaded_on_vessel(), departure("SGSIN"), arrival("NLRTM"),
                          container_discharge(), delivery_complete()}) {
        CHECK(milestone_from_string(to_string(m)) == m);
    }
    CHECK_THROWS_AS(milestone_from_string("TeleportComplete"), std::invalid_argument);
}

TEST_CASE("lane validation rejects malformed lanes") {
    ShippingLane lane = one_hop_lane();
    lane.ports[1].port_code = "nlrtm";
    CHECK_THROWS_AS(validate_lane(lane), std::invalid_argument);

    lane = one_hop_lane();
    lane.dwell_limit_days.erase("NLRTM");
    CHECK_THROWS_AS(validate_lane(lane), std::invalid_argument);

    lane = one_hop_lane();
    lane.ports.front().role = PortRole::Transshipment;
    CHECK_THROWS_AS(validate_lane(lane), std::invalid_argument);
}

TEST_CASE("invoice payload round-trips through canonical json") {
    auto lane = one_hop_lane();
    auto sc = paper_example_contract();
    Timeline tl;
    tl.record(make_event("S1", loaded_on_vessel(), EventStatus::Actual, "carrier", 96, 96));
    ChargePrediction pred{"DWELL_EXCESS_FEE", 3, 702700, departure("SGSIN")};
    auto inv = compute_invoice(sc, lane, tl, "S1", {pred}, 2, departure("SGSIN"));

    auto j = invoice_to_json(inv);
    auto back = invoice_from_json(json::parse(j.dump()));
    CHECK(invoice_to_json(back).dump() == j.dump());
    CHECK(back.total_predicted == inv.total_predicted);
    CHECK(back.lines.size() == inv.lines.size());
}
