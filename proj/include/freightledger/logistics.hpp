#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "freightledger/units.hpp"

// Trade-logistics domain: shipping lanes, milestone-event timelines with
// latest-event-wins semantics, dwell-time computation, and the iterative
// partial e-invoice engine that mixes actual and predicted charge amounts.

namespace freightledger::logistics {

using json = nlohmann::json;

// ---- Lanes and ports ---------------------------------------------------------

enum class PortRole { Origin, Transshipment, Destination };

struct Port {
    std::string port_code;  // UN/LOCODE-style, uppercase alphanumeric
    PortRole role = PortRole::Transshipment;
};

inline void validate_port_code(const std::string& code) {
    if (code.empty()) throw std::invalid_argument("port_code must be nonempty");
    for (char c : code) {
        if (!std::isupper(static_cast<unsigned char>(c)) && !std::isdigit(static_cast<unsigned char>(c))) {
            throw std::invalid_argument("port_code must be uppercase alphanumeric: " + code);
        }
    }
}

struct ShippingLane {
    std::string lane_id;
    std::vector<Port> ports;                          // first Origin, last Destination
    std::map<std::string, std::int64_t> dwell_limit_days;  // per non-terminal port

    const Port& origin() const { return ports.front(); }
    const Port& destination() const { return ports.back(); }

    std::vector<std::string> transshipment_ports() const {
        std::vector<std::string> out;
        for (const auto& p : ports) {
            if (p.role == PortRole::Transshipment) out.push_back(p.port_code);
        }
        return out;
    }

    bool has_port(const std::string& code) const {
        return std::any_of(ports.begin(), ports.end(),
                           [&](const Port& p) { return p.port_code == code; });
    }

    std::int64_t dwell_limit(const std::string& port_code) const {
        auto it = dwell_limit_days.find(port_code);
        if (it == dwell_limit_days.end()) {
            throw std::invalid_argument("no dwell limit configured for port " + port_code);
        }
        return it->second;
    }
};

inline void validate_lane(const ShippingLane& lane) {
    if (lane.lane_id.empty()) throw std::invalid_argument("lane_id must be nonempty");
    if (lane.ports.size() < 2) throw std::invalid_argument("lane needs at least two ports");
    for (const auto& p : lane.ports) validate_port_code(p.port_code);
    if (lane.ports.front().role != PortRole::Origin || lane.ports.back().role != PortRole::Destination) {
        throw std::invalid_argument("lane must start at Origin and end at Destination");
    }
    for (std::size_t i = 1; i + 1 < lane.ports.size(); ++i) {
        if (lane.ports[i].role != PortRole::Transshipment) {
            throw std::invalid_argument("interior lane ports must be Transshipment");
        }
    }
    for (std::size_t i = 0; i + 1 < lane.ports.size(); ++i) {
        if (!lane.dwell_limit_days.count(lane.ports[i].port_code)) {
            throw std::invalid_argument("dwell limit missing for port " + lane.ports[i].port_code);
        }
    }
}

// ---- Milestone events ----------------------------------------------------------

enum class MilestoneKind {
    ContainerLoadedOnVessel,
    VesselDeparture,
    VesselArrival,
    ContainerDischarge,
    DeliveryComplete,
};

// VesselDeparture and VesselArrival carry the port they happen at.
struct Milestone {
    MilestoneKind kind = MilestoneKind::ContainerLoadedOnVessel;
    std::string port;

    auto operator<=>(const Milestone&) const = default;
};

inline Milestone loaded_on_vessel() { return {MilestoneKind::ContainerLoadedOnVessel, ""}; }
inline Milestone departure(std::string port) { return {MilestoneKind::VesselDeparture, std::move(port)}; }
inline Milestone arrival(std::string port) { return {MilestoneKind::VesselArrival, std::move(port)}; }
inline Milestone container_discharge() { return {MilestoneKind::ContainerDischarge, ""}; }
inline Milestone delivery_complete() { return {MilestoneKind::DeliveryComplete, ""}; }

inline std::string to_string(const Milestone& m) {
    switch (m.kind) {
        case MilestoneKind::ContainerLoadedOnVessel: return "ContainerLoadedOnVessel";
        case MilestoneKind::VesselDeparture: return "VesselDeparture(" + m.port + ")";
        case MilestoneKind::VesselArrival: return "VesselArrival(" + m.port + ")";
        case MilestoneKind::ContainerDischarge: return "ContainerDischarge";
        case MilestoneKind::DeliveryComplete: return "DeliveryComplete";
    }
    throw std::invalid_argument("unknown milestone kind");
}

inline Milestone milestone_from_string(const std::string& s) {
    if (s == "ContainerLoadedOnVessel") return loaded_on_vessel();
    if (s == "ContainerDischarge") return container_discharge();
    if (s == "DeliveryComplete") return delivery_complete();
    auto open = s.find('(');
    if (open != std::string::npos && s.back() == ')') {
        std::string kind = s.substr(0, open);
        std::string port = s.substr(open + 1, s.size() - open - 2);
        if (kind == "VesselDeparture") return departure(port);
        if (kind == "VesselArrival") return arrival(port);
    }
    throw std::invalid_argument("unknown milestone: " + s);
}

enum class EventStatus { Planned, Estimated, Actual };

inline const char* to_string(EventStatus s) {
    switch (s) {
        case EventStatus::Planned: return "Planned";
        case EventStatus::Estimated: return "Estimated";
        case EventStatus::Actual: return "Actual";
    }
    throw std::invalid_argument("unknown event status");
}

inline EventStatus status_from_string(const std::string& s) {
    if (s == "Planned") return EventStatus::Planned;
    if (s == "Estimated") return EventStatus::Estimated;
    if (s == "Actual") return EventStatus::Actual;
    throw std::invalid_argument("unknown event status: " + s);
}

struct MilestoneEvent {
    std::string shipment_id;
    Milestone milestone;
    EventStatus status = EventStatus::Planned;
    std::string source;          // carrier, drayage provider, port authority, ...
    Hours occurrence_time = 0;   // hours since scenario epoch
    Hours emitted_at = 0;
    std::uint64_t emission_seq = 0;  // assigned by the timeline at record time
};

inline json event_to_json(const MilestoneEvent& e) {
    return json{{"shipment_id", e.shipment_id},
                {"milestone", to_string(e.milestone)},
                {"status", to_string(e.status)},
                {"source", e.source},
                {"occurrence_time", e.occurrence_time},
                {"emitted_at", e.emitted_at},
                {"emission_seq", e.emission_seq}};
}

struct EventConflict : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DwellSample {
    Hours hours = 0;
    EventStatus arrival_status = EventStatus::Actual;
    EventStatus departure_status = EventStatus::Actual;
    bool mixed_status() const { return arrival_status != departure_status; }
};

// Event store with latest-event-wins reads. A source may re-emit the same
// (shipment, milestone, status) with an updated time; the emission with the
// highest emission_seq supersedes earlier ones for all downstream reads.
// Superseded events are retained for audit. A second Actual event for the
// same (shipment, milestone), from any source, is a conflict.
class Timeline {
public:
    const MilestoneEvent& record(MilestoneEvent event) {
        if (event.status == EventStatus::Actual) {
            for (const auto& e : events_) {
                if (e.status == EventStatus::Actual && e.shipment_id == event.shipment_id &&
                    e.milestone == event.milestone) {
                    throw EventConflict("duplicate Actual event for shipment " + event.shipment_id +
                                        " at " + to_string(event.milestone));
                }
            }
        }
        event.emission_seq = next_seq_++;
        events_.push_back(std::move(event));
        return events_.back();
    }

    const std::vector<MilestoneEvent>& all_events() const { return events_; }

    // Latest emission per (shipment, milestone, status, source).
    std::vector<MilestoneEvent> effective_events() const {
        std::map<std::tuple<std::string, Milestone, EventStatus, std::string>, const MilestoneEvent*> latest;
        for (const auto& e : events_) {
            auto key = std::make_tuple(e.shipment_id, e.milestone, e.status, e.source);
            auto [it, inserted] = latest.try_emplace(key, &e);
            if (!inserted && e.emission_seq > it->second->emission_seq) it->second = &e;
        }
        std::vector<MilestoneEvent> out;
        out.reserve(latest.size());
        for (const auto& [key, ev] : latest) out.push_back(*ev);
        std::sort(out.begin(), out.end(), [](const MilestoneEvent& a, const MilestoneEvent& b) {
            return a.emission_seq < b.emission_seq;
        });
        return out;
    }

    // Single effective time for (shipment, milestone, status): the effective
    // event with the highest emission_seq across sources. An aggregate
    // estimate emitted by the AI service supersedes per-source estimates
    // simply by being the most recent emission.
    std::optional<MilestoneEvent> effective_event(const std::string& shipment_id,
                                                  const Milestone& milestone,
                                                  EventStatus status) const {
        const MilestoneEvent* best = nullptr;
        for (const auto& e : events_) {
            if (e.shipment_id != shipment_id || e.milestone != milestone || e.status != status) continue;
            if (!best || e.emission_seq > best->emission_seq) best = &e;
        }
        if (!best) return std::nullopt;
        return *best;
    }

    std::optional<MilestoneEvent> effective_preferring_actual(const std::string& shipment_id,
                                                              const Milestone& milestone) const {
        for (EventStatus s : {EventStatus::Actual, EventStatus::Estimated, EventStatus::Planned}) {
            if (auto e = effective_event(shipment_id, milestone, s)) return e;
        }
        return std::nullopt;
    }

    bool has_actual(const std::string& shipment_id, const Milestone& milestone) const {
        return effective_event(shipment_id, milestone, EventStatus::Actual).has_value();
    }

    // Dwell at a port: departure minus arrival, both endpoints read at the
    // best available status (Actual, else Estimated, else Planned). Statuses
    // are not mixed across endpoints unless only mixed data exists.
    std::optional<DwellSample> dwell_time(const std::string& shipment_id,
                                          const std::string& port) const {
        Milestone arr = arrival(port);
        Milestone dep = departure(port);
        for (EventStatus s : {EventStatus::Actual, EventStatus::Estimated, EventStatus::Planned}) {
            auto a = effective_event(shipment_id, arr, s);
            auto d = effective_event(shipment_id, dep, s);
            if (a && d) return make_dwell(*a, *d);
        }
        auto a = effective_preferring_actual(shipment_id, arr);
        auto d = effective_preferring_actual(shipment_id, dep);
        if (!a || !d) return std::nullopt;
        return make_dwell(*a, *d);
    }

    // Dwell from Actual endpoints only; absent unless both exist.
    std::optional<Hours> actual_dwell_hours(const std::string& shipment_id,
                                            const std::string& port) const {
        auto a = effective_event(shipment_id, arrival(port), EventStatus::Actual);
        auto d = effective_event(shipment_id, departure(port), EventStatus::Actual);
        if (!a || !d) return std::nullopt;
        if (d->occurrence_time < a->occurrence_time) {
            throw DataError("departure before arrival at " + port + " for shipment " + shipment_id);
        }
        return d->occurrence_time - a->occurrence_time;
    }

private:
    static DwellSample make_dwell(const MilestoneEvent& a, const MilestoneEvent& d) {
        if (d.occurrence_time < a.occurrence_time) {
            throw DataError("departure before arrival at " + a.milestone.port + " for shipment " +
                            a.shipment_id);
        }
        return DwellSample{d.occurrence_time - a.occurrence_time, a.status, d.status};
    }

    std::vector<MilestoneEvent> events_;
    std::uint64_t next_seq_ = 0;
};

// ---- Charges and contracts -----------------------------------------------------

enum class PlanKind { Planned, Unplanned };
enum class CompKind { Fixed, Variable };

inline const char* to_string(PlanKind k) { return k == PlanKind::Planned ? "Planned" : "Unplanned"; }
inline const char* to_string(CompKind k) { return k == CompKind::Fixed ? "Fixed" : "Variable"; }

// Minimal trigger language: presence of actual arrival+departure at a port
// (variable dwell-style charges) or an actual milestone (fixed unplanned).
struct ChargeTrigger {
    std::optional<Milestone> milestone;
    std::string port;  // dwell port for variable charges
};

struct ChargeDefinition {
    std::string charge_code;  // e.g. BASE_FREIGHT, DWELL_EXCESS_FEE
    PlanKind plan_kind = PlanKind::Planned;
    CompKind comp_kind = CompKind::Fixed;
    std::map<std::string, Cents> rate_params;  // flat_amount | base_per_day + increment_per_day
    std::optional<ChargeTrigger> trigger;

    Cents rate(const std::string& name) const {
        auto it = rate_params.find(name);
        if (it == rate_params.end()) {
            throw std::invalid_argument("charge " + charge_code + " missing rate param " + name);
        }
        return it->second;
    }
};

inline void validate_charge(const ChargeDefinition& c) {
    if (c.charge_code.empty()) throw std::invalid_argument("charge_code must be nonempty");
    if (c.comp_kind == CompKind::Fixed) {
        if (!c.rate_params.count("flat_amount")) {
            throw std::invalid_argument("Fixed charge " + c.charge_code + " requires flat_amount");
        }
        if (c.rate_params.at("flat_amount") < 0) {
            throw std::invalid_argument("flat_amount must be nonnegative for " + c.charge_code);
        }
    } else {
        if (!c.rate_params.count("base_per_day") || !c.rate_params.count("increment_per_day")) {
            throw std::invalid_argument("variable charge " + c.charge_code +
                                        " requires base_per_day and increment_per_day");
        }
        if (c.rate_params.at("base_per_day") <= 0 || c.rate_params.at("increment_per_day") <= 0) {
            throw std::invalid_argument("dwell rates must be positive for " + c.charge_code);
        }
        if (!c.trigger || c.trigger->port.empty()) {
            throw std::invalid_argument("variable charge " + c.charge_code + " needs a dwell port trigger");
        }
    }
}

struct ServiceContract {
    std::string contract_id;
    std::string shipper_id;
    std::string carrier_id;
    std::string lane_id;
    std::vector<ChargeDefinition> charges;
    std::string currency = "USD";

    const ChargeDefinition* find_charge(const std::string& code) const {
        for (const auto& c : charges) {
            if (c.charge_code == code) return &c;
        }
        return nullptr;
    }
};

inline void validate_contract(const ServiceContract& sc) {
    if (sc.contract_id.empty()) throw std::invalid_argument("contract_id must be nonempty");
    if (sc.currency.size() != 3) throw std::invalid_argument("currency must be a 3-letter code");
    std::set<std::string> codes;
    for (const auto& c : sc.charges) {
        validate_charge(c);
        if (!codes.insert(c.charge_code).second) {
            throw std::invalid_argument("duplicate charge_code " + c.charge_code);
        }
    }
}

// Escalating per-day fee past the dwell limit: base on the first excess day,
// growing by increment each further day. Closed form over n excess days:
// n*base + increment*n*(n-1)/2.
inline Cents dwell_excess_fee(std::int64_t dwell_days, std::int64_t limit_days, Cents base_per_day,
                              Cents increment_per_day) {
    if (dwell_days < 0 || limit_days < 0 || base_per_day < 0 || increment_per_day < 0) {
        throw std::domain_error("dwell fee inputs must be nonnegative");
    }
    std::int64_t n = dwell_days > limit_days ? dwell_days - limit_days : 0;
    return n * base_per_day + increment_per_day * n * (n - 1) / 2;
}

// ---- Invoices -----------------------------------------------------------------

enum class ChargeBasis { Actual, Predicted };

inline const char* to_string(ChargeBasis b) { return b == ChargeBasis::Actual ? "Actual" : "Predicted"; }

struct ChargeLine {
    std::string charge_code;
    Cents amount = 0;
    ChargeBasis basis = ChargeBasis::Actual;
    Ppm confidence_ppm = kPpmOne;  // 1.0 when Actual
    std::string explanation;
};

struct PartialInvoice {
    std::string invoice_id;
    std::string shipment_id;
    std::int64_t iteration = 1;
    Milestone trigger_milestone;
    std::vector<ChargeLine> lines;
    Cents total_actual = 0;
    Cents total_predicted = 0;
    bool final_invoice = false;

    const ChargeLine* find_line(const std::string& code) const {
        for (const auto& l : lines) {
            if (l.charge_code == code) return &l;
        }
        return nullptr;
    }
};

inline void recompute_totals(PartialInvoice& inv) {
    inv.total_actual = 0;
    inv.total_predicted = 0;
    for (const auto& l : inv.lines) {
        if (l.basis == ChargeBasis::Actual) {
            inv.total_actual += l.amount;
        } else {
            inv.total_predicted += l.amount;
        }
    }
}

inline json invoice_to_json(const PartialInvoice& inv) {
    json lines = json::array();
    for (const auto& l : inv.lines) {
        lines.push_back(json{{"charge_code", l.charge_code},
                             {"amount", l.amount},
                             {"basis", to_string(l.basis)},
                             {"confidence_ppm", l.confidence_ppm},
                             {"explanation", l.explanation}});
    }
    return json{{"invoice_id", inv.invoice_id},
                {"shipment_id", inv.shipment_id},
                {"iteration", inv.iteration},
                {"trigger_milestone", to_string(inv.trigger_milestone)},
                {"lines", lines},
                {"total_actual", inv.total_actual},
                {"total_predicted", inv.total_predicted},
                {"final", inv.final_invoice}};
}

inline PartialInvoice invoice_from_json(const json& j) {
    PartialInvoice inv;
    inv.invoice_id = j.at("invoice_id").get<std::string>();
    inv.shipment_id = j.at("shipment_id").get<std::string>();
    inv.iteration = j.at("iteration").get<std::int64_t>();
    inv.trigger_milestone = milestone_from_string(j.at("trigger_milestone").get<std::string>());
    for (const auto& lj : j.at("lines")) {
        ChargeLine l;
        l.charge_code = lj.at("charge_code").get<std::string>();
        l.amount = lj.at("amount").get<Cents>();
        l.basis = lj.at("basis").get<std::string>() == "Actual" ? ChargeBasis::Actual
                                                                : ChargeBasis::Predicted;
        l.confidence_ppm = lj.at("confidence_ppm").get<Ppm>();
        l.explanation = lj.at("explanation").get<std::string>();
        inv.lines.push_back(std::move(l));
    }
    inv.total_actual = j.at("total_actual").get<Cents>();
    inv.total_predicted = j.at("total_predicted").get<Cents>();
    inv.final_invoice = j.at("final").get<bool>();
    return inv;
}

// A prediction offered to the invoice engine: the predicted input value for a
// charge (dwell days for dwell-style fees, trigger bit for fixed unplanned
// charges) plus the model score backing it.
struct ChargePrediction {
    std::string charge_code;
    std::int64_t value = 0;  // predicted dwell days, or 0/1 trigger bit
    Ppm confidence_ppm = 0;
    Milestone produced_at;
};

namespace detail {

inline std::string dwell_explanation(std::int64_t dwell_days, std::int64_t limit_days, bool predicted,
                                     bool mixed = false) {
    std::ostringstream os;
    os << (predicted ? "predicted dwell " : "dwell ") << dwell_days << "d vs limit " << limit_days << "d";
    if (mixed) os << " (mixed-status endpoints, confidence 0.5)";
    return os.str();
}

}  // namespace detail

// One charge line per determinable contract charge. Planned-Fixed charges are
// Actual from iteration 1. Variable and unplanned charges turn Actual once
// the required Actual events exist, are Predicted while a prediction covers
// them, and are omitted otherwise. The final invoice (trigger DeliveryComplete)
// carries only Actual lines.
inline PartialInvoice compute_invoice(const ServiceContract& contract, const ShippingLane& lane,
                                      const Timeline& timeline, const std::string& shipment_id,
                                      const std::vector<ChargePrediction>& predictions,
                                      std::int64_t iteration, const Milestone& trigger_milestone) {
    if (iteration < 1) throw std::invalid_argument("iteration must be >= 1");
    for (const auto& p : predictions) {
        if (!contract.find_charge(p.charge_code)) {
            throw std::invalid_argument("prediction references unknown charge_code " + p.charge_code);
        }
    }

    PartialInvoice inv;
    inv.invoice_id = contract.contract_id + "/" + shipment_id + "/" + std::to_string(iteration);
    inv.shipment_id = shipment_id;
    inv.iteration = iteration;
    inv.trigger_milestone = trigger_milestone;
    inv.final_invoice = trigger_milestone.kind == MilestoneKind::DeliveryComplete;

    for (const auto& charge : contract.charges) {
        const ChargePrediction* pred = nullptr;
        for (const auto& p : predictions) {
            if (p.charge_code == charge.charge_code) pred = &p;
        }

        if (charge.plan_kind == PlanKind::Planned && charge.comp_kind == CompKind::Fixed) {
            inv.lines.push_back(ChargeLine{charge.charge_code, charge.rate("flat_amount"),
                                           ChargeBasis::Actual, kPpmOne, "planned fixed rate"});
            continue;
        }

        if (charge.comp_kind == CompKind::Variable) {
            const std::string& port = charge.trigger->port;
            if (!lane.has_port(port)) {
                throw std::invalid_argument("charge " + charge.charge_code +
                                            " dwell port not on lane: " + port);
            }
            std::int64_t limit = lane.dwell_limit(port);
            if (auto actual_hours = timeline.actual_dwell_hours(shipment_id, port)) {
                std::int64_t days = ceil_days(*actual_hours);
                inv.lines.push_back(ChargeLine{
                    charge.charge_code,
                    dwell_excess_fee(days, limit, charge.rate("base_per_day"),
                                     charge.rate("increment_per_day")),
                    ChargeBasis::Actual, kPpmOne, detail::dwell_explanation(days, limit, false)});
            } else if (pred && !inv.final_invoice) {
                inv.lines.push_back(ChargeLine{
                    charge.charge_code,
                    dwell_excess_fee(pred->value, limit, charge.rate("base_per_day"),
                                     charge.rate("increment_per_day")),
                    ChargeBasis::Predicted, pred->confidence_ppm,
                    detail::dwell_explanation(pred->value, limit, true)});
            }
            // otherwise omitted: unknown is distinct from known zero
            continue;
        }

        // Unplanned fixed: flat amount once the trigger milestone is Actual.
        if (!charge.trigger || !charge.trigger->milestone) {
            throw std::invalid_argument("unplanned fixed charge " + charge.charge_code +
                                        " needs a milestone trigger");
        }
        if (timeline.has_actual(shipment_id, *charge.trigger->milestone)) {
            inv.lines.push_back(ChargeLine{charge.charge_code, charge.rate("flat_amount"),
                                           ChargeBasis::Actual, kPpmOne,
                                           "triggered by " + to_string(*charge.trigger->milestone)});
        } else if (pred && pred->value > 0 && !inv.final_invoice) {
            inv.lines.push_back(ChargeLine{charge.charge_code, charge.rate("flat_amount"),
                                           ChargeBasis::Predicted, pred->confidence_ppm,
                                           "predicted trigger " + to_string(*charge.trigger->milestone)});
        }
    }

    if (inv.final_invoice) {
        for (const auto& l : inv.lines) {
            if (l.basis != ChargeBasis::Actual) {
                throw DataError("final invoice still has predicted line " + l.charge_code);
            }
        }
    }
    recompute_totals(inv);
    return inv;
}

// Text rendering used by the CLI and reports.
inline std::string render_invoice(const PartialInvoice& inv) {
    std::ostringstream os;
    os << "Invoice " << inv.invoice_id << " (iteration " << inv.iteration << ", at "
       << to_string(inv.trigger_milestone) << (inv.final_invoice ? ", FINAL" : "") << ")\n";
    os << "  " << std::string(66, '-') << "\n";
    for (const auto& l : inv.lines) {
        os << "  " << l.charge_code;
        if (l.charge_code.size() < 24) os << std::string(24 - l.charge_code.size(), ' ');
        std::string amt = format_usd(l.amount);
        if (amt.size() < 12) os << std::string(12 - amt.size(), ' ');
        os << amt << "  " << to_string(l.basis);
        if (l.basis == ChargeBasis::Predicted) {
            os << " (confidence " << fraction_from_ppm(l.confidence_ppm) << ")";
        }
        os << "  [" << l.explanation << "]\n";
    }
    os << "  " << std::string(66, '-') << "\n";
    os << "  total actual " << format_usd(inv.total_actual) << ", total predicted "
       << format_usd(inv.total_predicted) << "\n";
    return os.str();
}

}  // namespace freightledger::logistics
