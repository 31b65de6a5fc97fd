#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "freightledger/bytes.hpp"
#include "freightledger/logistics.hpp"
#include "freightledger/units.hpp"

// The AI service: multi-source estimate fusion, feature extraction over a
// shipment's journey, a small recurrent classifier for dwell-time thresholds
// trained with backpropagation through time, and the per-(lane, milestone,
// charge) accuracy registry the bank consults.

namespace freightledger::prediction {

using json = nlohmann::json;
using logistics::EventStatus;
using logistics::Milestone;
using logistics::MilestoneKind;
using logistics::ShippingLane;
using logistics::Timeline;

// ---- Aggregate estimates ---------------------------------------------------

struct SourceEstimate {
    std::string source;
    Hours occurrence_time = 0;
};

// Weighted mean of the latest estimate per source. Zero estimates fall back
// to the model estimate when one is given.
inline std::optional<double> aggregate_estimate(const std::vector<SourceEstimate>& estimates,
                                                const std::map<std::string, double>& source_weights,
                                                std::optional<double> fallback = std::nullopt) {
    std::map<std::string, Hours> latest;
    for (const auto& e : estimates) latest[e.source] = e.occurrence_time;  // later entries win
    if (latest.empty()) return fallback;

    double weight_sum = 0.0;
    double acc = 0.0;
    for (const auto& [source, t] : latest) {
        auto it = source_weights.find(source);
        double w = it == source_weights.end() ? 1.0 : it->second;
        if (w < 0.0) throw std::domain_error("negative source weight for " + source);
        weight_sum += w;
        acc += w * static_cast<double>(t);
    }
    if (weight_sum <= 0.0) throw std::domain_error("all source weights are zero");
    return acc / weight_sum;
}

// ---- Features ----------------------------------------------------------------

struct FeatureVector {
    std::vector<double> origin_onehot;       // over the lane's port vocabulary
    std::vector<double> destination_onehot;  // current leg's destination
    double event_type = 0.0;                 // 0 = departure, 1 = arrival
    double planned_voyage_or_dwell_hours = 0.0;
    double estimated_delay_final_arrival_hours = 0.0;
    double estimated_delay_next_port_hours = 0.0;
    std::vector<double> vessel;    // age, length, tonnage, capacity
    std::vector<double> port_ops;  // berth count, expected vessels, vessels in port

    std::vector<double> flatten() const {
        std::vector<double> out;
        out.reserve(origin_onehot.size() + destination_onehot.size() + 4 + vessel.size() +
                    port_ops.size());
        out.insert(out.end(), origin_onehot.begin(), origin_onehot.end());
        out.insert(out.end(), destination_onehot.begin(), destination_onehot.end());
        out.push_back(event_type);
        out.push_back(planned_voyage_or_dwell_hours);
        out.push_back(estimated_delay_final_arrival_hours);
        out.push_back(estimated_delay_next_port_hours);
        out.insert(out.end(), vessel.begin(), vessel.end());
        out.insert(out.end(), port_ops.begin(), port_ops.end());
        return out;
    }
};

// Exogenous inputs that ride alongside the event timeline.
struct ShipmentContext {
    std::vector<double> vessel = {0, 0, 0, 0};
    std::map<std::string, std::vector<double>> port_ops;  // port -> {berths, expected, in_port}

    std::vector<double> ops_for(const std::string& port) const {
        auto it = port_ops.find(port);
        return it == port_ops.end() ? std::vector<double>{0, 0, 0} : it->second;
    }
};

namespace detail {

inline std::vector<double> onehot(const ShippingLane& lane, const std::string& port) {
    std::vector<double> v(lane.ports.size(), 0.0);
    for (std::size_t i = 0; i < lane.ports.size(); ++i) {
        if (lane.ports[i].port_code == port) {
            v[i] = 1.0;
            return v;
        }
    }
    throw std::invalid_argument("port not on lane: " + port);
}

// Delay of a milestone against its planned time, preferring actual data and
// falling back to the latest estimate; zero when only the plan exists.
inline double delay_vs_plan(const Timeline& tl, const std::string& shipment, const Milestone& m) {
    auto planned = tl.effective_event(shipment, m, EventStatus::Planned);
    if (!planned) return 0.0;
    if (auto actual = tl.effective_event(shipment, m, EventStatus::Actual)) {
        return static_cast<double>(actual->occurrence_time - planned->occurrence_time);
    }
    if (auto est = tl.effective_event(shipment, m, EventStatus::Estimated)) {
        return static_cast<double>(est->occurrence_time - planned->occurrence_time);
    }
    return 0.0;
}

inline double planned_gap(const Timeline& tl, const std::string& shipment, const Milestone& from,
                          const Milestone& to) {
    auto a = tl.effective_event(shipment, from, EventStatus::Planned);
    auto b = tl.effective_event(shipment, to, EventStatus::Planned);
    if (!a || !b) return 0.0;
    return static_cast<double>(b->occurrence_time - a->occurrence_time);
}

}  // namespace detail

// Journey milestones in lane order: departure(p0), arrival(p1), departure(p1),
// ..., arrival(p_last).
inline std::vector<Milestone> journey_milestones(const ShippingLane& lane) {
    std::vector<Milestone> out;
    for (std::size_t i = 0; i + 1 < lane.ports.size(); ++i) {
        out.push_back(logistics::departure(lane.ports[i].port_code));
        out.push_back(logistics::arrival(lane.ports[i + 1].port_code));
    }
    return out;
}

// One feature vector per departure/arrival event up to and including
// at_milestone, in journey order. Delay features use Actual delays where the
// underlying event is Actual and the latest Estimated otherwise.
inline std::vector<FeatureVector> extract_features(const Timeline& timeline,
                                                   const ShippingLane& lane,
                                                   const std::string& shipment_id,
                                                   const Milestone& at_milestone,
                                                   const ShipmentContext& context = {}) {
    if (at_milestone.kind != MilestoneKind::VesselDeparture &&
        at_milestone.kind != MilestoneKind::VesselArrival) {
        throw std::invalid_argument("features are extracted at departure/arrival milestones only");
    }
    if (!lane.has_port(at_milestone.port)) {
        throw std::invalid_argument("milestone port not on lane: " + at_milestone.port);
    }
    if (!timeline.has_actual(shipment_id, at_milestone)) {
        throw std::invalid_argument("milestone has not occurred yet: " +
                                    logistics::to_string(at_milestone));
    }

    Milestone final_arrival = logistics::arrival(lane.destination().port_code);
    auto journey = journey_milestones(lane);

    std::vector<FeatureVector> out;
    for (std::size_t idx = 0; idx < journey.size(); ++idx) {
        const Milestone& m = journey[idx];
        FeatureVector fv;
        std::string leg_origin, leg_destination;
        if (m.kind == MilestoneKind::VesselDeparture) {
            leg_origin = m.port;
            leg_destination = journey[idx + 1].port;  // the paired arrival
            fv.event_type = 0.0;
            fv.planned_voyage_or_dwell_hours =
                detail::planned_gap(timeline, shipment_id, m, journey[idx + 1]);
        } else {
            leg_origin = journey[idx - 1].port;
            leg_destination = m.port;
            fv.event_type = 1.0;
            // dwell feature: planned departure minus planned arrival at this port
            fv.planned_voyage_or_dwell_hours =
                m.port == lane.destination().port_code
                    ? 0.0
                    : detail::planned_gap(timeline, shipment_id, m, logistics::departure(m.port));
        }
        fv.origin_onehot = detail::onehot(lane, leg_origin);
        fv.destination_onehot = detail::onehot(lane, leg_destination);
        fv.estimated_delay_final_arrival_hours =
            detail::delay_vs_plan(timeline, shipment_id, final_arrival);
        fv.estimated_delay_next_port_hours =
            detail::delay_vs_plan(timeline, shipment_id, logistics::arrival(leg_destination));
        fv.vessel = context.vessel;
        fv.port_ops = context.ops_for(m.port);
        out.push_back(std::move(fv));
        if (m == at_milestone) return out;
    }
    throw std::invalid_argument("milestone not part of this lane's journey: " +
                                logistics::to_string(at_milestone));
}

// Index of the first standardized coordinate: everything after the one-hots
// and the binary event-type flag.
inline std::size_t first_standardized_index(const ShippingLane& lane) {
    return 2 * lane.ports.size() + 1;
}

// ---- Recurrent classifier -----------------------------------------------------

struct TrainingMeta {
    std::uint64_t seed = 0;
    int epochs = 0;
    double learning_rate = 0.0;
    std::vector<double> loss_curve;
};

// Single-layer tanh recurrence with a logistic output head.
struct DwellModel {
    int threshold_hours = 24;  // 24 | 48 | 72
    int input_dim = 0;
    int hidden_dim = 0;
    std::vector<double> w_xh;  // hidden_dim x input_dim, row-major
    std::vector<double> w_hh;  // hidden_dim x hidden_dim
    std::vector<double> b_h;   // hidden_dim
    std::vector<double> w_o;   // hidden_dim
    double b_o = 0.0;
    std::vector<double> feat_mean;  // input_dim
    std::vector<double> feat_std;   // input_dim
    TrainingMeta meta;
};

using Sequence = std::vector<std::vector<double>>;

struct LabeledSequence {
    Sequence sequence;
    int label = 0;  // 1 iff dwell time exceeds the threshold
};

struct Hyperparams {
    int hidden_dim = 8;
    int epochs = 300;
    double learning_rate = 0.5;
};

namespace detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline std::vector<double> standardize(const DwellModel& m, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != m.input_dim) {
        throw std::invalid_argument("feature dimension mismatch: got " + std::to_string(x.size()) +
                                    ", model expects " + std::to_string(m.input_dim));
    }
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = (x[i] - m.feat_mean[i]) / m.feat_std[i];
    }
    return out;
}

struct ForwardTrace {
    std::vector<std::vector<double>> inputs;   // standardized x_t
    std::vector<std::vector<double>> hiddens;  // h_t, t = 1..T
    double score = 0.0;
};

inline ForwardTrace forward_trace(const DwellModel& m, const Sequence& seq) {
    if (seq.empty()) throw std::invalid_argument("empty input sequence");
    const int H = m.hidden_dim;
    const int D = m.input_dim;
    ForwardTrace trace;
    std::vector<double> h(H, 0.0);
    for (const auto& raw : seq) {
        std::vector<double> x = standardize(m, raw);
        std::vector<double> next(H, 0.0);
        for (int i = 0; i < H; ++i) {
            double a = m.b_h[i];
            for (int j = 0; j < D; ++j) a += m.w_xh[i * D + j] * x[j];
            for (int j = 0; j < H; ++j) a += m.w_hh[i * H + j] * h[j];
            next[i] = std::tanh(a);
        }
        h = next;
        trace.inputs.push_back(std::move(x));
        trace.hiddens.push_back(h);
    }
    double z = m.b_o;
    for (int i = 0; i < H; ++i) z += m.w_o[i] * h[i];
    trace.score = sigmoid(z);
    return trace;
}

}  // namespace detail

// Model score in (0,1); class-1 iff score > 0.5.
inline double forward(const DwellModel& model, const Sequence& sequence) {
    return detail::forward_trace(model, sequence).score;
}

inline int classify(const DwellModel& model, const Sequence& sequence) {
    return forward(model, sequence) > 0.5 ? 1 : 0;
}

struct Gradients {
    std::vector<double> w_xh, w_hh, b_h, w_o;
    double b_o = 0.0;

    explicit Gradients(const DwellModel& m)
        : w_xh(m.w_xh.size(), 0.0),
          w_hh(m.w_hh.size(), 0.0),
          b_h(m.b_h.size(), 0.0),
          w_o(m.w_o.size(), 0.0) {}
};

// Cross-entropy loss for one labeled sequence; accumulates BPTT gradients
// when grads is non-null.
inline double sequence_loss(const DwellModel& m, const LabeledSequence& s, Gradients* grads) {
    auto trace = detail::forward_trace(m, s.sequence);
    const int H = m.hidden_dim;
    const int D = m.input_dim;
    const double p = trace.score;
    const double y = static_cast<double>(s.label);
    const double eps = 1e-12;
    double loss = -(y * std::log(p + eps) + (1.0 - y) * std::log(1.0 - p + eps));
    if (!grads) return loss;

    const double dz = p - y;
    const auto& h_last = trace.hiddens.back();
    for (int i = 0; i < H; ++i) grads->w_o[i] += dz * h_last[i];
    grads->b_o += dz;

    std::vector<double> dh(H, 0.0);
    for (int i = 0; i < H; ++i) dh[i] = dz * m.w_o[i];

    for (int t = static_cast<int>(trace.hiddens.size()) - 1; t >= 0; --t) {
        const auto& h_t = trace.hiddens[t];
        std::vector<double> da(H, 0.0);
        for (int i = 0; i < H; ++i) da[i] = dh[i] * (1.0 - h_t[i] * h_t[i]);
        const auto& x_t = trace.inputs[t];
        for (int i = 0; i < H; ++i) {
            for (int j = 0; j < D; ++j) grads->w_xh[i * D + j] += da[i] * x_t[j];
            grads->b_h[i] += da[i];
        }
        if (t > 0) {
            const auto& h_prev = trace.hiddens[t - 1];
            for (int i = 0; i < H; ++i) {
                for (int j = 0; j < H; ++j) grads->w_hh[i * H + j] += da[i] * h_prev[j];
            }
        }
        std::vector<double> dh_prev(H, 0.0);
        for (int j = 0; j < H; ++j) {
            double acc = 0.0;
            for (int i = 0; i < H; ++i) acc += m.w_hh[i * H + j] * da[i];
            dh_prev[j] = acc;
        }
        dh = std::move(dh_prev);
    }
    return loss;
}

namespace detail {

// Portable uniform in [-r, r) from raw mt19937_64 draws.
inline double uniform_pm(std::mt19937_64& rng, double r) {
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return (2.0 * u - 1.0) * r;
}

}  // namespace detail

// Full-batch gradient descent on cross-entropy via backpropagation through
// time. Deterministic given the seed. Training happens entirely off-ledger.
inline DwellModel train(const std::vector<LabeledSequence>& dataset, int threshold_hours,
                        const Hyperparams& hyper, std::uint64_t seed,
                        std::size_t first_standardized = 0) {
    if (dataset.empty()) throw std::invalid_argument("empty training dataset");
    bool has_pos = false, has_neg = false;
    for (const auto& s : dataset) (s.label ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) {
        throw std::invalid_argument(
            "training dataset has a single class; both class-0 and class-1 examples are required");
    }
    if (hyper.hidden_dim < 1 || hyper.epochs < 1 || hyper.learning_rate <= 0.0) {
        throw std::invalid_argument("invalid hyperparameters");
    }

    const int D = static_cast<int>(dataset.front().sequence.front().size());
    const int H = hyper.hidden_dim;
    for (const auto& s : dataset) {
        if (s.sequence.empty()) throw std::invalid_argument("dataset contains an empty sequence");
        for (const auto& x : s.sequence) {
            if (static_cast<int>(x.size()) != D) {
                throw std::invalid_argument("inconsistent feature dimensions in dataset");
            }
        }
    }

    DwellModel m;
    m.threshold_hours = threshold_hours;
    m.input_dim = D;
    m.hidden_dim = H;
    m.meta.seed = seed;
    m.meta.epochs = hyper.epochs;
    m.meta.learning_rate = hyper.learning_rate;

    // normalization statistics from the training set; one-hot/binary prefix
    // coordinates pass through untouched
    m.feat_mean.assign(D, 0.0);
    m.feat_std.assign(D, 1.0);
    std::vector<double> sum(D, 0.0), sumsq(D, 0.0);
    std::size_t count = 0;
    for (const auto& s : dataset) {
        for (const auto& x : s.sequence) {
            for (int j = 0; j < D; ++j) {
                sum[j] += x[j];
                sumsq[j] += x[j] * x[j];
            }
            ++count;
        }
    }
    for (int j = static_cast<int>(first_standardized); j < D; ++j) {
        double mean = sum[j] / static_cast<double>(count);
        double var = sumsq[j] / static_cast<double>(count) - mean * mean;
        m.feat_mean[j] = mean;
        m.feat_std[j] = var > 1e-12 ? std::sqrt(var) : 1.0;
    }

    std::mt19937_64 rng(seed);
    const double r_in = 1.0 / std::sqrt(static_cast<double>(D));
    const double r_rec = 1.0 / std::sqrt(static_cast<double>(H));
    m.w_xh.resize(static_cast<std::size_t>(H) * D);
    m.w_hh.resize(static_cast<std::size_t>(H) * H);
    m.b_h.assign(H, 0.0);
    m.w_o.resize(H);
    for (auto& w : m.w_xh) w = detail::uniform_pm(rng, r_in);
    for (auto& w : m.w_hh) w = detail::uniform_pm(rng, r_rec);
    for (auto& w : m.w_o) w = detail::uniform_pm(rng, r_rec);
    m.b_o = 0.0;

    const double n = static_cast<double>(dataset.size());
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        Gradients g(m);
        double total = 0.0;
        for (const auto& s : dataset) total += sequence_loss(m, s, &g);
        double scale = hyper.learning_rate / n;
        for (std::size_t i = 0; i < m.w_xh.size(); ++i) m.w_xh[i] -= scale * g.w_xh[i];
        for (std::size_t i = 0; i < m.w_hh.size(); ++i) m.w_hh[i] -= scale * g.w_hh[i];
        for (std::size_t i = 0; i < m.b_h.size(); ++i) m.b_h[i] -= scale * g.b_h[i];
        for (std::size_t i = 0; i < m.w_o.size(); ++i) m.w_o[i] -= scale * g.w_o[i];
        m.b_o -= scale * g.b_o;
        m.meta.loss_curve.push_back(total / n);
    }
    return m;
}

// ---- Threshold buckets -------------------------------------------------------

struct DwellBucket {
    std::int64_t dwell_days = 1;  // 1, 2, 3 or 4 (4 = "more than 3 days")
    std::array<double, 3> scores{};  // 24h, 48h, 72h model scores
    std::array<int, 3> bits{};        // after monotone repair
    bool repaired = false;
    std::string label() const {
        switch (dwell_days) {
            case 1: return "<=1d";
            case 2: return "2d";
            case 3: return "3d";
            default: return ">3d";
        }
    }
};

// Exceedance is monotone: dwell > 72h implies dwell > 48h implies dwell > 24h.
// Inconsistent bit patterns are repaired by OR-ing each bit downward from the
// highest asserted threshold.
inline DwellBucket bucket_from_bits(std::array<int, 3> bits, std::array<double, 3> scores = {}) {
    DwellBucket b;
    b.scores = scores;
    std::array<int, 3> repaired = bits;
    if (repaired[2]) repaired[1] = 1;
    if (repaired[1]) repaired[0] = 1;
    b.repaired = repaired != bits;
    b.bits = repaired;
    b.dwell_days = 1 + repaired[0] + repaired[1] + repaired[2];
    return b;
}

inline DwellBucket predict_dwell_bucket(const DwellModel& m24, const DwellModel& m48,
                                        const DwellModel& m72, const Sequence& sequence) {
    if (m24.threshold_hours != 24 || m48.threshold_hours != 48 || m72.threshold_hours != 72) {
        throw std::invalid_argument("bucket prediction needs the 24/48/72h models in order");
    }
    std::array<double, 3> scores = {forward(m24, sequence), forward(m48, sequence),
                                    forward(m72, sequence)};
    std::array<int, 3> bits = {scores[0] > 0.5 ? 1 : 0, scores[1] > 0.5 ? 1 : 0,
                               scores[2] > 0.5 ? 1 : 0};
    return bucket_from_bits(bits, scores);
}

// ---- Evaluation ----------------------------------------------------------------

struct ConfusionCounts {
    std::int64_t tp = 0, fn = 0, tn = 0, fp = 0;
    std::int64_t total() const { return tp + fn + tn + fp; }
};

struct EvalResult {
    double balanced_accuracy = 0.0;
    ConfusionCounts counts;
};

// Mean of true-positive rate and true-negative rate.
inline EvalResult balanced_accuracy(const std::vector<int>& predictions,
                                    const std::vector<int>& labels) {
    if (predictions.size() != labels.size() || labels.empty()) {
        throw std::invalid_argument("predictions and labels must be nonempty and equal-sized");
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i]) {
            (predictions[i] ? c.tp : c.fn)++;
        } else {
            (predictions[i] ? c.fp : c.tn)++;
        }
    }
    if (c.tp + c.fn == 0 || c.tn + c.fp == 0) {
        throw std::invalid_argument("balanced accuracy undefined: labels contain a single class");
    }
    double tpr = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    double tnr = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    return EvalResult{(tpr + tnr) / 2.0, c};
}

inline EvalResult evaluate(const DwellModel& model, const std::vector<LabeledSequence>& data) {
    std::vector<int> preds, labels;
    preds.reserve(data.size());
    labels.reserve(data.size());
    for (const auto& s : data) {
        preds.push_back(classify(model, s.sequence));
        labels.push_back(s.label);
    }
    return balanced_accuracy(preds, labels);
}

// Seeded stratified split: roughly test_fraction of each class goes to test.
inline std::pair<std::vector<LabeledSequence>, std::vector<LabeledSequence>> stratified_split(
    const std::vector<LabeledSequence>& data, double test_fraction, std::uint64_t seed) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < data.size(); ++i) (data[i].label ? pos : neg).push_back(i);
    std::mt19937_64 rng(seed);
    auto shuffle_ix = [&rng](std::vector<std::size_t>& ix) {
        for (std::size_t i = ix.size(); i > 1; --i) {
            std::size_t j = rng() % i;
            std::swap(ix[i - 1], ix[j]);
        }
    };
    shuffle_ix(pos);
    shuffle_ix(neg);
    std::vector<LabeledSequence> train_set, test_set;
    auto take = [&](const std::vector<std::size_t>& ix) {
        std::size_t n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(ix.size())));
        for (std::size_t k = 0; k < ix.size(); ++k) {
            (k < n_test ? test_set : train_set).push_back(data[ix[k]]);
        }
    };
    take(pos);
    take(neg);
    return {train_set, test_set};
}

// ---- Accuracy registry -------------------------------------------------------

struct RegistryEntry {
    Ppm accuracy_ppm = 0;
    std::int64_t sample_count = 0;
};

// Keyed by (lane_id, milestone, subject) where subject is a charge_code or a
// prediction target name.
class AccuracyRegistry {
public:
    void update(const std::string& lane_id, const Milestone& milestone, const std::string& subject,
                const EvalResult& eval) {
        update(lane_id, milestone, subject,
               RegistryEntry{ppm_from_fraction(eval.balanced_accuracy), eval.counts.total()});
    }

    void update(const std::string& lane_id, const Milestone& milestone, const std::string& subject,
                RegistryEntry entry) {
        if (entry.accuracy_ppm < 0 || entry.accuracy_ppm > kPpmOne) {
            throw std::invalid_argument("accuracy must be within [0,1]");
        }
        if (entry.sample_count < 1) throw std::invalid_argument("sample_count must be >= 1");
        entries_[key_of(lane_id, milestone, subject)] = entry;
    }

    std::optional<RegistryEntry> lookup(const std::string& lane_id, const Milestone& milestone,
                                        const std::string& subject) const {
        auto it = entries_.find(key_of(lane_id, milestone, subject));
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t size() const { return entries_.size(); }

    json to_json() const {
        json entries = json::array();
        for (const auto& [key, entry] : entries_) {
            entries.push_back(json{{"lane_id", std::get<0>(key)},
                                   {"milestone", std::get<1>(key)},
                                   {"subject", std::get<2>(key)},
                                   {"accuracy_ppm", entry.accuracy_ppm},
                                   {"sample_count", entry.sample_count}});
        }
        return json{{"entries", entries}};
    }

    Bytes serialize() const { return to_bytes(to_json().dump()); }

    static AccuracyRegistry deserialize(BytesView bytes) {
        AccuracyRegistry reg;
        json j = json::parse(freightledger::to_string(bytes));
        for (const auto& e : j.at("entries")) {
            reg.entries_[std::make_tuple(e.at("lane_id").get<std::string>(),
                                         e.at("milestone").get<std::string>(),
                                         e.at("subject").get<std::string>())] =
                RegistryEntry{e.at("accuracy_ppm").get<Ppm>(), e.at("sample_count").get<std::int64_t>()};
        }
        return reg;
    }

private:
    using Key = std::tuple<std::string, std::string, std::string>;

    static Key key_of(const std::string& lane_id, const Milestone& milestone,
                      const std::string& subject) {
        return std::make_tuple(lane_id, logistics::to_string(milestone), subject);
    }

    std::map<Key, RegistryEntry> entries_;
};

// ---- Model file format ---------------------------------------------------------
// Versioned text container, one field per line, doubles as C hexfloats so the
// round-trip is bit-exact:
//   FLDM 1
//   threshold_hours <int>
//   input_dim <int>
//   hidden_dim <int>
//   seed <u64>
//   epochs <int>
//   learning_rate <hexfloat>
//   w_xh <input_dim*hidden_dim hexfloats>
//   w_hh / b_h / w_o / b_o / feat_mean / feat_std <...>
//   loss_curve <epochs hexfloats>
//   end

namespace detail {

inline void write_doubles(std::ostream& os, const char* name, const std::vector<double>& v) {
    os << name;
    char buf[48];
    for (double d : v) {
        std::snprintf(buf, sizeof buf, " %a", d);
        os << buf;
    }
    os << "\n";
}

inline std::vector<double> read_doubles(std::istringstream& line, std::size_t expect) {
    std::vector<double> out;
    std::string tok;
    while (line >> tok) {
        char* end = nullptr;
        double v = std::strtod(tok.c_str(), &end);
        if (end == nullptr || *end != '\0') throw std::runtime_error("bad float token: " + tok);
        out.push_back(v);
    }
    if (out.size() != expect) {
        throw std::runtime_error("model field has " + std::to_string(out.size()) +
                                 " values, expected " + std::to_string(expect));
    }
    return out;
}

}  // namespace detail

inline void save_model(const DwellModel& m, std::ostream& os) {
    os << "FLDM 1\n";
    os << "threshold_hours " << m.threshold_hours << "\n";
    os << "input_dim " << m.input_dim << "\n";
    os << "hidden_dim " << m.hidden_dim << "\n";
    os << "seed " << m.meta.seed << "\n";
    os << "epochs " << m.meta.epochs << "\n";
    detail::write_doubles(os, "learning_rate", {m.meta.learning_rate});
    detail::write_doubles(os, "w_xh", m.w_xh);
    detail::write_doubles(os, "w_hh", m.w_hh);
    detail::write_doubles(os, "b_h", m.b_h);
    detail::write_doubles(os, "w_o", m.w_o);
    detail::write_doubles(os, "b_o", {m.b_o});
    detail::write_doubles(os, "feat_mean", m.feat_mean);
    detail::write_doubles(os, "feat_std", m.feat_std);
    detail::write_doubles(os, "loss_curve", m.meta.loss_curve);
    os << "end\n";
    if (!os) throw std::runtime_error("model write failed");
}

inline void save_model(const DwellModel& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open model file for writing: " + path);
    save_model(m, f);
}

inline DwellModel load_model(std::istream& is) {
    DwellModel m;
    std::string line;
    auto next_line = [&](const std::string& want) -> std::istringstream {
        if (!std::getline(is, line)) throw std::runtime_error("truncated model file at " + want);
        std::istringstream ls(line);
        std::string field;
        ls >> field;
        if (field != want) throw std::runtime_error("expected field " + want + ", got " + field);
        return ls;
    };
    {
        auto ls = next_line("FLDM");
        int version = 0;
        ls >> version;
        if (version != 1) throw std::runtime_error("unsupported model version");
    }
    next_line("threshold_hours") >> m.threshold_hours;
    next_line("input_dim") >> m.input_dim;
    next_line("hidden_dim") >> m.hidden_dim;
    next_line("seed") >> m.meta.seed;
    next_line("epochs") >> m.meta.epochs;
    {
        auto ls = next_line("learning_rate");
        m.meta.learning_rate = detail::read_doubles(ls, 1)[0];
    }
    const auto hd = static_cast<std::size_t>(m.hidden_dim);
    const auto id = static_cast<std::size_t>(m.input_dim);
    {
        auto ls = next_line("w_xh");
        m.w_xh = detail::read_doubles(ls, hd * id);
    }
    {
        auto ls = next_line("w_hh");
        m.w_hh = detail::read_doubles(ls, hd * hd);
    }
    {
        auto ls = next_line("b_h");
        m.b_h = detail::read_doubles(ls, hd);
    }
    {
        auto ls = next_line("w_o");
        m.w_o = detail::read_doubles(ls, hd);
    }
    {
        auto ls = next_line("b_o");
        m.b_o = detail::read_doubles(ls, 1)[0];
    }
    {
        auto ls = next_line("feat_mean");
        m.feat_mean = detail::read_doubles(ls, id);
    }
    {
        auto ls = next_line("feat_std");
        m.feat_std = detail::read_doubles(ls, id);
    }
    {
        auto ls = next_line("loss_curve");
        m.meta.loss_curve = detail::read_doubles(ls, static_cast<std::size_t>(m.meta.epochs));
    }
    next_line("end");
    return m;
}

inline DwellModel load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open model file: " + path);
    return load_model(f);
}

}  // namespace freightledger::prediction
