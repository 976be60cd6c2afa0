#include "qostom/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <random>
#include <stdexcept>

namespace qostom {

double sample_pareto(double shape, double scale, double u) {
    if (!(shape > 1)) throw std::invalid_argument("pareto shape must exceed 1");
    if (!(scale > 0)) throw std::invalid_argument("pareto scale must be positive");
    if (!(u > 0) || !(u <= 1)) throw std::invalid_argument("u out of (0,1]");
    return scale * std::pow(u, -1.0 / shape);
}

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic uniform/exponential draws independent of libstdc++
// distribution internals.
struct Rng {
    std::mt19937_64 eng;
    explicit Rng(uint64_t seed) : eng(seed) {}
    // (0, 1]
    double uniform() { return 1.0 - static_cast<double>(eng() >> 11) * 0x1.0p-53; }
    double exponential(double rate) { return -std::log(uniform()) / rate; }
};

int sample_unit(const Pmf& pmf, double u) {
    double acc = 0.0;
    for (size_t j = 0; j < pmf.size(); ++j) {
        acc += pmf[j];
        if (u <= acc) return static_cast<int>(j);
    }
    return static_cast<int>(pmf.size()) - 1;
}

}  // namespace

std::vector<ProbeRecord> run_generative(const LogicalTree& tree, const std::vector<Pmf>& truth,
                                        long n_probes, double q, uint64_t seed,
                                        double probe_rate) {
    if (static_cast<int>(truth.size()) < tree.num_links)
        throw std::invalid_argument("PMF missing for some link");
    for (const auto& p : truth)
        if (!is_valid_pmf(p)) throw std::invalid_argument("invalid truth PMF");
    auto errors = validate(tree);
    if (!errors.empty()) throw std::invalid_argument("invalid tree: " + errors.front());

    const int b = static_cast<int>(truth.front().size()) - 1;
    std::vector<std::vector<int>> leaf_paths;
    for (int leaf : tree.leaves) leaf_paths.push_back(path_links(tree, leaf));

    Rng rng(splitmix64(seed));
    std::vector<ProbeRecord> records;
    records.reserve(n_probes);
    std::vector<int> units(tree.num_links);
    for (long i = 0; i < n_probes; ++i) {
        ProbeRecord rec;
        rec.index = i;
        rec.send_time_s = static_cast<double>(i) / probe_rate;
        for (int k = 0; k < tree.num_links; ++k) units[k] = sample_unit(truth[k], rng.uniform());
        rec.link_delay_s.resize(tree.num_links);
        for (int k = 0; k < tree.num_links; ++k) rec.link_delay_s[k] = units[k] * q;
        for (const auto& path : leaf_paths) {
            int sum = 0;
            for (int k : path) sum = std::min(sum + units[k - 1], b);
            rec.leaf_delay_s.push_back(sum * q);
        }
        records.push_back(std::move(rec));
    }
    return records;
}

namespace {

enum EvType { EV_MULT, EV_FLOW_ARRIVAL, EV_FLOW_PACKET, EV_DEPARTURE, EV_NODE_ARRIVAL, EV_PROBE_SEND };

struct Ev {
    double t;
    uint64_t seq;
    int type;
    int link = 0;   // link index (id-1) or node index for EV_NODE_ARRIVAL
    long a = 0;     // probe index / flow-arrival generation
    double x = 0;   // flow end time / new multiplier
    double y = 0;   // flow packet interval
};

struct EvCmp {
    bool operator()(const Ev& l, const Ev& r) const {
        if (l.t != r.t) return l.t > r.t;
        return l.seq > r.seq;
    }
};

struct QueuedPkt {
    double enq_t;
    double bits;
    long probe_idx;  // -1 for background
    int to_node;
};

struct LinkState {
    std::deque<QueuedPkt> queue;  // front is in service
    bool busy = false;
    double mult = 1.0;
    long arrival_gen = 0;
    double next_arrival_t = 0.0;
};

}  // namespace

std::vector<ProbeRecord> run_queueing(const LogicalTree& tree, const QueueingScenario& sc,
                                      uint64_t seed) {
    auto errors = validate(tree);
    if (!errors.empty()) throw std::invalid_argument("invalid tree: " + errors.front());
    if (!(sc.duration_s > 0)) throw std::invalid_argument("nonpositive duration");
    const int L = tree.num_links;
    if (static_cast<int>(sc.links.size()) < L || static_cast<int>(sc.traffic.size()) < L)
        throw std::invalid_argument("link config/traffic profile missing for some link");
    for (const auto& ev : sc.events)
        if (ev.link_id < 1 || ev.link_id > L)
            throw std::invalid_argument("event references unknown link " +
                                        std::to_string(ev.link_id));

    // node index the link with id k leads to
    std::vector<int> link_to_node(L, -1);
    for (size_t v = 0; v < tree.names.size(); ++v)
        if (tree.parent[v] >= 0) link_to_node[tree.link_id[v] - 1] = static_cast<int>(v);

    std::vector<int> leaf_pos(tree.names.size(), -1);
    for (size_t i = 0; i < tree.leaves.size(); ++i) leaf_pos[tree.leaves[i]] = static_cast<int>(i);

    const double probe_bits = sc.probe_bytes * 8.0;
    const double bg_bits = sc.background_bytes * 8.0;
    const long n_probes = static_cast<long>(std::ceil(sc.duration_s * sc.probe_rate - 1e-9));

    std::vector<ProbeRecord> records(n_probes);
    for (long i = 0; i < n_probes; ++i) {
        records[i].index = i;
        records[i].send_time_s = static_cast<double>(i) / sc.probe_rate;
        records[i].leaf_delay_s.assign(tree.leaves.size(), std::nullopt);
        records[i].link_delay_s.assign(L, std::numeric_limits<double>::quiet_NaN());
    }

    std::vector<LinkState> links(L);
    std::vector<Rng> rngs;
    rngs.reserve(L);
    for (int k = 0; k < L; ++k) rngs.emplace_back(splitmix64(seed ^ (0x51ed27f1ULL * (k + 1))));

    std::priority_queue<Ev, std::vector<Ev>, EvCmp> heap;
    uint64_t seq = 0;
    auto push = [&](Ev e) {
        e.seq = seq++;
        heap.push(e);
    };

    // scenario events first so their presence only shifts later sequence
    // numbers by a constant (keeps pre-event ordering identical to a
    // no-event run with the same seed)
    for (const auto& ev : sc.events)
        push({ev.time_s, 0, EV_MULT, ev.link_id - 1, 0, ev.multiplier, 0});

    for (int k = 0; k < L; ++k) {
        links[k].mult = sc.traffic[k].multiplier;
        double rate = sc.traffic[k].flow_rate * links[k].mult;
        if (rate > 0) {
            links[k].next_arrival_t = rngs[k].exponential(rate);
            push({links[k].next_arrival_t, 0, EV_FLOW_ARRIVAL, k, links[k].arrival_gen, 0, 0});
        }
    }
    if (n_probes > 0) push({0.0, 0, EV_PROBE_SEND, 0, 0, 0, 0});

    auto start_service = [&](int k, double t) {
        links[k].busy = true;
        double svc = links[k].queue.front().bits / sc.links[k].capacity_bps;
        push({t + svc, 0, EV_DEPARTURE, k, 0, 0, 0});
    };

    auto enqueue = [&](int k, double t, QueuedPkt pkt) {
        if (static_cast<int>(links[k].queue.size()) >= sc.links[k].buffer_pkts) return;  // drop
        pkt.enq_t = t;
        links[k].queue.push_back(pkt);
        if (!links[k].busy) start_service(k, t);
    };

    auto probe_at_node = [&](int v, double t, long idx) {
        if (tree.is_leaf(v)) {
            records[idx].leaf_delay_s[leaf_pos[v]] = t - records[idx].send_time_s;
            return;
        }
        for (int c : tree.children[v])
            enqueue(tree.link_id[c] - 1, t, {t, probe_bits, idx, c});
    };

    while (!heap.empty()) {
        Ev e = heap.top();
        heap.pop();
        switch (e.type) {
            case EV_MULT: {
                int k = e.link;
                double old_mult = links[k].mult;
                links[k].mult = e.x;
                // exponential memorylessness: rescale the pending interarrival
                // instead of redrawing, so earlier draws stay untouched
                if (links[k].next_arrival_t > e.t && old_mult > 0 && e.x > 0) {
                    double rescaled = e.t + (links[k].next_arrival_t - e.t) * old_mult / e.x;
                    links[k].next_arrival_t = rescaled;
                    ++links[k].arrival_gen;
                    push({rescaled, 0, EV_FLOW_ARRIVAL, k, links[k].arrival_gen, 0, 0});
                }
                break;
            }
            case EV_FLOW_ARRIVAL: {
                int k = e.link;
                if (e.a != links[k].arrival_gen) break;  // superseded by a multiplier change
                if (e.t >= sc.duration_s) break;
                const auto& tp = sc.traffic[k];
                double lifetime = sample_pareto(tp.pareto_shape, tp.pareto_scale,
                                                rngs[k].uniform());
                double interval = bg_bits / tp.flow_bps;
                push({e.t, 0, EV_FLOW_PACKET, k, 0, e.t + lifetime, interval});
                double rate = tp.flow_rate * links[k].mult;
                links[k].next_arrival_t = e.t + rngs[k].exponential(rate);
                ++links[k].arrival_gen;
                push({links[k].next_arrival_t, 0, EV_FLOW_ARRIVAL, k, links[k].arrival_gen, 0, 0});
                break;
            }
            case EV_FLOW_PACKET: {
                int k = e.link;
                enqueue(k, e.t, {e.t, bg_bits, -1, -1});
                double next = e.t + e.y;
                if (next <= e.x && next < sc.duration_s)
                    push({next, 0, EV_FLOW_PACKET, k, 0, e.x, e.y});
                break;
            }
            case EV_DEPARTURE: {
                int k = e.link;
                QueuedPkt pkt = links[k].queue.front();
                links[k].queue.pop_front();
                links[k].busy = false;
                if (!links[k].queue.empty()) start_service(k, e.t);
                if (pkt.probe_idx >= 0) {
                    double arrive = e.t + sc.links[k].prop_delay_s;
                    records[pkt.probe_idx].link_delay_s[k] = arrive - pkt.enq_t;
                    push({arrive, 0, EV_NODE_ARRIVAL, pkt.to_node, pkt.probe_idx, 0, 0});
                }
                break;
            }
            case EV_NODE_ARRIVAL:
                probe_at_node(e.link, e.t, e.a);
                break;
            case EV_PROBE_SEND: {
                long idx = e.a;
                probe_at_node(0, e.t, idx);  // root duplicates onto its child links
                if (idx + 1 < n_probes)
                    push({static_cast<double>(idx + 1) / sc.probe_rate, 0, EV_PROBE_SEND, 0,
                          idx + 1, 0, 0});
                break;
            }
        }
    }
    return records;
}

double calibrate_background_rate(const LinkConfig& link, const TrafficProfile& profile,
                                 double target_delay_s, double target_quantile,
                                 double pilot_duration_s, uint64_t seed) {
    LogicalTree tree = LogicalTree::build("s", {{1, "s", "a"}, {2, "a", "d1"}, {3, "a", "d2"}});

    auto hop_quantile = [&](double rate) {
        QueueingScenario sc;
        sc.links.assign(3, link);
        TrafficProfile quiet = profile;
        quiet.flow_rate = 0.0;
        sc.traffic.assign(3, quiet);
        sc.traffic[0] = profile;
        sc.traffic[0].flow_rate = rate;
        sc.duration_s = pilot_duration_s;
        auto records = run_queueing(tree, sc, seed);
        std::vector<double> hops;
        for (const auto& r : records)
            if (std::isfinite(r.link_delay_s[0])) hops.push_back(r.link_delay_s[0]);
        if (hops.empty()) return std::numeric_limits<double>::infinity();
        std::sort(hops.begin(), hops.end());
        size_t idx = static_cast<size_t>(std::ceil(target_quantile * hops.size())) - 1;
        return hops[std::min(idx, hops.size() - 1)];
    };

    // bracket then bisect on the arrival rate
    double lo = 0.0, hi = profile.flow_rate > 0 ? profile.flow_rate : 1.0;
    for (int i = 0; i < 20 && hop_quantile(hi) < target_delay_s; ++i) {
        lo = hi;
        hi *= 2.0;
    }
    for (int i = 0; i < 25; ++i) {
        double mid = 0.5 * (lo + hi);
        if (hop_quantile(mid) < target_delay_s)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace qostom
