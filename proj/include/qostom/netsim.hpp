#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qostom/tomography.hpp"
#include "qostom/topology.hpp"

namespace qostom {

struct LinkConfig {
    double capacity_bps = 10e6;
    double prop_delay_s = 0.001;
    int buffer_pkts = 100;  // queue occupancy limit, including the packet in service
};

// Background load on one link: flows arrive with exponential interarrivals,
// live a Pareto-distributed lifetime and emit constant-rate packets. A crude
// stand-in for TCP/UDP connection churn; no congestion feedback.
struct TrafficProfile {
    double flow_rate = 2.5;       // flows/second
    double pareto_shape = 1.5;    // > 1 so mean lifetime is finite
    double pareto_scale = 1.0;    // seconds
    double flow_bps = 500e3;      // per-flow emission rate
    double multiplier = 1.0;      // initial load multiplier
};

struct ScenarioEvent {
    double time_s = 0.0;
    int link_id = 0;
    double multiplier = 1.0;  // replaces the link's current multiplier
};

struct ProbeRecord {
    long index = 0;
    double send_time_s = 0.0;
    // per tree.leaves order; nullopt == probe copy lost before that leaf
    std::vector<std::optional<double>> leaf_delay_s;
    // per link id-1: per-hop delay (wait + service + propagation) of this
    // probe's copy on that link; NaN when the copy never completed the hop
    std::vector<double> link_delay_s;
};

// Inverse-CDF Pareto draw; u in (0,1], u == 1 gives the scale exactly.
double sample_pareto(double shape, double scale, double u);

// Oracle mode: one unit draw per link per probe from the ground-truth PMFs,
// shared by every leaf below the link; leaf delay = saturating path sum * q.
std::vector<ProbeRecord> run_generative(const LogicalTree& tree, const std::vector<Pmf>& truth,
                                        long n_probes, double q, uint64_t seed,
                                        double probe_rate = 10.0);

struct QueueingScenario {
    std::vector<LinkConfig> links;        // per link id-1
    std::vector<TrafficProfile> traffic;  // per link id-1
    double probe_rate = 10.0;             // probes/second, multicast from the root
    int probe_bytes = 40;
    int background_bytes = 1000;
    std::vector<ScenarioEvent> events;
    double duration_s = 3600.0;
};

std::vector<ProbeRecord> run_queueing(const LogicalTree& tree, const QueueingScenario& scenario,
                                      uint64_t seed);

// Tuning aid: binary-search the flow arrival rate so that the requested
// quantile of per-hop probe delay on a single loaded link lands near
// target_delay_s (pilot runs on a 2-leaf star with traffic on link 1 only).
double calibrate_background_rate(const LinkConfig& link, const TrafficProfile& profile,
                                 double target_delay_s, double target_quantile = 0.8,
                                 double pilot_duration_s = 120.0, uint64_t seed = 1);

}  // namespace qostom
