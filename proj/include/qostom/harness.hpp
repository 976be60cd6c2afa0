#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "qostom/monitor.hpp"
#include "qostom/netsim.hpp"
#include "qostom/tomography.hpp"
#include "qostom/topology.hpp"

namespace qostom {

enum class SimMode { generative, queueing };
enum class MonitorKind { ewma_on_p, ewma_on_cdf, cusum_on_p };

struct MonitorConfig {
    MonitorKind kind = MonitorKind::ewma_on_p;
    double lambda = 0.2;
    double limit_mult = 3.0;   // L
    double kappa_mult = 0.5;   // CUSUM slack, in sigma0 units
    double h_mult = 4.0;       // CUSUM threshold, in sigma0 units
    double sigma_floor = 0.02;  // absolute floor on sigma0 (degenerate-baseline guard)
    Direction direction = Direction::lower_only;
};

struct ExperimentConfig {
    std::string topology_path;  // empty => built-in default tree
    BinningSpec binning;
    SimMode mode = SimMode::generative;
    std::vector<Pmf> truth;     // generative mode ground truth, per link id-1
    double probe_rate = 10.0;
    QueueingScenario scenario;  // queueing mode parameters (duration filled from below)
    double window_s = 600.0;
    double duration_s = 3600.0;
    MonitorConfig monitor;
    int baseline_windows = 2;
    uint64_t seed = 1;
    std::string output_dir = "out";
    EmOptions em;

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_json_file(const std::string& path);
    nlohmann::json to_json() const;
    // throws std::invalid_argument listing the first violation
    void check() const;
};

struct ProbeWindow {
    std::vector<long> record_idx;  // fully observed probes only
    std::vector<long> lost_idx;    // probes with at least one lost leaf copy
    long lost = 0;
};

// Partition by send time into half-open windows [i*W, (i+1)*W).
std::vector<ProbeWindow> window_records(const std::vector<ProbeRecord>& records, double window_s);

struct LinkWindowStat {
    Pmf alpha;
    double p_le_1 = 0.0;       // estimated P(delay <= 1 unit)
    double true_p_le_1 = 0.0;  // from the simulator's per-hop delays (NaN if unknown)
    double stat = 0.0;         // monitoring statistic
    double lower = 0.0, upper = 0.0;
    bool monitored = false;    // false during baseline calibration
    bool alarm = false;
};

struct WindowReport {
    int index = 0;
    long probes_used = 0;
    long probes_lost = 0;
    double loglik = 0.0;
    int em_iterations = 0;
    bool em_converged = false;
    double em_seconds = 0.0;
    std::vector<LinkWindowStat> links;  // per link id-1
};

struct ExperimentResult {
    LogicalTree tree;
    std::vector<WindowReport> windows;
    bool identifiable = true;
    bool any_alarm = false;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

// alpha.csv, summary.csv, alarms.csv, config_echo.json, link_<k>.svg
void emit_reports(const ExperimentResult& result, const ExperimentConfig& config,
                  const std::string& output_dir);

// CSV helpers shared with the CLI (12 significant digits, LF endings)
std::string format_double(double v);
void write_probes_csv(const LogicalTree& tree, const std::vector<ProbeRecord>& records,
                      const std::string& path);
std::vector<ProbeRecord> read_probes_csv(const LogicalTree& tree, const std::string& path);

}  // namespace qostom
