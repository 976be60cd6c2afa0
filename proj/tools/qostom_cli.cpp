#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qostom/harness.hpp"
#include "qostom/monitor.hpp"
#include "qostom/netsim.hpp"
#include "qostom/streamq.hpp"
#include "qostom/tomography.hpp"
#include "qostom/topology.hpp"

namespace fs = std::filesystem;
using namespace qostom;

namespace {

constexpr int EXIT_OK = 0;
constexpr int EXIT_CONFIG = 1;
constexpr int EXIT_RUNTIME = 2;
constexpr int EXIT_ALARMS = 3;

LogicalTree load_tree(const std::string& path) {
    return path.empty() || path == "default" ? LogicalTree::default_tree()
                                             : LogicalTree::from_json_file(path);
}

std::vector<ProbeRecord> simulate_from_config(const ExperimentConfig& c,
                                              const LogicalTree& tree) {
    if (c.mode == SimMode::generative) {
        long n = static_cast<long>(c.duration_s * c.probe_rate + 0.5);
        return run_generative(tree, c.truth, n, c.binning.q, c.seed, c.probe_rate);
    }
    QueueingScenario sc = c.scenario;
    sc.links.resize(tree.num_links, sc.links.empty() ? LinkConfig{} : sc.links.back());
    sc.traffic.resize(tree.num_links,
                      sc.traffic.empty() ? TrafficProfile{} : sc.traffic.back());
    sc.probe_rate = c.probe_rate;
    sc.duration_s = c.duration_s;
    return run_queueing(tree, sc, c.seed);
}

int cmd_simulate(const std::string& config_path, const std::string& out_path) {
    auto c = ExperimentConfig::from_json_file(config_path);
    c.check();
    auto tree = load_tree(c.topology_path);
    auto errors = validate(tree);
    if (!errors.empty()) throw std::invalid_argument("invalid topology: " + errors.front());
    auto records = simulate_from_config(c, tree);
    write_probes_csv(tree, records, out_path);
    std::cout << records.size() << " probes written to " << out_path << "\n";
    return EXIT_OK;
}

int cmd_invert(const std::string& probes_path, const std::string& topology_path, double q,
               int b, const std::string& out_dir) {
    auto tree = load_tree(topology_path);
    auto errors = validate(tree);
    if (!errors.empty()) throw std::invalid_argument("invalid topology: " + errors.front());
    auto ident = check_identifiability(tree);
    if (!ident.identifiable)
        std::cerr << "warning: topology is not identifiable; estimates are init-dependent\n";

    auto records = read_probes_csv(tree, probes_path);
    BinningSpec spec{q, b};
    std::vector<BinnedObservation> obs;
    for (const auto& r : records) {
        bool lost = false;
        for (const auto& d : r.leaf_delay_s)
            if (!d.has_value()) lost = true;
        if (lost) continue;
        BinnedObservation o;
        for (const auto& d : r.leaf_delay_s) o.units.push_back(discretize(*d, spec));
        obs.push_back(std::move(o));
    }
    if (obs.empty()) throw std::runtime_error("no usable probes in " + probes_path);
    auto res = em_invert(tree, obs, b);

    fs::create_directories(out_dir);
    std::ofstream alpha(fs::path(out_dir) / "alpha.csv", std::ios::binary);
    alpha << "window_index,link_id,bin_j,alpha_hat\n";
    std::ofstream summary(fs::path(out_dir) / "summary.csv", std::ios::binary);
    summary << "window_index,link_id,p_le_1,loglik,iterations\n";
    for (int k = 0; k < tree.num_links; ++k) {
        for (int j = 0; j <= b; ++j)
            alpha << "0," << (k + 1) << "," << j << "," << format_double(res.alpha[k][j])
                  << "\n";
        summary << "0," << (k + 1) << ","
                << format_double(delay_cdf_at(res.alpha[k], std::min(1, b))) << ","
                << format_double(res.loglik) << "," << res.iterations << "\n";
    }
    std::cout << "EM " << (res.converged ? "converged" : "hit max iterations") << " after "
              << res.iterations << " iterations, loglik " << format_double(res.loglik) << "\n";
    return EXIT_OK;
}

int cmd_monitor(const std::string& stats_path, double lambda, double L, double sigma_floor,
                const std::string& direction, int baseline, const std::string& out_path) {
    // input: CSV with header, columns window_index,link_id,value
    std::ifstream in(stats_path);
    if (!in) throw std::invalid_argument("cannot open " + stats_path);
    std::string line;
    std::getline(in, line);
    std::map<int, std::map<int, double>> by_link;  // link -> window -> value
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string w, k, v;
        std::getline(ss, w, ',');
        std::getline(ss, k, ',');
        std::getline(ss, v, ',');
        by_link[std::stoi(k)][std::stoi(w)] = std::stod(v);
    }
    Direction dir = direction == "two-sided" ? Direction::two_sided
                    : direction == "upper"   ? Direction::upper_only
                                             : Direction::lower_only;
    std::ofstream out(out_path, std::ios::binary);
    out << "window_index,link_id,statistic,z_value,limit,alarm\n";
    bool any_alarm = false;
    for (const auto& [k, series] : by_link) {
        std::vector<double> base_vals;
        auto it = series.begin();
        for (int i = 0; i < baseline && it != series.end(); ++i, ++it)
            base_vals.push_back(it->second);
        if (base_vals.size() < 2)
            throw std::runtime_error("link " + std::to_string(k) +
                                     ": not enough windows for baseline");
        Baseline b = calibrate_baseline(base_vals);
        EwmaState st;
        st.lambda = lambda;
        st.limit_mult = L;
        st.direction = dir;
        st.set_baseline(b.mu0, std::max(b.sigma0, sigma_floor));
        for (; it != series.end(); ++it) {
            EwmaStep step = ewma_step(st, it->second);
            double limit = dir == Direction::upper_only ? step.upper : step.lower;
            out << it->first << "," << k << ",value," << format_double(step.z) << ","
                << format_double(limit) << "," << (step.alarm ? 1 : 0) << "\n";
            any_alarm = any_alarm || step.alarm;
        }
    }
    return any_alarm ? EXIT_ALARMS : EXIT_OK;
}

int cmd_experiment(const std::string& config_path, const std::string& out_override) {
    auto c = ExperimentConfig::from_json_file(config_path);
    if (!out_override.empty()) c.output_dir = out_override;
    auto res = run_experiment(c);
    emit_reports(res, c, c.output_dir);
    if (!res.identifiable)
        std::cerr << "warning: topology is not identifiable; estimates are init-dependent\n";
    int alarmed = 0;
    for (const auto& w : res.windows)
        for (size_t k = 0; k < w.links.size(); ++k)
            if (w.links[k].alarm) {
                std::cout << "alarm: window " << w.index << " link " << (k + 1)
                          << " stat " << format_double(w.links[k].stat) << " < "
                          << format_double(w.links[k].lower) << "\n";
                ++alarmed;
            }
    std::cout << res.windows.size() << " windows -> " << c.output_dir << " (" << alarmed
              << " alarm rows)\n";
    return res.any_alarm ? EXIT_ALARMS : EXIT_OK;
}

int cmd_quantiles(size_t buffer_size, const std::vector<double>& probs) {
    auto state = probs.empty() ? QuantileSet::default_set() : QuantileSet::with_probs(probs);
    DataBuffer buf;
    buf.capacity = buffer_size;
    double v;
    std::cout << "p,q,n\n";
    auto flush = [&]() {
        if (buf.values.empty()) return;
        iqe_update(state, buf);
        for (size_t i = 0; i < state.probs.size(); ++i)
            std::cout << format_double(state.probs[i]) << ","
                      << format_double(state.estimates[i]) << "," << format_double(state.n)
                      << "\n";
    };
    while (std::cin >> v) {
        buf.push(v);
        if (buf.full()) flush();
    }
    flush();
    return EXIT_OK;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Active tomography QoS monitoring toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_path = "probes.csv", out_dir = "out", out_override;
    std::string probes_path, topology_path = "default", stats_path, direction = "lower";
    double q = 0.005, lambda = 0.2, L = 3.0, sigma_floor = 0.0;
    int b = 9, baseline = 2;
    size_t buffer_size = 100;
    std::vector<double> probs;

    auto* sim = app.add_subcommand("simulate", "run a simulation and write probe records");
    sim->add_option("config", config_path, "experiment config JSON")->required();
    sim->add_option("-o,--output", out_path, "probes CSV path");

    auto* inv = app.add_subcommand("invert", "invert probe delays into per-link delay PMFs");
    inv->add_option("probes", probes_path, "probes CSV from simulate")->required();
    inv->add_option("-t,--topology", topology_path, "topology JSON or 'default'");
    inv->add_option("-q,--bin-width", q, "bin width in seconds");
    inv->add_option("-b,--top-bin", b, "top bin index");
    inv->add_option("-o,--output", out_dir, "output directory");

    auto* mon = app.add_subcommand("monitor", "EWMA change detection over a statistic CSV");
    mon->add_option("stats", stats_path, "CSV: window_index,link_id,value")->required();
    mon->add_option("--lambda", lambda, "EWMA weight");
    mon->add_option("-L,--limit", L, "control limit multiplier");
    mon->add_option("--sigma-floor", sigma_floor, "absolute floor on baseline sigma");
    mon->add_option("--direction", direction, "lower|upper|two-sided");
    mon->add_option("--baseline", baseline, "baseline window count");
    mon->add_option("-o,--output", out_path, "alarms CSV path");

    auto* exp = app.add_subcommand("experiment", "full pipeline: simulate, invert, monitor, report");
    exp->add_option("config", config_path, "experiment config JSON")->required();
    exp->add_option("-o,--output", out_override, "override output directory");

    auto* quant = app.add_subcommand("quantiles", "incremental quantile estimation over stdin");
    quant->add_option("-n,--buffer", buffer_size, "buffer size per update");
    quant->add_option("-p,--probs", probs, "tracked probabilities");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(config_path, out_path);
        if (inv->parsed()) return cmd_invert(probes_path, topology_path, q, b, out_dir);
        if (mon->parsed())
            return cmd_monitor(stats_path, lambda, L, sigma_floor, direction, baseline,
                               out_path == "probes.csv" ? "alarms.csv" : out_path);
        if (exp->parsed()) return cmd_experiment(config_path, out_override);
        if (quant->parsed()) return cmd_quantiles(buffer_size, probs);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return EXIT_CONFIG;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return EXIT_RUNTIME;
    }
    return EXIT_OK;
}
