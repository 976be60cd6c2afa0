#include "qostom/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace qostom {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

namespace {

LinkConfig link_from_json(const json& j, LinkConfig base = {}) {
    if (j.contains("capacity_bps")) base.capacity_bps = j["capacity_bps"].get<double>();
    if (j.contains("prop_delay_s")) base.prop_delay_s = j["prop_delay_s"].get<double>();
    if (j.contains("buffer_pkts")) base.buffer_pkts = j["buffer_pkts"].get<int>();
    return base;
}

TrafficProfile traffic_from_json(const json& j, TrafficProfile base = {}) {
    if (j.contains("flow_rate")) base.flow_rate = j["flow_rate"].get<double>();
    if (j.contains("pareto_shape")) base.pareto_shape = j["pareto_shape"].get<double>();
    if (j.contains("pareto_scale")) base.pareto_scale = j["pareto_scale"].get<double>();
    if (j.contains("flow_bps")) base.flow_bps = j["flow_bps"].get<double>();
    if (j.contains("multiplier")) base.multiplier = j["multiplier"].get<double>();
    return base;
}

json link_to_json(const LinkConfig& c) {
    return {{"capacity_bps", c.capacity_bps},
            {"prop_delay_s", c.prop_delay_s},
            {"buffer_pkts", c.buffer_pkts}};
}

json traffic_to_json(const TrafficProfile& t) {
    return {{"flow_rate", t.flow_rate},
            {"pareto_shape", t.pareto_shape},
            {"pareto_scale", t.pareto_scale},
            {"flow_bps", t.flow_bps},
            {"multiplier", t.multiplier}};
}

Direction direction_from_string(const std::string& s) {
    if (s == "two-sided") return Direction::two_sided;
    if (s == "lower") return Direction::lower_only;
    if (s == "upper") return Direction::upper_only;
    throw std::invalid_argument("unknown direction: " + s);
}

std::string direction_to_string(Direction d) {
    switch (d) {
        case Direction::two_sided: return "two-sided";
        case Direction::lower_only: return "lower";
        default: return "upper";
    }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    if (j.contains("topology")) {
        std::string t = j["topology"].get<std::string>();
        if (t != "default") c.topology_path = t;
    }
    if (j.contains("binning")) {
        const auto& b = j["binning"];
        if (b.contains("q")) c.binning.q = b["q"].get<double>();
        if (b.contains("b")) c.binning.b = b["b"].get<int>();
    }
    if (j.contains("mode")) {
        std::string m = j["mode"].get<std::string>();
        if (m == "generative")
            c.mode = SimMode::generative;
        else if (m == "queueing")
            c.mode = SimMode::queueing;
        else
            throw std::invalid_argument("unknown mode: " + m);
    }
    if (j.contains("truth")) {
        for (const auto& row : j["truth"]) c.truth.push_back(row.get<Pmf>());
    }
    if (j.contains("probe_rate")) c.probe_rate = j["probe_rate"].get<double>();
    if (j.contains("queueing")) {
        const auto& q = j["queueing"];
        LinkConfig lbase = q.contains("link_defaults") ? link_from_json(q["link_defaults"])
                                                       : LinkConfig{};
        TrafficProfile tbase = q.contains("traffic_defaults")
                                   ? traffic_from_json(q["traffic_defaults"])
                                   : TrafficProfile{};
        // sized lazily against the tree in run_experiment; store the bases at
        // index 0 growth via resolve below
        c.scenario.links.assign(1, lbase);
        c.scenario.traffic.assign(1, tbase);
        if (q.contains("links"))
            for (auto it = q["links"].begin(); it != q["links"].end(); ++it) {
                size_t k = std::stoul(it.key());
                if (c.scenario.links.size() < k) c.scenario.links.resize(k, lbase);
                c.scenario.links[k - 1] = link_from_json(it.value(), lbase);
            }
        if (q.contains("traffic"))
            for (auto it = q["traffic"].begin(); it != q["traffic"].end(); ++it) {
                size_t k = std::stoul(it.key());
                if (c.scenario.traffic.size() < k) c.scenario.traffic.resize(k, tbase);
                c.scenario.traffic[k - 1] = traffic_from_json(it.value(), tbase);
            }
        if (q.contains("probe_bytes")) c.scenario.probe_bytes = q["probe_bytes"].get<int>();
        if (q.contains("background_bytes"))
            c.scenario.background_bytes = q["background_bytes"].get<int>();
        if (q.contains("events"))
            for (const auto& e : q["events"])
                c.scenario.events.push_back({e.at("time_s").get<double>(),
                                             e.at("link_id").get<int>(),
                                             e.at("multiplier").get<double>()});
    }
    if (j.contains("window_s")) c.window_s = j["window_s"].get<double>();
    if (j.contains("duration_s")) c.duration_s = j["duration_s"].get<double>();
    if (j.contains("monitor")) {
        const auto& m = j["monitor"];
        if (m.contains("kind")) {
            std::string k = m["kind"].get<std::string>();
            if (k == "ewma-on-p")
                c.monitor.kind = MonitorKind::ewma_on_p;
            else if (k == "ewma-on-cdf")
                c.monitor.kind = MonitorKind::ewma_on_cdf;
            else if (k == "cusum-on-p")
                c.monitor.kind = MonitorKind::cusum_on_p;
            else
                throw std::invalid_argument("unknown monitor kind: " + k);
        }
        if (m.contains("lambda")) c.monitor.lambda = m["lambda"].get<double>();
        if (m.contains("L")) c.monitor.limit_mult = m["L"].get<double>();
        if (m.contains("kappa_mult")) c.monitor.kappa_mult = m["kappa_mult"].get<double>();
        if (m.contains("h_mult")) c.monitor.h_mult = m["h_mult"].get<double>();
        if (m.contains("sigma_floor")) c.monitor.sigma_floor = m["sigma_floor"].get<double>();
        if (m.contains("direction"))
            c.monitor.direction = direction_from_string(m["direction"].get<std::string>());
    }
    if (j.contains("baseline_windows")) c.baseline_windows = j["baseline_windows"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("em")) {
        const auto& e = j["em"];
        if (e.contains("tol")) c.em.tol = e["tol"].get<double>();
        if (e.contains("max_iter")) c.em.max_iter = e["max_iter"].get<int>();
        if (e.contains("alpha0_floor")) c.em.alpha0_floor = e["alpha0_floor"].get<double>();
    }
    return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig c = from_json(j);
    if (const char* env = std::getenv("QOSTOM_OUTPUT_DIR")) c.output_dir = env;
    if (const char* env = std::getenv("QOSTOM_SEED")) c.seed = std::strtoull(env, nullptr, 10);
    return c;
}

json ExperimentConfig::to_json() const {
    json j;
    j["topology"] = topology_path.empty() ? "default" : topology_path;
    j["binning"] = {{"q", binning.q}, {"b", binning.b}};
    j["mode"] = mode == SimMode::generative ? "generative" : "queueing";
    if (!truth.empty()) j["truth"] = truth;
    j["probe_rate"] = probe_rate;
    json q;
    json links = json::object(), traffic = json::object();
    for (size_t k = 0; k < scenario.links.size(); ++k)
        links[std::to_string(k + 1)] = link_to_json(scenario.links[k]);
    for (size_t k = 0; k < scenario.traffic.size(); ++k)
        traffic[std::to_string(k + 1)] = traffic_to_json(scenario.traffic[k]);
    q["links"] = links;
    q["traffic"] = traffic;
    q["probe_bytes"] = scenario.probe_bytes;
    q["background_bytes"] = scenario.background_bytes;
    json events = json::array();
    for (const auto& e : scenario.events)
        events.push_back({{"time_s", e.time_s}, {"link_id", e.link_id},
                          {"multiplier", e.multiplier}});
    q["events"] = events;
    j["queueing"] = q;
    j["window_s"] = window_s;
    j["duration_s"] = duration_s;
    std::string kind = monitor.kind == MonitorKind::ewma_on_p      ? "ewma-on-p"
                       : monitor.kind == MonitorKind::ewma_on_cdf ? "ewma-on-cdf"
                                                                  : "cusum-on-p";
    j["monitor"] = {{"kind", kind},
                    {"lambda", monitor.lambda},
                    {"L", monitor.limit_mult},
                    {"kappa_mult", monitor.kappa_mult},
                    {"h_mult", monitor.h_mult},
                    {"sigma_floor", monitor.sigma_floor},
                    {"direction", direction_to_string(monitor.direction)}};
    j["baseline_windows"] = baseline_windows;
    j["seed"] = seed;
    j["output_dir"] = output_dir;
    j["em"] = {{"tol", em.tol}, {"max_iter", em.max_iter}, {"alpha0_floor", em.alpha0_floor}};
    return j;
}

void ExperimentConfig::check() const {
    if (!(window_s > 0)) throw std::invalid_argument("window length must be positive");
    double ratio = duration_s / window_s;
    if (!(duration_s > 0) || std::abs(ratio - std::round(ratio)) > 1e-9)
        throw std::invalid_argument("duration must be a positive multiple of window length");
    if (!(binning.q > 0) || binning.b < 1) throw std::invalid_argument("invalid binning spec");
    if (baseline_windows < 2) throw std::invalid_argument("need >= 2 baseline windows");
    if (std::round(ratio) <= baseline_windows)
        throw std::invalid_argument("no monitored windows after baseline calibration");
}

std::vector<ProbeWindow> window_records(const std::vector<ProbeRecord>& records, double window_s) {
    std::vector<ProbeWindow> windows;
    std::vector<long> order(records.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<long>(i);
    std::stable_sort(order.begin(), order.end(), [&](long a, long b) {
        return records[a].send_time_s < records[b].send_time_s;
    });
    for (long idx : order) {
        const auto& r = records[idx];
        int w = static_cast<int>(std::floor(r.send_time_s / window_s));
        if ((w + 1) * window_s <= r.send_time_s) ++w;  // exact-edge correction
        if (static_cast<int>(windows.size()) <= w) windows.resize(w + 1);
        bool lost = false;
        for (const auto& d : r.leaf_delay_s)
            if (!d.has_value()) lost = true;
        if (lost) {
            ++windows[w].lost;
            windows[w].lost_idx.push_back(idx);
        } else {
            windows[w].record_idx.push_back(idx);
        }
    }
    return windows;
}

namespace {

std::vector<double> cdf_of(const Pmf& pmf) {
    std::vector<double> cdf(pmf.size());
    double acc = 0;
    for (size_t j = 0; j < pmf.size(); ++j) {
        acc += pmf[j];
        cdf[j] = std::min(acc, 1.0);
    }
    cdf.back() = 1.0;
    return cdf;
}

void apply_monitoring(const ExperimentConfig& config, ExperimentResult& res) {
    const int n_windows = static_cast<int>(res.windows.size());
    const int B = config.baseline_windows;
    const int L = res.tree.num_links;
    const MonitorConfig& mc = config.monitor;

    for (int k = 0; k < L; ++k) {
        std::vector<double> baseline_p;
        for (int w = 0; w < B && w < n_windows; ++w)
            baseline_p.push_back(res.windows[w].links[k].p_le_1);
        Baseline base = calibrate_baseline(baseline_p);
        double sigma0 = std::max(base.sigma0, mc.sigma_floor);

        EwmaState ewma;
        ewma.lambda = mc.lambda;
        ewma.limit_mult = mc.limit_mult;
        ewma.direction = mc.direction;
        ewma.set_baseline(base.mu0, sigma0);

        CusumState cusum;
        cusum.mu0 = base.mu0;
        cusum.kappa = mc.kappa_mult * sigma0;
        cusum.h = mc.h_mult * sigma0;

        CdfEwmaState cdf_state;
        cdf_state.lambda = mc.lambda;
        if (mc.kind == MonitorKind::ewma_on_cdf) {
            // start the smoothed CDF at the baseline-mean CDF
            std::vector<double> mean_cdf;
            for (int w = 0; w < B && w < n_windows; ++w) {
                auto c = cdf_of(res.windows[w].links[k].alpha);
                if (mean_cdf.empty()) mean_cdf.assign(c.size(), 0.0);
                for (size_t j = 0; j < c.size(); ++j) mean_cdf[j] += c[j] / B;
            }
            cdf_state.z = mean_cdf;
        }

        for (int w = B; w < n_windows; ++w) {
            auto& lw = res.windows[w].links[k];
            lw.monitored = true;
            switch (mc.kind) {
                case MonitorKind::ewma_on_p: {
                    EwmaStep st = ewma_step(ewma, lw.p_le_1);
                    lw.stat = st.z;
                    lw.lower = st.lower;
                    lw.upper = st.upper;
                    lw.alarm = st.alarm;
                    break;
                }
                case MonitorKind::ewma_on_cdf: {
                    ewma_cdf_step(cdf_state, cdf_of(lw.alpha));
                    int j1 = std::min(1, config.binning.b);
                    // reuse the EWMA limit machinery on the smoothed CDF value
                    ewma.z = cdf_state.z[j1];
                    ++ewma.t;
                    double lam = mc.lambda;
                    double vf = lam / (2.0 - lam) *
                                (1.0 - std::pow(1.0 - lam, 2.0 * static_cast<double>(ewma.t)));
                    double half = mc.limit_mult * sigma0 * std::sqrt(vf);
                    lw.stat = cdf_state.z[j1];
                    lw.lower = base.mu0 - half;
                    lw.upper = base.mu0 + half;
                    lw.alarm = mc.direction == Direction::lower_only ? lw.stat < lw.lower
                               : mc.direction == Direction::upper_only
                                   ? lw.stat > lw.upper
                                   : lw.stat < lw.lower || lw.stat > lw.upper;
                    break;
                }
                case MonitorKind::cusum_on_p: {
                    CusumStep st = cusum_step(cusum, lw.p_le_1);
                    lw.stat = mc.direction == Direction::lower_only ? st.s_neg : st.s_pos;
                    lw.lower = -cusum.h;
                    lw.upper = cusum.h;
                    switch (mc.direction) {
                        case Direction::lower_only: lw.alarm = st.s_neg > cusum.h; break;
                        case Direction::upper_only: lw.alarm = st.s_pos > cusum.h; break;
                        default: lw.alarm = st.alarm;
                    }
                    break;
                }
            }
            if (lw.alarm) res.any_alarm = true;
        }
    }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.check();
    ExperimentResult res;
    res.tree = config.topology_path.empty() ? LogicalTree::default_tree()
                                            : LogicalTree::from_json_file(config.topology_path);
    auto errors = validate(res.tree);
    if (!errors.empty()) throw std::invalid_argument("invalid topology: " + errors.front());
    res.identifiable = check_identifiability(res.tree).identifiable;
    const int L = res.tree.num_links;
    const int b = config.binning.b;

    std::vector<ProbeRecord> records;
    if (config.mode == SimMode::generative) {
        if (static_cast<int>(config.truth.size()) < L)
            throw std::invalid_argument("generative mode requires a truth PMF per link");
        long n = static_cast<long>(std::llround(config.duration_s * config.probe_rate));
        records = run_generative(res.tree, config.truth, n, config.binning.q, config.seed,
                                 config.probe_rate);
    } else {
        QueueingScenario sc = config.scenario;
        sc.links.resize(L, sc.links.empty() ? LinkConfig{} : sc.links.back());
        sc.traffic.resize(L, sc.traffic.empty() ? TrafficProfile{} : sc.traffic.back());
        sc.probe_rate = config.probe_rate;
        sc.duration_s = config.duration_s;
        records = run_queueing(res.tree, sc, config.seed);
    }

    auto windows = window_records(records, config.window_s);
    const int n_windows = static_cast<int>(std::llround(config.duration_s / config.window_s));
    windows.resize(n_windows);

    for (int w = 0; w < n_windows; ++w) {
        WindowReport rep;
        rep.index = w;
        rep.probes_used = static_cast<long>(windows[w].record_idx.size());
        rep.probes_lost = windows[w].lost;

        std::vector<BinnedObservation> obs;
        obs.reserve(windows[w].record_idx.size());
        for (long idx : windows[w].record_idx) {
            BinnedObservation o;
            for (const auto& d : records[idx].leaf_delay_s)
                o.units.push_back(discretize(*d, config.binning));
            obs.push_back(std::move(o));
        }
        if (obs.empty())
            throw std::runtime_error("window " + std::to_string(w) +
                                     ": no usable probes for inversion");

        auto t0 = std::chrono::steady_clock::now();
        EmResult em = em_invert(res.tree, obs, b, std::nullopt, config.em);
        auto t1 = std::chrono::steady_clock::now();
        rep.em_seconds = std::chrono::duration<double>(t1 - t0).count();
        rep.loglik = em.loglik;
        rep.em_iterations = em.iterations;
        rep.em_converged = em.converged;

        rep.links.resize(L);
        for (int k = 0; k < L; ++k) {
            rep.links[k].alpha = em.alpha[k];
            rep.links[k].p_le_1 = delay_cdf_at(em.alpha[k], std::min(1, b));

            long n_true = 0, n_le = 0;
            auto tally = [&](long idx) {
                double d = records[idx].link_delay_s[k];
                if (std::isfinite(d)) {
                    ++n_true;
                    if (discretize(d, config.binning) <= std::min(1, b)) ++n_le;
                }
            };
            for (long idx : windows[w].record_idx) tally(idx);
            for (long idx : windows[w].lost_idx) tally(idx);
            rep.links[k].true_p_le_1 =
                n_true > 0 ? static_cast<double>(n_le) / n_true
                           : std::numeric_limits<double>::quiet_NaN();
        }
        res.windows.push_back(std::move(rep));
    }

    apply_monitoring(config, res);
    return res;
}

namespace {

void write_svg(const ExperimentResult& res, int k, const std::string& path) {
    const int W = 420, H = 280, ml = 50, mr = 15, mt = 30, mb = 40;
    const int pw = W - ml - mr, ph = H - mt - mb;
    const int n = static_cast<int>(res.windows.size());
    auto xpos = [&](int w) { return ml + (n > 1 ? pw * w / (n - 1) : pw / 2); };
    auto ypos = [&](double p) { return mt + ph - static_cast<int>(ph * std::min(std::max(p, 0.0), 1.0)); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\">\n";
    svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">Link "
        << (k + 1) << ": P(delay &#8804; 1 unit)</text>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
        << mt + ph << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
        << "\" stroke=\"black\"/>\n";
    for (int g = 0; g <= 4; ++g) {
        double p = g / 4.0;
        svg << "<text x=\"" << ml - 6 << "\" y=\"" << ypos(p) + 4
            << "\" text-anchor=\"end\" font-size=\"10\">" << format_double(p) << "</text>\n";
    }
    for (int w = 0; w < n; ++w)
        svg << "<text x=\"" << xpos(w) << "\" y=\"" << mt + ph + 16
            << "\" text-anchor=\"middle\" font-size=\"10\">" << (w + 1) << "</text>\n";
    svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 8
        << "\" text-anchor=\"middle\" font-size=\"11\">window</text>\n";

    auto series = [&](bool truth, const char* color, int sw) {
        std::ostringstream pts;
        for (int w = 0; w < n; ++w) {
            double v = truth ? res.windows[w].links[k].true_p_le_1
                             : res.windows[w].links[k].p_le_1;
            if (!std::isfinite(v)) continue;
            pts << xpos(w) << "," << ypos(v) << " ";
        }
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << sw
            << "\" points=\"" << pts.str() << "\"/>\n";
        for (int w = 0; w < n; ++w) {
            double v = truth ? res.windows[w].links[k].true_p_le_1
                             : res.windows[w].links[k].p_le_1;
            if (!std::isfinite(v)) continue;
            svg << "<circle cx=\"" << xpos(w) << "\" cy=\"" << ypos(v) << "\" r=\"3\" fill=\""
                << color << "\"/>\n";
        }
    };
    series(true, "#bbbbbb", 2);   // light: observed true value
    series(false, "#222222", 2);  // dark: estimate
    svg << "</svg>\n";

    std::ofstream out(path, std::ios::binary);
    out << svg.str();
}

}  // namespace

void emit_reports(const ExperimentResult& res, const ExperimentConfig& config,
                  const std::string& output_dir) {
    if (res.windows.empty()) throw std::invalid_argument("no reports to emit");
    fs::create_directories(output_dir);
    const int L = res.tree.num_links;

    {
        std::ofstream out(fs::path(output_dir) / "alpha.csv", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write to " + output_dir);
        out << "window_index,link_id,bin_j,alpha_hat\n";
        for (const auto& w : res.windows)
            for (int k = 0; k < L; ++k)
                for (size_t j = 0; j < w.links[k].alpha.size(); ++j)
                    out << w.index << "," << (k + 1) << "," << j << ","
                        << format_double(w.links[k].alpha[j]) << "\n";
    }
    {
        std::ofstream out(fs::path(output_dir) / "summary.csv", std::ios::binary);
        out << "window_index,link_id,p_le_1,loglik,iterations\n";
        for (const auto& w : res.windows)
            for (int k = 0; k < L; ++k)
                out << w.index << "," << (k + 1) << "," << format_double(w.links[k].p_le_1)
                    << "," << format_double(w.loglik) << "," << w.em_iterations << "\n";
    }
    {
        std::ofstream out(fs::path(output_dir) / "truth.csv", std::ios::binary);
        out << "window_index,link_id,true_p_le_1\n";
        for (const auto& w : res.windows)
            for (int k = 0; k < L; ++k)
                out << w.index << "," << (k + 1) << ","
                    << format_double(w.links[k].true_p_le_1) << "\n";
    }
    {
        std::ofstream out(fs::path(output_dir) / "alarms.csv", std::ios::binary);
        out << "window_index,link_id,statistic,z_value,limit,alarm\n";
        for (const auto& w : res.windows)
            for (int k = 0; k < L; ++k) {
                if (!w.links[k].monitored) continue;
                double limit = config.monitor.direction == Direction::upper_only
                                   ? w.links[k].upper
                                   : w.links[k].lower;
                out << w.index << "," << (k + 1) << ",p_le_1,"
                    << format_double(w.links[k].stat) << "," << format_double(limit) << ","
                    << (w.links[k].alarm ? 1 : 0) << "\n";
            }
    }
    {
        std::ofstream out(fs::path(output_dir) / "config_echo.json", std::ios::binary);
        out << config.to_json().dump(2) << "\n";
    }
    for (int k = 0; k < L; ++k)
        write_svg(res, k,
                  (fs::path(output_dir) / ("link_" + std::to_string(k + 1) + ".svg")).string());
}

void write_probes_csv(const LogicalTree& tree, const std::vector<ProbeRecord>& records,
                      const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "probe_index,send_time_s,leaf_id,delay_s,lost\n";
    for (const auto& r : records)
        for (size_t li = 0; li < tree.leaves.size(); ++li) {
            out << r.index << "," << format_double(r.send_time_s) << ","
                << tree.names[tree.leaves[li]] << ",";
            if (r.leaf_delay_s[li].has_value())
                out << format_double(*r.leaf_delay_s[li]) << ",0\n";
            else
                out << ",1\n";
        }
}

std::vector<ProbeRecord> read_probes_csv(const LogicalTree& tree, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<int> leaf_pos(tree.names.size(), -1);
    for (size_t i = 0; i < tree.leaves.size(); ++i) leaf_pos[tree.leaves[i]] = static_cast<int>(i);

    std::vector<ProbeRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f_idx, f_send, f_leaf, f_delay, f_lost;
        std::getline(ss, f_idx, ',');
        std::getline(ss, f_send, ',');
        std::getline(ss, f_leaf, ',');
        std::getline(ss, f_delay, ',');
        std::getline(ss, f_lost, ',');
        long idx = std::stol(f_idx);
        if (static_cast<long>(records.size()) <= idx) {
            records.resize(idx + 1);
            records[idx].index = idx;
            records[idx].leaf_delay_s.assign(tree.leaves.size(), std::nullopt);
            records[idx].link_delay_s.assign(tree.num_links,
                                             std::numeric_limits<double>::quiet_NaN());
        }
        records[idx].send_time_s = std::stod(f_send);
        int node = tree.node_index(f_leaf);
        if (node < 0 || leaf_pos[node] < 0)
            throw std::runtime_error("unknown leaf in probes file: " + f_leaf);
        if (f_lost != "1") records[idx].leaf_delay_s[leaf_pos[node]] = std::stod(f_delay);
    }
    return records;
}

}  // namespace qostom
