#include "qostom/tomography.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace qostom {

int discretize(double delay_s, const BinningSpec& spec) {
    if (!(delay_s >= 0)) throw std::invalid_argument("negative delay");
    int j = static_cast<int>(std::floor(delay_s / spec.q));
    // correct a floating floor that landed one bin off an exact edge
    if ((j + 1) * spec.q <= delay_s)
        ++j;
    else if (j > 0 && j * spec.q > delay_s)
        --j;
    return std::min(j, spec.b);
}

bool is_valid_pmf(const Pmf& p, double tol) {
    if (p.empty()) return false;
    double sum = 0;
    for (double x : p) {
        if (!(x >= 0) || !std::isfinite(x)) return false;
        sum += x;
    }
    return std::abs(sum - 1.0) <= tol;
}

Pmf uniform_pmf(int b) { return Pmf(b + 1, 1.0 / (b + 1)); }

Pmf point_mass(int b, int j) {
    Pmf p(b + 1, 0.0);
    p.at(j) = 1.0;
    return p;
}

Pmf convolve_pmf(const Pmf& a, const Pmf& c) {
    if (!is_valid_pmf(a) || !is_valid_pmf(c) || a.size() != c.size())
        throw std::invalid_argument("convolve_pmf: invalid PMF input");
    const int b = static_cast<int>(a.size()) - 1;
    Pmf out(b + 1, 0.0);
    for (int u = 0; u <= b; ++u)
        for (int v = 0; v <= b; ++v) out[std::min(u + v, b)] += a[u] * c[v];
    return out;
}

Pmf path_delay_pmf(const LogicalTree& tree, const std::vector<Pmf>& link_pmfs, int leaf) {
    std::vector<int> links = path_links(tree, leaf);
    const int b = static_cast<int>(link_pmfs.at(links.front() - 1).size()) - 1;
    Pmf acc = point_mass(b, 0);
    for (int k : links) {
        if (k - 1 >= static_cast<int>(link_pmfs.size()))
            throw std::invalid_argument("missing PMF for link " + std::to_string(k));
        acc = convolve_pmf(acc, link_pmfs[k - 1]);
    }
    return acc;
}

double delay_cdf_at(const Pmf& pmf, int j) {
    if (j < 0 || j >= static_cast<int>(pmf.size()))
        throw std::invalid_argument("bin index out of range");
    return std::accumulate(pmf.begin(), pmf.begin() + j + 1, 0.0);
}

std::vector<Pattern> dedup_observations(const std::vector<BinnedObservation>& obs) {
    std::map<std::vector<int>, double> acc;
    for (const auto& o : obs) acc[o.units] += 1.0;
    std::vector<Pattern> out;
    out.reserve(acc.size());
    for (auto& [units, w] : acc) out.push_back({units, w});
    return out;
}

namespace {

struct TreeOrder {
    std::vector<int> bfs;            // root first
    std::vector<int> leaf_pos;       // node index -> position in pattern, -1 otherwise
};

TreeOrder make_order(const LogicalTree& tree) {
    TreeOrder ord;
    ord.leaf_pos.assign(tree.names.size(), -1);
    for (size_t i = 0; i < tree.leaves.size(); ++i)
        ord.leaf_pos[tree.leaves[i]] = static_cast<int>(i);
    ord.bfs.push_back(0);
    for (size_t i = 0; i < ord.bfs.size(); ++i)
        for (int c : tree.children[ord.bfs[i]]) ord.bfs.push_back(c);
    return ord;
}

// Upward pass: lambda[v][s] = P(leaves under v | accumulated delay at v = s).
void upward(const LogicalTree& tree, const TreeOrder& ord, const std::vector<Pmf>& alpha,
            const std::vector<int>& units, int b, std::vector<std::vector<double>>& lambda) {
    const int S = b + 1;
    for (auto it = ord.bfs.rbegin(); it != ord.bfs.rend(); ++it) {
        int v = *it;
        auto& lv = lambda[v];
        lv.assign(S, 0.0);
        if (tree.is_leaf(v)) {
            lv[units[ord.leaf_pos[v]]] = 1.0;
            continue;
        }
        std::fill(lv.begin(), lv.end(), 1.0);
        for (int c : tree.children[v]) {
            const Pmf& a = alpha[tree.link_id[c] - 1];
            for (int s = 0; s < S; ++s) {
                double m = 0;
                for (int j = 0; j < S; ++j) m += a[j] * lambda[c][std::min(s + j, b)];
                lv[s] *= m;
            }
        }
    }
}

}  // namespace

LogLik loglik(const LogicalTree& tree, const std::vector<Pmf>& link_pmfs,
              const std::vector<Pattern>& patterns, int b) {
    for (const auto& p : link_pmfs)
        if (!is_valid_pmf(p)) throw std::invalid_argument("loglik: invalid PMF");
    TreeOrder ord = make_order(tree);
    std::vector<std::vector<double>> lambda(tree.names.size());
    LogLik out;
    for (const auto& pat : patterns) {
        upward(tree, ord, link_pmfs, pat.units, b, lambda);
        double P = lambda[0][0];
        if (!(P > 0)) {
            out.degenerate = true;
            out.value = -std::numeric_limits<double>::infinity();
            return out;
        }
        out.value += pat.weight * std::log(P);
    }
    return out;
}

EStep em_expected_counts(const LogicalTree& tree, const std::vector<Pmf>& alpha,
                         const std::vector<Pattern>& patterns, int b) {
    const int S = b + 1;
    const size_t nn = tree.names.size();
    TreeOrder ord = make_order(tree);

    EStep es;
    es.counts.assign(tree.num_links, std::vector<double>(S, 0.0));

    std::vector<std::vector<double>> lambda(nn), betaw(nn);
    std::vector<double> m_buf;  // per-child messages at the current node

    for (const auto& pat : patterns) {
        upward(tree, ord, alpha, pat.units, b, lambda);
        double P = lambda[0][0];
        if (!(P > 0)) {
            es.ll.degenerate = true;
            es.ll.value = -std::numeric_limits<double>::infinity();
            continue;
        }
        es.ll.value += pat.weight * std::log(P);
        const double scale = pat.weight / P;

        for (auto& bw : betaw) bw.clear();
        betaw[0].assign(S, 0.0);
        betaw[0][0] = 1.0;

        for (int v : ord.bfs) {
            if (tree.is_leaf(v)) continue;
            const auto& kids = tree.children[v];
            const int nc = static_cast<int>(kids.size());
            // messages m_c(s) for every child, then prefix/suffix products so
            // each child sees the others' evidence without division
            m_buf.assign(static_cast<size_t>(nc) * S, 0.0);
            for (int ci = 0; ci < nc; ++ci) {
                const Pmf& a = alpha[tree.link_id[kids[ci]] - 1];
                const auto& lc = lambda[kids[ci]];
                for (int s = 0; s < S; ++s) {
                    double m = 0;
                    for (int j = 0; j < S; ++j) m += a[j] * lc[std::min(s + j, b)];
                    m_buf[ci * S + s] = m;
                }
            }
            std::vector<double> pre(static_cast<size_t>(nc + 1) * S, 1.0);
            std::vector<double> suf(static_cast<size_t>(nc + 1) * S, 1.0);
            for (int ci = 0; ci < nc; ++ci)
                for (int s = 0; s < S; ++s)
                    pre[(ci + 1) * S + s] = pre[ci * S + s] * m_buf[ci * S + s];
            for (int ci = nc - 1; ci >= 0; --ci)
                for (int s = 0; s < S; ++s)
                    suf[ci * S + s] = suf[(ci + 1) * S + s] * m_buf[ci * S + s];

            for (int ci = 0; ci < nc; ++ci) {
                int c = kids[ci];
                int k = tree.link_id[c];
                const Pmf& a = alpha[k - 1];
                const auto& lc = lambda[c];
                auto& ck = es.counts[k - 1];
                bool internal = !tree.is_leaf(c);
                if (internal) betaw[c].assign(S, 0.0);
                for (int s = 0; s < S; ++s) {
                    double w = betaw[v][s] * pre[ci * S + s] * suf[(ci + 1) * S + s];
                    if (w == 0) continue;
                    for (int j = 0; j < S; ++j) {
                        double term = w * a[j] * lc[std::min(s + j, b)];
                        ck[j] += scale * term;
                        if (internal) betaw[c][std::min(s + j, b)] += w * a[j];
                    }
                }
            }
        }
    }
    return es;
}

namespace {

std::vector<Pmf> m_step(const std::vector<std::vector<double>>& counts, int b, double floor0) {
    std::vector<Pmf> alpha(counts.size());
    for (size_t k = 0; k < counts.size(); ++k) {
        double tot = std::accumulate(counts[k].begin(), counts[k].end(), 0.0);
        Pmf p(b + 1, 0.0);
        if (tot <= 0) {
            p = uniform_pmf(b);
        } else if (counts[k][0] / tot >= floor0) {
            for (int j = 0; j <= b; ++j) p[j] = counts[k][j] / tot;
        } else {
            // constrained maximizer on { alpha(0) >= floor0 }
            double rest = tot - counts[k][0];
            p[0] = floor0;
            for (int j = 1; j <= b; ++j)
                p[j] = rest > 0 ? (1.0 - floor0) * counts[k][j] / rest : (1.0 - floor0) / b;
        }
        alpha[k] = std::move(p);
    }
    return alpha;
}

}  // namespace

EmResult em_invert(const LogicalTree& tree, const std::vector<Pattern>& patterns, int b,
                   const std::optional<std::vector<Pmf>>& init, const EmOptions& opts) {
    if (patterns.empty()) throw std::invalid_argument("em_invert: empty observations");
    EmResult res;
    res.identifiable_warned = !check_identifiability(tree).identifiable;

    std::vector<Pmf> alpha;
    if (init) {
        for (const auto& p : *init)
            if (!is_valid_pmf(p) || static_cast<int>(p.size()) != b + 1)
                throw std::invalid_argument("em_invert: invalid init PMF");
        alpha = *init;
    } else {
        alpha.assign(tree.num_links, uniform_pmf(b));
    }

    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        EStep es = em_expected_counts(tree, alpha, patterns, b);
        res.iterations = iter;
        res.loglik = es.ll.value;
        res.degenerate = es.ll.degenerate;
        res.loglik_trace.push_back(es.ll.value);
        if (es.ll.degenerate) break;
        if (iter > 1 &&
            std::abs(es.ll.value - prev_ll) <= opts.tol * (std::abs(prev_ll) + 1e-12)) {
            res.converged = true;
            break;
        }
        prev_ll = es.ll.value;
        alpha = m_step(es.counts, b, opts.alpha0_floor);
    }
    res.alpha = std::move(alpha);
    return res;
}

EmResult em_invert(const LogicalTree& tree, const std::vector<BinnedObservation>& obs, int b,
                   const std::optional<std::vector<Pmf>>& init, const EmOptions& opts) {
    return em_invert(tree, dedup_observations(obs), b, init, opts);
}

}  // namespace qostom
