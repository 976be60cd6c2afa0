#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qostom/topology.hpp"

namespace qostom {

// Delay discretization: bin j covers [j*q, (j+1)*q), bin b absorbs the rest.
struct BinningSpec {
    double q = 0.005;  // seconds
    int b = 9;         // top bin index
};

// A per-link delay PMF is a vector of b+1 probabilities; link k's PMF lives
// at index k-1 of a std::vector<Pmf>.
using Pmf = std::vector<double>;

int discretize(double delay_s, const BinningSpec& spec);

bool is_valid_pmf(const Pmf& p, double tol = 1e-9);
Pmf uniform_pmf(int b);
Pmf point_mass(int b, int j);

// Saturating convolution: mass at sums >= b pools into bin b. Associative
// and commutative.
Pmf convolve_pmf(const Pmf& a, const Pmf& c);

Pmf path_delay_pmf(const LogicalTree& tree, const std::vector<Pmf>& link_pmfs, int leaf);

double delay_cdf_at(const Pmf& pmf, int j);

// One probe's discretized delay per leaf, in tree.leaves order.
struct BinnedObservation {
    std::vector<int> units;
};

// Deduplicated observation pattern with multiplicity (may be fractional).
struct Pattern {
    std::vector<int> units;
    double weight = 1.0;
};

std::vector<Pattern> dedup_observations(const std::vector<BinnedObservation>& obs);

struct LogLik {
    double value = 0.0;
    bool degenerate = false;  // some pattern had probability 0; value is -inf
};

// Exact log-likelihood via upward message passing over the tree (no latent
// enumeration).
LogLik loglik(const LogicalTree& tree, const std::vector<Pmf>& link_pmfs,
              const std::vector<Pattern>& patterns, int b);

// One E-step: expected unit counts per link (rows: link id-1, cols: 0..b)
// plus the log-likelihood of the patterns under the given PMFs.
struct EStep {
    std::vector<std::vector<double>> counts;
    LogLik ll;
};
EStep em_expected_counts(const LogicalTree& tree, const std::vector<Pmf>& link_pmfs,
                         const std::vector<Pattern>& patterns, int b);

struct EmOptions {
    double tol = 1e-8;          // relative log-likelihood change
    int max_iter = 500;
    double alpha0_floor = 1e-6;  // identifiability convention: alpha_k(0) > 0
};

struct EmResult {
    std::vector<Pmf> alpha;       // per link id-1
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;
    bool identifiable_warned = false;
    std::vector<double> loglik_trace;
};

EmResult em_invert(const LogicalTree& tree, const std::vector<Pattern>& patterns, int b,
                   const std::optional<std::vector<Pmf>>& init = std::nullopt,
                   const EmOptions& opts = {});

EmResult em_invert(const LogicalTree& tree, const std::vector<BinnedObservation>& obs, int b,
                   const std::optional<std::vector<Pmf>>& init = std::nullopt,
                   const EmOptions& opts = {});

}  // namespace qostom
