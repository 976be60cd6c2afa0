#pragma once

#include <cstddef>
#include <vector>

namespace qostom {

// Fixed-capacity buffer of raw observations; drained on every IQE update.
struct DataBuffer {
    size_t capacity = 1000;
    std::vector<double> values;

    bool full() const { return values.size() >= capacity; }
    // returns false (and ignores the value) when the buffer is full
    bool push(double v);
};

struct EmpiricalCdf {
    std::vector<double> values;  // strictly increasing
    std::vector<double> cum;     // strictly increasing, last == 1
    size_t count = 0;
};

EmpiricalCdf build_empirical_cdf(const std::vector<double>& data);

// Left-continuous generalized inverse: inf{ x : F(x) >= p }, 0 < p <= 1.
double quantile(const EmpiricalCdf& cdf, double p);

// Incremental quantile estimation state: tracked probabilities with current
// estimates, combined with each new buffer as a count-weighted CDF mixture.
struct QuantileSet {
    std::vector<double> probs;      // strictly increasing, in (0,1)
    std::vector<double> estimates;  // nondecreasing; empty semantics until n > 0
    double n = 0;                   // observations absorbed
    double min_v = 0, max_v = 0;

    static QuantileSet with_probs(std::vector<double> probs);
    static QuantileSet default_set();  // {0.5, 0.75, 0.9, 0.95, 0.99}
};

// Merges the buffer ECDF into the state (mixture weighted by counts, prior
// CDF piecewise linear through (min,0),(q_i,p_i),(max,1)) and drains the
// buffer. With an empty prior this is exact ECDF quantile extraction.
void iqe_update(QuantileSet& state, DataBuffer& buffer);

// Greenwald-Khanna deterministic eps-approximate quantile summary.
struct GkTuple {
    double value;
    long g;      // rank gap to the previous tuple
    long delta;  // rank spread
};

class GkSummary {
public:
    explicit GkSummary(double eps);

    void insert(double v);  // compresses automatically every floor(1/(2eps)) inserts
    void compress();
    // value whose rank is within eps*n of ceil(p*n)
    double query(double p) const;

    double eps() const { return eps_; }
    long count() const { return n_; }
    const std::vector<GkTuple>& tuples() const { return tuples_; }
    // g + delta <= floor(2*eps*n) + 1 for every tuple
    bool valid() const;

private:
    double eps_;
    long n_ = 0;
    long inserts_since_compress_ = 0;
    long compress_period_;
    std::vector<GkTuple> tuples_;
};

}  // namespace qostom
