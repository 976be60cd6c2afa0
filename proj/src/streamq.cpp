#include "qostom/streamq.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qostom {

bool DataBuffer::push(double v) {
    if (!std::isfinite(v)) throw std::invalid_argument("buffer value must be finite");
    if (full()) return false;
    values.push_back(v);
    return true;
}

EmpiricalCdf build_empirical_cdf(const std::vector<double>& data) {
    if (data.empty()) throw std::invalid_argument("empty buffer");
    std::vector<double> sorted = data;
    std::sort(sorted.begin(), sorted.end());
    EmpiricalCdf cdf;
    cdf.count = sorted.size();
    size_t i = 0;
    while (i < sorted.size()) {
        size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        cdf.values.push_back(sorted[i]);
        cdf.cum.push_back(static_cast<double>(j) / static_cast<double>(sorted.size()));
        i = j;
    }
    cdf.cum.back() = 1.0;
    return cdf;
}

double quantile(const EmpiricalCdf& cdf, double p) {
    if (!(p > 0) || !(p <= 1)) throw std::invalid_argument("p out of (0,1]");
    auto it = std::lower_bound(cdf.cum.begin(), cdf.cum.end(), p);
    if (it == cdf.cum.end()) --it;  // floating slack at p == 1
    return cdf.values[it - cdf.cum.begin()];
}

QuantileSet QuantileSet::with_probs(std::vector<double> probs) {
    for (size_t i = 0; i < probs.size(); ++i) {
        if (!(probs[i] > 0) || !(probs[i] < 1))
            throw std::invalid_argument("tracked probabilities must lie in (0,1)");
        if (i > 0 && probs[i] <= probs[i - 1])
            throw std::invalid_argument("tracked probabilities must be strictly increasing");
    }
    QuantileSet s;
    s.probs = std::move(probs);
    s.estimates.assign(s.probs.size(), 0.0);
    return s;
}

QuantileSet QuantileSet::default_set() {
    return with_probs({0.5, 0.75, 0.9, 0.95, 0.99});
}

namespace {

// Piecewise-linear prior CDF through collapsed strictly-increasing knots.
struct PriorCdf {
    std::vector<double> xs, ys;

    double at(double x) const {
        if (x < xs.front()) return 0.0;
        if (x >= xs.back()) return 1.0;
        auto it = std::upper_bound(xs.begin(), xs.end(), x);
        size_t i = (it - xs.begin()) - 1;
        double dx = xs[i + 1] - xs[i];
        return ys[i] + (ys[i + 1] - ys[i]) * (x - xs[i]) / dx;
    }

    // left limit; differs from at() only at the first knot
    double at_left(double x) const {
        if (x <= xs.front()) return 0.0;
        return at(x);
    }
};

PriorCdf make_prior(const QuantileSet& s) {
    std::vector<double> xs{s.min_v}, ys{0.0};
    for (size_t i = 0; i < s.probs.size(); ++i) {
        xs.push_back(s.estimates[i]);
        ys.push_back(s.probs[i]);
    }
    xs.push_back(s.max_v);
    ys.push_back(1.0);
    // collapse duplicate x keeping the largest y (right-continuous jump)
    PriorCdf p;
    for (size_t i = 0; i < xs.size(); ++i) {
        double x = std::max(xs[i], p.xs.empty() ? xs[i] : p.xs.back());
        if (!p.xs.empty() && x == p.xs.back()) {
            p.ys.back() = std::max(p.ys.back(), ys[i]);
        } else {
            p.xs.push_back(x);
            p.ys.push_back(ys[i]);
        }
    }
    return p;
}

}  // namespace

void iqe_update(QuantileSet& state, DataBuffer& buffer) {
    if (buffer.values.empty()) throw std::invalid_argument("empty buffer");
    std::vector<double> vb = buffer.values;
    std::sort(vb.begin(), vb.end());
    const double nb = static_cast<double>(vb.size());

    if (state.n == 0) {
        EmpiricalCdf cdf = build_empirical_cdf(vb);
        for (size_t i = 0; i < state.probs.size(); ++i)
            state.estimates[i] = quantile(cdf, state.probs[i]);
        state.n = nb;
        state.min_v = vb.front();
        state.max_v = vb.back();
        buffer.values.clear();
        return;
    }

    const PriorCdf prior = make_prior(state);
    const double n = state.n;
    const double N = n + nb;

    // candidate knots: prior knots plus buffer values
    std::vector<double> cand = prior.xs;
    cand.insert(cand.end(), vb.begin(), vb.end());
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

    auto count_le = [&vb](double x) {
        return static_cast<double>(std::upper_bound(vb.begin(), vb.end(), x) - vb.begin());
    };
    auto count_lt = [&vb](double x) {
        return static_cast<double>(std::lower_bound(vb.begin(), vb.end(), x) - vb.begin());
    };
    auto F = [&](double x) { return (n * prior.at(x) + count_le(x)) / N; };
    auto F_left = [&](double x) { return (n * prior.at_left(x) + count_lt(x)) / N; };

    std::vector<double> out(state.probs.size());
    for (size_t pi = 0; pi < state.probs.size(); ++pi) {
        const double p = state.probs[pi];
        double q = cand.back();
        double prev_x = cand.front();
        double prev_F = F(prev_x);
        if (prev_F >= p || F_left(prev_x) >= p) {
            q = prev_x;
        } else {
            for (size_t ci = 1; ci < cand.size(); ++ci) {
                const double c = cand[ci];
                const double fl = F_left(c);
                if (fl >= p) {
                    // crossing inside (prev_x, c] through the linear prior part
                    double fp_prev = prior.at(prev_x);
                    double fp_c = prior.at_left(c);
                    double slope = (fp_c - fp_prev) / (c - prev_x);
                    if (n > 0 && slope > 0) {
                        double target_y = (N * p - count_le(prev_x)) / n;
                        q = prev_x + (target_y - fp_prev) / slope;
                        q = std::min(std::max(q, prev_x), c);
                    } else {
                        q = c;
                    }
                    break;
                }
                const double fr = F(c);
                if (fr >= p) {
                    q = c;  // buffer atom jump at c
                    break;
                }
                prev_x = c;
                prev_F = fr;
            }
        }
        out[pi] = q;
    }
    for (size_t i = 1; i < out.size(); ++i) out[i] = std::max(out[i], out[i - 1]);

    state.estimates = std::move(out);
    state.n = N;
    state.min_v = std::min(state.min_v, vb.front());
    state.max_v = std::max(state.max_v, vb.back());
    buffer.values.clear();
}

GkSummary::GkSummary(double eps) : eps_(eps) {
    if (!(eps > 0) || !(eps < 1)) throw std::invalid_argument("eps must lie in (0,1)");
    compress_period_ = std::max<long>(1, static_cast<long>(std::floor(1.0 / (2.0 * eps))));
}

void GkSummary::insert(double v) {
    if (!std::isfinite(v)) throw std::invalid_argument("value must be finite");
    auto it = std::upper_bound(tuples_.begin(), tuples_.end(), v,
                               [](double a, const GkTuple& t) { return a < t.value; });
    long delta = 0;
    if (it != tuples_.begin() && it != tuples_.end())
        delta = static_cast<long>(std::floor(2.0 * eps_ * static_cast<double>(n_)));
    tuples_.insert(it, GkTuple{v, 1, delta});
    ++n_;
    if (++inserts_since_compress_ >= compress_period_) {
        compress();
        inserts_since_compress_ = 0;
    }
}

void GkSummary::compress() {
    if (tuples_.size() < 3) return;
    const long cap = static_cast<long>(std::floor(2.0 * eps_ * static_cast<double>(n_)));
    // never merge the first or into-nothing; last tuple survives as merge target
    for (size_t i = tuples_.size() - 2; i >= 1; --i) {
        if (tuples_[i].g + tuples_[i + 1].g + tuples_[i + 1].delta <= cap) {
            tuples_[i + 1].g += tuples_[i].g;
            tuples_.erase(tuples_.begin() + static_cast<long>(i));
        }
    }
}

double GkSummary::query(double p) const {
    if (n_ == 0) throw std::invalid_argument("empty summary");
    if (!(p > 0) || !(p <= 1)) throw std::invalid_argument("p out of (0,1]");
    long r = static_cast<long>(std::ceil(p * static_cast<double>(n_)));
    r = std::max<long>(1, std::min(r, n_));
    const long e = static_cast<long>(std::floor(eps_ * static_cast<double>(n_)));
    long rmin = 0;
    for (size_t i = 0; i + 1 < tuples_.size(); ++i) {
        rmin += tuples_[i].g;
        if (rmin + tuples_[i + 1].g + tuples_[i + 1].delta > r + e) return tuples_[i].value;
    }
    return tuples_.back().value;
}

bool GkSummary::valid() const {
    const long cap = static_cast<long>(std::floor(2.0 * eps_ * static_cast<double>(n_))) + 1;
    for (size_t i = 0; i < tuples_.size(); ++i) {
        if (tuples_[i].g + tuples_[i].delta > cap) return false;
        if (i > 0 && tuples_[i].value < tuples_[i - 1].value) return false;
    }
    return true;
}

}  // namespace qostom
