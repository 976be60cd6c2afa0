#include "qostom/monitor.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qostom {

EwmaStep ewma_step(EwmaState& state, double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite input");
    if (!(state.lambda > 0) || !(state.lambda <= 1))
        throw std::invalid_argument("lambda out of (0,1]");
    state.z = state.lambda * x + (1.0 - state.lambda) * state.z;
    ++state.t;

    EwmaStep out;
    out.z = state.z;
    out.lower = -std::numeric_limits<double>::infinity();
    out.upper = std::numeric_limits<double>::infinity();
    out.alarm = false;
    if (state.calibrated) {
        const double lam = state.lambda;
        double var_factor = lam / (2.0 - lam) *
                            (1.0 - std::pow(1.0 - lam, 2.0 * static_cast<double>(state.t)));
        double half = state.limit_mult * state.sigma0 * std::sqrt(var_factor);
        out.lower = state.mu0 - half;
        out.upper = state.mu0 + half;
        switch (state.direction) {
            case Direction::two_sided:
                out.alarm = state.z < out.lower || state.z > out.upper;
                break;
            case Direction::lower_only:
                out.alarm = state.z < out.lower;
                break;
            case Direction::upper_only:
                out.alarm = state.z > out.upper;
                break;
        }
    }
    return out;
}

CusumStep cusum_step(CusumState& state, double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite input");
    const double d = x - state.mu0;
    state.s_pos = std::max(0.0, state.s_pos + d - state.kappa);
    state.s_neg = std::max(0.0, state.s_neg - d - state.kappa);
    return {state.s_pos, state.s_neg, state.s_pos > state.h || state.s_neg > state.h};
}

namespace {

void check_cdf(const std::vector<double>& cdf) {
    if (cdf.empty()) throw std::invalid_argument("empty CDF vector");
    double prev = 0.0;
    for (double v : cdf) {
        if (!(v >= prev - 1e-12) || !(v <= 1.0 + 1e-12))
            throw std::invalid_argument("invalid CDF vector");
        prev = v;
    }
    if (std::abs(cdf.back() - 1.0) > 1e-9)
        throw std::invalid_argument("CDF vector must end at 1");
}

}  // namespace

void ewma_cdf_step(CdfEwmaState& state, const std::vector<double>& window_cdf) {
    check_cdf(window_cdf);
    if (state.z.empty()) {
        state.z = window_cdf;
        state.t = 1;
        return;
    }
    if (state.z.size() != window_cdf.size()) throw std::invalid_argument("bin grid mismatch");
    for (size_t j = 0; j < state.z.size(); ++j)
        state.z[j] = state.lambda * window_cdf[j] + (1.0 - state.lambda) * state.z[j];
    state.z.back() = 1.0;
    ++state.t;
}

int cdf_ewma_quantile(const CdfEwmaState& state, double p) {
    if (!(p > 0) || !(p <= 1)) throw std::invalid_argument("p out of (0,1]");
    if (state.z.empty()) throw std::invalid_argument("no smoothed CDF yet");
    for (size_t j = 0; j < state.z.size(); ++j)
        if (state.z[j] >= p) return static_cast<int>(j);
    return static_cast<int>(state.z.size()) - 1;
}

Baseline calibrate_baseline(const std::vector<double>& samples) {
    if (samples.size() < 2) throw std::invalid_argument("need at least 2 baseline samples");
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    double ss = 0.0;
    for (double s : samples) ss += (s - mean) * (s - mean);
    Baseline b;
    b.mu0 = mean;
    b.sigma0 = std::sqrt(ss / static_cast<double>(samples.size() - 1));
    b.degenerate = b.sigma0 == 0.0;
    return b;
}

}  // namespace qostom
