#pragma once

#include <vector>

namespace qostom {

enum class Direction { two_sided, lower_only, upper_only };

// EWMA control chart: Z_t = lambda*x + (1-lambda)*Z_{t-1}, with exact
// time-varying limits mu0 +/- L*sigma0*sqrt(lambda/(2-lambda)*(1-(1-lambda)^(2t))).
struct EwmaState {
    double lambda = 0.2;
    double z = 0.0;
    double mu0 = 0.0;
    double sigma0 = 0.0;
    double limit_mult = 3.0;  // L
    long t = 0;
    Direction direction = Direction::two_sided;
    bool calibrated = false;  // alarm evaluation disabled until set

    void set_baseline(double mu, double sigma) {
        mu0 = mu;
        sigma0 = sigma;
        z = mu;
        t = 0;
        calibrated = true;
    }
};

struct EwmaStep {
    double z;
    double lower, upper;  // current control limits (meaningful when calibrated)
    bool alarm;
};

EwmaStep ewma_step(EwmaState& state, double x);

// Tabular CUSUM: S+ <- max(0, S+ + (x-mu0) - kappa), S- <- max(0, S- - (x-mu0) - kappa);
// alarm when either sum exceeds h.
struct CusumState {
    double kappa = 0.0;
    double h = 1.0;
    double s_pos = 0.0;
    double s_neg = 0.0;
    double mu0 = 0.0;
};

struct CusumStep {
    double s_pos, s_neg;
    bool alarm;
};

CusumStep cusum_step(CusumState& state, double x);

// Binwise EWMA of a CDF vector over a fixed bin grid.
struct CdfEwmaState {
    double lambda = 0.2;
    std::vector<double> z;  // empty until the first step
    long t = 0;
};

void ewma_cdf_step(CdfEwmaState& state, const std::vector<double>& window_cdf);

// smallest bin j with Z_t(j) >= p
int cdf_ewma_quantile(const CdfEwmaState& state, double p);

struct Baseline {
    double mu0 = 0.0;
    double sigma0 = 0.0;
    bool degenerate = false;  // sigma0 == 0
};

// sample mean and standard deviation (divisor n-1); needs >= 2 samples
Baseline calibrate_baseline(const std::vector<double>& samples);

}  // namespace qostom
