#include "doctest.h"

#include <stdexcept>

#include <cmath>
#include <random>

#include "qostom/monitor.hpp"

using namespace qostom;

TEST_CASE("ewma recurrence") {
    EwmaState s;
    s.lambda = 1.0;
    s.z = -3.0;
    CHECK(ewma_step(s, 7.0).z == 7.0);

    EwmaState t;
    t.lambda = 0.2;
    t.z = 0.0;
    CHECK(ewma_step(t, 1.0).z == doctest::Approx(0.2));
}

TEST_CASE("ewma asymptotic limits") {
    EwmaState s;
    s.lambda = 0.2;
    s.limit_mult = 3.0;
    s.set_baseline(0.0, 1.0);
    EwmaStep st{};
    for (int i = 0; i < 2000; ++i) st = ewma_step(s, 0.0);
    CHECK(st.upper == doctest::Approx(3.0 * std::sqrt(0.2 / 1.8)).epsilon(1e-9));
    CHECK(st.lower == doctest::Approx(-3.0 * std::sqrt(0.2 / 1.8)).epsilon(1e-9));
}

TEST_CASE("ewma lambda=1 reproduces the raw sequence; huge L never alarms") {
    std::mt19937 rng(3);
    std::normal_distribution<double> norm(0, 1);
    EwmaState ident;
    ident.lambda = 1.0;
    ident.set_baseline(0.0, 1.0);
    EwmaState loose;
    loose.lambda = 0.2;
    loose.limit_mult = 1e9;
    loose.set_baseline(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        double x = norm(rng);
        CHECK(ewma_step(ident, x).z == x);
        CHECK_FALSE(ewma_step(loose, x).alarm);
    }
}

TEST_CASE("ewma linearity on random sequences") {
    std::mt19937 rng(17);
    std::normal_distribution<double> norm(0, 2);
    const double a = 2.5, b = -1.25;
    EwmaState raw, scaled;
    raw.lambda = scaled.lambda = 0.3;
    raw.z = 0.7;
    scaled.z = a * 0.7 + b;
    for (int i = 0; i < 500; ++i) {
        double x = norm(rng);
        double z = ewma_step(raw, x).z;
        double zs = ewma_step(scaled, a * x + b).z;
        CHECK(zs == doctest::Approx(a * z + b).epsilon(1e-12));
    }
}

TEST_CASE("ewma rejects non-finite input") {
    EwmaState s;
    CHECK_THROWS_AS(ewma_step(s, std::nan("")), std::invalid_argument);
}

TEST_CASE("cusum recurrence") {
    CusumState s;
    s.mu0 = 0;
    s.kappa = 0.5;
    s.h = 4;
    auto st = cusum_step(s, 2.0);
    CHECK(st.s_pos == doctest::Approx(1.5));
    CHECK(st.s_neg == 0.0);
}

TEST_CASE("cusum stays at zero on on-target input") {
    CusumState s;
    s.mu0 = 1.0;
    s.kappa = 0.5;
    s.h = 4;
    for (int i = 0; i < 100; ++i) {
        auto st = cusum_step(s, 1.0);
        CHECK(st.s_pos == 0.0);
        CHECK(st.s_neg == 0.0);
        CHECK_FALSE(st.alarm);
    }
}

TEST_CASE("cusum first alarm step under a constant shift") {
    // x = 1.5, mu0 = 0, kappa = 0.5: S+ grows by 1 per step, alarm when S+ > 4
    CusumState s;
    s.mu0 = 0;
    s.kappa = 0.5;
    s.h = 4;
    int first_alarm = 0;
    for (int t = 1; t <= 10 && first_alarm == 0; ++t)
        if (cusum_step(s, 1.5).alarm) first_alarm = t;
    CHECK(first_alarm == 5);
}

TEST_CASE("cusum with slack covering every deviation never alarms") {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> unif(-1, 1);
    CusumState s;
    s.mu0 = 0;
    s.kappa = 1.0;
    s.h = 0.5;
    for (int i = 0; i < 2000; ++i) CHECK_FALSE(cusum_step(s, unif(rng)).alarm);
}

TEST_CASE("cdf ewma step") {
    CdfEwmaState s;
    s.lambda = 1.0;
    ewma_cdf_step(s, {0.3, 1.0});
    ewma_cdf_step(s, {0.6, 1.0});
    CHECK(s.z[0] == doctest::Approx(0.6));

    CdfEwmaState t;
    t.lambda = 0.5;
    ewma_cdf_step(t, {0.5, 1.0});
    ewma_cdf_step(t, {0.3, 1.0});
    CHECK(t.z[0] == doctest::Approx(0.4));
    CHECK(t.z[1] == 1.0);

    // fixed point on identical inputs
    CdfEwmaState u;
    u.lambda = 0.2;
    ewma_cdf_step(u, {0.25, 0.75, 1.0});
    ewma_cdf_step(u, {0.25, 0.75, 1.0});
    CHECK(u.z[0] == doctest::Approx(0.25));
    CHECK(u.z[1] == doctest::Approx(0.75));

    CHECK_THROWS_AS(ewma_cdf_step(u, {0.5, 1.0}), std::invalid_argument);       // grid mismatch
    CHECK_THROWS_AS(ewma_cdf_step(u, {0.9, 0.5, 1.0}), std::invalid_argument);  // not a CDF
}

TEST_CASE("cdf ewma stays a valid CDF under random valid inputs") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> unif(0, 1);
    CdfEwmaState s;
    s.lambda = 0.35;
    for (int step = 0; step < 300; ++step) {
        std::vector<double> raw(6);
        double tot = 0;
        for (auto& v : raw) tot += v = unif(rng) + 1e-6;
        std::vector<double> cdf(6);
        double acc = 0;
        for (int j = 0; j < 6; ++j) {
            acc += raw[j] / tot;
            cdf[j] = acc;
        }
        cdf.back() = 1.0;
        ewma_cdf_step(s, cdf);
        for (size_t j = 0; j < s.z.size(); ++j) {
            CHECK(s.z[j] >= (j == 0 ? 0.0 : s.z[j - 1]) - 1e-12);
            CHECK(s.z[j] <= 1.0 + 1e-12);
        }
        CHECK(s.z.back() == 1.0);
    }
}

TEST_CASE("cdf ewma quantile inversion") {
    CdfEwmaState s;
    s.lambda = 1.0;
    ewma_cdf_step(s, {0.4, 0.9, 1.0});
    CHECK(cdf_ewma_quantile(s, 0.5) == 1);
    CHECK(cdf_ewma_quantile(s, 1.0) == 2);

    CdfEwmaState atom;
    atom.lambda = 1.0;
    ewma_cdf_step(atom, {1.0, 1.0});
    CHECK(cdf_ewma_quantile(atom, 0.3) == 0);
    CHECK_THROWS_AS(cdf_ewma_quantile(atom, 0.0), std::invalid_argument);
}

TEST_CASE("baseline calibration") {
    auto b = calibrate_baseline({1, 1, 1});
    CHECK(b.mu0 == 1);
    CHECK(b.sigma0 == 0);
    CHECK(b.degenerate);

    auto c = calibrate_baseline({0, 2});
    CHECK(c.mu0 == 1);
    CHECK(c.sigma0 == doctest::Approx(std::sqrt(2.0)));

    auto d = calibrate_baseline({1, 2, 3, 4, 5});
    CHECK(d.mu0 == 3);
    CHECK(d.sigma0 == doctest::Approx(std::sqrt(2.5)));

    CHECK_THROWS_AS(calibrate_baseline({1}), std::invalid_argument);
}

TEST_CASE("in-control alarm fraction over 1e5 normal steps") {
    std::mt19937 rng(2024);
    std::normal_distribution<double> norm(0, 1);
    EwmaState s;
    s.lambda = 0.2;
    s.limit_mult = 3.0;
    s.direction = Direction::two_sided;
    s.set_baseline(0.0, 1.0);
    long alarms = 0;
    const long n = 100000;
    for (long i = 0; i < n; ++i)
        if (ewma_step(s, norm(rng)).alarm) ++alarms;
    double frac = static_cast<double>(alarms) / static_cast<double>(n);
    CHECK(frac >= 0.0005);
    CHECK(frac <= 0.01);
}
