#include "doctest.h"

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <random>

#include "qostom/streamq.hpp"

using namespace qostom;

namespace {

// sorted-order-statistic oracle: value at index ceil(p*n) of the sorted data
double exact_quantile(std::vector<double> data, double p) {
    std::sort(data.begin(), data.end());
    size_t r = static_cast<size_t>(std::ceil(p * static_cast<double>(data.size())));
    r = std::max<size_t>(1, std::min(r, data.size()));
    return data[r - 1];
}

}  // namespace

TEST_CASE("ECDF construction") {
    auto cdf = build_empirical_cdf({3, 1, 2});
    CHECK(cdf.values == std::vector<double>{1, 2, 3});
    CHECK(cdf.cum[0] == doctest::Approx(1.0 / 3));
    CHECK(cdf.cum[1] == doctest::Approx(2.0 / 3));
    CHECK(cdf.cum[2] == 1.0);

    auto ties = build_empirical_cdf({5, 5, 5});
    CHECK(ties.values == std::vector<double>{5});
    CHECK(ties.cum == std::vector<double>{1.0});

    auto mixed = build_empirical_cdf({-1, 0, 0, 2});
    CHECK(mixed.values == std::vector<double>{-1, 0, 2});
    CHECK(mixed.cum[0] == doctest::Approx(0.25));
    CHECK(mixed.cum[1] == doctest::Approx(0.75));
    CHECK(mixed.cum[2] == 1.0);

    CHECK_THROWS_AS(build_empirical_cdf({}), std::invalid_argument);
}

TEST_CASE("quantile extraction convention") {
    auto cdf = build_empirical_cdf({1, 2, 3, 4, 5});
    CHECK(quantile(cdf, 0.5) == 3);
    CHECK(quantile(cdf, 0.2) == 1);
    CHECK(quantile(build_empirical_cdf({7}), 0.99) == 7);
    CHECK_THROWS_AS(quantile(cdf, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(quantile(cdf, 1.5), std::invalid_argument);
}

TEST_CASE("ECDF quantiles equal sorted order statistics on random buffers") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> unif(-10, 10);
    for (int trial = 0; trial < 200; ++trial) {
        size_t n = 1 + rng() % 1000;
        std::vector<double> data(n);
        for (auto& v : data) v = rng() % 3 == 0 ? std::round(unif(rng)) : unif(rng);
        auto cdf = build_empirical_cdf(data);
        for (double p : {0.01, 0.25, 0.5, 0.9, 0.999, 1.0})
            CHECK(quantile(cdf, p) == exact_quantile(data, p));
    }
}

TEST_CASE("iqe_update with empty prior reduces to exact quantiles") {
    auto s = QuantileSet::with_probs({0.5});
    DataBuffer buf;
    for (double v : {1, 2, 3, 4, 5}) buf.push(v);
    iqe_update(s, buf);
    CHECK(s.estimates[0] == 3);
    CHECK(s.n == 5);
    CHECK(buf.values.empty());
}

TEST_CASE("iqe_update is a fixed point for an identical buffer distribution") {
    auto s = QuantileSet::with_probs({0.5});
    DataBuffer buf;
    for (double v : {1, 2, 3, 4, 5}) buf.push(v);
    iqe_update(s, buf);
    for (double v : {1, 2, 3, 4, 5}) buf.push(v);
    iqe_update(s, buf);
    CHECK(s.estimates[0] == doctest::Approx(3).epsilon(0.35));  // within one knot spacing
    CHECK(s.n == 10);
}

TEST_CASE("iqe_update merge tracks the pooled-data quantile") {
    auto s = QuantileSet::with_probs({0.5});
    DataBuffer buf;
    for (double v : {1, 2, 3, 4, 5}) buf.push(v);
    iqe_update(s, buf);
    for (double v : {6, 7, 8, 9, 10}) buf.push(v);
    iqe_update(s, buf);
    // pooled-exact median of 1..10 is 5; allow one inter-knot spacing
    double oracle = exact_quantile({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 0.5);
    double max_spacing = 2.0;  // knots are at least this dense here
    CHECK(std::abs(s.estimates[0] - oracle) <= max_spacing);
}

TEST_CASE("iqe estimates stay nondecreasing across tracked probabilities") {
    std::mt19937 rng(9);
    std::normal_distribution<double> norm(0, 3);
    auto s = QuantileSet::default_set();
    DataBuffer buf;
    for (int round = 0; round < 30; ++round) {
        size_t n = 5 + rng() % 200;
        for (size_t i = 0; i < n; ++i) buf.push(norm(rng));
        iqe_update(s, buf);
        for (size_t i = 1; i < s.estimates.size(); ++i)
            CHECK(s.estimates[i] >= s.estimates[i - 1]);
        CHECK(s.min_v <= s.estimates.front());
        CHECK(s.estimates.back() <= s.max_v);
    }
}

TEST_CASE("iqe exactness at saturation: full tracked grid, single buffer") {
    std::vector<double> data{2, 9, 4, 7, 1};
    std::vector<double> probs;
    for (int i = 1; i <= 5; ++i) probs.push_back(i / 5.0 - (i == 5 ? 1e-12 : 0.0));
    auto s = QuantileSet::with_probs(probs);
    DataBuffer buf;
    for (double v : data) buf.push(v);
    iqe_update(s, buf);
    std::vector<double> sorted = data;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 5; ++i) CHECK(s.estimates[i] == sorted[i]);
}

TEST_CASE("gk insert basics") {
    GkSummary s(0.1);
    s.insert(5);
    REQUIRE(s.tuples().size() == 1);
    CHECK(s.tuples()[0].value == 5);
    CHECK(s.tuples()[0].g == 1);
    CHECK(s.tuples()[0].delta == 0);
    CHECK(s.count() == 1);

    // a new minimum always lands with delta == 0
    s.insert(3);
    s.insert(1);
    CHECK(s.tuples().front().value == 1);
    CHECK(s.tuples().front().delta == 0);
    CHECK_THROWS_AS(s.insert(std::nan("")), std::invalid_argument);
}

TEST_CASE("gk validity invariant after ordered inserts") {
    GkSummary s(0.1);
    for (int i = 1; i <= 100; ++i) {
        s.insert(i);
        CHECK(s.valid());
    }
}

TEST_CASE("gk compress is idempotent and bounded") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> unif(0, 1);
    GkSummary s(0.05);
    for (int i = 0; i < 1000; ++i) s.insert(unif(rng));
    s.compress();
    size_t count = s.tuples().size();
    s.compress();
    CHECK(s.tuples().size() == count);  // fixed point
    double bound = 11.0 / (2 * 0.05) * std::log(2 * 0.05 * 1000);
    CHECK(static_cast<double>(count) <= bound);
    CHECK(s.valid());
}

TEST_CASE("gk query rank guarantee on a permuted stream") {
    std::mt19937 rng(123);
    std::vector<double> stream(100);
    for (int i = 0; i < 100; ++i) stream[i] = i + 1;
    std::shuffle(stream.begin(), stream.end(), rng);
    GkSummary s(0.1);
    for (double v : stream) s.insert(v);
    double v = s.query(0.5);
    CHECK(v >= 40);
    CHECK(v <= 60);
    // max query within eps*n ranks of the true max
    CHECK(s.query(1.0) >= 90);
}

TEST_CASE("gk single element answers any p") {
    GkSummary s(0.05);
    s.insert(42);
    CHECK(s.query(0.001) == 42);
    CHECK(s.query(1.0) == 42);
}

TEST_CASE("gk guarantee under random interleavings of insert and compress") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> unif(0, 100);
    for (double eps : {0.05, 0.1}) {
        GkSummary s(eps);
        std::vector<double> stream;
        for (int i = 0; i < 20000; ++i) {
            double v = unif(rng);
            s.insert(v);
            stream.push_back(v);
            if (rng() % 37 == 0) s.compress();
            if (i % 500 == 0) CHECK(s.valid());
        }
        REQUIRE(s.valid());
        std::vector<double> sorted = stream;
        std::sort(sorted.begin(), sorted.end());
        const double n = static_cast<double>(stream.size());
        for (double p : {0.01, 0.1, 0.5, 0.9, 0.99, 1.0}) {
            double v = s.query(p);
            auto lo = std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
            auto hi = std::upper_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
            double r = std::ceil(p * n);
            CHECK(static_cast<double>(lo + 1) <= r + eps * n + 1e-9);
            CHECK(static_cast<double>(hi) >= r - eps * n - 1e-9);
        }
    }
}

TEST_CASE("data buffer capacity") {
    DataBuffer buf;
    buf.capacity = 2;
    CHECK(buf.push(1));
    CHECK(buf.push(2));
    CHECK_FALSE(buf.push(3));
    CHECK(buf.values.size() == 2);
}
