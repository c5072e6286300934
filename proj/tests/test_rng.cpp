#include "smckit/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using smckit::RngStream;
using smckit::StreamKind;

TEST_CASE("identical seeds produce identical draws") {
    RngStream a(12345), b(12345);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(a.next_u64() == b.next_u64());
    }
    RngStream c(12345), d(12345);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(c.uniform01() == d.uniform01());
        REQUIRE(c.normal() == d.normal());
    }
}

TEST_CASE("substreams are deterministic and distinct") {
    RngStream a = RngStream::substream(7, StreamKind::replication, 3);
    RngStream b = RngStream::substream(7, StreamKind::replication, 3);
    REQUIRE(a.seed() == b.seed());
    REQUIRE(a.next_u64() == b.next_u64());

    RngStream c = RngStream::substream(7, StreamKind::replication, 4);
    RngStream d = RngStream::substream(7, StreamKind::dataset, 3);
    RngStream e = RngStream::substream(8, StreamKind::replication, 3);
    REQUIRE(a.seed() != c.seed());
    REQUIRE(a.seed() != d.seed());
    REQUIRE(a.seed() != e.seed());
}

TEST_CASE("uniform01 stays in [0,1) and uniform(a,b) in range") {
    RngStream rng(99);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        const double v = rng.uniform(-1.0, 1.0);
        REQUIRE(v >= -1.0);
        REQUIRE(v <= 1.0);
    }
    REQUIRE(lo < 0.01);
    REQUIRE(hi > 0.99);
}

TEST_CASE("normal and exponential match their first two moments") {
    RngStream rng(4242);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    REQUIRE(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
    REQUIRE(std::abs(var - 1.0) < 0.02);

    double esum = 0.0;
    for (int i = 0; i < n; ++i) esum += rng.exponential();
    REQUIRE(std::abs(esum / n - 1.0) < 0.01);
}
