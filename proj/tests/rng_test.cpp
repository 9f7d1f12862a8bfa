#include <catch2/catch_amalgamated.hpp>

#include "dts/rng.hpp"

using namespace dts;

TEST_CASE("equal seed and stream reproduce bitwise", "[rng]") {
    Rng a(42, "noise"), b(42, "noise");
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
    Rng c(42, "noise"), d(42, "noise");
    for (int i = 0; i < 100; ++i) REQUIRE(c.normal() == d.normal());
}

TEST_CASE("different streams decorrelate", "[rng]") {
    Rng a(42, "noise"), b(42, "init");
    int equal = 0;
    for (int i = 0; i < 64; ++i) equal += a.next_u64() == b.next_u64();
    CHECK(equal == 0);
}

TEST_CASE("forked streams are independent of sibling order", "[rng]") {
    Rng base(7, "sampling");
    Rng f0 = base.fork(0);
    Rng f1 = base.fork(1);
    Rng f0_again = Rng(7, "sampling").fork(0);
    CHECK(f0.next_u64() == f0_again.next_u64());
    CHECK(f0.next_u64() != f1.next_u64());
}

TEST_CASE("uniform and normal moments are sane", "[rng]") {
    Rng rng(123, "noise");
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = rng.normal();
        sum += v;
        sq += v * v;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);

    double usum = 0.0;
    for (int i = 0; i < n; ++i) usum += rng.uniform();
    CHECK(std::abs(usum / n - 0.5) < 0.005);
}

TEST_CASE("uniform_below is unbiased over small ranges", "[rng]") {
    Rng rng(5, "shuffle");
    int counts[5] = {};
    for (int i = 0; i < 50000; ++i) ++counts[rng.uniform_below(5)];
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("permutation covers all indices", "[rng]") {
    Rng rng(9, "shuffle");
    auto p = rng.permutation(100);
    std::vector<bool> seen(100, false);
    for (auto i : p) seen[i] = true;
    for (bool s : seen) REQUIRE(s);
}
