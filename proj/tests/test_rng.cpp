#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "persuasion/rng.hpp"

using persuasion::CounterRng;

TEST_CASE("same seed reproduces the sequence") {
    CounterRng a(42), b(42);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("split streams are independent of parent consumption") {
    CounterRng parent(7);
    CounterRng child_before = parent.split(3);
    for (int i = 0; i < 17; ++i) parent.next_u64();
    CounterRng child_after = parent.split(3);
    for (int i = 0; i < 100; ++i)
        REQUIRE(child_before.next_u64() == child_after.next_u64());
}

TEST_CASE("distinct labels give distinct streams") {
    CounterRng parent(7);
    auto a = parent.split(1);
    auto b = parent.split(2);
    int same = 0;
    for (int i = 0; i < 64; ++i)
        if (a.next_u64() == b.next_u64()) ++same;
    REQUIRE(same == 0);
}

TEST_CASE("doubles are uniform enough") {
    CounterRng r(123);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double u = r.next_double();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sumsq += u * u;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    REQUIRE(std::fabs(mean - 0.5) < 0.005);
    REQUIRE(std::fabs(var - 1.0 / 12.0) < 0.005);
}

TEST_CASE("next_index covers the range uniformly") {
    CounterRng r(9);
    std::vector<int> counts(5, 0);
    for (int i = 0; i < 50000; ++i) ++counts[r.next_index(5)];
    for (int c : counts) REQUIRE(std::fabs(c - 10000.0) < 500.0);
}

TEST_CASE("categorical respects the weights") {
    CounterRng r(11);
    std::vector<double> w = {0.1, 0.2, 0.7};
    std::vector<int> counts(3, 0);
    for (int i = 0; i < 100000; ++i) ++counts[r.categorical(w)];
    REQUIRE(std::fabs(counts[0] / 100000.0 - 0.1) < 0.01);
    REQUIRE(std::fabs(counts[1] / 100000.0 - 0.2) < 0.01);
    REQUIRE(std::fabs(counts[2] / 100000.0 - 0.7) < 0.01);
}
