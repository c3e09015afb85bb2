#include <doctest.h>

#include <cmath>

#include "sbnet/error.hpp"
#include "sbnet/optim.hpp"

using namespace sbnet;

TEST_CASE("zero gradient leaves parameters unchanged but advances t") {
    AdamState s = AdamState::init(3);
    std::vector<double> params = {1.0, -2.0, 0.5};
    const auto before = params;
    adam_step(s, params, {0.0, 0.0, 0.0}, 0.1);
    CHECK(params == before);
    CHECK(s.t == 1);
}

TEST_CASE("first step is approximately -lr * sign(g)") {
    AdamState s = AdamState::init(2);
    std::vector<double> params = {0.0, 0.0};
    adam_step(s, params, {3.0, -0.7}, 0.01);
    CHECK(params[0] == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(params[1] == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("adam minimizes x^2") {
    AdamState s = AdamState::init(1);
    std::vector<double> x = {1.0};
    for (int i = 0; i < 2000; ++i) adam_step(s, x, {2.0 * x[0]}, 0.01);
    CHECK(std::abs(x[0]) < 1e-3);
}

TEST_CASE("adam is deterministic and keeps v nonnegative") {
    AdamState s1 = AdamState::init(2), s2 = AdamState::init(2);
    std::vector<double> p1 = {1.0, 2.0}, p2 = {1.0, 2.0};
    for (int i = 0; i < 10; ++i) {
        const std::vector<double> g = {0.1 * i, -0.2 * i};
        adam_step(s1, p1, g, 0.01);
        adam_step(s2, p2, g, 0.01);
    }
    CHECK(p1 == p2);
    for (double v : s1.v) CHECK(v >= 0.0);
    for (double p : p1) CHECK(std::isfinite(p));
}

TEST_CASE("adam rejects shape mismatch") {
    AdamState s = AdamState::init(2);
    std::vector<double> params = {1.0, 2.0};
    CHECK_THROWS_AS(adam_step(s, params, {1.0}, 0.1), DimensionError);
}

TEST_CASE("lr schedule") {
    const LrSchedule def;
    CHECK(lr_at(def, 0) == 1e-5);

    const LrSchedule flat{1e-3, 1.0};
    CHECK(lr_at(flat, 100) == 1e-3);

    const LrSchedule decay{1e-5, 0.95};
    CHECK(lr_at(decay, 2) == doctest::Approx(9.025e-6).epsilon(1e-12));

    double prev = lr_at(decay, 0);
    for (std::size_t e = 1; e < 60; ++e) {
        CHECK(lr_at(decay, e) <= prev);
        prev = lr_at(decay, e);
    }
}
