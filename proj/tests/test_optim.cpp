#include <doctest.h>

#include <cmath>

#include "fairgat/errors.hpp"
#include "fairgat/optim.hpp"

using fairgat::AdamConfig;
using fairgat::Matrix;
using fairgat::ParamStore;

TEST_CASE("glorot bounds and determinism") {
    const Matrix w = fairgat::glorot_init(3, 3, 123);
    CHECK(w.rows() == 3);
    CHECK(w.cols() == 3);
    // a = sqrt(6 / 6) = 1
    for (double v : w.data()) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
    const Matrix again = fairgat::glorot_init(3, 3, 123);
    CHECK(w == again);
    const Matrix different = fairgat::glorot_init(3, 3, 124);
    CHECK_FALSE(w == different);
}

TEST_CASE("glorot empirical variance approaches a^2/3") {
    // fan 8/8: a = sqrt(6/16), variance of U[-a, a] is a^2/3 = 0.125.
    const int samples = 10000;
    double ss = 0.0;
    std::size_t count = 0;
    for (int s = 0; s < samples / 64; ++s) {
        const Matrix w = fairgat::glorot_init(8, 8, 1000 + s);
        for (double v : w.data()) {
            ss += v * v;
            ++count;
        }
    }
    const double var = ss / count;
    CHECK(var == doctest::Approx(0.125).epsilon(0.2));
}

TEST_CASE("adam leaves parameters alone with zero gradient and no decay") {
    ParamStore store;
    store.add("w", Matrix{{1.0, -2.0}});
    AdamConfig config;
    config.weight_decay = 0.0;
    store.adam_step({Matrix(1, 2)}, config);
    CHECK(store.value(0)(0, 0) == 1.0);
    CHECK(store.value(0)(0, 1) == -2.0);
    CHECK(store.step() == 1);
}

TEST_CASE("first adam step moves a scalar by about lr") {
    ParamStore store;
    store.add("p", Matrix{{1.0}});
    AdamConfig config;
    config.lr = 0.1;
    config.weight_decay = 0.0;
    store.adam_step({Matrix{{1.0}}}, config);
    // Bias-corrected first step: p -= lr * 1 / (1 + eps)
    CHECK(store.value(0)(0, 0) == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("adam trajectories are bitwise deterministic") {
    const auto run = [] {
        ParamStore store;
        store.add("w", fairgat::glorot_init(2, 2, 7));
        AdamConfig config;
        for (int step = 0; step < 25; ++step) {
            Matrix g(2, 2);
            for (std::size_t i = 0; i < g.size(); ++i) {
                g.data()[i] = std::sin(static_cast<double>(step + 1) * (i + 1));
            }
            store.adam_step({g}, config);
        }
        return store.value(0);
    };
    CHECK(run() == run());
}

TEST_CASE("adam rejects mismatched gradients") {
    ParamStore store;
    store.add("w", Matrix(2, 2));
    CHECK_THROWS_AS(store.adam_step({Matrix(3, 2)}, AdamConfig{}),
                    fairgat::NumericError);
    CHECK_THROWS_AS(store.adam_step({}, AdamConfig{}), fairgat::NumericError);
}

TEST_CASE("glorot rejects degenerate fans") {
    CHECK_THROWS_AS(fairgat::glorot_init(0, 3, 1), fairgat::NumericError);
}
