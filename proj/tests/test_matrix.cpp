#include <doctest.h>

#include "fairgat/matrix.hpp"
#include "fairgat/rng.hpp"
#include "support/oracles.hpp"

using fairgat::Matrix;

TEST_CASE("matmul matches the naive oracle") {
    fairgat::Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(6);
        const std::size_t k = 1 + rng.uniform_index(6);
        const std::size_t m = 1 + rng.uniform_index(6);
        const Matrix a = oracles::random_matrix(n, k, rng);
        const Matrix b = oracles::random_matrix(k, m, rng);
        const Matrix got = fairgat::matmul(a, b);
        const Matrix want = oracles::naive_matmul(a, b);
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("matmul_tn and matmul_nt agree with explicit transposes") {
    fairgat::Rng rng(42);
    const Matrix a = oracles::random_matrix(5, 3, rng);
    const Matrix b = oracles::random_matrix(5, 4, rng);
    const Matrix tn = fairgat::matmul_tn(a, b);
    const Matrix want_tn = oracles::naive_matmul(fairgat::transpose(a), b);
    CHECK(fairgat::max_abs(tn - want_tn) < 1e-12);

    const Matrix c = oracles::random_matrix(4, 3, rng);
    const Matrix d = oracles::random_matrix(6, 3, rng);
    const Matrix nt = fairgat::matmul_nt(c, d);
    const Matrix want_nt = oracles::naive_matmul(c, fairgat::transpose(d));
    CHECK(fairgat::max_abs(nt - want_nt) < 1e-12);
}

TEST_CASE("shape mismatches throw") {
    const Matrix a(2, 3);
    const Matrix b(2, 3);
    CHECK_THROWS(fairgat::matmul(a, b));
    Matrix c(3, 3);
    CHECK_THROWS(c += a);
}

TEST_CASE("norms and finiteness") {
    Matrix m{{3.0, 4.0}};
    CHECK(fairgat::vector_norm(m) == doctest::Approx(5.0));
    CHECK(m.all_finite());
    m(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(m.all_finite());
}
