#include <doctest.h>

#include <cmath>
#include <functional>

#include "fairgat/autodiff.hpp"
#include "fairgat/errors.hpp"
#include "fairgat/graph.hpp"
#include "fairgat/rng.hpp"
#include "support/oracles.hpp"
#include "support/testgraphs.hpp"

using fairgat::Activation;
using fairgat::Graph;
using fairgat::Matrix;
using fairgat::NodeId;
using fairgat::Rng;
using fairgat::Tape;

namespace {

// Builds the loss from a parameter node; rebuilt from scratch for every
// finite-difference probe so the check is independent of the backward pass.
using LossBuilder = std::function<NodeId(Tape&, NodeId)>;

double run_gradient_check(const LossBuilder& build, const Matrix& x0,
                          double step = 1e-5) {
    Tape tape;
    const NodeId x = tape.param(x0);
    const NodeId loss = build(tape, x);
    tape.backward(loss);
    const Matrix analytic = tape.adjoint(x);

    const auto f = [&](const Matrix& xv) {
        Tape probe;
        const NodeId xn = probe.param(xv);
        return probe.value(build(probe, xn))(0, 0);
    };
    const Matrix numeric = oracles::finite_difference_grad(f, x0, step);
    return oracles::max_relative_error(analytic, numeric);
}

// Shifts entries away from a kink at zero so central differences stay on one
// side of the nondifferentiable point.
void avoid_kink_at_zero(Matrix& m, double margin = 1e-3) {
    for (double& v : m.data()) {
        if (std::abs(v) < margin) v = v < 0.0 ? v - margin : v + margin;
    }
}

Matrix fixed_weights(std::size_t rows, std::size_t cols, Rng& rng) {
    return oracles::random_matrix(rows, cols, rng, -1.0, 1.0);
}

// Reduce an arbitrary node to a scalar through fixed random coefficients.
NodeId weighted_sum(Tape& tape, NodeId node, const Matrix& coeffs) {
    const NodeId c = tape.input(coeffs);
    return tape.sum(tape.hadamard_product(node, c));
}

Graph dense_test_graph(Rng& rng, int n = 5) {
    return testgraphs::random_graph(n, 3, 0.7, rng).with_self_loops();
}

}  // namespace

TEST_CASE("d(x^2)/dx at x=3 is 6") {
    Tape tape;
    Matrix x0(1, 1);
    x0(0, 0) = 3.0;
    const NodeId x = tape.param(x0);
    const NodeId y = tape.hadamard_product(x, x);
    const NodeId loss = tape.sum(y);
    tape.backward(loss);
    CHECK(tape.adjoint(x)(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("sum of sigmoid(Wx) matches central finite differences") {
    Rng rng(21);
    const Matrix x_fixed = oracles::random_matrix(2, 1, rng);
    const Matrix w0 = oracles::random_matrix(2, 2, rng);
    const auto build = [&](Tape& tape, NodeId w) {
        const NodeId x = tape.input(x_fixed);
        const NodeId wx = tape.matmul(w, x);
        const NodeId s = tape.apply_activation(wx, {Activation::Sigmoid});
        return tape.sum(s);
    };
    CHECK(run_gradient_check(build, w0) < 1e-4);
}

TEST_CASE("constant loss yields zero gradients") {
    Tape tape;
    const NodeId w = tape.param(Matrix::identity(3));
    const NodeId c = tape.input(Matrix{{1.0, 2.0}});
    const NodeId loss = tape.sum(c);
    tape.backward(loss);
    CHECK(fairgat::max_abs(tape.adjoint(w)) == 0.0);
    (void)w;
}

TEST_CASE("backward rejects non-scalar losses") {
    Tape tape;
    const NodeId x = tape.param(Matrix(2, 2));
    CHECK_THROWS_AS(tape.backward(x), fairgat::NumericError);
}

TEST_CASE("gradient check: every differentiable op, 100 random trials") {
    Rng rng(22);
    int trials_per_op = 100;

    SUBCASE("matmul wrt left and right") {
        for (int t = 0; t < trials_per_op; ++t) {
            const std::size_t n = 1 + rng.uniform_index(4);
            const std::size_t k = 1 + rng.uniform_index(4);
            const std::size_t m = 1 + rng.uniform_index(4);
            const Matrix b = fixed_weights(k, m, rng);
            const Matrix coeffs = fixed_weights(n, m, rng);
            const auto build_left = [&](Tape& tape, NodeId x) {
                return weighted_sum(tape, tape.matmul(x, tape.input(b)), coeffs);
            };
            CHECK(run_gradient_check(build_left, oracles::random_matrix(n, k, rng)) < 1e-4);

            const Matrix a = fixed_weights(n, k, rng);
            const auto build_right = [&](Tape& tape, NodeId x) {
                return weighted_sum(tape, tape.matmul(tape.input(a), x), coeffs);
            };
            CHECK(run_gradient_check(build_right, oracles::random_matrix(k, m, rng)) < 1e-4);
        }
    }

    SUBCASE("add, subtract, hadamard, scale, concat, row_scale, gather, row_dot") {
        for (int t = 0; t < trials_per_op; ++t) {
            const std::size_t n = 1 + rng.uniform_index(4);
            const std::size_t m = 1 + rng.uniform_index(4);
            const Matrix other = fixed_weights(n, m, rng);
            const Matrix coeffs = fixed_weights(n, m, rng);

            const auto build_add = [&](Tape& tape, NodeId x) {
                return weighted_sum(tape, tape.add(x, tape.input(other)), coeffs);
            };
            CHECK(run_gradient_check(build_add, oracles::random_matrix(n, m, rng)) < 1e-4);

            const auto build_sub = [&](Tape& tape, NodeId x) {
                return weighted_sum(tape, tape.subtract(tape.input(other), x), coeffs);
            };
            CHECK(run_gradient_check(build_sub, oracles::random_matrix(n, m, rng)) < 1e-4);

            const auto build_had = [&](Tape& tape, NodeId x) {
                return weighted_sum(tape, tape.hadamard_product(x, tape.input(other)),
                                    coeffs);
            };
            CHECK(run_gradient_check(build_had, oracles::random_matrix(n, m, rng)) < 1e-4);

            const auto build_scale = [&](Tape& tape, NodeId x) {
                return weighted_sum(tape, tape.scale(x, 0.37), coeffs);
            };
            CHECK(run_gradient_check(build_scale, oracles::random_matrix(n, m, rng)) < 1e-4);

            const Matrix concat_coeffs = fixed_weights(n, 2 * m, rng);
            const auto build_concat = [&](Tape& tape, NodeId x) {
                return weighted_sum(tape, tape.concat_cols(x, tape.input(other)),
                                    concat_coeffs);
            };
            CHECK(run_gradient_check(build_concat, oracles::random_matrix(n, m, rng)) <
                  1e-4);

            const Matrix scales = fixed_weights(n, 1, rng);
            const auto build_rowscale = [&](Tape& tape, NodeId x) {
                return weighted_sum(tape, tape.row_scale(x, tape.input(scales)), coeffs);
            };
            CHECK(run_gradient_check(build_rowscale, oracles::random_matrix(n, m, rng)) <
                  1e-4);
            const auto build_rowscale_s = [&](Tape& tape, NodeId s) {
                return weighted_sum(tape, tape.row_scale(tape.input(other), s), coeffs);
            };
            CHECK(run_gradient_check(build_rowscale_s, oracles::random_matrix(n, 1, rng)) <
                  1e-4);

            std::vector<int> ids(3);
            for (int& id : ids) id = static_cast<int>(rng.uniform_index(n));
            const Matrix gather_coeffs = fixed_weights(3, m, rng);
            const auto build_gather = [&](Tape& tape, NodeId x) {
                return weighted_sum(tape, tape.gather_rows(x, ids), gather_coeffs);
            };
            CHECK(run_gradient_check(build_gather, oracles::random_matrix(n, m, rng)) <
                  1e-4);

            const Matrix dot_coeffs = fixed_weights(n, 1, rng);
            const auto build_dot = [&](Tape& tape, NodeId x) {
                return weighted_sum(tape, tape.row_dot(x, tape.input(other)), dot_coeffs);
            };
            CHECK(run_gradient_check(build_dot, oracles::random_matrix(n, m, rng)) < 1e-4);
        }
    }

    SUBCASE("activations (kinks avoided by resampling)") {
        const fairgat::ActivationKind kinds[] = {{Activation::ReLU, 0.2},
                                                 {Activation::LeakyReLU, 0.2},
                                                 {Activation::Sigmoid, 0.2}};
        for (const auto kind : kinds) {
            for (int t = 0; t < trials_per_op; ++t) {
                const std::size_t n = 1 + rng.uniform_index(4);
                const std::size_t m = 1 + rng.uniform_index(4);
                Matrix x0 = oracles::random_matrix(n, m, rng, -2.0, 2.0);
                avoid_kink_at_zero(x0);
                const Matrix coeffs = fixed_weights(n, m, rng);
                const auto build = [&](Tape& tape, NodeId x) {
                    return weighted_sum(tape, tape.apply_activation(x, kind), coeffs);
                };
                CHECK(run_gradient_check(build, x0) < 1e-4);
            }
        }
    }

    SUBCASE("edge ops on a small graph") {
        for (int t = 0; t < 30; ++t) {
            const Graph g = dense_test_graph(rng);
            const int n = g.n_nodes();
            const int arcs = g.n_arcs();
            const Matrix arc_coeffs = fixed_weights(arcs, 1, rng);

            const Matrix v_fixed = fixed_weights(n, 1, rng);
            const auto build_pair = [&](Tape& tape, NodeId u) {
                return weighted_sum(tape, tape.edge_pair_sum(u, tape.input(v_fixed), g),
                                    arc_coeffs);
            };
            CHECK(run_gradient_check(build_pair, oracles::random_matrix(n, 1, rng)) <
                  1e-4);

            const auto build_softmax = [&](Tape& tape, NodeId scores) {
                return weighted_sum(tape, tape.edge_softmax(scores, g), arc_coeffs);
            };
            CHECK(run_gradient_check(build_softmax, oracles::random_matrix(arcs, 1, rng)) <
                  1e-4);

            const auto build_group = [&](Tape& tape, NodeId scores) {
                return weighted_sum(tape, tape.group_softmax(scores, g, 0.37), arc_coeffs);
            };
            CHECK(run_gradient_check(build_group, oracles::random_matrix(arcs, 1, rng)) <
                  1e-4);

            const Matrix c_fixed = fixed_weights(n, 3, rng);
            const Matrix z_coeffs = fixed_weights(n, 3, rng);
            const auto build_agg_alpha = [&](Tape& tape, NodeId alpha) {
                return weighted_sum(tape, tape.aggregate(alpha, tape.input(c_fixed), g),
                                    z_coeffs);
            };
            CHECK(run_gradient_check(build_agg_alpha,
                                     oracles::random_matrix(arcs, 1, rng)) < 1e-4);

            const Matrix alpha_fixed = oracles::random_matrix(arcs, 1, rng, 0.0, 1.0);
            const auto build_agg_c = [&](Tape& tape, NodeId c) {
                return weighted_sum(tape, tape.aggregate(tape.input(alpha_fixed), c, g),
                                    z_coeffs);
            };
            CHECK(run_gradient_check(build_agg_c, oracles::random_matrix(n, 3, rng)) <
                  1e-4);
        }
    }

    SUBCASE("column standardize") {
        for (int t = 0; t < trials_per_op; ++t) {
            const std::size_t n = 3 + rng.uniform_index(2);
            const std::size_t m = 1 + rng.uniform_index(4);
            const Matrix x0 = oracles::random_matrix(n, m, rng, -3.0, 3.0);
            const Matrix coeffs = fixed_weights(n, m, rng);
            const auto build = [&](Tape& tape, NodeId x) {
                return weighted_sum(tape, tape.column_standardize(x), coeffs);
            };
            CHECK(run_gradient_check(build, x0) < 1e-4);
        }
    }

    SUBCASE("losses") {
        for (int t = 0; t < trials_per_op; ++t) {
            const std::size_t n = 2 + rng.uniform_index(3);
            Matrix targets(n, 1);
            std::vector<double> weights(n);
            for (std::size_t i = 0; i < n; ++i) {
                targets(i, 0) = rng.bernoulli(0.5) ? 1.0 : 0.0;
                weights[i] = rng.bernoulli(0.3) ? 0.0 : 1.0;
            }
            weights[0] = 1.0;
            const auto build_bce = [&](Tape& tape, NodeId logits) {
                return tape.bce_with_logits(logits, targets, weights);
            };
            CHECK(run_gradient_check(build_bce, oracles::random_matrix(n, 1, rng, -3, 3)) <
                  1e-4);

            const std::size_t classes = 2 + rng.uniform_index(3);
            std::vector<int> labels(n);
            for (std::size_t i = 0; i < n; ++i) {
                labels[i] = static_cast<int>(rng.uniform_index(classes));
            }
            const auto build_ce = [&](Tape& tape, NodeId logits) {
                return tape.softmax_cross_entropy(logits, labels, weights);
            };
            CHECK(run_gradient_check(build_ce,
                                     oracles::random_matrix(n, classes, rng, -3, 3)) <
                  1e-4);
        }
    }
}

TEST_CASE("group softmax: gradient of a bucket's total mass is zero") {
    Rng rng(23);
    const Graph g = dense_test_graph(rng, 6);
    // Find an anchor with both inter and intra arcs.
    int anchor = -1;
    for (int i = 0; i < g.n_nodes() && anchor < 0; ++i) {
        bool inter = false, intra = false;
        for (int a = g.arc_begin(i); a < g.arc_end(i); ++a) {
            (g.arc_is_inter(a) ? inter : intra) = true;
        }
        if (inter && intra) anchor = i;
    }
    REQUIRE(anchor >= 0);

    Matrix mask(g.n_arcs(), 1);
    for (int a = g.arc_begin(anchor); a < g.arc_end(anchor); ++a) {
        if (g.arc_is_inter(a)) mask(a, 0) = 1.0;
    }

    Tape tape;
    const NodeId scores = tape.param(oracles::random_matrix(g.n_arcs(), 1, rng));
    const NodeId alpha = tape.group_softmax(scores, g, 0.42);
    const NodeId loss = tape.sum(tape.hadamard_product(alpha, tape.input(mask)));
    CHECK(tape.value(loss)(0, 0) == doctest::Approx(0.42).epsilon(1e-9));
    tape.backward(loss);
    CHECK(fairgat::max_abs(tape.adjoint(scores)) < 1e-8);
}

TEST_CASE("tape reset makes it reusable") {
    Tape tape;
    const NodeId x = tape.param(Matrix{{2.0}});
    const NodeId loss = tape.sum(tape.hadamard_product(x, x));
    tape.backward(loss);
    CHECK(tape.size() == 3);
    tape.reset();
    CHECK(tape.size() == 0);
    const NodeId y = tape.param(Matrix{{5.0}});
    const NodeId loss2 = tape.sum(y);
    tape.backward(loss2);
    CHECK(tape.adjoint(y)(0, 0) == 1.0);
}
