#pragma once

// Test-only oracles, deliberately independent of the library's numerics:
// a cyclic Jacobi eigensolver for spectral norms, a naive triple-loop
// matrix multiply, and central finite differences for gradient checks.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "fairgat/matrix.hpp"
#include "fairgat/rng.hpp"

namespace oracles {

/// Largest singular value of w as sqrt(lambda_max(w^T w)) computed by an
/// exhaustive cyclic Jacobi eigendecomposition.
inline double spectral_norm_jacobi(const fairgat::Matrix& w) {
    const std::size_t n = w.cols();
    // gram = w^T w, built with plain loops.
    std::vector<double> gram(n * n, 0.0);
    for (std::size_t i = 0; i < w.rows(); ++i) {
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) {
                gram[a * n + b] += w(i, a) * w(i, b);
            }
        }
    }
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) off += gram[p * n + q] * gram[p * n + q];
        }
        if (off < 1e-26) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = gram[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                const double app = gram[p * n + p];
                const double aqq = gram[q * n + q];
                const double theta = 0.5 * std::atan2(2.0 * apq, aqq - app);
                const double c = std::cos(theta), s = std::sin(theta);
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = gram[k * n + p];
                    const double akq = gram[k * n + q];
                    gram[k * n + p] = c * akp - s * akq;
                    gram[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = gram[p * n + k];
                    const double aqk = gram[q * n + k];
                    gram[p * n + k] = c * apk - s * aqk;
                    gram[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    double lambda_max = 0.0;
    for (std::size_t p = 0; p < n; ++p) lambda_max = std::max(lambda_max, gram[p * n + p]);
    return std::sqrt(std::max(0.0, lambda_max));
}

/// Plain triple-loop matrix product.
inline fairgat::Matrix naive_matmul(const fairgat::Matrix& a, const fairgat::Matrix& b) {
    fairgat::Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    }
    return out;
}

inline fairgat::Matrix random_matrix(std::size_t rows, std::size_t cols,
                                     fairgat::Rng& rng, double lo = -1.0,
                                     double hi = 1.0) {
    fairgat::Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.uniform(lo, hi);
    return m;
}

/// Central finite differences of a scalar function of one matrix input.
inline fairgat::Matrix finite_difference_grad(
    const std::function<double(const fairgat::Matrix&)>& f, const fairgat::Matrix& x,
    double step = 1e-5) {
    fairgat::Matrix grad(x.rows(), x.cols());
    fairgat::Matrix probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double original = probe.data()[i];
        probe.data()[i] = original + step;
        const double up = f(probe);
        probe.data()[i] = original - step;
        const double down = f(probe);
        probe.data()[i] = original;
        grad.data()[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

/// Max relative error between an analytic gradient and its finite-difference
/// estimate, with an absolute floor so near-zero entries do not blow up.
inline double max_relative_error(const fairgat::Matrix& analytic,
                                 const fairgat::Matrix& numeric) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double a = analytic.data()[i];
        const double b = numeric.data()[i];
        const double scale = std::max({std::abs(a), std::abs(b), 1e-3});
        worst = std::max(worst, std::abs(a - b) / scale);
    }
    return worst;
}

}  // namespace oracles
