#pragma once

#include <cmath>
#include <vector>

#include "fairgat/graph.hpp"
#include "fairgat/matrix.hpp"

namespace fairgat {

enum class Activation { ReLU, LeakyReLU, Sigmoid, Identity };

struct ActivationKind {
    Activation kind = Activation::ReLU;
    double slope = 0.2;  // LeakyReLU only; the usual GAT value
};

Matrix activation(ActivationKind kind, const Matrix& x);
/// Element-wise derivative of the activation evaluated at x.
Matrix activation_grad(ActivationKind kind, const Matrix& x);
/// Global Lipschitz constant: 1 for ReLU/LeakyReLU/Identity, 0.25 for sigmoid.
double lipschitz_constant(ActivationKind kind);

inline double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                    : std::exp(x) / (1.0 + std::exp(x));
}

/// Largest singular value via power iteration on W^T W. Deterministic start
/// vector; restarts from a second seed if convergence stalls. Returns 0 for
/// the all-zero matrix.
double spectral_norm_estimate(const Matrix& w, int iters = 100, double tol = 1e-8);

/// kappa * w / sigma_max(w). Throws NumericError on the zero matrix.
Matrix spectral_normalize(const Matrix& w, double kappa);

/// Warm-started power iteration for repeated normalization of a slowly
/// changing weight matrix during training. Deterministic.
class SpectralNormState {
public:
    double estimate(const Matrix& w, int iters = 100, double tol = 1e-8);

private:
    std::vector<double> v_;
};

/// Per-group sample means of the rows of a matrix plus the maximal
/// infinity-norm deviation from the group mean (the measured A1 quantity).
struct GroupStats {
    std::vector<Matrix> means;       // 1 x F per sensitive group
    std::vector<double> per_group;   // max_j ||row_j - mean_g||_inf over group g
    double delta = 0.0;              // max over groups

    const Matrix& mean0() const { return means[0]; }
    const Matrix& mean1() const { return means[1]; }
};

GroupStats group_stats(const Matrix& h, const SensitivePartition& partition);

}  // namespace fairgat
