#include "fairgat/numerics.hpp"

#include <cmath>

#include "fairgat/errors.hpp"
#include "fairgat/rng.hpp"

namespace fairgat {

Matrix activation(ActivationKind kind, const Matrix& x) {
    Matrix out = x;
    switch (kind.kind) {
        case Activation::ReLU:
            // 0.0 * v keeps NaN flowing so divergence stays observable.
            for (double& v : out.data()) v = v > 0.0 ? v : 0.0 * v;
            break;
        case Activation::LeakyReLU:
            for (double& v : out.data()) v = v > 0.0 ? v : kind.slope * v;
            break;
        case Activation::Sigmoid:
            for (double& v : out.data()) v = sigmoid(v);
            break;
        case Activation::Identity:
            break;
    }
    return out;
}

Matrix activation_grad(ActivationKind kind, const Matrix& x) {
    Matrix out = x;
    switch (kind.kind) {
        case Activation::ReLU:
            for (double& v : out.data()) v = v > 0.0 ? 1.0 : 0.0;
            break;
        case Activation::LeakyReLU:
            for (double& v : out.data()) v = v > 0.0 ? 1.0 : kind.slope;
            break;
        case Activation::Sigmoid:
            for (double& v : out.data()) {
                const double s = sigmoid(v);
                v = s * (1.0 - s);
            }
            break;
        case Activation::Identity:
            for (double& v : out.data()) v = 1.0;
            break;
    }
    return out;
}

double lipschitz_constant(ActivationKind kind) {
    return kind.kind == Activation::Sigmoid ? 0.25 : 1.0;
}

namespace {

// sigma estimate = ||W v|| for unit v; Rayleigh quotient of W^T W, so the
// sequence is non-decreasing under power iteration. Convergence is judged by
// the eigen-residual ||W^T W v - lambda v||, which bounds |lambda - lambda_i|
// for a symmetric matrix; the consecutive-difference test can stall early on
// clustered singular values. tol == 0 runs exactly `iters` steps.
double run_power_iteration(const Matrix& w, std::vector<double>& v, int iters,
                           double tol, bool* converged) {
    const std::size_t n = w.cols();
    double norm_v = 0.0;
    for (double x : v) norm_v += x * x;
    norm_v = std::sqrt(norm_v);
    for (double& x : v) x /= norm_v;

    double sigma = 0.0;
    *converged = false;
    std::vector<double> wv(w.rows(), 0.0);
    std::vector<double> wtwv(n, 0.0);
    for (int it = 0; it < iters; ++it) {
        // wv = W v
        for (std::size_t i = 0; i < w.rows(); ++i) {
            const double* row = w.data().data() + i * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += row[j] * v[j];
            wv[i] = acc;
        }
        double lambda = 0.0;  // v^T W^T W v for unit v
        for (double x : wv) lambda += x * x;
        sigma = std::sqrt(lambda);
        // wtwv = W^T wv
        std::fill(wtwv.begin(), wtwv.end(), 0.0);
        for (std::size_t i = 0; i < w.rows(); ++i) {
            const double* row = w.data().data() + i * n;
            const double wi = wv[i];
            if (wi == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) wtwv[j] += row[j] * wi;
        }
        double residual = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double r = wtwv[j] - lambda * v[j];
            residual += r * r;
        }
        residual = std::sqrt(residual);
        if (tol > 0.0 && residual <= tol * std::max(lambda, 1e-300)) {
            *converged = true;
            return sigma;
        }
        double norm_next = 0.0;
        for (double x : wtwv) norm_next += x * x;
        norm_next = std::sqrt(norm_next);
        if (norm_next == 0.0) {
            // v landed in the null space of W; let the caller restart.
            return sigma;
        }
        for (std::size_t j = 0; j < n; ++j) v[j] = wtwv[j] / norm_next;
    }
    return sigma;
}

std::vector<double> seeded_unit_vector(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

constexpr std::uint64_t kPowerIterSeed = 0x5eed0f01ULL;
constexpr std::uint64_t kPowerIterRetrySeed = 0x5eed0f02ULL;

double power_iteration_with_restarts(const Matrix& w, std::vector<double>& v,
                                     int iters, double tol) {
    bool converged = false;
    double sigma = run_power_iteration(w, v, iters, tol, &converged);
    if (converged || tol <= 0.0) return sigma;

    // The start vector may be nearly orthogonal to the top singular
    // direction; a second deterministic start resolves most stalls.
    std::vector<double> v2 = seeded_unit_vector(w.cols(), kPowerIterRetrySeed);
    bool converged2 = false;
    const double sigma2 = run_power_iteration(w, v2, iters, tol, &converged2);
    if (sigma2 > sigma) {
        sigma = sigma2;
        v = v2;
    }
    if (converged2 || converged) return sigma;

    // Clustered singular values converge slowly; extend the budget so the
    // advertised tolerance holds.
    for (int growth = 0; growth < 3; ++growth) {
        bool done = false;
        sigma = std::max(sigma, run_power_iteration(w, v, 32 * iters, tol, &done));
        if (done) break;
    }
    return sigma;
}

}  // namespace

double spectral_norm_estimate(const Matrix& w, int iters, double tol) {
    if (w.empty()) throw NumericError("spectral norm of empty matrix");
    if (iters < 1) throw NumericError("spectral_norm_estimate: iters must be >= 1");
    bool any_nonzero = false;
    for (double v : w.data()) {
        if (v != 0.0) {
            any_nonzero = true;
            break;
        }
    }
    if (!any_nonzero) return 0.0;

    std::vector<double> v = seeded_unit_vector(w.cols(), kPowerIterSeed);
    return power_iteration_with_restarts(w, v, iters, tol);
}

Matrix spectral_normalize(const Matrix& w, double kappa) {
    if (kappa <= 0.0 || kappa > 1.0) {
        throw NumericError("spectral_normalize: kappa must be in (0, 1]");
    }
    const double sigma = spectral_norm_estimate(w);
    if (sigma == 0.0) throw NumericError("cannot normalize zero matrix");
    Matrix out = w;
    out *= kappa / sigma;
    return out;
}

double SpectralNormState::estimate(const Matrix& w, int iters, double tol) {
    bool any_nonzero = false;
    for (double v : w.data()) {
        if (v != 0.0) {
            any_nonzero = true;
            break;
        }
    }
    if (!any_nonzero) return 0.0;
    if (v_.size() != w.cols()) {
        v_ = seeded_unit_vector(w.cols(), kPowerIterSeed);
    }
    return power_iteration_with_restarts(w, v_, iters, tol);
}

GroupStats group_stats(const Matrix& h, const SensitivePartition& partition) {
    const std::size_t f = h.cols();
    GroupStats stats;
    stats.means.reserve(partition.num_groups);
    stats.per_group.reserve(partition.num_groups);
    for (int g = 0; g < partition.num_groups; ++g) {
        const auto& members = partition.groups[g];
        if (members.empty()) throw DataError("degenerate partition");
        Matrix mean(1, f);
        for (int i : members) {
            const auto row = h.row(i);
            for (std::size_t j = 0; j < f; ++j) mean(0, j) += row[j];
        }
        mean *= 1.0 / static_cast<double>(members.size());

        double dev = 0.0;
        for (int i : members) {
            const auto row = h.row(i);
            for (std::size_t j = 0; j < f; ++j) {
                dev = std::max(dev, std::abs(row[j] - mean(0, j)));
            }
        }
        stats.means.push_back(std::move(mean));
        stats.per_group.push_back(dev);
        stats.delta = std::max(stats.delta, dev);
    }
    return stats;
}

}  // namespace fairgat
