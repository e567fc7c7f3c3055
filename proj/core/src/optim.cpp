#include "fairgat/optim.hpp"

#include <cmath>

#include "fairgat/errors.hpp"
#include "fairgat/rng.hpp"

namespace fairgat {

Matrix glorot_init(int fan_in, int fan_out, std::uint64_t seed) {
    if (fan_in < 1 || fan_out < 1) throw NumericError("glorot_init: fans must be >= 1");
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Rng rng(seed);
    Matrix w(fan_in, fan_out);
    for (double& v : w.data()) v = rng.uniform(-a, a);
    return w;
}

int ParamStore::add(std::string name, Matrix value) {
    Entry e;
    e.name = std::move(name);
    e.m = Matrix(value.rows(), value.cols());
    e.v = Matrix(value.rows(), value.cols());
    e.value = std::move(value);
    entries_.push_back(std::move(e));
    return static_cast<int>(entries_.size()) - 1;
}

int ParamStore::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name == name) return static_cast<int>(i);
    }
    throw ConfigError("unknown parameter: " + name);
}

void ParamStore::adam_step(const std::vector<Matrix>& grads, const AdamConfig& config) {
    if (grads.size() != entries_.size()) {
        throw NumericError("adam_step: gradient count mismatch");
    }
    for (std::size_t p = 0; p < entries_.size(); ++p) {
        if (!grads[p].same_shape(entries_[p].value)) {
            throw NumericError("adam_step: gradient shape mismatch for " + entries_[p].name);
        }
    }
    step_ += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step_));
    for (std::size_t p = 0; p < entries_.size(); ++p) {
        Entry& e = entries_[p];
        for (std::size_t i = 0; i < e.value.size(); ++i) {
            const double g = grads[p].data()[i] + config.weight_decay * e.value.data()[i];
            double& m = e.m.data()[i];
            double& v = e.v.data()[i];
            m = config.beta1 * m + (1.0 - config.beta1) * g;
            v = config.beta2 * v + (1.0 - config.beta2) * g * g;
            const double m_hat = m / bc1;
            const double v_hat = v / bc2;
            e.value.data()[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
        }
    }
}

std::vector<Matrix> ParamStore::snapshot_values() const {
    std::vector<Matrix> out;
    out.reserve(entries_.size());
    for (const Entry& e : entries_) out.push_back(e.value);
    return out;
}

void ParamStore::restore_values(const std::vector<Matrix>& values) {
    if (values.size() != entries_.size()) {
        throw NumericError("restore_values: count mismatch");
    }
    for (std::size_t i = 0; i < values.size(); ++i) entries_[i].value = values[i];
}

}  // namespace fairgat
