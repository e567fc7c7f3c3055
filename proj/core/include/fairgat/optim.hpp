#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairgat/matrix.hpp"

namespace fairgat {

/// Uniform Glorot initialization: entries in [-a, a], a = sqrt(6/(fan_in+fan_out)).
/// The returned matrix is fan_in x fan_out. Deterministic per seed.
Matrix glorot_init(int fan_in, int fan_out, std::uint64_t seed);

struct AdamConfig {
    double lr = 0.005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0005;  // classic L2 added to gradients
};

/// Named parameters with Adam first/second moments and a shared step counter.
class ParamStore {
public:
    int add(std::string name, Matrix value);
    int index_of(const std::string& name) const;

    std::size_t count() const { return entries_.size(); }
    const std::string& name(int idx) const { return entries_[idx].name; }
    Matrix& value(int idx) { return entries_[idx].value; }
    const Matrix& value(int idx) const { return entries_[idx].value; }
    long step() const { return step_; }

    /// One Adam update from gradients aligned with parameter order. The L2
    /// term weight_decay * theta is added to each gradient before the
    /// moment updates.
    void adam_step(const std::vector<Matrix>& grads, const AdamConfig& config);

    std::vector<Matrix> snapshot_values() const;
    void restore_values(const std::vector<Matrix>& values);

private:
    struct Entry {
        std::string name;
        Matrix value;
        Matrix m;
        Matrix v;
    };
    std::vector<Entry> entries_;
    long step_ = 0;
};

}  // namespace fairgat
