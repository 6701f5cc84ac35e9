#pragma once

#include "risklab/tensor.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace risklab {

// One named parameter array. Batch-norm running statistics travel with the
// snapshot but are not trainable: they receive no gradient, are skipped by
// flatten/assign, and are never perturbed.
struct ParamArray {
    std::string name;
    Tensor value;
    bool trainable = true;
};

class WeightSnapshot {
public:
    void add(ParamArray array);
    bool has(const std::string& name) const;
    ParamArray& get(const std::string& name);
    const ParamArray& get(const std::string& name) const;

    std::vector<ParamArray>& arrays() { return arrays_; }
    const std::vector<ParamArray>& arrays() const { return arrays_; }

    // Trainable scalar count.
    std::size_t count_parameters() const;

    // Trainable arrays in declaration order.
    std::vector<double> flatten_trainable() const;
    void assign_trainable(const std::vector<double>& flat);

    // Names of trainable arrays, declaration order.
    std::vector<std::string> trainable_names() const;

    // String-valued metadata, serialized verbatim with the snapshot.
    std::map<std::string, std::string> metadata;

private:
    std::vector<ParamArray> arrays_;
    std::map<std::string, std::size_t> index_;
};

// (1 - alpha) * a + alpha * b, trainable arrays only; exact at alpha 0 and
// 1. The result keeps a's running statistics and metadata. Shapes must
// agree.
WeightSnapshot interpolate_weights(const WeightSnapshot& a, const WeightSnapshot& b,
                                   double alpha);

// One minus cosine similarity of the flattened arrays. Returns NaN when
// either vector has zero norm.
double cosine_dissimilarity(const std::vector<double>& a, const std::vector<double>& b);

double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b);

} // namespace risklab
