#include "risklab/snapshot.hpp"

#include "risklab/errors.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace risklab {

void WeightSnapshot::add(ParamArray array) {
    if (index_.count(array.name)) {
        throw UsageError("duplicate parameter array name: " + array.name);
    }
    index_[array.name] = arrays_.size();
    arrays_.push_back(std::move(array));
}

bool WeightSnapshot::has(const std::string& name) const {
    return index_.count(name) != 0;
}

ParamArray& WeightSnapshot::get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw UsageError("no parameter array named " + name);
    return arrays_[it->second];
}

const ParamArray& WeightSnapshot::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw UsageError("no parameter array named " + name);
    return arrays_[it->second];
}

std::size_t WeightSnapshot::count_parameters() const {
    std::size_t n = 0;
    for (const auto& a : arrays_) {
        if (a.trainable) n += a.value.size();
    }
    return n;
}

std::vector<double> WeightSnapshot::flatten_trainable() const {
    std::vector<double> flat;
    flat.reserve(count_parameters());
    for (const auto& a : arrays_) {
        if (!a.trainable) continue;
        const auto& v = a.value.values();
        flat.insert(flat.end(), v.begin(), v.end());
    }
    return flat;
}

void WeightSnapshot::assign_trainable(const std::vector<double>& flat) {
    std::size_t pos = 0;
    for (auto& a : arrays_) {
        if (!a.trainable) continue;
        auto& v = a.value.values();
        if (pos + v.size() > flat.size()) {
            throw UsageError("assign_trainable: flat vector too short");
        }
        for (double& x : v) x = flat[pos++];
    }
    if (pos != flat.size()) {
        throw UsageError("assign_trainable: flat vector length mismatch");
    }
}

std::vector<std::string> WeightSnapshot::trainable_names() const {
    std::vector<std::string> names;
    for (const auto& a : arrays_) {
        if (a.trainable) names.push_back(a.name);
    }
    return names;
}

WeightSnapshot interpolate_weights(const WeightSnapshot& a, const WeightSnapshot& b,
                                   double alpha) {
    WeightSnapshot out = a;
    for (auto& arr : out.arrays()) {
        if (!arr.trainable) continue;
        const ParamArray& other = b.get(arr.name);
        if (other.value.shape() != arr.value.shape()) {
            throw UsageError("interpolate_weights: shape mismatch on " + arr.name);
        }
        auto& x = arr.value.values();
        const auto& y = other.value.values();
        if (alpha == 0.0) continue;
        if (alpha == 1.0) {
            x = y;
            continue;
        }
        // (1-alpha)*a + alpha*b: exact at both endpoints
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = (1.0 - alpha) * x[i] + alpha * y[i];
        }
    }
    return out;
}

double cosine_dissimilarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw UsageError("cosine_dissimilarity: length mismatch");
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (aa == 0.0 || bb == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return 1.0 - ab / (std::sqrt(aa) * std::sqrt(bb));
}

double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw UsageError("euclidean_distance: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

} // namespace risklab
