#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace risklab {

// Dense row-major tensor of doubles. Rank is dynamic; the layers use rank
// 1, 2 and 4 (N,C,H,W). Hot loops index the flat buffer directly and keep
// their own stride arithmetic.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    static Tensor from_values(std::vector<std::size_t> shape, std::vector<double> values);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t i) const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t i, std::size_t j);
    double at(std::size_t i, std::size_t j) const;
    double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w);
    double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const;

    void fill(double v);
    // Same data, new shape; element counts must agree.
    Tensor reshaped(std::vector<std::size_t> shape) const;

    std::string shape_str() const; // "3x32x32"

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// Statistics over the flat buffer.
double mean_of(const std::vector<double>& v);
double stddev_of(const std::vector<double>& v);        // population (biased)
double mean_abs_of(const std::vector<double>& v);

} // namespace risklab
