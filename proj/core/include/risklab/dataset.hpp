#pragma once

#include "risklab/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace risklab {

struct Dataset {
    std::string name;
    Tensor train_x, test_x;         // N,C,H,W
    std::vector<int> train_y, test_y;
    std::size_t classes = 10;

    std::size_t train_size() const { return train_y.size(); }
    std::size_t test_size() const { return test_y.size(); }
    std::vector<std::size_t> sample_shape() const; // C,H,W
};

struct SyntheticSpec {
    std::size_t classes = 10;
    std::vector<std::size_t> dims = {1, 8, 8}; // C,H,W
    std::size_t n_train = 500;
    std::size_t n_test = 500;
    double separation = 1.0; // class centers ~ N(0, separation^2 I)
    double noise = 1.0;      // samples = center + N(0, noise^2 I)
};

// Gaussian class clusters with exactly balanced labels; train order is
// shuffled. Both sample counts must divide by the class count.
Dataset make_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// Permute the training labels (a derangement is not forced; plain
// Fisher-Yates). Test labels stay honest.
void randomize_labels(Dataset& data, std::uint64_t seed);

struct CifarOptions {
    std::size_t n_train = 0; // 0 = all
    std::size_t n_test = 0;
    bool normalize = true;   // per-channel, statistics from the selected train part
};

// CIFAR-10 binary format: records of 1 label byte + 3072 pixel bytes.
// path may be a directory holding data_batch_1..5.bin and test_batch.bin,
// or a single .bin used as the pool for both splits. Subsets are
// class-balanced seeded draws; only the selected records are converted to
// doubles, so small subsets stay cheap.
Dataset load_cifar10(const std::string& path, const CifarOptions& opt,
                     std::uint64_t seed);

// Class-balanced subset of an in-memory dataset; per-class picks are
// seeded draws without replacement. n_train and n_test must divide by the
// class count (0 keeps a split whole).
Dataset balanced_subset(const Dataset& data, std::size_t n_train, std::size_t n_test,
                        std::uint64_t seed);

} // namespace risklab
