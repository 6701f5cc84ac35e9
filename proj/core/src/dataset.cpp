#include "risklab/dataset.hpp"

#include "risklab/errors.hpp"
#include "risklab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace risklab {

namespace {

constexpr std::size_t kCifarRecord = 3073;
constexpr std::size_t kCifarPixels = 3072;

std::size_t shape_product(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

} // namespace

std::vector<std::size_t> Dataset::sample_shape() const {
    const Tensor& t = train_y.empty() ? test_x : train_x;
    if (t.rank() != 4) throw UsageError("dataset holds no samples");
    return {t.dim(1), t.dim(2), t.dim(3)};
}

Dataset make_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.classes == 0) throw UsageError("synthetic data needs classes > 0");
    if (spec.dims.size() != 3) throw UsageError("synthetic dims must be C,H,W");
    if (spec.n_train == 0 || spec.n_train % spec.classes != 0) {
        throw UsageError("synthetic n_train must be a positive multiple of the class count");
    }
    if (spec.n_test % spec.classes != 0) {
        throw UsageError("synthetic n_test must be a multiple of the class count");
    }
    const std::size_t d = shape_product(spec.dims);

    Rng root(seed);
    Rng centers_rng = root.stream(1);
    Rng train_rng = root.stream(2);
    Rng test_rng = root.stream(3);
    Rng order_rng = root.stream(4);

    std::vector<double> centers(spec.classes * d);
    for (double& v : centers) v = centers_rng.gaussian(0.0, spec.separation);

    auto fill_split = [&](Rng& rng, std::size_t n, Tensor& x, std::vector<int>& y) {
        std::vector<std::size_t> shape = {n, spec.dims[0], spec.dims[1], spec.dims[2]};
        x = Tensor(shape);
        y.assign(n, 0);
        const std::size_t per_class = n / spec.classes;
        std::size_t row = 0;
        for (std::size_t c = 0; c < spec.classes; ++c) {
            const double* center = centers.data() + c * d;
            for (std::size_t i = 0; i < per_class; ++i, ++row) {
                double* out = x.data() + row * d;
                for (std::size_t k = 0; k < d; ++k) {
                    out[k] = center[k] + rng.gaussian(0.0, spec.noise);
                }
                y[row] = static_cast<int>(c);
            }
        }
    };

    Dataset data;
    data.name = "synthetic";
    data.classes = spec.classes;
    fill_split(train_rng, spec.n_train, data.train_x, data.train_y);
    if (spec.n_test > 0) {
        fill_split(test_rng, spec.n_test, data.test_x, data.test_y);
    }

    // shuffle the training order so batches mix classes
    const std::vector<std::size_t> perm = order_rng.permutation(spec.n_train);
    Tensor shuffled(data.train_x.shape());
    std::vector<int> labels(spec.n_train);
    for (std::size_t i = 0; i < spec.n_train; ++i) {
        std::memcpy(shuffled.data() + i * d, data.train_x.data() + perm[i] * d,
                    d * sizeof(double));
        labels[i] = data.train_y[perm[i]];
    }
    data.train_x = std::move(shuffled);
    data.train_y = std::move(labels);
    return data;
}

void randomize_labels(Dataset& data, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 11));
    const std::vector<std::size_t> perm = rng.permutation(data.train_y.size());
    std::vector<int> labels(data.train_y.size());
    for (std::size_t i = 0; i < perm.size(); ++i) labels[i] = data.train_y[perm[i]];
    data.train_y = std::move(labels);
}

namespace {

struct RawCifar {
    std::vector<unsigned char> bytes; // concatenated records
    std::vector<int> labels;
};

void read_cifar_file(const std::string& path, RawCifar& out) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw UsageError("cannot read file: " + path);
    const auto size = static_cast<std::size_t>(in.tellg());
    if (size == 0 || size % kCifarRecord != 0) {
        throw UsageError(path + ": size " + std::to_string(size) +
                         " is not a positive multiple of " + std::to_string(kCifarRecord));
    }
    in.seekg(0);
    std::vector<unsigned char> buf(size);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size))) {
        throw UsageError("short read on " + path);
    }
    const std::size_t n = size / kCifarRecord;
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char label = buf[i * kCifarRecord];
        if (label > 9) {
            throw UsageError(path + ": record " + std::to_string(i) + " has label " +
                             std::to_string(static_cast<int>(label)) + " (valid: 0..9)");
        }
        out.labels.push_back(static_cast<int>(label));
        out.bytes.insert(out.bytes.end(), buf.begin() + static_cast<std::ptrdiff_t>(i * kCifarRecord + 1),
                         buf.begin() + static_cast<std::ptrdiff_t>((i + 1) * kCifarRecord));
    }
}

// Balanced pick: per class, a seeded draw without replacement.
std::vector<std::size_t> balanced_pick(const std::vector<int>& labels, std::size_t n,
                                       std::size_t classes, Rng& rng,
                                       const std::string& what) {
    if (n == 0 || n % classes != 0) {
        throw UsageError(what + " count " + std::to_string(n) +
                         " must be a positive multiple of " + std::to_string(classes));
    }
    const std::size_t per_class = n / classes;
    std::vector<std::vector<std::size_t>> by_class(classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    std::vector<std::size_t> picked;
    picked.reserve(n);
    for (std::size_t c = 0; c < classes; ++c) {
        if (by_class[c].size() < per_class) {
            throw UsageError(what + ": class " + std::to_string(c) + " has only " +
                             std::to_string(by_class[c].size()) + " samples, need " +
                             std::to_string(per_class));
        }
        Rng cls = rng.stream(100 + c);
        cls.shuffle(by_class[c]);
        picked.insert(picked.end(), by_class[c].begin(),
                      by_class[c].begin() + static_cast<std::ptrdiff_t>(per_class));
    }
    std::sort(picked.begin(), picked.end()); // keep file order within the subset
    return picked;
}

Tensor gather_records(const RawCifar& raw, const std::vector<std::size_t>& idx) {
    Tensor x({idx.size(), 3, 32, 32});
    double* out = x.data();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const unsigned char* rec = raw.bytes.data() + idx[i] * kCifarPixels;
        for (std::size_t k = 0; k < kCifarPixels; ++k) {
            out[i * kCifarPixels + k] = static_cast<double>(rec[k]) / 255.0;
        }
    }
    return x;
}

} // namespace

Dataset load_cifar10(const std::string& path, const CifarOptions& opt,
                     std::uint64_t seed) {
    namespace fs = std::filesystem;
    RawCifar train_raw, test_raw;
    if (fs::is_directory(path)) {
        for (int b = 1; b <= 5; ++b) {
            const std::string f = path + "/data_batch_" + std::to_string(b) + ".bin";
            if (!fs::exists(f)) throw UsageError("missing file: " + f);
            read_cifar_file(f, train_raw);
        }
        const std::string t = path + "/test_batch.bin";
        if (!fs::exists(t)) throw UsageError("missing file: " + t);
        read_cifar_file(t, test_raw);
    } else if (fs::exists(path)) {
        read_cifar_file(path, train_raw);
        test_raw = train_raw;
    } else {
        throw UsageError("missing file: " + path);
    }

    Rng root(seed);
    Rng pick_train = root.stream(21);
    Rng pick_test = root.stream(22);

    std::vector<std::size_t> train_idx, test_idx;
    if (opt.n_train == 0) {
        train_idx.resize(train_raw.labels.size());
        for (std::size_t i = 0; i < train_idx.size(); ++i) train_idx[i] = i;
    } else {
        train_idx = balanced_pick(train_raw.labels, opt.n_train, 10, pick_train, "train");
    }
    if (opt.n_test == 0) {
        test_idx.resize(test_raw.labels.size());
        for (std::size_t i = 0; i < test_idx.size(); ++i) test_idx[i] = i;
    } else {
        test_idx = balanced_pick(test_raw.labels, opt.n_test, 10, pick_test, "test");
    }

    Dataset data;
    data.name = "cifar10";
    data.classes = 10;
    data.train_x = gather_records(train_raw, train_idx);
    data.test_x = gather_records(test_raw, test_idx);
    data.train_y.reserve(train_idx.size());
    for (std::size_t i : train_idx) data.train_y.push_back(train_raw.labels[i]);
    data.test_y.reserve(test_idx.size());
    for (std::size_t i : test_idx) data.test_y.push_back(test_raw.labels[i]);

    if (opt.normalize && !data.train_y.empty()) {
        const std::size_t plane = 1024;
        for (std::size_t c = 0; c < 3; ++c) {
            double s = 0.0;
            std::size_t cnt = data.train_y.size() * plane;
            for (std::size_t i = 0; i < data.train_y.size(); ++i) {
                const double* p = data.train_x.data() + i * kCifarPixels + c * plane;
                for (std::size_t k = 0; k < plane; ++k) s += p[k];
            }
            const double mu = s / static_cast<double>(cnt);
            double v = 0.0;
            for (std::size_t i = 0; i < data.train_y.size(); ++i) {
                const double* p = data.train_x.data() + i * kCifarPixels + c * plane;
                for (std::size_t k = 0; k < plane; ++k) v += (p[k] - mu) * (p[k] - mu);
            }
            double sd = std::sqrt(v / static_cast<double>(cnt));
            if (sd == 0.0) sd = 1.0;
            auto apply = [&](Tensor& x, std::size_t nrec) {
                for (std::size_t i = 0; i < nrec; ++i) {
                    double* p = x.data() + i * kCifarPixels + c * plane;
                    for (std::size_t k = 0; k < plane; ++k) p[k] = (p[k] - mu) / sd;
                }
            };
            apply(data.train_x, data.train_y.size());
            apply(data.test_x, data.test_y.size());
        }
    }
    return data;
}

Dataset balanced_subset(const Dataset& data, std::size_t n_train, std::size_t n_test,
                        std::uint64_t seed) {
    Rng root(seed);
    Rng pick_train = root.stream(31);
    Rng pick_test = root.stream(32);
    const std::size_t d = shape_product(data.sample_shape());

    auto take = [&](const Tensor& x, const std::vector<int>& y, std::size_t n, Rng& rng,
                    const std::string& what, Tensor& ox, std::vector<int>& oy) {
        if (n == 0) {
            ox = x;
            oy = y;
            return;
        }
        const std::vector<std::size_t> idx = balanced_pick(y, n, data.classes, rng, what);
        std::vector<std::size_t> shape = x.shape();
        shape[0] = idx.size();
        ox = Tensor(shape);
        oy.resize(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            std::memcpy(ox.data() + i * d, x.data() + idx[i] * d, d * sizeof(double));
            oy[i] = y[idx[i]];
        }
    };

    Dataset out;
    out.name = data.name;
    out.classes = data.classes;
    take(data.train_x, data.train_y, n_train, pick_train, "train", out.train_x, out.train_y);
    take(data.test_x, data.test_y, n_test, pick_test, "test", out.test_x, out.test_y);
    return out;
}

} // namespace risklab
