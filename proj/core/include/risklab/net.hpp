#pragma once

#include "risklab/poly_activation.hpp"
#include "risklab/rng.hpp"
#include "risklab/snapshot.hpp"
#include "risklab/tensor.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace risklab {

enum class Activation { relu, poly };
enum class LossKind { cross_entropy, square };

LossKind loss_from_string(const std::string& s);
std::string to_string(LossKind k);
Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

struct LayerDesc {
    enum class Kind { conv3x3s2, dense, batchnorm, act };
    Kind kind;
    std::size_t in = 0;  // conv: channels, dense: features
    std::size_t out = 0;
    bool bias = false;   // dense only
    std::string label;   // "L1", "L2", ... shared by a conv and its norm
};

struct NetworkSpec {
    std::vector<std::size_t> input_shape; // C,H,W
    std::vector<LayerDesc> layers;
    std::size_t classes = 0;
    Activation activation = Activation::relu;
    PolyActivation poly;       // used when activation == poly
    // Optional per-activation-layer fits (size = number of act layers);
    // empty means every act layer shares `poly`.
    std::vector<PolyActivation> poly_per_layer;
    double bn_eps = 1e-5;
};

// Conv(3x3, stride 2, pad 1) + norm + activation per width, then a dense
// readout with bias. Spatial dims shrink as floor((d-1)/2)+1 per block.
NetworkSpec make_convnet(std::vector<std::size_t> input_shape,
                         const std::vector<std::size_t>& widths,
                         std::size_t classes, bool batchnorm = true,
                         Activation activation = Activation::relu);

class Network {
public:
    explicit Network(NetworkSpec spec);

    const NetworkSpec& spec() const { return spec_; }
    std::size_t classes() const { return spec_.classes; }
    std::size_t count_parameters() const;
    // Labels of trainable layers in order: {"L1","L2",...}.
    std::vector<std::string> layer_labels() const;
    // Labels of norm layers in order (these share their conv's label).
    std::vector<std::string> norm_labels() const;

    // Weights ~ N(0, sqrt(2/fan_in)), biases zero, running stats (0,1).
    // Draw order is fixed (layer order, row-major), so a seed pins the
    // initialization bit-for-bit.
    WeightSnapshot init(Rng& rng) const;

    // Pure forward. Train mode normalizes with batch statistics, eval mode
    // with the snapshot's running statistics; neither mutates anything.
    Tensor forward(const WeightSnapshot& w, const Tensor& x, bool train_mode) const;

    // Mean-over-batch loss with gradients for every trainable array
    // (train-mode batch norm). grads may be null. bn_mean/bn_var, when
    // non-null, receive the per-norm-layer batch statistics so the caller
    // can fold them into the running estimates.
    double loss_and_grad(const WeightSnapshot& w, const Tensor& x,
                         const std::vector<int>& y, LossKind loss,
                         WeightSnapshot* grads,
                         std::vector<Tensor>* bn_mean = nullptr,
                         std::vector<Tensor>* bn_var = nullptr) const;

    double loss_only(const WeightSnapshot& w, const Tensor& x,
                     const std::vector<int>& y, LossKind loss,
                     bool train_mode) const;

    // Eval-mode argmax labels; ties break to the lowest class index.
    std::vector<int> predict(const WeightSnapshot& w, const Tensor& x) const;

    struct EvalResult {
        double loss = 0.0;
        double error_pct = 0.0;
    };
    // Eval-mode metrics, chunked to bound activation memory. Exact: eval
    // mode is per-sample independent.
    EvalResult evaluate(const WeightSnapshot& w, const Tensor& x,
                        const std::vector<int>& y, LossKind loss,
                        std::size_t chunk = 512) const;

    // Inputs of every activation layer under train-mode statistics.
    std::vector<Tensor> collect_preactivations(const WeightSnapshot& w,
                                               const Tensor& x) const;

    // Exact running statistics for the snapshot's norm layers measured
    // over the whole set x, walking the net layer by layer (peak memory:
    // two full-set activation tensors). Equivalent to one train-mode pass
    // over x as a single batch. Needed after averaging weights of two
    // nets, where neither parent's statistics apply.
    WeightSnapshot reestimate_norm_stats(const WeightSnapshot& w, const Tensor& x) const;

    // Per-class output layout sanity check against a label vector.
    void check_labels(const std::vector<int>& y) const;

    // Rejects a snapshot that does not match this architecture, naming the
    // first offending array: missing, extra, or wrong shape.
    void validate_snapshot(const WeightSnapshot& w) const;

private:
    NetworkSpec spec_;
    // Per layer: input and output shape (C,H,W) or (F).
    std::vector<std::vector<std::size_t>> in_shape_, out_shape_;
    std::vector<std::size_t> act_ordinal_; // per layer: index among act layers

    const PolyActivation& act_poly(std::size_t layer_index) const;

    struct Pass; // forward caches, defined in the implementation
    void run_forward(const WeightSnapshot& w, const Tensor& x, bool train_mode,
                     Pass* pass, Tensor& out) const;
};

} // namespace risklab
