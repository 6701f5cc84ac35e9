#include "risklab/net.hpp"

#include "risklab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace risklab {

LossKind loss_from_string(const std::string& s) {
    if (s == "cross_entropy") return LossKind::cross_entropy;
    if (s == "square") return LossKind::square;
    throw UsageError("unknown loss: " + s + " (expected cross_entropy or square)");
}

std::string to_string(LossKind k) {
    return k == LossKind::cross_entropy ? "cross_entropy" : "square";
}

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "poly") return Activation::poly;
    throw UsageError("unknown activation: " + s + " (expected relu or poly)");
}

std::string to_string(Activation a) {
    return a == Activation::relu ? "relu" : "poly";
}

namespace {

std::size_t halved(std::size_t d) { return (d - 1) / 2 + 1; }

std::size_t flat_size(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

} // namespace

NetworkSpec make_convnet(std::vector<std::size_t> input_shape,
                         const std::vector<std::size_t>& widths,
                         std::size_t classes, bool batchnorm,
                         Activation activation) {
    if (input_shape.size() != 3) throw UsageError("input shape must be C,H,W");
    if (widths.empty()) throw UsageError("at least one conv width required");
    NetworkSpec spec;
    spec.input_shape = std::move(input_shape);
    spec.classes = classes;
    spec.activation = activation;

    std::size_t c = spec.input_shape[0];
    std::size_t h = spec.input_shape[1];
    std::size_t w = spec.input_shape[2];
    std::size_t ordinal = 1;
    for (std::size_t width : widths) {
        const std::string label = "L" + std::to_string(ordinal++);
        spec.layers.push_back({LayerDesc::Kind::conv3x3s2, c, width, false, label});
        if (batchnorm) {
            spec.layers.push_back({LayerDesc::Kind::batchnorm, width, width, false, label});
        }
        spec.layers.push_back({LayerDesc::Kind::act, width, width, false, label});
        c = width;
        h = halved(h);
        w = halved(w);
    }
    const std::string label = "L" + std::to_string(ordinal);
    spec.layers.push_back({LayerDesc::Kind::dense, c * h * w, classes, true, label});
    return spec;
}

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
    if (spec_.input_shape.size() != 3) throw UsageError("input shape must be C,H,W");
    if (spec_.classes == 0) throw UsageError("network needs a class count");
    std::size_t act_count = 0;
    for (const auto& l : spec_.layers) {
        act_ordinal_.push_back(act_count);
        if (l.kind == LayerDesc::Kind::act) ++act_count;
    }
    if (spec_.activation == Activation::poly) {
        if (!spec_.poly_per_layer.empty() && spec_.poly_per_layer.size() != act_count) {
            throw UsageError("per-layer activation list has " +
                             std::to_string(spec_.poly_per_layer.size()) +
                             " entries for " + std::to_string(act_count) +
                             " activation layers");
        }
        if (spec_.poly_per_layer.empty() && spec_.poly.degree() < 1) {
            throw UsageError("poly activation selected but no coefficients set");
        }
        for (const auto& p : spec_.poly_per_layer) {
            if (p.degree() < 1) {
                throw UsageError("per-layer activation with no coefficients");
            }
        }
    }

    std::vector<std::size_t> cur = spec_.input_shape; // C,H,W or F
    for (const auto& l : spec_.layers) {
        in_shape_.push_back(cur);
        switch (l.kind) {
            case LayerDesc::Kind::conv3x3s2:
                if (cur.size() != 3 || cur[0] != l.in) {
                    throw UsageError("conv layer " + l.label + " input mismatch");
                }
                cur = {l.out, halved(cur[1]), halved(cur[2])};
                break;
            case LayerDesc::Kind::batchnorm:
                if (cur.size() != 3 || cur[0] != l.in) {
                    throw UsageError("norm layer " + l.label + " input mismatch");
                }
                break;
            case LayerDesc::Kind::act:
                break;
            case LayerDesc::Kind::dense:
                if (flat_size(cur) != l.in) {
                    throw UsageError("dense layer " + l.label + " input mismatch");
                }
                cur = {l.out};
                break;
        }
        out_shape_.push_back(cur);
    }
    if (cur.size() != 1 || cur[0] != spec_.classes) {
        throw UsageError("network output does not match class count");
    }
}

std::size_t Network::count_parameters() const {
    std::size_t n = 0;
    for (const auto& l : spec_.layers) {
        if (l.kind == LayerDesc::Kind::conv3x3s2) {
            n += l.out * l.in * 9;
        } else if (l.kind == LayerDesc::Kind::dense) {
            n += l.out * l.in + (l.bias ? l.out : 0);
        }
    }
    return n;
}

std::vector<std::string> Network::layer_labels() const {
    std::vector<std::string> labels;
    for (const auto& l : spec_.layers) {
        if (l.kind == LayerDesc::Kind::conv3x3s2 || l.kind == LayerDesc::Kind::dense) {
            labels.push_back(l.label);
        }
    }
    return labels;
}

std::vector<std::string> Network::norm_labels() const {
    std::vector<std::string> labels;
    for (const auto& l : spec_.layers) {
        if (l.kind == LayerDesc::Kind::batchnorm) labels.push_back(l.label);
    }
    return labels;
}

WeightSnapshot Network::init(Rng& rng) const {
    WeightSnapshot snap;
    for (const auto& l : spec_.layers) {
        if (l.kind == LayerDesc::Kind::conv3x3s2) {
            Tensor w({l.out, l.in, 3, 3});
            const double sd = std::sqrt(2.0 / static_cast<double>(l.in * 9));
            for (double& x : w.values()) x = rng.gaussian(0.0, sd);
            snap.add({l.label + ".weight", std::move(w), true});
        } else if (l.kind == LayerDesc::Kind::dense) {
            Tensor w({l.out, l.in});
            const double sd = std::sqrt(2.0 / static_cast<double>(l.in));
            for (double& x : w.values()) x = rng.gaussian(0.0, sd);
            snap.add({l.label + ".weight", std::move(w), true});
            if (l.bias) {
                snap.add({l.label + ".bias", Tensor({l.out}, 0.0), true});
            }
        } else if (l.kind == LayerDesc::Kind::batchnorm) {
            snap.add({l.label + ".bn.running_mean", Tensor({l.in}, 0.0), false});
            snap.add({l.label + ".bn.running_var", Tensor({l.in}, 1.0), false});
        }
    }
    return snap;
}

// Forward caches. inputs[i] is the tensor entering layer i; norm layers
// additionally keep their normalized output and batch statistics.
struct Network::Pass {
    bool train_mode = true;
    std::vector<Tensor> inputs;
    std::vector<Tensor> bn_xhat; // per norm layer, in layer order
    std::vector<Tensor> bn_mean;
    std::vector<Tensor> bn_var;
};

namespace {

Tensor conv_forward(const Tensor& in, const Tensor& w,
                    const std::vector<std::size_t>& out_chw) {
    const std::size_t n = in.dim(0), ic = in.dim(1), h = in.dim(2), wd = in.dim(3);
    const std::size_t oc = out_chw[0], oh = out_chw[1], ow = out_chw[2];
    Tensor out({n, oc, oh, ow});
    const double* wp = w.data();
    const double* ip = in.data();
    double* op = out.data();
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t o = 0; o < oc; ++o) {
            for (std::size_t y = 0; y < oh; ++y) {
                for (std::size_t x = 0; x < ow; ++x) {
                    double s = 0.0;
                    for (std::size_t c = 0; c < ic; ++c) {
                        const double* wrow = wp + ((o * ic + c) * 9);
                        const double* irow = ip + ((b * ic + c) * h) * wd;
                        for (std::size_t kh = 0; kh < 3; ++kh) {
                            const std::size_t iy = 2 * y + kh;
                            if (iy < 1 || iy > h) continue; // pad 1: real row iy-1
                            for (std::size_t kw = 0; kw < 3; ++kw) {
                                const std::size_t ix = 2 * x + kw;
                                if (ix < 1 || ix > wd) continue;
                                s += wrow[kh * 3 + kw] * irow[(iy - 1) * wd + (ix - 1)];
                            }
                        }
                    }
                    op[((b * oc + o) * oh + y) * ow + x] = s;
                }
            }
        }
    }
    return out;
}

void conv_backward(const Tensor& in, const Tensor& w, const Tensor& gout,
                   Tensor& gin, Tensor& gw) {
    const std::size_t n = in.dim(0), ic = in.dim(1), h = in.dim(2), wd = in.dim(3);
    const std::size_t oc = gout.dim(1), oh = gout.dim(2), ow = gout.dim(3);
    const double* wp = w.data();
    const double* ip = in.data();
    const double* gp = gout.data();
    double* gip = gin.data();
    double* gwp = gw.data();
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t o = 0; o < oc; ++o) {
            for (std::size_t y = 0; y < oh; ++y) {
                for (std::size_t x = 0; x < ow; ++x) {
                    const double g = gp[((b * oc + o) * oh + y) * ow + x];
                    if (g == 0.0) continue;
                    for (std::size_t c = 0; c < ic; ++c) {
                        const double* wrow = wp + ((o * ic + c) * 9);
                        double* gwrow = gwp + ((o * ic + c) * 9);
                        const double* irow = ip + ((b * ic + c) * h) * wd;
                        double* girow = gip + ((b * ic + c) * h) * wd;
                        for (std::size_t kh = 0; kh < 3; ++kh) {
                            const std::size_t iy = 2 * y + kh;
                            if (iy < 1 || iy > h) continue;
                            for (std::size_t kw = 0; kw < 3; ++kw) {
                                const std::size_t ix = 2 * x + kw;
                                if (ix < 1 || ix > wd) continue;
                                const std::size_t ii = (iy - 1) * wd + (ix - 1);
                                girow[ii] += g * wrow[kh * 3 + kw];
                                gwrow[kh * 3 + kw] += g * irow[ii];
                            }
                        }
                    }
                }
            }
        }
    }
}

void channel_stats(const Tensor& x, Tensor& mean, Tensor& var) {
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t m = n * h * w;
    const double* p = x.data();
    for (std::size_t ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (std::size_t b = 0; b < n; ++b) {
            const double* row = p + ((b * c + ch) * h) * w;
            for (std::size_t i = 0; i < h * w; ++i) s += row[i];
        }
        const double mu = s / static_cast<double>(m);
        double v = 0.0;
        for (std::size_t b = 0; b < n; ++b) {
            const double* row = p + ((b * c + ch) * h) * w;
            for (std::size_t i = 0; i < h * w; ++i) {
                const double d = row[i] - mu;
                v += d * d;
            }
        }
        mean[ch] = mu;
        var[ch] = v / static_cast<double>(m);
    }
}

Tensor bn_normalize(const Tensor& x, const Tensor& mean, const Tensor& var, double eps) {
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    Tensor out({n, c, h, w});
    const double* p = x.data();
    double* op = out.data();
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double inv = 1.0 / std::sqrt(var[ch] + eps);
            const double mu = mean[ch];
            const double* row = p + ((b * c + ch) * h) * w;
            double* orow = op + ((b * c + ch) * h) * w;
            for (std::size_t i = 0; i < h * w; ++i) orow[i] = (row[i] - mu) * inv;
        }
    }
    return out;
}

} // namespace

const PolyActivation& Network::act_poly(std::size_t layer_index) const {
    if (spec_.poly_per_layer.empty()) return spec_.poly;
    return spec_.poly_per_layer[act_ordinal_[layer_index]];
}

void Network::run_forward(const WeightSnapshot& w, const Tensor& x, bool train_mode,
                          Pass* pass, Tensor& out) const {
    if (x.rank() != 4 || x.dim(1) != spec_.input_shape[0] ||
        x.dim(2) != spec_.input_shape[1] || x.dim(3) != spec_.input_shape[2]) {
        throw UsageError("input tensor must be N," + std::to_string(spec_.input_shape[0]) +
                         "," + std::to_string(spec_.input_shape[1]) + "," +
                         std::to_string(spec_.input_shape[2]) + ", got " + x.shape_str());
    }
    if (pass) pass->train_mode = train_mode;
    const std::size_t n = x.dim(0);
    Tensor cur = x;
    for (std::size_t li = 0; li < spec_.layers.size(); ++li) {
        const LayerDesc& l = spec_.layers[li];
        if (pass) pass->inputs.push_back(cur);
        switch (l.kind) {
            case LayerDesc::Kind::conv3x3s2: {
                cur = conv_forward(cur, w.get(l.label + ".weight").value, out_shape_[li]);
                break;
            }
            case LayerDesc::Kind::batchnorm: {
                Tensor mean({l.in}), var({l.in});
                if (train_mode) {
                    channel_stats(cur, mean, var);
                } else {
                    mean = w.get(l.label + ".bn.running_mean").value;
                    var = w.get(l.label + ".bn.running_var").value;
                }
                cur = bn_normalize(cur, mean, var, spec_.bn_eps);
                if (pass) {
                    pass->bn_xhat.push_back(cur);
                    pass->bn_mean.push_back(std::move(mean));
                    pass->bn_var.push_back(std::move(var));
                }
                break;
            }
            case LayerDesc::Kind::act: {
                Tensor next = cur;
                if (spec_.activation == Activation::relu) {
                    for (double& v : next.values()) v = v > 0.0 ? v : 0.0;
                } else {
                    const PolyActivation& p = act_poly(li);
                    for (double& v : next.values()) v = p.eval(v);
                }
                cur = std::move(next);
                break;
            }
            case LayerDesc::Kind::dense: {
                const Tensor& wt = w.get(l.label + ".weight").value;
                const bool bias = l.bias && w.has(l.label + ".bias");
                const double* bp = bias ? w.get(l.label + ".bias").value.data() : nullptr;
                Tensor next({n, l.out});
                const double* ip = cur.data();
                const double* wp = wt.data();
                double* op = next.data();
                for (std::size_t b = 0; b < n; ++b) {
                    const double* irow = ip + b * l.in;
                    for (std::size_t o = 0; o < l.out; ++o) {
                        const double* wrow = wp + o * l.in;
                        double s = bp ? bp[o] : 0.0;
                        for (std::size_t f = 0; f < l.in; ++f) s += wrow[f] * irow[f];
                        op[b * l.out + o] = s;
                    }
                }
                cur = std::move(next);
                break;
            }
        }
    }
    out = std::move(cur);
}

Tensor Network::forward(const WeightSnapshot& w, const Tensor& x, bool train_mode) const {
    Tensor out;
    run_forward(w, x, train_mode, nullptr, out);
    return out;
}

namespace {

// Mean-over-batch loss and its gradient w.r.t. the network output.
double output_loss(const Tensor& out, const std::vector<int>& y, LossKind kind,
                   std::size_t classes, Tensor* gout) {
    const std::size_t n = out.dim(0);
    if (y.size() != n) throw UsageError("label count does not match batch size");
    const double* op = out.data();
    double* gp = nullptr;
    if (gout) {
        *gout = Tensor({n, classes});
        gp = gout->data();
    }
    double total = 0.0;
    const double invn = 1.0 / static_cast<double>(n);
    for (std::size_t b = 0; b < n; ++b) {
        const double* row = op + b * classes;
        const int label = y[b];
        if (kind == LossKind::cross_entropy) {
            double mx = row[0];
            for (std::size_t k = 1; k < classes; ++k) mx = std::max(mx, row[k]);
            double z = 0.0;
            for (std::size_t k = 0; k < classes; ++k) z += std::exp(row[k] - mx);
            total += -(row[label] - mx - std::log(z));
            if (gp) {
                for (std::size_t k = 0; k < classes; ++k) {
                    double p = std::exp(row[k] - mx) / z;
                    if (static_cast<int>(k) == label) p -= 1.0;
                    gp[b * classes + k] = p * invn;
                }
            }
        } else {
            for (std::size_t k = 0; k < classes; ++k) {
                const double t = static_cast<int>(k) == label ? 1.0 : 0.0;
                const double d = row[k] - t;
                total += d * d;
                if (gp) gp[b * classes + k] = 2.0 * d * invn;
            }
        }
    }
    return total * invn;
}

} // namespace

double Network::loss_and_grad(const WeightSnapshot& w, const Tensor& x,
                              const std::vector<int>& y, LossKind loss,
                              WeightSnapshot* grads,
                              std::vector<Tensor>* bn_mean,
                              std::vector<Tensor>* bn_var) const {
    check_labels(y);
    Pass pass;
    Tensor out;
    run_forward(w, x, true, &pass, out);

    Tensor g;
    const double value = output_loss(out, y, loss, spec_.classes, grads ? &g : nullptr);
    if (bn_mean) *bn_mean = pass.bn_mean;
    if (bn_var) *bn_var = pass.bn_var;
    if (!grads) return value;

    *grads = WeightSnapshot();
    for (const auto& a : w.arrays()) {
        if (a.trainable) {
            grads->add({a.name, Tensor(a.value.shape(), 0.0), true});
        }
    }

    std::size_t bn_idx = pass.bn_xhat.size();
    for (std::size_t li = spec_.layers.size(); li > 0; --li) {
        const LayerDesc& l = spec_.layers[li - 1];
        const Tensor& in = pass.inputs[li - 1];
        switch (l.kind) {
            case LayerDesc::Kind::dense: {
                const std::size_t n = g.dim(0);
                const Tensor& wt = w.get(l.label + ".weight").value;
                Tensor gin(in.shape(), 0.0);
                Tensor& gw = grads->get(l.label + ".weight").value;
                double* gb = nullptr;
                if (l.bias) gb = grads->get(l.label + ".bias").value.data();
                const double* gp = g.data();
                const double* ip = in.data();
                const double* wp = wt.data();
                double* gip = gin.data();
                double* gwp = gw.data();
                for (std::size_t b = 0; b < n; ++b) {
                    const double* grow = gp + b * l.out;
                    const double* irow = ip + b * l.in;
                    double* girow = gip + b * l.in;
                    for (std::size_t o = 0; o < l.out; ++o) {
                        const double gv = grow[o];
                        if (gb) gb[o] += gv;
                        if (gv == 0.0) continue;
                        const double* wrow = wp + o * l.in;
                        double* gwrow = gwp + o * l.in;
                        for (std::size_t f = 0; f < l.in; ++f) {
                            gwrow[f] += gv * irow[f];
                            girow[f] += gv * wrow[f];
                        }
                    }
                }
                g = std::move(gin);
                break;
            }
            case LayerDesc::Kind::act: {
                // downstream backward already produced g in this layer's
                // output shape; scale in place
                const double* pre = in.data();
                double* gp = g.data();
                if (spec_.activation == Activation::relu) {
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        if (pre[i] <= 0.0) gp[i] = 0.0;
                    }
                } else {
                    const PolyActivation& p = act_poly(li - 1);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        gp[i] *= p.deriv(pre[i]);
                    }
                }
                break;
            }
            case LayerDesc::Kind::batchnorm: {
                --bn_idx;
                const Tensor& xhat = pass.bn_xhat[bn_idx];
                const Tensor& var = pass.bn_var[bn_idx];
                const std::size_t n = in.dim(0), c = in.dim(1), h = in.dim(2),
                                  wd = in.dim(3);
                const std::size_t m = n * h * wd;
                Tensor gin(in.shape(), 0.0);
                const double* gp = g.data();
                const double* xp = xhat.data();
                double* gip = gin.data();
                for (std::size_t ch = 0; ch < c; ++ch) {
                    double sg = 0.0, sgx = 0.0;
                    for (std::size_t b = 0; b < n; ++b) {
                        const std::size_t base = ((b * c + ch) * h) * wd;
                        for (std::size_t i = 0; i < h * wd; ++i) {
                            sg += gp[base + i];
                            sgx += gp[base + i] * xp[base + i];
                        }
                    }
                    const double inv = 1.0 / std::sqrt(var[ch] + spec_.bn_eps);
                    const double md = static_cast<double>(m);
                    for (std::size_t b = 0; b < n; ++b) {
                        const std::size_t base = ((b * c + ch) * h) * wd;
                        for (std::size_t i = 0; i < h * wd; ++i) {
                            gip[base + i] = inv / md *
                                (md * gp[base + i] - sg - xp[base + i] * sgx);
                        }
                    }
                }
                g = std::move(gin);
                break;
            }
            case LayerDesc::Kind::conv3x3s2: {
                Tensor gin(in.shape(), 0.0);
                Tensor& gw = grads->get(l.label + ".weight").value;
                conv_backward(in, w.get(l.label + ".weight").value, g, gin, gw);
                g = std::move(gin);
                break;
            }
        }
    }
    return value;
}

double Network::loss_only(const WeightSnapshot& w, const Tensor& x,
                          const std::vector<int>& y, LossKind loss,
                          bool train_mode) const {
    check_labels(y);
    Tensor out;
    run_forward(w, x, train_mode, nullptr, out);
    return output_loss(out, y, loss, spec_.classes, nullptr);
}

std::vector<int> Network::predict(const WeightSnapshot& w, const Tensor& x) const {
    Tensor out;
    run_forward(w, x, false, nullptr, out);
    const std::size_t n = out.dim(0);
    std::vector<int> labels(n, 0);
    const double* op = out.data();
    for (std::size_t b = 0; b < n; ++b) {
        const double* row = op + b * spec_.classes;
        std::size_t arg = 0;
        for (std::size_t k = 1; k < spec_.classes; ++k) {
            if (row[k] > row[arg]) arg = k;
        }
        labels[b] = static_cast<int>(arg);
    }
    return labels;
}

Network::EvalResult Network::evaluate(const WeightSnapshot& w, const Tensor& x,
                                      const std::vector<int>& y, LossKind loss,
                                      std::size_t chunk) const {
    check_labels(y);
    const std::size_t n = x.dim(0);
    if (y.size() != n) throw UsageError("label count does not match sample count");
    if (chunk == 0) chunk = n;
    const std::size_t c = spec_.input_shape[0], h = spec_.input_shape[1],
                      wd = spec_.input_shape[2];
    const std::size_t stride = c * h * wd;

    double loss_sum = 0.0;
    std::size_t wrong = 0;
    for (std::size_t start = 0; start < n; start += chunk) {
        const std::size_t cnt = std::min(chunk, n - start);
        Tensor part({cnt, c, h, wd});
        std::copy(x.data() + start * stride, x.data() + (start + cnt) * stride,
                  part.data());
        Tensor out;
        run_forward(w, part, false, nullptr, out);
        const double* op = out.data();
        for (std::size_t b = 0; b < cnt; ++b) {
            const double* row = op + b * spec_.classes;
            const int label = y[start + b];
            // per-sample loss, summed in sample order: chunking never
            // changes the result
            if (loss == LossKind::cross_entropy) {
                double mx = row[0];
                for (std::size_t k = 1; k < spec_.classes; ++k) mx = std::max(mx, row[k]);
                double z = 0.0;
                for (std::size_t k = 0; k < spec_.classes; ++k) z += std::exp(row[k] - mx);
                loss_sum += -(row[label] - mx - std::log(z));
            } else {
                for (std::size_t k = 0; k < spec_.classes; ++k) {
                    const double t = static_cast<int>(k) == label ? 1.0 : 0.0;
                    loss_sum += (row[k] - t) * (row[k] - t);
                }
            }
            std::size_t arg = 0;
            for (std::size_t k = 1; k < spec_.classes; ++k) {
                if (row[k] > row[arg]) arg = k;
            }
            if (static_cast<int>(arg) != label) ++wrong;
        }
    }
    EvalResult r;
    r.loss = loss_sum / static_cast<double>(n);
    r.error_pct = 100.0 * static_cast<double>(wrong) / static_cast<double>(n);
    return r;
}

std::vector<Tensor> Network::collect_preactivations(const WeightSnapshot& w,
                                                    const Tensor& x) const {
    Pass pass;
    Tensor out;
    run_forward(w, x, true, &pass, out);
    std::vector<Tensor> pre;
    for (std::size_t li = 0; li < spec_.layers.size(); ++li) {
        if (spec_.layers[li].kind == LayerDesc::Kind::act) {
            pre.push_back(pass.inputs[li]);
        }
    }
    return pre;
}

WeightSnapshot Network::reestimate_norm_stats(const WeightSnapshot& w,
                                              const Tensor& x) const {
    WeightSnapshot out = w;
    Tensor cur = x;
    for (std::size_t li = 0; li < spec_.layers.size(); ++li) {
        const LayerDesc& l = spec_.layers[li];
        switch (l.kind) {
            case LayerDesc::Kind::conv3x3s2:
                cur = conv_forward(cur, w.get(l.label + ".weight").value, out_shape_[li]);
                break;
            case LayerDesc::Kind::batchnorm: {
                Tensor mean({l.in}), var({l.in});
                channel_stats(cur, mean, var);
                out.get(l.label + ".bn.running_mean").value = mean;
                out.get(l.label + ".bn.running_var").value = var;
                cur = bn_normalize(cur, mean, var, spec_.bn_eps);
                break;
            }
            case LayerDesc::Kind::act:
                if (spec_.activation == Activation::relu) {
                    for (double& v : cur.values()) v = v > 0.0 ? v : 0.0;
                } else {
                    const PolyActivation& p = act_poly(li);
                    for (double& v : cur.values()) v = p.eval(v);
                }
                break;
            case LayerDesc::Kind::dense:
                // norm layers never follow a dense layer, so the walk is done
                return out;
        }
    }
    return out;
}

void Network::check_labels(const std::vector<int>& y) const {
    for (int v : y) {
        if (v < 0 || static_cast<std::size_t>(v) >= spec_.classes) {
            throw UsageError("label " + std::to_string(v) + " outside [0," +
                             std::to_string(spec_.classes) + ")");
        }
    }
}

void Network::validate_snapshot(const WeightSnapshot& w) const {
    std::vector<std::pair<std::string, std::vector<std::size_t>>> expect;
    for (const auto& l : spec_.layers) {
        if (l.kind == LayerDesc::Kind::conv3x3s2) {
            expect.push_back({l.label + ".weight", {l.out, l.in, 3, 3}});
        } else if (l.kind == LayerDesc::Kind::dense) {
            expect.push_back({l.label + ".weight", {l.out, l.in}});
            if (l.bias) expect.push_back({l.label + ".bias", {l.out}});
        } else if (l.kind == LayerDesc::Kind::batchnorm) {
            expect.push_back({l.label + ".bn.running_mean", {l.in}});
            expect.push_back({l.label + ".bn.running_var", {l.in}});
        }
    }
    for (const auto& [name, shape] : expect) {
        if (!w.has(name)) {
            throw UsageError("snapshot does not match the architecture: missing array " +
                             name);
        }
        const Tensor& t = w.get(name).value;
        if (t.shape() != shape) {
            throw UsageError("snapshot does not match the architecture: " + name +
                             " has shape " + t.shape_str() + ", expected " +
                             Tensor(shape).shape_str());
        }
    }
    if (w.arrays().size() != expect.size()) {
        for (const auto& a : w.arrays()) {
            bool known = false;
            for (const auto& [name, shape] : expect) known = known || name == a.name;
            if (!known) {
                throw UsageError("snapshot does not match the architecture: unexpected array " +
                                 a.name);
            }
        }
    }
}

} // namespace risklab
