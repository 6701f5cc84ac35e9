#include "risklab/config.hpp"

#include "risklab/checksum.hpp"
#include "risklab/errors.hpp"
#include "risklab/rng.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace risklab {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) {
            throw UsageError("config: unknown key \"" + key + "\" in " + ctx);
        }
    }
}

const json* find(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

std::uint64_t as_u64(const json& v, const std::string& ctx) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    throw UsageError("config: " + ctx + " must be a non-negative integer");
}

std::size_t as_size(const json& v, const std::string& ctx) {
    return static_cast<std::size_t>(as_u64(v, ctx));
}

double as_num(const json& v, const std::string& ctx) {
    if (!v.is_number()) throw UsageError("config: " + ctx + " must be a number");
    return v.get<double>();
}

bool as_bool(const json& v, const std::string& ctx) {
    if (!v.is_boolean()) throw UsageError("config: " + ctx + " must be true or false");
    return v.get<bool>();
}

std::string as_str(const json& v, const std::string& ctx) {
    if (!v.is_string()) throw UsageError("config: " + ctx + " must be a string");
    return v.get<std::string>();
}

std::vector<double> as_num_list(const json& v, const std::string& ctx) {
    if (!v.is_array()) throw UsageError("config: " + ctx + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(as_num(e, ctx));
    return out;
}

std::vector<std::size_t> as_size_list(const json& v, const std::string& ctx) {
    if (!v.is_array()) throw UsageError("config: " + ctx + " must be an array of integers");
    std::vector<std::size_t> out;
    for (const auto& e : v) out.push_back(as_size(e, ctx));
    return out;
}

void parse_network(const json& obj, NetworkConfig& net) {
    check_keys(obj, "network", {"widths", "batchnorm", "activation", "poly_coeffs",
                                "poly_halfwidth", "poly_degree"});
    if (const json* v = find(obj, "widths")) net.widths = as_size_list(*v, "network.widths");
    if (const json* v = find(obj, "batchnorm")) net.batchnorm = as_bool(*v, "network.batchnorm");
    if (const json* v = find(obj, "activation")) {
        net.activation = activation_from_string(as_str(*v, "network.activation"));
    }
    if (const json* v = find(obj, "poly_coeffs")) {
        net.poly_coeffs = as_num_list(*v, "network.poly_coeffs");
    }
    if (const json* v = find(obj, "poly_halfwidth")) {
        net.poly_halfwidth = as_num(*v, "network.poly_halfwidth");
    }
    if (const json* v = find(obj, "poly_degree")) {
        net.poly_degree = static_cast<int>(as_size(*v, "network.poly_degree"));
    }
    if (net.widths.empty()) throw UsageError("config: network.widths must be nonempty");
}

void parse_dataset(const json& obj, DatasetConfig& ds) {
    if (const json* v = find(obj, "kind")) ds.kind = as_str(*v, "dataset.kind");
    if (ds.kind == "synthetic") {
        check_keys(obj, "dataset", {"kind", "random_labels", "classes", "dims", "n_train",
                                    "n_test", "separation", "noise"});
        if (const json* v = find(obj, "classes")) {
            ds.synthetic.classes = as_size(*v, "dataset.classes");
        }
        if (const json* v = find(obj, "dims")) {
            ds.synthetic.dims = as_size_list(*v, "dataset.dims");
        }
        if (const json* v = find(obj, "n_train")) {
            ds.synthetic.n_train = as_size(*v, "dataset.n_train");
        }
        if (const json* v = find(obj, "n_test")) {
            ds.synthetic.n_test = as_size(*v, "dataset.n_test");
        }
        if (const json* v = find(obj, "separation")) {
            ds.synthetic.separation = as_num(*v, "dataset.separation");
        }
        if (const json* v = find(obj, "noise")) {
            ds.synthetic.noise = as_num(*v, "dataset.noise");
        }
    } else if (ds.kind == "cifar10") {
        check_keys(obj, "dataset",
                   {"kind", "random_labels", "path", "n_train", "n_test", "normalize"});
        if (const json* v = find(obj, "path")) ds.path = as_str(*v, "dataset.path");
        if (ds.path.empty()) throw UsageError("config: dataset.path is required for cifar10");
        if (const json* v = find(obj, "n_train")) ds.n_train = as_size(*v, "dataset.n_train");
        if (const json* v = find(obj, "n_test")) ds.n_test = as_size(*v, "dataset.n_test");
        if (const json* v = find(obj, "normalize")) {
            ds.normalize = as_bool(*v, "dataset.normalize");
        }
    } else {
        throw UsageError("config: dataset.kind must be synthetic or cifar10, got \"" +
                         ds.kind + "\"");
    }
    if (const json* v = find(obj, "random_labels")) {
        ds.random_labels = as_bool(*v, "dataset.random_labels");
    }
}

void parse_optimizer(const json& obj, TrainOptions& opt) {
    check_keys(obj, "optimizer",
               {"mode", "loss", "epochs", "batch_size", "lr", "lr_halving", "bn_momentum",
                "eval_every", "snapshot_every", "stop_at_zero_train"});
    if (const json* v = find(obj, "mode")) {
        opt.mode = train_mode_from_string(as_str(*v, "optimizer.mode"));
    }
    if (const json* v = find(obj, "loss")) {
        opt.loss = loss_from_string(as_str(*v, "optimizer.loss"));
    }
    if (const json* v = find(obj, "epochs")) opt.epochs = as_size(*v, "optimizer.epochs");
    if (const json* v = find(obj, "batch_size")) {
        opt.batch_size = as_size(*v, "optimizer.batch_size");
    }
    if (const json* v = find(obj, "lr")) opt.lr = as_num(*v, "optimizer.lr");
    if (const json* v = find(obj, "lr_halving")) {
        opt.lr_halving = as_bool(*v, "optimizer.lr_halving");
    }
    if (const json* v = find(obj, "bn_momentum")) {
        opt.bn_momentum = as_num(*v, "optimizer.bn_momentum");
    }
    if (const json* v = find(obj, "eval_every")) {
        opt.eval_every = as_size(*v, "optimizer.eval_every");
    }
    if (const json* v = find(obj, "snapshot_every")) {
        opt.snapshot_every = as_size(*v, "optimizer.snapshot_every");
    }
    if (const json* v = find(obj, "stop_at_zero_train")) {
        opt.stop_at_zero_train = as_bool(*v, "optimizer.stop_at_zero_train");
    }
    if (!(opt.lr > 0.0) || !std::isfinite(opt.lr)) {
        throw UsageError("config: optimizer.lr must be > 0");
    }
}

void parse_params(const json& obj, const std::string& protocol, ProtocolParams& p) {
    if (protocol == "train") {
        check_keys(obj, "params",
                   {"perturb_multipliers", "perturb_seeds", "volume_radii",
                    "volume_threshold", "volume_samples"});
        if (const json* v = find(obj, "perturb_multipliers")) {
            p.perturb_multipliers = as_num_list(*v, "params.perturb_multipliers");
        }
        if (const json* v = find(obj, "perturb_seeds")) {
            p.perturb_seeds = as_size(*v, "params.perturb_seeds");
        }
        if (const json* v = find(obj, "volume_radii")) {
            p.volume_radii = as_num_list(*v, "params.volume_radii");
        }
        if (const json* v = find(obj, "volume_threshold")) {
            p.volume_threshold = as_num(*v, "params.volume_threshold");
        }
        if (const json* v = find(obj, "volume_samples")) {
            p.volume_samples = as_size(*v, "params.volume_samples");
        }
    } else if (protocol == "stage-sgd") {
        check_keys(obj, "params",
                   {"stages", "trajectories_per_stage", "epochs_per_stage", "restart_noise"});
        if (const json* v = find(obj, "stages")) {
            p.staged.stages = as_size(*v, "params.stages");
        }
        if (const json* v = find(obj, "trajectories_per_stage")) {
            p.staged.trajectories_per_stage = as_size(*v, "params.trajectories_per_stage");
        }
        if (const json* v = find(obj, "epochs_per_stage")) {
            p.staged.epochs_per_stage = as_size(*v, "params.epochs_per_stage");
        }
        if (const json* v = find(obj, "restart_noise")) {
            p.staged.restart_noise = as_num(*v, "params.restart_noise");
        }
    } else if (protocol == "branch-bgd") {
        check_keys(obj, "params", {"branch_epochs", "multipliers", "mode"});
        if (const json* v = find(obj, "branch_epochs")) {
            p.branching.branch_epochs = as_size_list(*v, "params.branch_epochs");
        }
        if (const json* v = find(obj, "multipliers")) {
            p.branching.multipliers = as_num_list(*v, "params.multipliers");
        }
        if (const json* v = find(obj, "mode")) {
            p.branching.mode = perturb_mode_from_string(as_str(*v, "params.mode"));
        }
    } else if (protocol == "flatness") {
        check_keys(obj, "params", {"noise", "mode", "repeats", "retrain_epochs", "model"});
        if (const json* v = find(obj, "noise")) p.flatness.noise = as_num(*v, "params.noise");
        if (const json* v = find(obj, "mode")) {
            p.flatness.mode = perturb_mode_from_string(as_str(*v, "params.mode"));
        }
        if (const json* v = find(obj, "repeats")) {
            p.flatness.repeats = as_size(*v, "params.repeats");
        }
        if (const json* v = find(obj, "retrain_epochs")) {
            p.flatness.retrain_epochs = as_size(*v, "params.retrain_epochs");
        }
        if (const json* v = find(obj, "model")) p.model_snapshot = as_str(*v, "params.model");
    } else if (protocol == "interpolate") {
        check_keys(obj, "params", {"a", "b", "ratios"});
        if (const json* v = find(obj, "a")) p.snapshot_a = as_str(*v, "params.a");
        if (const json* v = find(obj, "b")) p.snapshot_b = as_str(*v, "params.b");
        if (const json* v = find(obj, "ratios")) p.ratios = as_num_list(*v, "params.ratios");
        if (p.snapshot_a.empty() || p.snapshot_b.empty()) {
            throw UsageError("config: interpolate needs params.a and params.b snapshots");
        }
    } else if (protocol == "sweep") {
        check_keys(obj, "params",
                   {"base_widths", "width_multipliers", "train_sizes", "random_labels"});
        if (const json* v = find(obj, "base_widths")) {
            p.sweep.base_widths = as_size_list(*v, "params.base_widths");
        }
        if (const json* v = find(obj, "width_multipliers")) {
            p.sweep.width_multipliers = as_num_list(*v, "params.width_multipliers");
        }
        if (const json* v = find(obj, "train_sizes")) {
            p.sweep.train_sizes = as_size_list(*v, "params.train_sizes");
        }
        if (const json* v = find(obj, "random_labels")) {
            p.sweep.random_labels = as_bool(*v, "params.random_labels");
        }
    }
}

} // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) throw UsageError("config: not valid JSON");
    if (!doc.is_object()) throw UsageError("config: top level must be a JSON object");

    check_keys(doc, "the top level",
               {"protocol", "seed", "out", "network", "dataset", "optimizer", "params"});

    ExperimentConfig cfg;
    const json* proto = find(doc, "protocol");
    if (!proto) throw UsageError("config: missing \"protocol\"");
    cfg.protocol = as_str(*proto, "protocol");
    static const char* known[] = {"train",   "stage-sgd",   "branch-bgd",
                                  "flatness", "interpolate", "sweep"};
    bool ok = false;
    for (const char* k : known) ok = ok || cfg.protocol == k;
    if (!ok) throw UsageError("config: unknown protocol \"" + cfg.protocol + "\"");

    if (const json* v = find(doc, "seed")) {
        cfg.seed = as_u64(*v, "seed");
        cfg.seed_set = true;
    }
    if (const json* v = find(doc, "out")) cfg.out = as_str(*v, "out");
    if (const json* v = find(doc, "network")) {
        if (!v->is_object()) throw UsageError("config: network must be an object");
        parse_network(*v, cfg.network);
    }
    if (const json* v = find(doc, "dataset")) {
        if (!v->is_object()) throw UsageError("config: dataset must be an object");
        parse_dataset(*v, cfg.dataset);
    }
    if (const json* v = find(doc, "optimizer")) {
        if (!v->is_object()) throw UsageError("config: optimizer must be an object");
        parse_optimizer(*v, cfg.optimizer);
    }
    if (const json* v = find(doc, "params")) {
        if (!v->is_object()) throw UsageError("config: params must be an object");
        parse_params(*v, cfg.protocol, cfg.params);
    }

    if (cfg.protocol == "stage-sgd" && cfg.optimizer.mode != TrainMode::sgd) {
        throw UsageError("config: stage-sgd requires optimizer.mode \"sgd\"");
    }
    if ((cfg.protocol == "branch-bgd" || cfg.protocol == "flatness") &&
        cfg.optimizer.mode != TrainMode::bgd) {
        throw UsageError("config: " + cfg.protocol + " requires optimizer.mode \"bgd\"");
    }

    cfg.canonical = doc.dump(2);
    cfg.canonical.push_back('\n');
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str());
    } catch (UsageError& e) {
        throw UsageError(std::string(e.what()) + " (" + path + ")");
    }
}

std::string config_hash(const ExperimentConfig& cfg) {
    return fnv1a64_hex(cfg.canonical);
}

void override_seed(ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.seed = seed;
    cfg.seed_set = true;
    json doc = json::parse(cfg.canonical);
    doc["seed"] = seed;
    cfg.canonical = doc.dump(2);
    cfg.canonical.push_back('\n');
}

Dataset build_dataset(const DatasetConfig& cfg, std::uint64_t seed) {
    Dataset data;
    if (cfg.kind == "synthetic") {
        data = make_synthetic(cfg.synthetic, derive_seed(seed, 7));
    } else {
        CifarOptions opt;
        opt.n_train = cfg.n_train;
        opt.n_test = cfg.n_test;
        opt.normalize = cfg.normalize;
        data = load_cifar10(cfg.path, opt, derive_seed(seed, 7));
    }
    if (cfg.random_labels) randomize_labels(data, derive_seed(seed, 8));
    return data;
}

NetworkSpec build_network_spec(const NetworkConfig& cfg, const Dataset& data) {
    const auto shape = data.sample_shape();
    const bool explicit_poly =
        cfg.activation == Activation::poly && !cfg.poly_coeffs.empty();
    // a degree-only poly config starts out as ReLU; the runner fits the
    // per-layer coefficients once weights and data exist
    NetworkSpec spec = make_convnet({shape[0], shape[1], shape[2]}, cfg.widths,
                                    data.classes, cfg.batchnorm,
                                    explicit_poly ? Activation::poly : Activation::relu);
    if (explicit_poly) {
        spec.poly.coeffs = cfg.poly_coeffs;
        spec.poly.halfwidth = cfg.poly_halfwidth;
    }
    return spec;
}

} // namespace risklab
