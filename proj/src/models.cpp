#include "partclass/models.hpp"

#include <cmath>
#include <utility>

#include "partclass/error.hpp"
#include "partclass/strfmt.hpp"

namespace partclass {

using nd::Rng;
using nd::Tape;
using nd::Tensor;

namespace {

struct Dense {
    Tensor w, b;
    Dense() = default;
    Dense(std::size_t in, std::size_t out) : w({in, out}), b({out}) {}
};

// He initialization for layers feeding a ReLU, plain 1/fan_in otherwise.
void init_dense(Dense& d, Rng& rng, bool relu_gain) {
    const std::size_t fan_in = d.w.dim(0);
    const double scale = std::sqrt((relu_gain ? 2.0 : 1.0) / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < d.w.size(); ++i) d.w[i] = rng.normal() * scale;
    d.b.fill(0.0);
}

std::string join_dims(const std::vector<std::size_t>& dims) {
    std::string out;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(dims[i]);
    }
    return out;
}

std::vector<std::size_t> split_dims(std::string_view s) {
    std::vector<std::size_t> dims;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == ',') {
            dims.push_back(static_cast<std::size_t>(
                parse_u64(s.substr(start, i - start), errc::bad_checkpoint, "dims list")));
            start = i + 1;
        }
    }
    return dims;
}

const std::string& kv_get(const std::map<std::string, std::string>& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) fail(errc::bad_checkpoint, "config key '" + key + "' missing");
    return it->second;
}

std::size_t kv_size(const std::map<std::string, std::string>& kv, const std::string& key) {
    return static_cast<std::size_t>(parse_u64(kv_get(kv, key), errc::bad_checkpoint, key));
}

bool kv_bool(const std::map<std::string, std::string>& kv, const std::string& key) {
    const std::string& v = kv_get(kv, key);
    if (v == "0") return false;
    if (v == "1") return true;
    fail(errc::bad_checkpoint, "config key '" + key + "' must be 0 or 1, got '" + v + "'");
}

// ---------------------------------------------------------------------------
// GCN: stacked graph convolutions with ReLU, an order-free readout,
// dense head to C logits.
// ---------------------------------------------------------------------------

class GcnModel final : public ClassifierModel {
  public:
    explicit GcnModel(const GcnConfig& cfg) : cfg_(cfg) {
        if (cfg_.num_layers < 1 || cfg_.hidden_dim < 1 || cfg_.num_classes < 1)
            fail(errc::invalid_spec, "gcn config requires num_layers, hidden_dim, num_classes >= 1");
        std::size_t in = 3;
        for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
            convs_.emplace_back(in, cfg_.hidden_dim);
            in = cfg_.hidden_dim;
        }
        head_ = Dense(cfg_.hidden_dim, cfg_.num_classes);
    }

    std::string_view arch() const override { return "gcn"; }

    std::vector<std::pair<std::string, std::string>> config_kv() const override {
        return {{"num_layers", std::to_string(cfg_.num_layers)},
                {"hidden_dim", std::to_string(cfg_.hidden_dim)},
                {"readout", cfg_.readout == GcnReadout::mean ? "mean" : "max"},
                {"num_classes", std::to_string(cfg_.num_classes)}};
    }

    std::vector<nd::NamedTensor> parameters() override {
        std::vector<nd::NamedTensor> out;
        for (std::size_t l = 0; l < convs_.size(); ++l) {
            out.push_back({"conv" + std::to_string(l) + ".w", &convs_[l].w});
            out.push_back({"conv" + std::to_string(l) + ".b", &convs_[l].b});
        }
        out.push_back({"head.w", &head_.w});
        out.push_back({"head.b", &head_.b});
        return out;
    }

    std::vector<nd::NamedTensor> state_buffers() override { return {}; }

    void init_params(Rng& rng) override {
        for (auto& c : convs_) init_dense(c, rng, true);
        init_dense(head_, rng, false);
    }

    std::size_t num_classes() const override { return cfg_.num_classes; }

    Tape::Id forward(Tape& tape, const PartInput& part, bool, Rng&) override {
        Tape::Id h = tape.leaf(part.feats.features);
        for (auto& c : convs_) {
            const Tape::Id w = tape.leaf(c.w);
            const Tape::Id b = tape.leaf(c.b);
            h = tape.relu(tape.graph_conv(part.graph, part.coeffs, h, w, b));
        }
        const Tape::Id pooled =
            cfg_.readout == GcnReadout::mean ? tape.readout_mean(h) : tape.readout_max(h);
        return tape.add(tape.vecmat(pooled, tape.leaf(head_.w)), tape.leaf(head_.b));
    }

  private:
    GcnConfig cfg_;
    std::vector<Dense> convs_;
    Dense head_;
};

// ---------------------------------------------------------------------------
// FCNN: features flattened node-major (x1,y1,z1,x2,...), zero-padded
// to 3*max_nodes, through a dense ReLU stack.
// ---------------------------------------------------------------------------

class FcnnModel final : public ClassifierModel {
  public:
    explicit FcnnModel(const FcnnConfig& cfg) : cfg_(cfg) {
        if (cfg_.max_nodes < 1 || cfg_.hidden_dims.empty() || cfg_.num_classes < 1)
            fail(errc::invalid_spec, "fcnn config requires max_nodes, hidden_dims, num_classes");
        std::size_t in = 3 * cfg_.max_nodes;
        for (const std::size_t dim : cfg_.hidden_dims) {
            layers_.emplace_back(in, dim);
            in = dim;
        }
        out_ = Dense(in, cfg_.num_classes);
    }

    std::string_view arch() const override { return "fcnn"; }

    std::vector<std::pair<std::string, std::string>> config_kv() const override {
        return {{"max_nodes", std::to_string(cfg_.max_nodes)},
                {"hidden_dims", join_dims(cfg_.hidden_dims)},
                {"num_classes", std::to_string(cfg_.num_classes)}};
    }

    std::vector<nd::NamedTensor> parameters() override {
        std::vector<nd::NamedTensor> out;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            out.push_back({"dense" + std::to_string(l) + ".w", &layers_[l].w});
            out.push_back({"dense" + std::to_string(l) + ".b", &layers_[l].b});
        }
        out.push_back({"out.w", &out_.w});
        out.push_back({"out.b", &out_.b});
        return out;
    }

    std::vector<nd::NamedTensor> state_buffers() override { return {}; }

    void init_params(Rng& rng) override {
        for (auto& l : layers_) init_dense(l, rng, true);
        init_dense(out_, rng, false);
    }

    std::size_t num_classes() const override { return cfg_.num_classes; }

    Tape::Id forward(Tape& tape, const PartInput& part, bool, Rng&) override {
        const std::size_t n = part.feats.features.dim(0);
        if (n > cfg_.max_nodes)
            fail(errc::part_too_large, "part has " + std::to_string(n) + " nodes, fcnn padded to " +
                                           std::to_string(cfg_.max_nodes));
        Tape::Id x = tape.flatten_pad(tape.leaf(part.feats.features), cfg_.max_nodes);
        for (auto& l : layers_)
            x = tape.relu(tape.add(tape.vecmat(x, tape.leaf(l.w)), tape.leaf(l.b)));
        return tape.add(tape.vecmat(x, tape.leaf(out_.w)), tape.leaf(out_.b));
    }

  private:
    FcnnConfig cfg_;
    std::vector<Dense> layers_;
    Dense out_;
};

// ---------------------------------------------------------------------------
// PointNet-style classifier: optional 3x3 input transform regressed by a
// small T-Net, shared per-point MLP with batchnorm+ReLU, max pooling, dropout
// head.
//
// Zero padding is evaluated in compact form: the pad rows are all the zero
// vector and every per-point stage maps equal rows to equal rows, so one
// shared row stands for all of them. Batch statistics cover the real points
// (pad rows are normalized but carry zero statistic weight). This computes
// the same function as materializing max_nodes rows (the unit tests compare
// both routes), at the cost of the real rows only.
// ---------------------------------------------------------------------------

struct BnLayer {
    Dense dense;
    Tensor gamma, beta;
    nd::BatchNormState state;

    BnLayer() = default;
    BnLayer(std::size_t in, std::size_t out)
        : dense(in, out), gamma(Tensor::full({out}, 1.0)), beta({out}),
          state(nd::BatchNormState::make(out)) {}
};

class PointNetModel final : public ClassifierModel {
  public:
    explicit PointNetModel(const PointNetConfig& cfg) : cfg_(cfg) {
        if (cfg_.max_nodes < 1 || cfg_.point_mlp_dims.empty() || cfg_.head_dims.empty() ||
            cfg_.num_classes < 1)
            fail(errc::invalid_spec, "pointnet config requires max_nodes, dims, num_classes");
        if (cfg_.dropout_p < 0.0 || cfg_.dropout_p >= 1.0)
            fail(errc::invalid_probability, "dropout_p must be in [0,1)");

        if (cfg_.use_input_transform) {
            std::size_t in = 3;
            for (const std::size_t dim : tnet_point_dims_) {
                tnet_point_.emplace_back(in, dim);
                in = dim;
            }
            for (const std::size_t dim : tnet_head_dims_) {
                tnet_head_.emplace_back(in, dim);
                in = dim;
            }
            tnet_out_ = Dense(in, 9);
        }
        std::size_t in = 3;
        for (const std::size_t dim : cfg_.point_mlp_dims) {
            point_mlp_.emplace_back(in, dim);
            in = dim;
        }
        for (const std::size_t dim : cfg_.head_dims) {
            head_.emplace_back(in, dim);
            in = dim;
        }
        out_ = Dense(in, cfg_.num_classes);
    }

    std::string_view arch() const override { return "pointnet"; }

    std::vector<std::pair<std::string, std::string>> config_kv() const override {
        return {{"max_nodes", std::to_string(cfg_.max_nodes)},
                {"use_input_transform", cfg_.use_input_transform ? "1" : "0"},
                {"point_mlp_dims", join_dims(cfg_.point_mlp_dims)},
                {"head_dims", join_dims(cfg_.head_dims)},
                {"dropout_p", format_double(cfg_.dropout_p)},
                {"num_classes", std::to_string(cfg_.num_classes)},
                {"mask_padding", cfg_.mask_padding ? "1" : "0"}};
    }

    std::vector<nd::NamedTensor> parameters() override {
        std::vector<nd::NamedTensor> out;
        auto add_bn = [&out](const std::string& prefix, BnLayer& l) {
            out.push_back({prefix + ".w", &l.dense.w});
            out.push_back({prefix + ".b", &l.dense.b});
            out.push_back({prefix + ".bn_gamma", &l.gamma});
            out.push_back({prefix + ".bn_beta", &l.beta});
        };
        for (std::size_t l = 0; l < tnet_point_.size(); ++l)
            add_bn("tnet.point" + std::to_string(l), tnet_point_[l]);
        for (std::size_t l = 0; l < tnet_head_.size(); ++l) {
            out.push_back({"tnet.head" + std::to_string(l) + ".w", &tnet_head_[l].w});
            out.push_back({"tnet.head" + std::to_string(l) + ".b", &tnet_head_[l].b});
        }
        if (cfg_.use_input_transform) {
            out.push_back({"tnet.out.w", &tnet_out_.w});
            out.push_back({"tnet.out.b", &tnet_out_.b});
        }
        for (std::size_t l = 0; l < point_mlp_.size(); ++l)
            add_bn("point" + std::to_string(l), point_mlp_[l]);
        for (std::size_t l = 0; l < head_.size(); ++l) {
            out.push_back({"head" + std::to_string(l) + ".w", &head_[l].w});
            out.push_back({"head" + std::to_string(l) + ".b", &head_[l].b});
        }
        out.push_back({"out.w", &out_.w});
        out.push_back({"out.b", &out_.b});
        return out;
    }

    std::vector<nd::NamedTensor> state_buffers() override {
        std::vector<nd::NamedTensor> out;
        for (std::size_t l = 0; l < tnet_point_.size(); ++l) {
            out.push_back({"tnet.point" + std::to_string(l) + ".bn_mean",
                           &tnet_point_[l].state.running_mean});
            out.push_back({"tnet.point" + std::to_string(l) + ".bn_var",
                           &tnet_point_[l].state.running_var});
        }
        for (std::size_t l = 0; l < point_mlp_.size(); ++l) {
            out.push_back({"point" + std::to_string(l) + ".bn_mean",
                           &point_mlp_[l].state.running_mean});
            out.push_back({"point" + std::to_string(l) + ".bn_var",
                           &point_mlp_[l].state.running_var});
        }
        return out;
    }

    void init_params(Rng& rng) override {
        for (auto& l : tnet_point_) {
            init_dense(l.dense, rng, true);
            l.gamma.fill(1.0);
            l.beta.fill(0.0);
        }
        for (auto& l : tnet_head_) init_dense(l, rng, true);
        if (cfg_.use_input_transform) {
            // Zero so the regressed transform starts as the identity.
            tnet_out_.w.fill(0.0);
            tnet_out_.b.fill(0.0);
        }
        for (auto& l : point_mlp_) {
            init_dense(l.dense, rng, true);
            l.gamma.fill(1.0);
            l.beta.fill(0.0);
        }
        for (auto& l : head_) init_dense(l, rng, true);
        init_dense(out_, rng, false);
    }

    std::size_t num_classes() const override { return cfg_.num_classes; }

    Tape::Id forward(Tape& tape, const PartInput& part, bool training, Rng& rng) override {
        return forward_batch(tape, {&part}, training, rng)[0];
    }

    std::vector<Tape::Id> forward_batch(Tape& tape, const std::vector<const PartInput*>& parts,
                                        bool training, Rng& rng) override {
        // All parts share one point matrix so batch statistics pool over the
        // batch, the way the reference network normalizes across clouds. One
        // compact pad row per padded part carries statistic weight 0.
        std::vector<std::size_t> row_begin, row_count, real_count;
        std::vector<double> stat_weight;
        std::size_t total_rows = 0;
        for (const PartInput* part : parts) {
            const std::size_t n = part->feats.features.dim(0);
            if (n > cfg_.max_nodes)
                fail(errc::part_too_large, "part has " + std::to_string(n) +
                                               " nodes, pointnet padded to " +
                                               std::to_string(cfg_.max_nodes));
            const std::size_t rows = n + (n < cfg_.max_nodes ? 1 : 0);
            row_begin.push_back(total_rows);
            row_count.push_back(rows);
            real_count.push_back(n);
            for (std::size_t i = 0; i < n; ++i) stat_weight.push_back(1.0);
            if (rows > n) stat_weight.push_back(0.0);
            total_rows += rows;
        }

        Tensor pts({total_rows, 3});
        for (std::size_t b = 0; b < parts.size(); ++b) {
            const Tensor& f = parts[b]->feats.features;
            for (std::size_t i = 0; i < real_count[b] * 3; ++i)
                pts[row_begin[b] * 3 + i] = f[i];
        }
        Tape::Id x = tape.leaf_owned(std::move(pts));

        // Per-part row masks for the pooling stages; mask_padding drops the
        // pad row from both max pools.
        std::vector<std::vector<std::uint8_t>> pool_mask(parts.size());
        for (std::size_t b = 0; b < parts.size(); ++b) {
            pool_mask[b].assign(total_rows, 0);
            for (std::size_t i = 0; i < row_count[b]; ++i) pool_mask[b][row_begin[b] + i] = 1;
            if (cfg_.mask_padding && row_count[b] > real_count[b])
                pool_mask[b][row_begin[b] + row_count[b] - 1] = 0;
        }

        if (cfg_.use_input_transform) {
            Tape::Id q = x;
            for (auto& l : tnet_point_) q = bn_block(tape, q, l, training, &stat_weight);
            std::vector<Tape::Id> transformed;
            for (std::size_t b = 0; b < parts.size(); ++b) {
                Tape::Id pooled = tape.readout_max(q, &pool_mask[b]);
                for (auto& l : tnet_head_)
                    pooled = tape.relu(
                        tape.add(tape.vecmat(pooled, tape.leaf(l.w)), tape.leaf(l.b)));
                const Tape::Id nine = tape.add(tape.vecmat(pooled, tape.leaf(tnet_out_.w)),
                                               tape.leaf(tnet_out_.b));
                const Tape::Id transform = tape.add(tape.reshape(nine, {3, 3}),
                                                    tape.leaf_owned(Tensor::identity(3)));
                transformed.push_back(
                    tape.matmul(tape.rows_slice(x, row_begin[b], row_count[b]), transform));
            }
            x = parts.size() == 1 ? transformed[0] : tape.concat_rows(transformed);
        }

        for (auto& l : point_mlp_) x = bn_block(tape, x, l, training, &stat_weight);

        std::vector<Tape::Id> logits;
        for (std::size_t b = 0; b < parts.size(); ++b) {
            Tape::Id global = tape.readout_max(x, &pool_mask[b]);
            for (auto& l : head_) {
                global =
                    tape.relu(tape.add(tape.vecmat(global, tape.leaf(l.w)), tape.leaf(l.b)));
                global = tape.dropout(global, cfg_.dropout_p, rng, training);
            }
            logits.push_back(
                tape.add(tape.vecmat(global, tape.leaf(out_.w)), tape.leaf(out_.b)));
        }
        return logits;
    }

  private:
    Tape::Id bn_block(Tape& tape, Tape::Id x, BnLayer& l, bool training,
                      const std::vector<double>* weights) {
        const Tape::Id lin =
            tape.add_bias_rows(tape.matmul(x, tape.leaf(l.dense.w)), tape.leaf(l.dense.b));
        const Tape::Id normed = tape.batchnorm(lin, tape.leaf(l.gamma), tape.leaf(l.beta),
                                               l.state, training, weights);
        return tape.relu(normed);
    }

    PointNetConfig cfg_;
    const std::vector<std::size_t> tnet_point_dims_ = {32, 64};
    const std::vector<std::size_t> tnet_head_dims_ = {32};
    std::vector<BnLayer> tnet_point_;
    std::vector<Dense> tnet_head_;
    Dense tnet_out_;
    std::vector<BnLayer> point_mlp_;
    std::vector<Dense> head_;
    Dense out_;
};

}  // namespace

std::vector<Tape::Id> ClassifierModel::forward_batch(Tape& tape,
                                                     const std::vector<const PartInput*>& parts,
                                                     bool training, Rng& rng) {
    std::vector<Tape::Id> logits;
    logits.reserve(parts.size());
    for (const PartInput* part : parts) logits.push_back(forward(tape, *part, training, rng));
    return logits;
}

PartInput prepare_part(const Mesh& mesh) {
    PartInput part;
    part.graph = mesh_to_graph(mesh);
    part.coeffs = norm_coeffs(part.graph);
    part.feats = scale_features(mesh);
    return part;
}

std::unique_ptr<ClassifierModel> make_gcn(const GcnConfig& cfg) {
    return std::make_unique<GcnModel>(cfg);
}
std::unique_ptr<ClassifierModel> make_fcnn(const FcnnConfig& cfg) {
    return std::make_unique<FcnnModel>(cfg);
}
std::unique_ptr<ClassifierModel> make_pointnet(const PointNetConfig& cfg) {
    return std::make_unique<PointNetModel>(cfg);
}

std::unique_ptr<ClassifierModel> make_model(std::string_view arch,
                                            const std::map<std::string, std::string>& kv) {
    if (arch == "gcn") {
        GcnConfig cfg;
        cfg.num_layers = kv_size(kv, "num_layers");
        cfg.hidden_dim = kv_size(kv, "hidden_dim");
        const std::string& readout = kv_get(kv, "readout");
        if (readout == "mean")
            cfg.readout = GcnReadout::mean;
        else if (readout == "max")
            cfg.readout = GcnReadout::max;
        else
            fail(errc::bad_checkpoint, "unknown readout '" + readout + "'");
        cfg.num_classes = kv_size(kv, "num_classes");
        return make_gcn(cfg);
    }
    if (arch == "fcnn") {
        FcnnConfig cfg;
        cfg.max_nodes = kv_size(kv, "max_nodes");
        cfg.hidden_dims = split_dims(kv_get(kv, "hidden_dims"));
        cfg.num_classes = kv_size(kv, "num_classes");
        return make_fcnn(cfg);
    }
    if (arch == "pointnet") {
        PointNetConfig cfg;
        cfg.max_nodes = kv_size(kv, "max_nodes");
        cfg.use_input_transform = kv_bool(kv, "use_input_transform");
        cfg.point_mlp_dims = split_dims(kv_get(kv, "point_mlp_dims"));
        cfg.head_dims = split_dims(kv_get(kv, "head_dims"));
        cfg.dropout_p = parse_double(kv_get(kv, "dropout_p"), errc::bad_checkpoint, "dropout_p");
        cfg.num_classes = kv_size(kv, "num_classes");
        cfg.mask_padding = kv_bool(kv, "mask_padding");
        return make_pointnet(cfg);
    }
    fail(errc::bad_checkpoint, "unknown architecture '" + std::string(arch) + "'");
}

nd::Tensor inference_logits(ClassifierModel& model, const PartInput& part) {
    Tape tape;
    Rng unused(0);
    const Tape::Id logits = model.forward(tape, part, false, unused);
    return tape.value(logits);
}

Classification classify(ClassifierModel& model, const PartInput& part) {
    Tape tape;
    Rng unused(0);
    const Tape::Id logits = model.forward(tape, part, false, unused);
    const Tape::Id probs = tape.softmax(logits);
    const Tensor& p = tape.value(probs);
    Classification out;
    for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[out.label]) out.label = i;
    out.probability = p[out.label];
    return out;
}

}  // namespace partclass
