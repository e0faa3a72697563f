#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "partclass/graph_build.hpp"
#include "partclass/mesh_io.hpp"
#include "partclass/optim.hpp"
#include "partclass/rng.hpp"
#include "partclass/tape.hpp"

namespace partclass {

// Everything a model needs to see one part: the self-looped graph, its
// degree-normalization coefficients, and scaled node features. Prepared
// once, reused across epochs. Must outlive any tape built on it.
struct PartInput {
    Graph graph;
    NormCoeff coeffs;
    NodeFeatures feats;
    std::size_t n_nodes() const { return graph.n_nodes; }
};

PartInput prepare_part(const Mesh& mesh);

enum class GcnReadout { mean, max };

struct GcnConfig {
    std::size_t num_layers = 3;
    std::size_t hidden_dim = 64;
    GcnReadout readout = GcnReadout::mean;
    std::size_t num_classes = 0;
};

struct FcnnConfig {
    std::size_t max_nodes = 0;  // padding target; input length is 3 * max_nodes
    std::vector<std::size_t> hidden_dims = {512, 256};
    std::size_t num_classes = 0;
};

struct PointNetConfig {
    std::size_t max_nodes = 0;
    bool use_input_transform = true;
    std::vector<std::size_t> point_mlp_dims = {64, 128, 256};
    std::vector<std::size_t> head_dims = {128};
    double dropout_p = 0.3;
    std::size_t num_classes = 0;
    bool mask_padding = false;
};

// One part in, C logits out. Implementations own their parameters; forward
// borrows them onto the caller's tape.
class ClassifierModel {
  public:
    virtual ~ClassifierModel() = default;

    virtual std::string_view arch() const = 0;
    // Canonical key=value pairs, fixed order; serialized into checkpoints.
    virtual std::vector<std::pair<std::string, std::string>> config_kv() const = 0;
    virtual std::vector<nd::NamedTensor> parameters() = 0;
    // Non-trainable state (batchnorm running statistics).
    virtual std::vector<nd::NamedTensor> state_buffers() = 0;
    virtual void init_params(nd::Rng& rng) = 0;
    virtual std::size_t num_classes() const = 0;
    // rng feeds dropout and is only consumed when training.
    virtual nd::Tape::Id forward(nd::Tape& tape, const PartInput& part, bool training,
                                 nd::Rng& rng) = 0;
    // One tape, one logits vector per part. For architectures with batchnorm
    // the batch statistics pool over every part in the call; the default just
    // loops forward().
    virtual std::vector<nd::Tape::Id> forward_batch(nd::Tape& tape,
                                                    const std::vector<const PartInput*>& parts,
                                                    bool training, nd::Rng& rng);
};

std::unique_ptr<ClassifierModel> make_gcn(const GcnConfig& cfg);
std::unique_ptr<ClassifierModel> make_fcnn(const FcnnConfig& cfg);
std::unique_ptr<ClassifierModel> make_pointnet(const PointNetConfig& cfg);

// Rebuild a model from its checkpoint config block. Rejects unknown
// architectures and malformed or missing keys (BadCheckpoint).
std::unique_ptr<ClassifierModel> make_model(std::string_view arch,
                                            const std::map<std::string, std::string>& kv);

struct Classification {
    std::size_t label = 0;
    double probability = 0.0;
};

// Inference-mode forward; ties break to the lowest class index.
Classification classify(ClassifierModel& model, const PartInput& part);

// Inference-mode logits (for invariance tests and oracles).
nd::Tensor inference_logits(ClassifierModel& model, const PartInput& part);

}  // namespace partclass
