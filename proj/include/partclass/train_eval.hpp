#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "partclass/checkpoint.hpp"
#include "partclass/models.hpp"
#include "partclass/optim.hpp"
#include "partclass/synthgen.hpp"

namespace partclass {

enum class OptimizerKind { adam, sgd };

struct TrainConfig {
    std::string arch = "gcn";
    // Explicit model configs override the defaults; num_classes and (for the
    // padded models) max_nodes are filled in from the dataset when absent.
    std::optional<GcnConfig> gcn;
    std::optional<FcnnConfig> fcnn;
    std::optional<PointNetConfig> pointnet;

    OptimizerKind optimizer = OptimizerKind::adam;
    nd::AdamConfig adam;
    nd::SgdConfig sgd;
    // Multiplicative learning-rate decay applied after each epoch.
    double lr_decay = 1.0;

    std::size_t epochs = 200;
    std::size_t batch_size = 8;
    std::uint64_t seed = 0;
    bool shuffle = true;
    // Stop once the epoch's running accuracy reaches this and an
    // inference-mode pass confirms it. Deterministic.
    std::optional<double> stop_train_acc;
};

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double loss = 0.0;
    double train_accuracy = 0.0;
};

struct TrainResult {
    std::unique_ptr<ClassifierModel> model;
    std::vector<EpochStats> history;
    CheckpointMeta meta;
};

struct LoadedDataset {
    std::vector<PartInput> parts;  // parallel to manifest entries
    std::vector<std::size_t> labels;
    std::size_t num_classes = 0;
    std::size_t max_part_nodes = 0;
};

// Reads, validates and prepares every manifest entry.
LoadedDataset load_dataset(const DatasetManifest& manifest);

// Minimizes mean cross-entropy with the configured optimizer. Deterministic
// given seed and platform. DivergedLoss aborts on the first non-finite loss.
TrainResult train(const TrainConfig& cfg, const DatasetManifest& manifest);

std::string history_csv(const std::vector<EpochStats>& history);

// One row of the Tables 1-5 style protocol.
struct Variant {
    std::string part_name;
    std::size_t label = 0;
    char subset = 'A';
    std::string display;
    std::string descriptor;
    Mesh mesh;
};

// The 26-row default suite for one base part: 3 rigid motions, 5 hole counts,
// schema change, finer mesh, 2 coarse meshes, 2 extra schema changes, 2
// mirrorings, 3 scale-ups, 3 hole shifts, 3 bead shifts, 1 node reordering.
// Feature shifts need the part's spec sidecar (MissingSpecSidecar) and at
// least one hole and one bead.
std::vector<Variant> build_variant_suite(const DatasetManifest& manifest,
                                         std::string_view part_name, std::uint64_t seed);

// First k parts (in seeded random order) whose variant suite builds; parts
// without holes or beads are skipped. Used to pick evaluation baselines.
std::vector<std::string> choose_suite_parts(const DatasetManifest& manifest, std::size_t k,
                                            std::uint64_t seed);

struct EvalRow {
    std::string part_name;
    char subset = 'A';
    std::string display;
    std::string descriptor;
    std::size_t predicted = 0;
    std::size_t true_label = 0;
    bool correct = false;
    std::string failure;  // non-empty when the row failed instead of classifying
};

struct EvalResult {
    std::string arch;
    std::vector<EvalRow> rows;
    std::size_t correct_count() const;
    double accuracy() const;  // exactly correct/total
};

// Classifies every variant in inference mode. A part that exceeds a padded
// model's input (PartTooLarge) becomes a failed row, not a crash.
EvalResult evaluate(ClassifierModel& model, const std::vector<Variant>& suite);

// Markdown: one table per subset with a checkmark per architecture column
// (FCNN, PointNet, GCN), then one summary accuracy line per architecture.
// Byte-deterministic. SuiteMismatch when results disagree on the suite.
std::string report(const std::vector<EvalResult>& results);

// Seeded toy-scale gradient check for one architecture; training-mode
// forward (batch statistics, fixed dropout mask), central differences.
nd::GradCheckReport model_gradcheck(std::string_view arch, std::uint64_t seed);
nd::GradCheckReport run_model_gradcheck(ClassifierModel& model, const PartInput& part,
                                        std::size_t label, std::uint64_t dropout_seed,
                                        double step = 1e-5);

}  // namespace partclass
