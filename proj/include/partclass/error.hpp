#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace partclass {

// Domain error with a stable machine-readable code. The CLI renders these as
// "error: <code>: <detail>" and exits 1; tests match on code().
class Error : public std::runtime_error {
  public:
    Error(std::string code, const std::string& detail)
        : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

  private:
    std::string code_;
};

namespace errc {
// mesh_io
inline constexpr std::string_view malformed_card = "MalformedCard";
inline constexpr std::string_view duplicate_id = "DuplicateId";
inline constexpr std::string_view unknown_card = "UnknownCard";
inline constexpr std::string_view non_contiguous_labels = "NonContiguousLabels";
inline constexpr std::string_view missing_file = "MissingFile";
inline constexpr std::string_view malformed_row = "MalformedRow";
inline constexpr std::string_view invalid_mesh = "InvalidMesh";
// ndcore
inline constexpr std::string_view shape_mismatch = "ShapeMismatch";
inline constexpr std::string_view coeff_graph_mismatch = "CoeffGraphMismatch";
inline constexpr std::string_view invalid_probability = "InvalidProbability";
inline constexpr std::string_view invalid_batch = "InvalidBatch";
inline constexpr std::string_view label_out_of_range = "LabelOutOfRange";
inline constexpr std::string_view empty_mask = "EmptyMask";
inline constexpr std::string_view detached_tensor = "DetachedTensor";
// models
inline constexpr std::string_view part_too_large = "PartTooLarge";
inline constexpr std::string_view bad_checkpoint = "BadCheckpoint";
// augment
inline constexpr std::string_view zero_axis = "ZeroAxis";
inline constexpr std::string_view non_positive_factor = "NonPositiveFactor";
inline constexpr std::string_view cannot_place_holes = "CannotPlaceHoles";
inline constexpr std::string_view not_structured = "NotStructured";
inline constexpr std::string_view malformed_descriptor = "MalformedDescriptor";
// synthgen
inline constexpr std::string_view invalid_spec = "InvalidSpec";
inline constexpr std::string_view feature_out_of_bounds = "FeatureOutOfBounds";
inline constexpr std::string_view index_out_of_range = "IndexOutOfRange";
inline constexpr std::string_view io_failure = "IoFailure";
// train_eval
inline constexpr std::string_view diverged_loss = "DivergedLoss";
inline constexpr std::string_view missing_spec_sidecar = "MissingSpecSidecar";
inline constexpr std::string_view suite_mismatch = "SuiteMismatch";
}  // namespace errc

[[noreturn]] inline void fail(std::string_view code, const std::string& detail) {
    throw Error(std::string(code), detail);
}

}  // namespace partclass
