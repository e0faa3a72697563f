#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "partclass/augment.hpp"
#include "partclass/mesh_io.hpp"

namespace partclass {

struct HoleSpec {
    double cx = 0.0, cy = 0.0, r = 0.0;
    bool operator==(const HoleSpec&) const = default;
};

// Raised ridge along a centerline segment; the profile is a truncated
// parabola height * max(0, 1 - (d / half_width)^2) in z.
struct BeadSpec {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
    double half_width = 0.0, height = 0.0;
    bool operator==(const BeadSpec&) const = default;
};

// Parametric plate part: structured nx x ny grid on [0,width] x [0,height],
// optional holes (element deletion) and beads (z displacement), schema
// conversion applied last.
struct PartSpec {
    double width = 0.0, height = 0.0;
    std::size_t nx = 0, ny = 0;
    GridSchema schema = GridSchema::quad;
    std::vector<HoleSpec> holes;
    std::vector<BeadSpec> beads;
    bool operator==(const PartSpec&) const = default;

    GridMeta grid_meta() const { return {nx, ny, width, height, schema}; }
};

// InvalidSpec on violated invariants: nx, ny >= 2, positive dims, holes
// in-plate and pairwise non-overlapping, beads in-plate with positive
// half-width.
void validate_spec(const PartSpec& spec);

// Deterministic: no randomness anywhere in the construction.
Mesh generate_part(const PartSpec& spec);

enum class FeatureKind { hole, bead };

// Returns the spec with feature `index` translated by dx along x. The shifted
// feature must stay in-plate and non-overlapping (FeatureOutOfBounds);
// regenerate to obtain the variant mesh.
PartSpec shift_feature(const PartSpec& spec, FeatureKind kind, std::size_t index, double dx);

// Canonical key=value sidecar serialization (shortest round-trip doubles).
std::string write_part_spec(const PartSpec& spec);
PartSpec parse_part_spec(std::string_view text);

// "<stem>.spec" next to the mesh file. MissingSpecSidecar when absent.
std::filesystem::path sidecar_path(const std::filesystem::path& mesh_path);
PartSpec load_spec_sidecar(const std::filesystem::path& mesh_path);

// Seeded sampling of n_classes distinct PartSpecs; writes part_###.bdf,
// part_###.spec and manifest.csv under out_dir. Distinctness is enforced on
// the scaled-feature/graph signature, so no two classes are
// indistinguishable after per-part feature scaling. Same seed, same bytes.
DatasetManifest generate_dataset(std::size_t n_classes, std::uint64_t seed,
                                 const std::filesystem::path& out_dir);

// Full descriptor application. Mesh-level steps delegate to augment;
// hole_shift/bead_shift regenerate from the part spec and must come first.
// Structured-grid metadata is tracked through steps that preserve it (refine,
// tri, scale, holes, permute) so coarsen can follow them in a chain.
Mesh apply_descriptor(const Mesh& base, const std::optional<PartSpec>& spec,
                      const TransformDesc& desc);

}  // namespace partclass
