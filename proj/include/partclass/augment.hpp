#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "partclass/mesh_io.hpp"
#include "partclass/rng.hpp"

namespace partclass {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

enum class MirrorAxis { x, y };
enum class TriPattern { fixed_diagonal, alternating };
enum class GridSchema { quad, tri_fixed, tri_alternating };

// Structured-grid metadata carried by generator meshes; coarsening is only
// defined where it holds.
struct GridMeta {
    std::size_t nx = 0, ny = 0;
    double width = 0.0, height = 0.0;
    GridSchema schema = GridSchema::quad;
};

Mesh translate(const Mesh& mesh, Vec3 t);

// Axis-angle rotation (Rodrigues); axis is normalized internally, ZeroAxis if
// its norm vanishes.
Mesh rotate(const Mesh& mesh, Vec3 axis, double angle);

// Negates the chosen coordinate and reverses element winding: quad (a,b,c,d)
// becomes (a,d,c,b), tri (a,b,c) becomes (a,c,b).
Mesh mirror(const Mesh& mesh, MirrorAxis axis);

Mesh uniform_scale(const Mesh& mesh, double factor);

// Deletes all elements whose centroid lies within `radius` (in xy) of k
// seeded interior points; drawn holes must not overlap and must remove at
// least one element each (redrawn up to 100 attempts, then CannotPlaceHoles).
// Nodes orphaned by the deletion are dropped; pre-existing orphans pass
// through. Chosen centers are reported via `centers_out` for oracle checks.
Mesh add_holes(const Mesh& mesh, std::size_t k, double radius, nd::Rng& rng,
               std::vector<Vec3>* centers_out = nullptr);

// Splits each quad into 4 quads (edge midpoints + centroid) and each tri into
// 4 tris (edge midpoints). Shared midpoints are deduplicated; original nodes
// keep their ids and coordinates.
Mesh refine(const Mesh& mesh);

// Merges factor x factor structured cells into one quad and re-applies the
// schema conversion recorded in `meta`. NotStructured when the mesh does not
// sit on the meta lattice or cell counts do not divide.
Mesh coarsen_structured(const Mesh& mesh, const GridMeta& meta, std::size_t factor);

// Quad (a,b,c,d) -> (a,b,c)+(a,c,d), or with the diagonal flipped on odd
// element positions for the alternating pattern. Tris pass through. Node set
// unchanged; element ids renumbered sequentially.
Mesh quad_to_tri(const Mesh& mesh, TriPattern pattern);

// Nodes relisted in `order` (order[k] = original position) with fresh
// contiguous ids 1..n; connectivity rewritten, geometry untouched.
Mesh apply_node_permutation(const Mesh& mesh, std::span<const std::size_t> order);
Mesh permute_nodes(const Mesh& mesh, nd::Rng& rng);

// One-line variant descriptor: steps joined by ';', each
//   kind(param=value,...)[#seed]
// Kinds: translate(x,y,z) rotate(ax,ay,az,angle) rotz(angle) mirror(axis)
//        scale(factor) holes(k,radius)#seed refine() coarsen(factor)
//        tri(pattern) permute()#seed hole_shift(index,dx) bead_shift(index,dx)
// Doubles are serialized in shortest round-trip form, so replaying a
// descriptor is bit-exact.
struct TransformStep {
    std::string kind;
    std::vector<std::pair<std::string, std::string>> params;
    std::optional<std::uint64_t> seed;

    std::string param(std::string_view key) const;  // MalformedDescriptor if absent
    double param_double(std::string_view key) const;
    std::uint64_t param_u64(std::string_view key) const;
};

struct TransformDesc {
    std::vector<TransformStep> steps;

    static TransformDesc parse(std::string_view text);
    std::string to_string() const;
};

// Applies mesh-level steps in order. Feature-shift steps need the generator
// spec and are handled one level up (synthgen::apply_descriptor); coarsen
// needs `meta`. MissingSpecSidecar when required metadata is absent.
Mesh apply_step(const Mesh& mesh, const TransformStep& step,
                const std::optional<GridMeta>& meta);

}  // namespace partclass
