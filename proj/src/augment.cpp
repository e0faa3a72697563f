#include "partclass/augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "partclass/error.hpp"
#include "partclass/strfmt.hpp"

namespace partclass {

namespace {

Mesh copy_topology(const Mesh& mesh) {
    Mesh out;
    out.nodes = mesh.nodes;
    out.elements = mesh.elements;
    return out;
}

struct Centroid {
    double x, y;
};

Centroid element_centroid_xy(const Mesh& mesh,
                             const std::unordered_map<std::int64_t, std::size_t>& node_pos,
                             const Element& e) {
    double cx = 0.0, cy = 0.0;
    for (const std::int64_t id : e.conn) {
        const Node& n = mesh.nodes[node_pos.at(id)];
        cx += n.x;
        cy += n.y;
    }
    const double inv = 1.0 / static_cast<double>(e.conn.size());
    return {cx * inv, cy * inv};
}

std::unordered_map<std::int64_t, std::size_t> node_positions(const Mesh& mesh) {
    std::unordered_map<std::int64_t, std::size_t> pos;
    pos.reserve(mesh.nodes.size());
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) pos.emplace(mesh.nodes[i].id, i);
    return pos;
}

}  // namespace

Mesh translate(const Mesh& mesh, Vec3 t) {
    Mesh out = copy_topology(mesh);
    for (Node& n : out.nodes) {
        n.x += t.x;
        n.y += t.y;
        n.z += t.z;
    }
    return out;
}

Mesh rotate(const Mesh& mesh, Vec3 axis, double angle) {
    const double norm = std::sqrt(axis.x * axis.x + axis.y * axis.y + axis.z * axis.z);
    if (norm < 1e-12) fail(errc::zero_axis, "rotation axis must be nonzero");
    const double ux = axis.x / norm, uy = axis.y / norm, uz = axis.z / norm;
    const double c = std::cos(angle), s = std::sin(angle), omc = 1.0 - c;

    // Rodrigues rotation matrix rows.
    const double r[3][3] = {
        {c + ux * ux * omc, ux * uy * omc - uz * s, ux * uz * omc + uy * s},
        {uy * ux * omc + uz * s, c + uy * uy * omc, uy * uz * omc - ux * s},
        {uz * ux * omc - uy * s, uz * uy * omc + ux * s, c + uz * uz * omc},
    };

    Mesh out = copy_topology(mesh);
    for (Node& n : out.nodes) {
        const double x = n.x, y = n.y, z = n.z;
        n.x = r[0][0] * x + r[0][1] * y + r[0][2] * z;
        n.y = r[1][0] * x + r[1][1] * y + r[1][2] * z;
        n.z = r[2][0] * x + r[2][1] * y + r[2][2] * z;
    }
    return out;
}

Mesh mirror(const Mesh& mesh, MirrorAxis axis) {
    Mesh out = copy_topology(mesh);
    for (Node& n : out.nodes) {
        if (axis == MirrorAxis::x)
            n.x = -n.x;
        else
            n.y = -n.y;
    }
    // Reverse winding to keep the orientation convention.
    for (Element& e : out.elements) {
        if (e.kind == ElementKind::quad)
            e.conn = {e.conn[0], e.conn[3], e.conn[2], e.conn[1]};
        else
            e.conn = {e.conn[0], e.conn[2], e.conn[1]};
    }
    return out;
}

Mesh uniform_scale(const Mesh& mesh, double factor) {
    if (!(factor > 0.0)) fail(errc::non_positive_factor, "scale factor must be > 0");
    Mesh out = copy_topology(mesh);
    for (Node& n : out.nodes) {
        n.x *= factor;
        n.y *= factor;
        n.z *= factor;
    }
    return out;
}

Mesh add_holes(const Mesh& mesh, std::size_t k, double radius, nd::Rng& rng,
               std::vector<Vec3>* centers_out) {
    if (radius <= 0.0) fail(errc::non_positive_factor, "hole radius must be > 0");
    Mesh out = copy_topology(mesh);
    if (k == 0) {
        if (centers_out) centers_out->clear();
        return out;
    }

    const auto pos = node_positions(mesh);
    double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
    double min_y = min_x, max_y = -min_x;
    for (const Node& n : mesh.nodes) {
        min_x = std::min(min_x, n.x);
        max_x = std::max(max_x, n.x);
        min_y = std::min(min_y, n.y);
        max_y = std::max(max_y, n.y);
    }
    if (min_x + radius > max_x - radius || min_y + radius > max_y - radius)
        fail(errc::cannot_place_holes, "radius too large for the part bounding box");

    // Reference counts before deletion; only newly orphaned nodes are dropped.
    std::unordered_map<std::int64_t, std::size_t> refs_before;
    for (const Element& e : mesh.elements)
        for (const std::int64_t id : e.conn) ++refs_before[id];

    std::vector<Vec3> centers;
    std::vector<Element> elements = out.elements;
    for (std::size_t hole = 0; hole < k; ++hole) {
        bool placed = false;
        for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
            const double cx = rng.uniform(min_x + radius, max_x - radius);
            const double cy = rng.uniform(min_y + radius, max_y - radius);
            bool overlaps = false;
            for (const Vec3& c : centers) {
                const double dx = c.x - cx, dy = c.y - cy;
                if (dx * dx + dy * dy < 4.0 * radius * radius) {
                    overlaps = true;
                    break;
                }
            }
            if (overlaps) continue;

            std::vector<Element> kept;
            kept.reserve(elements.size());
            std::size_t deleted = 0;
            for (const Element& e : elements) {
                const Centroid c = element_centroid_xy(mesh, pos, e);
                const double dx = c.x - cx, dy = c.y - cy;
                if (dx * dx + dy * dy <= radius * radius)
                    ++deleted;
                else
                    kept.push_back(e);
            }
            if (deleted == 0) continue;  // redraw: a hole must remove something
            elements = std::move(kept);
            centers.push_back({cx, cy, 0.0});
            placed = true;
        }
        if (!placed)
            fail(errc::cannot_place_holes,
                 "could not place hole " + std::to_string(hole + 1) + " of " + std::to_string(k) +
                     " after 100 attempts");
    }

    std::unordered_map<std::int64_t, std::size_t> refs_after;
    for (const Element& e : elements)
        for (const std::int64_t id : e.conn) ++refs_after[id];

    Mesh result;
    for (const Node& n : out.nodes) {
        const auto before = refs_before.find(n.id);
        const bool newly_orphaned =
            before != refs_before.end() && before->second > 0 && refs_after[n.id] == 0;
        if (!newly_orphaned) result.nodes.push_back(n);
    }
    result.elements = std::move(elements);
    if (centers_out) *centers_out = std::move(centers);
    return result;
}

Mesh refine(const Mesh& mesh) {
    const auto pos = node_positions(mesh);
    Mesh out;
    out.nodes = mesh.nodes;

    std::int64_t next_id = 0;
    for (const Node& n : mesh.nodes) next_id = std::max(next_id, n.id);
    ++next_id;

    std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> midpoint_of;
    auto midpoint = [&](std::int64_t a, std::int64_t b) {
        const auto key = std::minmax(a, b);
        const auto it = midpoint_of.find(key);
        if (it != midpoint_of.end()) return it->second;
        const Node& na = mesh.nodes[pos.at(a)];
        const Node& nb = mesh.nodes[pos.at(b)];
        const Node mid{next_id, (na.x + nb.x) / 2.0, (na.y + nb.y) / 2.0, (na.z + nb.z) / 2.0};
        out.nodes.push_back(mid);
        midpoint_of.emplace(key, next_id);
        return next_id++;
    };

    std::int64_t next_eid = 1;
    auto emit = [&](ElementKind kind, std::vector<std::int64_t> conn) {
        out.elements.push_back({next_eid++, kind, std::move(conn)});
    };

    for (const Element& e : mesh.elements) {
        if (e.kind == ElementKind::quad) {
            const std::int64_t a = e.conn[0], b = e.conn[1], c = e.conn[2], d = e.conn[3];
            const std::int64_t mab = midpoint(a, b), mbc = midpoint(b, c), mcd = midpoint(c, d),
                               mda = midpoint(d, a);
            const Node& na = mesh.nodes[pos.at(a)];
            const Node& nb = mesh.nodes[pos.at(b)];
            const Node& nc = mesh.nodes[pos.at(c)];
            const Node& nd = mesh.nodes[pos.at(d)];
            const Node center{next_id, (na.x + nb.x + nc.x + nd.x) / 4.0,
                              (na.y + nb.y + nc.y + nd.y) / 4.0,
                              (na.z + nb.z + nc.z + nd.z) / 4.0};
            out.nodes.push_back(center);
            const std::int64_t q = next_id++;
            emit(ElementKind::quad, {a, mab, q, mda});
            emit(ElementKind::quad, {mab, b, mbc, q});
            emit(ElementKind::quad, {q, mbc, c, mcd});
            emit(ElementKind::quad, {mda, q, mcd, d});
        } else {
            const std::int64_t a = e.conn[0], b = e.conn[1], c = e.conn[2];
            const std::int64_t mab = midpoint(a, b), mbc = midpoint(b, c), mca = midpoint(c, a);
            emit(ElementKind::tri, {a, mab, mca});
            emit(ElementKind::tri, {mab, b, mbc});
            emit(ElementKind::tri, {mca, mbc, c});
            emit(ElementKind::tri, {mab, mbc, mca});
        }
    }
    return out;
}

Mesh coarsen_structured(const Mesh& mesh, const GridMeta& meta, std::size_t factor) {
    if (factor < 2) fail(errc::not_structured, "coarsening factor must be >= 2");
    if (meta.nx == 0 || meta.ny == 0 || meta.nx % factor != 0 || meta.ny % factor != 0)
        fail(errc::not_structured, "cell counts " + std::to_string(meta.nx) + "x" +
                                       std::to_string(meta.ny) + " not divisible by " +
                                       std::to_string(factor));
    const double dx = meta.width / static_cast<double>(meta.nx);
    const double dy = meta.height / static_cast<double>(meta.ny);
    // Mesh files carry 9 significant digits, so lattice coordinates read back
    // with up to ~5e-7 relative error; stay far below the cell pitch anyway.
    const double tol = 1e-5 * std::max({1.0, meta.width, meta.height});

    // Every node must sit on the lattice (beads displace z only).
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> lattice;  // (ix,iy) -> node pos
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
        const Node& n = mesh.nodes[i];
        const double fx = n.x / dx, fy = n.y / dy;
        const double rx = std::round(fx), ry = std::round(fy);
        if (std::abs(n.x - rx * dx) > tol || std::abs(n.y - ry * dy) > tol || rx < -0.5 ||
            ry < -0.5 || rx > static_cast<double>(meta.nx) + 0.5 ||
            ry > static_cast<double>(meta.ny) + 0.5)
            fail(errc::not_structured, "node " + std::to_string(n.id) + " is off-lattice");
        const auto key = std::make_pair(static_cast<std::size_t>(rx), static_cast<std::size_t>(ry));
        if (!lattice.emplace(key, i).second)
            fail(errc::not_structured, "two nodes share one lattice point");
    }

    // Cell occupancy: 1 element per cell for quad schema, 2 for tri schemas.
    const std::size_t expected = meta.schema == GridSchema::quad ? 1 : 2;
    const auto pos = node_positions(mesh);
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> occupancy;
    for (const Element& e : mesh.elements) {
        const Centroid c = element_centroid_xy(mesh, pos, e);
        const double fx = c.x / dx, fy = c.y / dy;
        const std::size_t jx = static_cast<std::size_t>(std::floor(fx));
        const std::size_t jy = static_cast<std::size_t>(std::floor(fy));
        if (fx < 0.0 || fy < 0.0 || jx >= meta.nx || jy >= meta.ny)
            fail(errc::not_structured, "element centroid outside the grid");
        ++occupancy[{jx, jy}];
    }
    for (const auto& [cell, count] : occupancy)
        if (count != expected)
            fail(errc::not_structured, "cell occupancy " + std::to_string(count) +
                                           " does not match the " +
                                           (expected == 1 ? std::string("quad") : std::string("tri")) +
                                           " schema");

    const std::size_t cnx = meta.nx / factor, cny = meta.ny / factor;
    auto corner = [&](std::size_t ix, std::size_t iy) {
        const auto it = lattice.find({ix, iy});
        if (it == lattice.end())
            fail(errc::not_structured, "missing lattice corner node");
        return mesh.nodes[it->second].id;
    };

    Mesh quads;
    std::int64_t next_eid = 1;
    std::unordered_set<std::int64_t> used;
    for (std::size_t cy = 0; cy < cny; ++cy) {
        for (std::size_t cx = 0; cx < cnx; ++cx) {
            bool full = true;
            for (std::size_t sy = 0; sy < factor && full; ++sy)
                for (std::size_t sx = 0; sx < factor && full; ++sx)
                    full = occupancy.count({cx * factor + sx, cy * factor + sy}) > 0;
            if (!full) continue;
            const std::int64_t n00 = corner(cx * factor, cy * factor);
            const std::int64_t n10 = corner((cx + 1) * factor, cy * factor);
            const std::int64_t n11 = corner((cx + 1) * factor, (cy + 1) * factor);
            const std::int64_t n01 = corner(cx * factor, (cy + 1) * factor);
            quads.elements.push_back({next_eid++, ElementKind::quad, {n00, n10, n11, n01}});
            used.insert({n00, n10, n11, n01});
        }
    }
    for (const Node& n : mesh.nodes)
        if (used.count(n.id)) quads.nodes.push_back(n);
    if (quads.elements.empty())
        fail(errc::not_structured, "no complete coarse cells at factor " + std::to_string(factor));

    if (meta.schema == GridSchema::quad) return quads;
    return quad_to_tri(quads, meta.schema == GridSchema::tri_fixed ? TriPattern::fixed_diagonal
                                                                   : TriPattern::alternating);
}

Mesh quad_to_tri(const Mesh& mesh, TriPattern pattern) {
    Mesh out;
    out.nodes = mesh.nodes;
    std::int64_t next_eid = 1;
    for (std::size_t i = 0; i < mesh.elements.size(); ++i) {
        const Element& e = mesh.elements[i];
        if (e.kind == ElementKind::tri) {
            out.elements.push_back({next_eid++, ElementKind::tri, e.conn});
            continue;
        }
        const std::int64_t a = e.conn[0], b = e.conn[1], c = e.conn[2], d = e.conn[3];
        const bool flip = pattern == TriPattern::alternating && i % 2 == 1;
        if (!flip) {
            out.elements.push_back({next_eid++, ElementKind::tri, {a, b, c}});
            out.elements.push_back({next_eid++, ElementKind::tri, {a, c, d}});
        } else {
            out.elements.push_back({next_eid++, ElementKind::tri, {a, b, d}});
            out.elements.push_back({next_eid++, ElementKind::tri, {b, c, d}});
        }
    }
    return out;
}

Mesh apply_node_permutation(const Mesh& mesh, std::span<const std::size_t> order) {
    const std::size_t n = mesh.nodes.size();
    if (order.size() != n) fail(errc::invalid_mesh, "permutation length != node count");
    Mesh out;
    out.nodes.reserve(n);
    std::unordered_map<std::int64_t, std::int64_t> remap;
    remap.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        Node node = mesh.nodes[order[k]];
        remap.emplace(node.id, static_cast<std::int64_t>(k + 1));
        node.id = static_cast<std::int64_t>(k + 1);
        out.nodes.push_back(node);
    }
    out.elements = mesh.elements;
    for (Element& e : out.elements)
        for (std::int64_t& id : e.conn) id = remap.at(id);
    return out;
}

Mesh permute_nodes(const Mesh& mesh, nd::Rng& rng) {
    const std::vector<std::size_t> order = rng.permutation(mesh.nodes.size());
    return apply_node_permutation(mesh, order);
}

// --- descriptor grammar ----------------------------------------------------

std::string TransformStep::param(std::string_view key) const {
    for (const auto& [k, v] : params)
        if (k == key) return v;
    fail(errc::malformed_descriptor, kind + ": missing parameter '" + std::string(key) + "'");
}

double TransformStep::param_double(std::string_view key) const {
    return parse_double(param(key), errc::malformed_descriptor, kind + "." + std::string(key));
}

std::uint64_t TransformStep::param_u64(std::string_view key) const {
    return parse_u64(param(key), errc::malformed_descriptor, kind + "." + std::string(key));
}

namespace {

enum class ParamType { real, integer, word };

const std::vector<std::pair<std::string, ParamType>>& expected_params(const std::string& kind) {
    using P = ParamType;
    static const std::map<std::string, std::vector<std::pair<std::string, ParamType>>> table = {
        {"translate", {{"x", P::real}, {"y", P::real}, {"z", P::real}}},
        {"rotate", {{"ax", P::real}, {"ay", P::real}, {"az", P::real}, {"angle", P::real}}},
        {"rotz", {{"angle", P::real}}},
        {"mirror", {{"axis", P::word}}},
        {"scale", {{"factor", P::real}}},
        {"holes", {{"k", P::integer}, {"radius", P::real}}},
        {"refine", {}},
        {"coarsen", {{"factor", P::integer}}},
        {"tri", {{"pattern", P::word}}},
        {"permute", {}},
        {"hole_shift", {{"index", P::integer}, {"dx", P::real}}},
        {"bead_shift", {{"index", P::integer}, {"dx", P::real}}},
    };
    const auto it = table.find(kind);
    if (it == table.end()) fail(errc::malformed_descriptor, "unknown transform '" + kind + "'");
    return it->second;
}

bool kind_needs_seed(const std::string& kind) { return kind == "holes" || kind == "permute"; }

TransformStep parse_step(std::string_view text) {
    TransformStep step;
    const std::size_t open = text.find('(');
    const std::size_t close = text.rfind(')');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open)
        fail(errc::malformed_descriptor, "expected kind(...) in '" + std::string(text) + "'");
    step.kind = std::string(text.substr(0, open));

    const std::string_view inner = text.substr(open + 1, close - open - 1);
    if (!inner.empty()) {
        std::size_t start = 0;
        for (std::size_t i = 0; i <= inner.size(); ++i) {
            if (i == inner.size() || inner[i] == ',') {
                const std::string_view pair = inner.substr(start, i - start);
                const std::size_t eq = pair.find('=');
                if (eq == std::string_view::npos)
                    fail(errc::malformed_descriptor, "expected key=value in '" + std::string(pair) + "'");
                step.params.emplace_back(std::string(pair.substr(0, eq)),
                                         std::string(pair.substr(eq + 1)));
                start = i + 1;
            }
        }
    }

    std::string_view tail = text.substr(close + 1);
    if (!tail.empty()) {
        if (tail.front() != '#')
            fail(errc::malformed_descriptor, "unexpected trailing '" + std::string(tail) + "'");
        step.seed = parse_u64(tail.substr(1), errc::malformed_descriptor, "seed");
    }

    // Exact parameter set per kind, values type-checked up front.
    const auto& expected = expected_params(step.kind);
    if (step.params.size() != expected.size())
        fail(errc::malformed_descriptor,
             step.kind + " takes " + std::to_string(expected.size()) + " parameter(s)");
    for (const auto& [key, type] : expected) {
        switch (type) {
            case ParamType::real: step.param_double(key); break;
            case ParamType::integer: step.param_u64(key); break;
            case ParamType::word: step.param(key); break;
        }
    }
    if (kind_needs_seed(step.kind) && !step.seed)
        fail(errc::malformed_descriptor, step.kind + " requires a #seed suffix");
    if (!kind_needs_seed(step.kind) && step.seed)
        fail(errc::malformed_descriptor, step.kind + " does not take a seed");
    return step;
}

}  // namespace

TransformDesc TransformDesc::parse(std::string_view text) {
    TransformDesc desc;
    if (text.empty()) fail(errc::malformed_descriptor, "empty descriptor");
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == ';') {
            desc.steps.push_back(parse_step(text.substr(start, i - start)));
            start = i + 1;
        }
    }
    return desc;
}

std::string TransformDesc::to_string() const {
    std::string out;
    for (std::size_t s = 0; s < steps.size(); ++s) {
        if (s) out += ';';
        const TransformStep& step = steps[s];
        out += step.kind;
        out += '(';
        const auto& expected = expected_params(step.kind);
        for (std::size_t i = 0; i < expected.size(); ++i) {
            if (i) out += ',';
            out += expected[i].first;
            out += '=';
            out += step.param(expected[i].first);
        }
        out += ')';
        if (step.seed) {
            out += '#';
            out += std::to_string(*step.seed);
        }
    }
    return out;
}

Mesh apply_step(const Mesh& mesh, const TransformStep& step,
                const std::optional<GridMeta>& meta) {
    if (step.kind == "translate")
        return translate(mesh,
                         {step.param_double("x"), step.param_double("y"), step.param_double("z")});
    if (step.kind == "rotate")
        return rotate(mesh,
                      {step.param_double("ax"), step.param_double("ay"), step.param_double("az")},
                      step.param_double("angle"));
    if (step.kind == "rotz") return rotate(mesh, {0.0, 0.0, 1.0}, step.param_double("angle"));
    if (step.kind == "mirror") {
        const std::string axis = step.param("axis");
        if (axis == "x") return mirror(mesh, MirrorAxis::x);
        if (axis == "y") return mirror(mesh, MirrorAxis::y);
        fail(errc::malformed_descriptor, "mirror axis must be x or y, got '" + axis + "'");
    }
    if (step.kind == "scale") return uniform_scale(mesh, step.param_double("factor"));
    if (step.kind == "holes") {
        nd::Rng rng(*step.seed);
        return add_holes(mesh, step.param_u64("k"), step.param_double("radius"), rng);
    }
    if (step.kind == "refine") return refine(mesh);
    if (step.kind == "coarsen") {
        if (!meta)
            fail(errc::missing_spec_sidecar, "coarsen requires structured-grid metadata");
        return coarsen_structured(mesh, *meta, step.param_u64("factor"));
    }
    if (step.kind == "tri") {
        const std::string pattern = step.param("pattern");
        if (pattern == "fixed") return quad_to_tri(mesh, TriPattern::fixed_diagonal);
        if (pattern == "alternating") return quad_to_tri(mesh, TriPattern::alternating);
        fail(errc::malformed_descriptor, "tri pattern must be fixed or alternating");
    }
    if (step.kind == "permute") {
        nd::Rng rng(*step.seed);
        return permute_nodes(mesh, rng);
    }
    fail(errc::malformed_descriptor,
         "step '" + step.kind + "' cannot be applied to a bare mesh");
}

}  // namespace partclass
