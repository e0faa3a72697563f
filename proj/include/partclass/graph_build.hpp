#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "partclass/mesh_io.hpp"
#include "partclass/tensor.hpp"

namespace partclass {

// Undirected graph with one self-loop per node. Edges are stored once as
// canonical (i <= j) dense-index pairs, sorted and deduplicated. The self-loop
// puts i in N(i), so degree counts the node itself once.
struct Graph {
    std::size_t n_nodes = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    std::vector<std::uint32_t> degree;
    std::vector<std::int64_t> index_to_id;
    std::unordered_map<std::int64_t, std::uint32_t> node_index;
};

// Per-node xyz features, zero centered and scaled to unit sample std per axis.
// Raw per-axis statistics are kept for reporting.
struct NodeFeatures {
    nd::Tensor features;  // n_nodes x 3
    std::array<double, 3> mean{};
    std::array<double, 3> stddev{};
};

// Symmetric normalization coefficients c_ij = sqrt(deg i) * sqrt(deg j),
// parallel to Graph::edges.
struct NormCoeff {
    std::vector<double> coeff;
};

// Element perimeter edges (no quad diagonals) plus one self-loop per node.
// Dense indices follow node order of appearance; node ids may have gaps.
Graph mesh_to_graph(const Mesh& mesh);

// Per-part, per-axis scaling: subtract mean, divide by sample (n-1) std.
// Axes with raw std below flat_axis_eps stay at zero after centering.
inline constexpr double flat_axis_eps = 1e-12;
NodeFeatures scale_features(const Mesh& mesh);

NormCoeff norm_coeffs(const Graph& graph);

// Debug dump: one "i j" line per edge, dense indices, self-loops included.
std::string write_edge_list(const Graph& graph);

}  // namespace partclass
