#include "partclass/graph_build.hpp"

#include <algorithm>
#include <cmath>

#include "partclass/error.hpp"

namespace partclass {

Graph mesh_to_graph(const Mesh& mesh) {
    const ValidationReport report = validate(mesh);
    if (!report.ok()) fail(errc::invalid_mesh, "mesh fails validation: " + report.to_string());

    Graph g;
    g.n_nodes = mesh.nodes.size();
    g.index_to_id.reserve(g.n_nodes);
    g.node_index.reserve(g.n_nodes);
    for (const Node& n : mesh.nodes) {
        g.node_index.emplace(n.id, static_cast<std::uint32_t>(g.index_to_id.size()));
        g.index_to_id.push_back(n.id);
    }

    auto canonical = [](std::uint32_t a, std::uint32_t b) {
        return a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
    };

    g.edges.reserve(g.n_nodes + mesh.elements.size() * 4);
    for (std::uint32_t i = 0; i < g.n_nodes; ++i) g.edges.emplace_back(i, i);
    for (const Element& e : mesh.elements) {
        const std::size_t k = e.conn.size();
        for (std::size_t c = 0; c < k; ++c) {
            const std::uint32_t a = g.node_index.at(e.conn[c]);
            const std::uint32_t b = g.node_index.at(e.conn[(c + 1) % k]);
            g.edges.push_back(canonical(a, b));
        }
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());

    g.degree.assign(g.n_nodes, 0);
    for (const auto& [a, b] : g.edges) {
        ++g.degree[a];
        if (a != b) ++g.degree[b];
    }
    return g;
}

NodeFeatures scale_features(const Mesh& mesh) {
    const std::size_t n = mesh.nodes.size();
    if (n == 0) fail(errc::invalid_mesh, "cannot scale features of an empty mesh");

    NodeFeatures out;
    out.features = nd::Tensor({n, 3});
    for (std::size_t i = 0; i < n; ++i) {
        out.features(i, 0) = mesh.nodes[i].x;
        out.features(i, 1) = mesh.nodes[i].y;
        out.features(i, 2) = mesh.nodes[i].z;
    }

    for (std::size_t axis = 0; axis < 3; ++axis) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += out.features(i, axis);
        const double mean = sum / static_cast<double>(n);

        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = out.features(i, axis) - mean;
            sq += d * d;
        }
        // Sample std, n-1 denominator. A single node gives a flat axis.
        const double std_dev = n > 1 ? std::sqrt(sq / static_cast<double>(n - 1)) : 0.0;

        out.mean[axis] = mean;
        out.stddev[axis] = std_dev;
        const bool flat = std_dev < flat_axis_eps;
        for (std::size_t i = 0; i < n; ++i) {
            const double centered = out.features(i, axis) - mean;
            out.features(i, axis) = flat ? 0.0 : centered / std_dev;
        }
    }
    return out;
}

NormCoeff norm_coeffs(const Graph& graph) {
    NormCoeff c;
    c.coeff.reserve(graph.edges.size());
    for (const auto& [a, b] : graph.edges)
        c.coeff.push_back(std::sqrt(static_cast<double>(graph.degree[a])) *
                          std::sqrt(static_cast<double>(graph.degree[b])));
    return c;
}

std::string write_edge_list(const Graph& graph) {
    std::string out;
    out.reserve(graph.edges.size() * 8);
    for (const auto& [a, b] : graph.edges) {
        out += std::to_string(a);
        out += ' ';
        out += std::to_string(b);
        out += '\n';
    }
    return out;
}

}  // namespace partclass
