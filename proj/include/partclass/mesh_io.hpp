#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace partclass {

// FEA node: positive id, coordinates in millimetres.
struct Node {
    std::int64_t id = 0;
    double x = 0.0, y = 0.0, z = 0.0;
    bool operator==(const Node&) const = default;
};

enum class ElementKind { quad, tri };

// Shell element: 4-node quad or 3-node tri, connectivity by node id.
struct Element {
    std::int64_t id = 0;
    ElementKind kind = ElementKind::quad;
    std::vector<std::int64_t> conn;
    bool operator==(const Element&) const = default;
};

struct Mesh {
    std::vector<Node> nodes;
    std::vector<Element> elements;
    bool operator==(const Mesh&) const = default;
};

// Parses the free-field bulk-data subset:
//   GRID,<id>,<x>,<y>,<z>
//   CQUAD4,<eid>,<n1>,<n2>,<n3>,<n4>
//   CTRIA3,<eid>,<n1>,<n2>,<n3>
// Blank lines and lines starting with '$' are skipped. LF and CRLF both work.
// Errors: MalformedCard (field count / non-numeric, with line number),
// DuplicateId, UnknownCard. Dangling references and degenerate connectivity
// are accepted here and surfaced by validate().
Mesh parse_mesh(std::string_view text);

// Canonical form: one card per line, comma separated, coordinates printed
// with 9 significant digits. parse(write(m)) is structurally equal to m for
// meshes whose coordinates survive that precision; one write/parse pass makes
// any valid mesh a fixed point.
std::string write_mesh(const Mesh& mesh);

Mesh read_mesh_file(const std::filesystem::path& path);
void write_mesh_file(const Mesh& mesh, const std::filesystem::path& path);

struct ValidationIssue {
    enum class Kind {
        empty_mesh,
        duplicate_node_id,
        duplicate_element_id,
        dangling_reference,
        degenerate_element,
        orphan_node,
    };
    Kind kind;
    std::int64_t id = 0;  // offending node or element id
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool empty() const { return issues.empty(); }
    // True when no finding violates a mesh invariant. Orphan nodes are legal
    // input (they become isolated graph nodes) and only downgrade empty().
    bool ok() const;
    std::string to_string() const;
};

ValidationReport validate(const Mesh& mesh);

// Labeled dataset manifest: CSV with header "path,label,name", paths relative
// to the manifest location.
struct ManifestEntry {
    std::string path;
    std::size_t label = 0;
    std::string name;
    bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::size_t num_classes = 0;
    std::filesystem::path base_dir;  // empty when parsed from bare text

    std::filesystem::path resolve(const ManifestEntry& e) const { return base_dir / e.path; }
    const ManifestEntry& find(std::string_view name) const;
};

// Parses manifest text and checks that labels form a contiguous 0..C-1 range.
// Errors: MalformedRow, NonContiguousLabels.
DatasetManifest load_manifest(std::string_view text);

// load_manifest + base_dir resolution; every referenced mesh file must exist
// (MissingFile otherwise).
DatasetManifest load_manifest_file(const std::filesystem::path& path);

std::string write_manifest(const DatasetManifest& manifest);

}  // namespace partclass
