#include "partclass/mesh_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "partclass/error.hpp"

namespace partclass {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            fields.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return fields;
}

std::int64_t parse_id(std::string_view field, int line_no, const char* what) {
    std::string buf(field);
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(buf.c_str(), &end, 10);
    if (buf.empty() || end != buf.c_str() + buf.size() || errno == ERANGE)
        fail(errc::malformed_card,
             "line " + std::to_string(line_no) + ": " + what + " '" + buf + "' is not an integer");
    if (v <= 0)
        fail(errc::malformed_card,
             "line " + std::to_string(line_no) + ": " + what + " must be positive, got " + buf);
    return v;
}

double parse_coord(std::string_view field, int line_no) {
    std::string buf(field);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(buf.c_str(), &end);
    if (buf.empty() || end != buf.c_str() + buf.size())
        fail(errc::malformed_card,
             "line " + std::to_string(line_no) + ": coordinate '" + buf + "' is not a number");
    if (!std::isfinite(v))
        fail(errc::malformed_card,
             "line " + std::to_string(line_no) + ": coordinate '" + buf + "' is not finite");
    return v;
}

std::string format_coord(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%#.9g", v);
    return buf;
}

const char* issue_name(ValidationIssue::Kind k) {
    switch (k) {
        case ValidationIssue::Kind::empty_mesh: return "EmptyMesh";
        case ValidationIssue::Kind::duplicate_node_id: return "DuplicateNodeId";
        case ValidationIssue::Kind::duplicate_element_id: return "DuplicateElementId";
        case ValidationIssue::Kind::dangling_reference: return "DanglingReference";
        case ValidationIssue::Kind::degenerate_element: return "DegenerateElement";
        case ValidationIssue::Kind::orphan_node: return "OrphanNode";
    }
    return "?";
}

}  // namespace

Mesh parse_mesh(std::string_view text) {
    Mesh mesh;
    std::unordered_set<std::int64_t> node_ids, element_ids;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        const std::string_view body = trim(line);
        if (body.empty() || body.front() == '$') continue;

        const auto fields = split_fields(body);
        const std::string_view keyword = fields[0];

        if (keyword == "GRID") {
            if (fields.size() != 5)
                fail(errc::malformed_card, "line " + std::to_string(line_no) +
                                               ": GRID expects 4 fields, got " +
                                               std::to_string(fields.size() - 1));
            Node n;
            n.id = parse_id(fields[1], line_no, "node id");
            n.x = parse_coord(fields[2], line_no);
            n.y = parse_coord(fields[3], line_no);
            n.z = parse_coord(fields[4], line_no);
            if (!node_ids.insert(n.id).second)
                fail(errc::duplicate_id,
                     "line " + std::to_string(line_no) + ": node id " + std::to_string(n.id));
            mesh.nodes.push_back(n);
        } else if (keyword == "CQUAD4" || keyword == "CTRIA3") {
            const bool quad = keyword == "CQUAD4";
            const std::size_t want = quad ? 6 : 5;
            if (fields.size() != want)
                fail(errc::malformed_card, "line " + std::to_string(line_no) + ": " +
                                               std::string(keyword) + " expects " +
                                               std::to_string(want - 1) + " fields, got " +
                                               std::to_string(fields.size() - 1));
            Element e;
            e.kind = quad ? ElementKind::quad : ElementKind::tri;
            e.id = parse_id(fields[1], line_no, "element id");
            for (std::size_t i = 2; i < fields.size(); ++i)
                e.conn.push_back(parse_id(fields[i], line_no, "node reference"));
            if (!element_ids.insert(e.id).second)
                fail(errc::duplicate_id,
                     "line " + std::to_string(line_no) + ": element id " + std::to_string(e.id));
            mesh.elements.push_back(std::move(e));
        } else {
            fail(errc::unknown_card,
                 "line " + std::to_string(line_no) + ": '" + std::string(keyword) + "'");
        }
    }
    return mesh;
}

std::string write_mesh(const Mesh& mesh) {
    std::string out;
    out.reserve(mesh.nodes.size() * 48 + mesh.elements.size() * 32);
    for (const Node& n : mesh.nodes) {
        out += "GRID,";
        out += std::to_string(n.id);
        out += ',';
        out += format_coord(n.x);
        out += ',';
        out += format_coord(n.y);
        out += ',';
        out += format_coord(n.z);
        out += '\n';
    }
    for (const Element& e : mesh.elements) {
        out += e.kind == ElementKind::quad ? "CQUAD4," : "CTRIA3,";
        out += std::to_string(e.id);
        for (const std::int64_t n : e.conn) {
            out += ',';
            out += std::to_string(n);
        }
        out += '\n';
    }
    return out;
}

Mesh read_mesh_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(errc::missing_file, "cannot open mesh file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_mesh(buf.str());
}

void write_mesh_file(const Mesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(errc::io_failure, "cannot open " + path.string() + " for writing");
    const std::string text = write_mesh(mesh);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) fail(errc::io_failure, "short write to " + path.string());
}

bool ValidationReport::ok() const {
    for (const auto& issue : issues)
        if (issue.kind != ValidationIssue::Kind::orphan_node) return false;
    return true;
}

std::string ValidationReport::to_string() const {
    std::string out;
    for (const auto& issue : issues) {
        out += issue_name(issue.kind);
        out += '(';
        out += std::to_string(issue.id);
        out += "): ";
        out += issue.detail;
        out += '\n';
    }
    return out;
}

ValidationReport validate(const Mesh& mesh) {
    ValidationReport report;
    auto add = [&](ValidationIssue::Kind kind, std::int64_t id, std::string detail) {
        report.issues.push_back({kind, id, std::move(detail)});
    };

    if (mesh.nodes.empty()) add(ValidationIssue::Kind::empty_mesh, 0, "mesh has no nodes");

    std::unordered_map<std::int64_t, std::size_t> node_refs;
    node_refs.reserve(mesh.nodes.size());
    {
        std::unordered_set<std::int64_t> seen;
        for (const Node& n : mesh.nodes) {
            if (!seen.insert(n.id).second)
                add(ValidationIssue::Kind::duplicate_node_id, n.id, "node id repeats");
            node_refs.emplace(n.id, 0);
        }
    }
    {
        std::unordered_set<std::int64_t> seen;
        for (const Element& e : mesh.elements) {
            if (!seen.insert(e.id).second)
                add(ValidationIssue::Kind::duplicate_element_id, e.id, "element id repeats");
            std::unordered_set<std::int64_t> in_conn;
            for (const std::int64_t ref : e.conn) {
                auto it = node_refs.find(ref);
                if (it == node_refs.end())
                    add(ValidationIssue::Kind::dangling_reference, ref,
                        "element " + std::to_string(e.id) + " references missing node");
                else
                    ++it->second;
                if (!in_conn.insert(ref).second)
                    add(ValidationIssue::Kind::degenerate_element, e.id,
                        "node " + std::to_string(ref) + " repeats in connectivity");
            }
        }
    }
    if (!mesh.elements.empty()) {
        for (const Node& n : mesh.nodes) {
            if (node_refs[n.id] == 0)
                add(ValidationIssue::Kind::orphan_node, n.id, "node referenced by no element");
        }
    }
    return report;
}

const ManifestEntry& DatasetManifest::find(std::string_view name) const {
    for (const auto& e : entries)
        if (e.name == name) return e;
    fail(errc::missing_file, "part '" + std::string(name) + "' not in manifest");
}

DatasetManifest load_manifest(std::string_view text) {
    DatasetManifest manifest;
    int line_no = 0;
    bool saw_header = false;
    std::vector<bool> label_seen;

    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        const bool last = eol == text.size();
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (trim(line).empty()) {
            if (last) break;
            if (saw_header) fail(errc::malformed_row, "line " + std::to_string(line_no) + ": blank row");
            // fall through to header check for a leading blank line
        }
        if (!saw_header) {
            if (trim(line) != "path,label,name")
                fail(errc::malformed_row, "line " + std::to_string(line_no) +
                                              ": expected header 'path,label,name'");
            saw_header = true;
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 3)
            fail(errc::malformed_row, "line " + std::to_string(line_no) + ": expected 3 fields, got " +
                                          std::to_string(fields.size()));
        ManifestEntry entry;
        entry.path = std::string(fields[0]);
        if (entry.path.empty())
            fail(errc::malformed_row, "line " + std::to_string(line_no) + ": empty path");
        {
            std::string buf(fields[1]);
            char* end = nullptr;
            errno = 0;
            const long long v = std::strtoll(buf.c_str(), &end, 10);
            if (buf.empty() || end != buf.c_str() + buf.size() || errno == ERANGE || v < 0)
                fail(errc::malformed_row, "line " + std::to_string(line_no) + ": bad label '" + buf + "'");
            entry.label = static_cast<std::size_t>(v);
        }
        entry.name = std::string(fields[2]);
        if (entry.label >= label_seen.size()) label_seen.resize(entry.label + 1, false);
        label_seen[entry.label] = true;
        manifest.entries.push_back(std::move(entry));
    }
    if (!saw_header) fail(errc::malformed_row, "manifest is empty (header required)");

    for (std::size_t c = 0; c < label_seen.size(); ++c)
        if (!label_seen[c])
            fail(errc::non_contiguous_labels,
                 "label " + std::to_string(c) + " missing from 0.." + std::to_string(label_seen.size() - 1));
    manifest.num_classes = label_seen.size();
    return manifest;
}

DatasetManifest load_manifest_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(errc::missing_file, "cannot open manifest " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    DatasetManifest manifest = load_manifest(buf.str());
    manifest.base_dir = path.parent_path();
    for (const auto& e : manifest.entries) {
        std::error_code ec;
        if (!std::filesystem::exists(manifest.resolve(e), ec))
            fail(errc::missing_file, manifest.resolve(e).string());
    }
    return manifest;
}

std::string write_manifest(const DatasetManifest& manifest) {
    std::string out = "path,label,name\n";
    for (const auto& e : manifest.entries) {
        out += e.path;
        out += ',';
        out += std::to_string(e.label);
        out += ',';
        out += e.name;
        out += '\n';
    }
    return out;
}

}  // namespace partclass
