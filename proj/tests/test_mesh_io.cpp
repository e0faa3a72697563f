#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <functional>

#include "partclass/error.hpp"
#include "partclass/mesh_io.hpp"
#include "partclass/rng.hpp"
#include "test_util.hpp"

using namespace partclass;

namespace {
std::string error_code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}
}  // namespace

TEST_CASE("parse: minimal single-element mesh") {
    const Mesh mesh = parse_mesh(
        "GRID,1,0.0,0.0,0.0\nGRID,2,1.0,0.0,0.0\nGRID,3,1.0,1.0,0.0\nGRID,4,0.0,1.0,0.0\n"
        "CQUAD4,1,1,2,3,4");
    REQUIRE(mesh.nodes.size() == 4);
    REQUIRE(mesh.elements.size() == 1);
    CHECK(mesh.nodes[1].x == 1.0);
    CHECK(mesh.elements[0].kind == ElementKind::quad);
    CHECK(mesh.elements[0].conn == std::vector<std::int64_t>{1, 2, 3, 4});
}

TEST_CASE("parse: comments, blank lines, CRLF, short float forms") {
    const Mesh mesh = parse_mesh("$ comment\nGRID,1,0.,0.,0.");
    CHECK(mesh.nodes.size() == 1);
    CHECK(mesh.elements.empty());

    const Mesh crlf = parse_mesh("GRID,1,1.5,2.5,3.5\r\n\r\n$ x\r\nCTRIA3,7,1,1,1\r\n");
    CHECK(crlf.nodes.size() == 1);
    CHECK(crlf.elements.size() == 1);
    CHECK(crlf.nodes[0].z == 3.5);
}

TEST_CASE("parse: typed errors with line numbers") {
    CHECK(error_code_of([] { parse_mesh("CQUAD4,1,1,2,3"); }) == "MalformedCard");
    CHECK(error_code_of([] { parse_mesh("GRID,1,0,0,0\nGRID,1,1,1,1"); }) == "DuplicateId");
    CHECK(error_code_of([] { parse_mesh("CBEAM,1,2,3"); }) == "UnknownCard");
    CHECK(error_code_of([] { parse_mesh("GRID,1,abc,0,0"); }) == "MalformedCard");
    CHECK(error_code_of([] { parse_mesh("GRID,-4,0,0,0"); }) == "MalformedCard");
    CHECK(error_code_of([] { parse_mesh("GRID,1,inf,0,0"); }) == "MalformedCard");
    CHECK(error_code_of([] { parse_mesh("CTRIA3,1,1,2"); }) == "MalformedCard");

    try {
        parse_mesh("GRID,1,0,0,0\nCQUAD4,1,1,2,3");
        FAIL("expected MalformedCard");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("write: canonical single-node form") {
    Mesh mesh;
    mesh.nodes.push_back({1, 0.0, 0.0, 0.0});
    CHECK(write_mesh(mesh) == "GRID,1,0.00000000,0.00000000,0.00000000\n");
}

TEST_CASE("write: canonical quad mesh has one card per line") {
    const Mesh mesh = parse_mesh(
        "GRID,1,0.0,0.0,0.0\nGRID,2,1.0,0.0,0.0\nGRID,3,1.0,1.0,0.0\nGRID,4,0.0,1.0,0.0\n"
        "CQUAD4,1,1,2,3,4");
    const std::string text = write_mesh(mesh);
    std::size_t lines = 0;
    for (const char c : text) lines += c == '\n';
    CHECK(lines == 5);
    CHECK(parse_mesh(text) == mesh);
}

TEST_CASE("round-trip: parse(write(parse(t))) equals parse(t), and is a fixed point") {
    nd::Rng rng(2024);
    for (int i = 0; i < 50; ++i) {
        const Mesh mesh = testutil::random_valid_mesh(rng);
        const Mesh once = parse_mesh(write_mesh(mesh));
        const Mesh twice = parse_mesh(write_mesh(once));
        CHECK(once == twice);
        // Connectivity and ids survive the first pass exactly.
        REQUIRE(once.nodes.size() == mesh.nodes.size());
        REQUIRE(once.elements.size() == mesh.elements.size());
        for (std::size_t n = 0; n < mesh.nodes.size(); ++n)
            CHECK(once.nodes[n].id == mesh.nodes[n].id);
        for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
            CHECK(once.elements[e].id == mesh.elements[e].id);
            CHECK(once.elements[e].conn == mesh.elements[e].conn);
        }
    }
}

TEST_CASE("parse is total over the grammar: fuzzing yields typed errors, never crashes") {
    nd::Rng rng(99);
    const std::string alphabet = "GRIDCQUAT3,0123456789.eE+- $\t";
    for (int iter = 0; iter < 2000; ++iter) {
        std::string text;
        const std::size_t len = rng.uniform_int(120);
        for (std::size_t i = 0; i < len; ++i) {
            if (rng.uniform_int(12) == 0)
                text += '\n';
            else
                text += alphabet[rng.uniform_int(alphabet.size())];
        }
        try {
            (void)parse_mesh(text);
        } catch (const Error&) {
            // typed domain error: fine
        }
    }
    CHECK(true);
}

TEST_CASE("validate: clean mesh, dangling reference, degenerate element, orphans") {
    const Mesh good = parse_mesh(
        "GRID,1,0,0,0\nGRID,2,1,0,0\nGRID,3,1,1,0\nGRID,4,0,1,0\nCQUAD4,1,1,2,3,4");
    CHECK(validate(good).empty());
    CHECK(validate(good).ok());

    const Mesh dangling = parse_mesh("GRID,1,0,0,0\nGRID,2,1,0,0\nGRID,3,1,1,0\nCQUAD4,1,1,2,3,99");
    const ValidationReport rep = validate(dangling);
    CHECK_FALSE(rep.ok());
    bool found = false;
    for (const auto& issue : rep.issues)
        found = found || (issue.kind == ValidationIssue::Kind::dangling_reference && issue.id == 99);
    CHECK(found);

    const Mesh degenerate = parse_mesh("GRID,1,0,0,0\nGRID,2,1,0,0\nCTRIA3,1,1,1,2");
    bool degen = false;
    for (const auto& issue : validate(degenerate).issues)
        degen = degen || issue.kind == ValidationIssue::Kind::degenerate_element;
    CHECK(degen);

    // Orphan nodes flagged but not fatal.
    const Mesh orphan = parse_mesh(
        "GRID,1,0,0,0\nGRID,2,1,0,0\nGRID,3,1,1,0\nGRID,9,5,5,5\nCTRIA3,1,1,2,3");
    const ValidationReport orep = validate(orphan);
    CHECK(orep.ok());
    CHECK_FALSE(orep.empty());

    Mesh empty;
    CHECK_FALSE(validate(empty).ok());
}

TEST_CASE("manifest: load, contiguity, boundaries") {
    const DatasetManifest m = load_manifest("path,label,name\na.bdf,0,P1\nb.bdf,1,P2\n");
    REQUIRE(m.entries.size() == 2);
    CHECK(m.num_classes == 2);
    CHECK(m.entries[0].path == "a.bdf");
    CHECK(m.entries[1].label == 1);
    CHECK(m.find("P2").path == "b.bdf");

    CHECK(error_code_of([] { load_manifest("path,label,name\na.bdf,0,P1\nb.bdf,2,P2\n"); }) ==
          "NonContiguousLabels");
    CHECK(error_code_of([] { load_manifest("path,label,name\na.bdf,zero,P1\n"); }) ==
          "MalformedRow");
    CHECK(error_code_of([] { load_manifest("nope\n"); }) == "MalformedRow");
    CHECK(error_code_of([] { load_manifest("path,label,name\na.bdf,0\n"); }) == "MalformedRow");

    const DatasetManifest empty = load_manifest("path,label,name\n");
    CHECK(empty.entries.empty());
    CHECK(empty.num_classes == 0);
}

TEST_CASE("manifest: file resolution flags missing meshes") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "partclass_manifest_test";
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "manifest.csv");
        f << "path,label,name\nghost.bdf,0,P1\n";
    }
    CHECK(error_code_of([&] { load_manifest_file(dir / "manifest.csv"); }) == "MissingFile");

    Mesh mesh;
    mesh.nodes.push_back({1, 0, 0, 0});
    write_mesh_file(mesh, dir / "ghost.bdf");
    const DatasetManifest m = load_manifest_file(dir / "manifest.csv");
    CHECK(m.entries.size() == 1);
    CHECK(read_mesh_file(m.resolve(m.entries[0])).nodes.size() == 1);
    fs::remove_all(dir);
}
