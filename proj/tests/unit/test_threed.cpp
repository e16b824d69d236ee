#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <string>

#include "unim/common.hpp"
#include "unim/threed.hpp"

using namespace unim;
using namespace unim::threed;

namespace {

std::string fixture(const std::string& name) {
    return "tests/fixtures/meshes/" + name;
}

std::string write_temp(const std::string& name, const std::string& body) {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "unim_threed_test";
    fs::create_directories(dir);
    std::string path = (dir / name).string();
    std::ofstream f(path);
    f << body;
    return path;
}

}  // namespace

TEST_CASE("loaders agree across formats") {
    auto off = load_geometry(fixture("cube_subdiv.off"));
    auto obj = load_geometry(fixture("cube_subdiv.obj"));
    CHECK(off.vertices.size() == 98);   // welded 4x4-per-face cube
    CHECK(off.faces.size() == 192);
    CHECK(obj.vertices.size() == off.vertices.size());
    CHECK(obj.faces.size() == off.faces.size());
    CHECK(off.is_mesh());

    auto cloud = load_geometry(fixture("sphere_cloud.ply"));
    CHECK(cloud.vertices.size() == 4096);
    CHECK(cloud.faces.empty());
    CHECK(!cloud.is_mesh());
}

TEST_CASE("polygon faces are fan-triangulated") {
    auto quad = load_geometry(write_temp("quad.off",
                                         "OFF\n4 1 0\n"
                                         "0 0 0\n1 0 0\n1 1 0\n0 1 0\n"
                                         "4 0 1 2 3\n"));
    CHECK(quad.vertices.size() == 4);
    CHECK(quad.faces.size() == 2);

    auto pent = load_geometry(write_temp(
        "pent.obj",
        "v 0 0 0\nv 1 0 0\nv 1.5 1 0\nv 0.5 1.8 0\nv -0.5 1 0\n"
        "f 1 2 3 4 5\n"));
    CHECK(pent.faces.size() == 3);
}

TEST_CASE("malformed geometry is rejected") {
    CHECK_THROWS_AS(load_geometry(fixture("nothere.off")), IngestError);
    CHECK_THROWS_AS(load_geometry(write_temp("junk.off", "not a mesh\n")),
                    IngestError);
    CHECK_THROWS_AS(
        load_geometry(write_temp("short.off", "OFF\n3 1 0\n0 0 0\n")),
        IngestError);
    CHECK_THROWS_AS(
        load_geometry(write_temp("oob.off",
                                 "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 9\n")),
        IngestError);
}

TEST_CASE("complexity floor throws on trivial shapes") {
    auto tetra = load_geometry(fixture("tetra.obj"));
    CHECK(tetra.vertices.size() == 4);
    CHECK_THROWS_AS(threed_quality(tetra), IngestError);
    CHECK_THROWS_AS(threed_quality_file(fixture("tetra.obj")), IngestError);
    // The subdivided cube clears the floor.
    CHECK_NOTHROW(threed_quality_file(fixture("cube_subdiv.off")));
}

TEST_CASE("closed manifold cube earns full topology") {
    auto b = threed_quality_file(fixture("cube_subdiv.off"));
    CHECK(b.topology >= 0.9);
    CHECK(b.boundary_edge_ratio == doctest::Approx(0.0));
    CHECK(b.nonmanifold_edge_ratio == doctest::Approx(0.0));
    CHECK(b.connected_components == 1);
    CHECK(b.final_score ==
          doctest::Approx((b.topology + b.geometry + b.sampling) / 3.0)
              .epsilon(1e-12));
    CHECK(b.final_score > 0.85);
}

TEST_CASE("opening the cube costs topology") {
    auto closed = threed_quality_file(fixture("cube_subdiv.off"));
    auto open = threed_quality_file(fixture("cube_open.off"));
    CHECK(open.boundary_edge_ratio > 0.0);
    CHECK(open.topology < closed.topology);
    CHECK(open.final_score < closed.final_score);
}

TEST_CASE("uniform sphere cloud scores high sampling") {
    auto b = threed_quality_file(fixture("sphere_cloud.ply"));
    CHECK(b.sampling >= 0.8);
    CHECK(b.final_score ==
          doctest::Approx((b.topology + b.geometry + b.sampling) / 3.0)
              .epsilon(1e-12));
    CHECK(b.outlier_fraction < 0.05);
}

TEST_CASE("teleported cluster costs sampling uniformity") {
    auto uniform = threed_quality_file(fixture("sphere_cloud.ply"));
    auto cluster = threed_quality_file(fixture("sphere_clustered.ply"));
    CHECK(cluster.sampling < uniform.sampling);
    CHECK(cluster.final_score < uniform.final_score);
}

TEST_CASE("scoring is deterministic") {
    auto a = threed_quality_file(fixture("sphere_clustered.ply"));
    auto b = threed_quality_file(fixture("sphere_clustered.ply"));
    CHECK(a.final_score == b.final_score);
    CHECK(a.sampling == b.sampling);
    CHECK(a.geometry == b.geometry);
}
