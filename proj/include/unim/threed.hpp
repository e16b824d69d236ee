#pragma once

#include <array>
#include <string>
#include <vector>

namespace unim::threed {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

struct Geometry {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;  // triangulated, 0-based

    bool is_mesh() const { return !faces.empty(); }
};

// ASCII OBJ / OFF / PLY loader. Polygon faces are fan-triangulated. Throws
// unim::IngestError on unparseable input.
Geometry load_geometry(const std::string& path);

struct ThreeDQualityConfig {
    int knn = 16;                 // neighborhood size for local PCA
    int max_points = 4096;        // deterministic stride subsample above this
    int normal_knn_coarse = 32;   // second scale for normal stability
};

struct ThreeDQualityBreakdown {
    double topology = 0.0;   // T
    double geometry = 0.0;   // G
    double sampling = 0.0;   // S
    double final_score = 0.0;  // (T + G + S) / 3

    // Raw statistics behind the sub-scores
    double boundary_edge_ratio = 0.0;
    double nonmanifold_edge_ratio = 0.0;
    int connected_components = 0;
    double intrinsic_dim_score = 0.0;
    double normal_consistency = 0.0;
    double surface_variation = 0.0;
    double normal_stability = 0.0;
    double knn_distance_cv = 0.0;
    double outlier_fraction = 0.0;
    double face_area_cv = 0.0;
};

// No-reference quality of a mesh or point cloud: topology (closure,
// manifoldness, components for meshes; intrinsic dimension and normal
// consistency for clouds), geometry (local-PCA surface variation and
// two-scale normal stability), and sampling uniformity (kNN-distance
// dispersion, outlier fraction, face-area variation). Requires at least 64
// points or 32 faces; throws unim::IngestError on degenerate input.
ThreeDQualityBreakdown threed_quality(const Geometry& geometry,
                                      const ThreeDQualityConfig& config = {});

ThreeDQualityBreakdown threed_quality_file(const std::string& path,
                                           const ThreeDQualityConfig& config = {});

}  // namespace unim::threed
