#include "unim/threed.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "unim/common.hpp"

namespace unim::threed {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

void fan_triangulate(const std::vector<int>& poly,
                     std::vector<std::array<int, 3>>& faces) {
    for (size_t i = 2; i < poly.size(); ++i)
        faces.push_back({poly[0], poly[i - 1], poly[i]});
}

Geometry load_obj(std::istream& in) {
    Geometry g;
    std::string line;
    while (std::getline(in, line)) {
        auto toks = split_ws(line);
        if (toks.empty()) continue;
        if (toks[0] == "v" && toks.size() >= 4) {
            g.vertices.push_back(
                {std::stod(toks[1]), std::stod(toks[2]), std::stod(toks[3])});
        } else if (toks[0] == "f" && toks.size() >= 4) {
            std::vector<int> poly;
            for (size_t i = 1; i < toks.size(); ++i) {
                // "f v", "f v/vt", "f v/vt/vn", "f v//vn" all start with the
                // vertex index; negative indices count from the end.
                int idx = std::stoi(toks[i].substr(0, toks[i].find('/')));
                if (idx < 0) idx = static_cast<int>(g.vertices.size()) + idx;
                else idx -= 1;
                poly.push_back(idx);
            }
            fan_triangulate(poly, g.faces);
        }
    }
    return g;
}

Geometry load_off(std::istream& in) {
    std::string header;
    in >> header;
    if (header != "OFF") throw IngestError("not an OFF file");
    size_t nv = 0, nf = 0, ne = 0;
    in >> nv >> nf >> ne;
    if (!in) throw IngestError("bad OFF counts line");
    Geometry g;
    g.vertices.resize(nv);
    for (size_t i = 0; i < nv; ++i)
        in >> g.vertices[i].x >> g.vertices[i].y >> g.vertices[i].z;
    for (size_t i = 0; i < nf; ++i) {
        int k = 0;
        in >> k;
        std::vector<int> poly(k);
        for (int j = 0; j < k; ++j) in >> poly[j];
        fan_triangulate(poly, g.faces);
    }
    if (!in) throw IngestError("truncated OFF file");
    return g;
}

Geometry load_ply(std::istream& in) {
    std::string line;
    std::getline(in, line);
    if (line.rfind("ply", 0) != 0) throw IngestError("not a PLY file");
    size_t nv = 0, nf = 0;
    int x_at = -1, y_at = -1, z_at = -1;
    int vertex_props = 0;
    bool in_vertex = false, ascii = false;
    std::vector<std::pair<std::string, size_t>> elements;  // order matters
    while (std::getline(in, line)) {
        auto toks = split_ws(line);
        if (toks.empty()) continue;
        if (toks[0] == "format") {
            ascii = toks.size() > 1 && toks[1] == "ascii";
        } else if (toks[0] == "element" && toks.size() >= 3) {
            elements.emplace_back(toks[1], std::stoul(toks[2]));
            in_vertex = toks[1] == "vertex";
            if (in_vertex) nv = std::stoul(toks[2]);
            if (toks[1] == "face") nf = std::stoul(toks[2]);
        } else if (toks[0] == "property" && in_vertex && toks[1] != "list") {
            const std::string& name = toks.back();
            if (name == "x") x_at = vertex_props;
            if (name == "y") y_at = vertex_props;
            if (name == "z") z_at = vertex_props;
            ++vertex_props;
        } else if (toks[0] == "end_header") {
            break;
        }
    }
    if (!ascii) throw IngestError("only ASCII PLY is supported");
    if (x_at < 0 || y_at < 0 || z_at < 0)
        throw IngestError("PLY vertex element lacks x/y/z properties");
    Geometry g;
    for (const auto& [name, count] : elements) {
        if (name == "vertex") {
            g.vertices.resize(nv);
            for (size_t i = 0; i < count; ++i) {
                std::getline(in, line);
                auto toks = split_ws(line);
                if (static_cast<int>(toks.size()) < vertex_props)
                    throw IngestError("short PLY vertex row");
                g.vertices[i] = {std::stod(toks[x_at]), std::stod(toks[y_at]),
                                 std::stod(toks[z_at])};
            }
        } else if (name == "face") {
            for (size_t i = 0; i < count; ++i) {
                std::getline(in, line);
                auto toks = split_ws(line);
                if (toks.empty()) throw IngestError("short PLY face row");
                int k = std::stoi(toks[0]);
                if (static_cast<int>(toks.size()) < k + 1)
                    throw IngestError("short PLY face row");
                std::vector<int> poly(k);
                for (int j = 0; j < k; ++j) poly[j] = std::stoi(toks[j + 1]);
                fan_triangulate(poly, g.faces);
            }
        } else {
            // Skip unknown element bodies line by line.
            for (size_t i = 0; i < count; ++i) std::getline(in, line);
        }
    }
    (void)nf;
    return g;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

Eigen::Vector3d to_eigen(const Vec3& v) { return {v.x, v.y, v.z}; }

// Deterministic stride subsample down to at most cap points.
std::vector<Eigen::Vector3d> gather_points(const Geometry& g, int cap) {
    std::vector<Eigen::Vector3d> pts;
    size_t n = g.vertices.size();
    size_t stride = n > static_cast<size_t>(cap) ? (n + cap - 1) / cap : 1;
    for (size_t i = 0; i < n; i += stride) pts.push_back(to_eigen(g.vertices[i]));
    return pts;
}

struct LocalStats {
    std::vector<Eigen::Vector3d> normals;
    std::vector<double> surface_variation;  // lambda3 / (l1+l2+l3)
    std::vector<double> mean_knn_dist;
};

// Brute-force kNN with local PCA. Sorting is index-stable, so results are
// deterministic regardless of thread count upstream.
LocalStats local_pca(const std::vector<Eigen::Vector3d>& pts, int k) {
    size_t n = pts.size();
    k = std::min<int>(k, static_cast<int>(n) - 1);
    LocalStats out;
    out.normals.resize(n);
    out.surface_variation.resize(n);
    out.mean_knn_dist.resize(n);
    std::vector<std::pair<double, size_t>> dists(n);
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j)
            dists[j] = {(pts[j] - pts[i]).squaredNorm(), j};
        std::partial_sort(dists.begin(), dists.begin() + k + 1, dists.end());
        Eigen::Vector3d mean = Eigen::Vector3d::Zero();
        for (int j = 1; j <= k; ++j) mean += pts[dists[j].second];
        mean /= k;
        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        double dist_sum = 0.0;
        for (int j = 1; j <= k; ++j) {
            Eigen::Vector3d d = pts[dists[j].second] - mean;
            cov += d * d.transpose();
            dist_sum += std::sqrt(dists[j].first);
        }
        cov /= k;
        out.mean_knn_dist[i] = dist_sum / k;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
        // Eigenvalues ascending: l3 = smallest.
        double l3 = std::max(0.0, es.eigenvalues()(0));
        double sum = std::max(1e-30, es.eigenvalues().cwiseMax(0.0).sum());
        out.surface_variation[i] = l3 / sum;
        out.normals[i] = es.eigenvectors().col(0);
    }
    return out;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double cv_of(const std::vector<double>& v) {
    double m = mean_of(v);
    if (m <= 0.0 || v.size() < 2) return 0.0;
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    var /= v.size();
    return std::sqrt(var) / m;
}

struct EdgeStats {
    double boundary_ratio = 0.0;
    double nonmanifold_ratio = 0.0;
    int components = 1;
};

EdgeStats edge_statistics(const Geometry& g) {
    std::map<std::pair<int, int>, int> edge_faces;
    for (const auto& f : g.faces) {
        for (int e = 0; e < 3; ++e) {
            int a = f[e], b = f[(e + 1) % 3];
            if (a > b) std::swap(a, b);
            edge_faces[{a, b}]++;
        }
    }
    EdgeStats out;
    if (edge_faces.empty()) return out;
    int boundary = 0, nonmanifold = 0;
    for (const auto& [edge, count] : edge_faces) {
        if (count == 1) ++boundary;
        if (count > 2) ++nonmanifold;
    }
    out.boundary_ratio = static_cast<double>(boundary) / edge_faces.size();
    out.nonmanifold_ratio = static_cast<double>(nonmanifold) / edge_faces.size();

    // Union-find over vertices connected by faces.
    std::vector<int> parent(g.vertices.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    for (const auto& f : g.faces) {
        parent[find(f[1])] = find(f[0]);
        parent[find(f[2])] = find(f[0]);
    }
    std::set<int> roots;
    std::set<int> used;
    for (const auto& f : g.faces)
        for (int v : f) used.insert(v);
    for (int v : used) roots.insert(find(v));
    out.components = std::max<int>(1, static_cast<int>(roots.size()));
    return out;
}

}  // namespace

Geometry load_geometry(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IngestError("cannot open geometry file: " + path);
    std::string ext;
    auto dot = path.find_last_of('.');
    if (dot != std::string::npos) {
        ext = path.substr(dot + 1);
        std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    }
    Geometry g;
    try {
        if (ext == "obj") g = load_obj(f);
        else if (ext == "off") g = load_off(f);
        else if (ext == "ply") g = load_ply(f);
        else throw IngestError("unsupported geometry format (want obj/off/ply): " + path);
    } catch (const std::invalid_argument&) {
        throw IngestError("malformed numeric field in geometry file: " + path);
    }
    for (const auto& face : g.faces) {
        for (int idx : face) {
            if (idx < 0 || static_cast<size_t>(idx) >= g.vertices.size()) {
                throw IngestError("face references vertex " + std::to_string(idx) +
                                  " outside the vertex table: " + path);
            }
        }
    }
    return g;
}

ThreeDQualityBreakdown threed_quality(const Geometry& geometry,
                                      const ThreeDQualityConfig& config) {
    bool mesh = geometry.is_mesh();
    if (geometry.vertices.size() < 64 && geometry.faces.size() < 32)
        throw IngestError(
            "geometry too small: need at least 64 points or 32 faces");

    auto pts = gather_points(geometry, config.max_points);
    // Degenerate if all points coincide.
    Eigen::Vector3d lo = pts.front(), hi = pts.front();
    for (const auto& p : pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    if ((hi - lo).norm() <= 1e-12)
        throw IngestError("degenerate geometry: all points coincident");

    ThreeDQualityBreakdown out;
    LocalStats fine = local_pca(pts, config.knn);
    LocalStats coarse = local_pca(pts, config.normal_knn_coarse);

    // Normal consistency: alignment with the fine-scale neighbors' normals,
    // sign-invariant because PCA normals have arbitrary orientation.
    {
        size_t n = pts.size();
        std::vector<std::pair<double, size_t>> dists(n);
        double acc = 0.0;
        size_t cnt = 0;
        int k = std::min<int>(8, static_cast<int>(n) - 1);
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < n; ++j)
                dists[j] = {(pts[j] - pts[i]).squaredNorm(), j};
            std::partial_sort(dists.begin(), dists.begin() + k + 1, dists.end());
            for (int j = 1; j <= k; ++j) {
                acc += std::fabs(fine.normals[i].dot(fine.normals[dists[j].second]));
                ++cnt;
            }
        }
        out.normal_consistency = cnt ? acc / cnt : 0.0;
    }

    out.surface_variation = mean_of(fine.surface_variation);
    // Surface sampling of a 2-manifold keeps the smallest eigenvalue near
    // zero; volumetric scatter pushes lambda3 toward the isotropic 1/3.
    out.intrinsic_dim_score = clamp01(1.0 - 3.0 * out.surface_variation);

    {
        double acc = 0.0;
        for (size_t i = 0; i < pts.size(); ++i)
            acc += std::fabs(fine.normals[i].dot(coarse.normals[i]));
        out.normal_stability = pts.empty() ? 0.0 : acc / pts.size();
    }

    // Topology
    if (mesh) {
        EdgeStats es = edge_statistics(geometry);
        out.boundary_edge_ratio = es.boundary_ratio;
        out.nonmanifold_edge_ratio = es.nonmanifold_ratio;
        out.connected_components = es.components;
        double t_closure = clamp01(1.0 - es.boundary_ratio);
        double t_manifold = clamp01(1.0 - es.nonmanifold_ratio);
        double t_components = 1.0 / es.components;
        out.topology = (t_closure + t_manifold + t_components) / 3.0;
    } else {
        out.connected_components = 1;
        out.topology = (out.intrinsic_dim_score + out.normal_consistency) / 2.0;
    }

    // Geometry: smoothness of the local surface plus two-scale normal
    // stability.
    double g_curvature = clamp01(1.0 - 3.0 * out.surface_variation);
    out.geometry = (g_curvature + clamp01(out.normal_stability)) / 2.0;

    // Sampling uniformity
    out.knn_distance_cv = cv_of(fine.mean_knn_dist);
    double s_uniform = clamp01(1.0 - out.knn_distance_cv);
    double dist_mean = mean_of(fine.mean_knn_dist);
    double dist_sd = dist_mean * out.knn_distance_cv;
    int outliers = 0;
    for (double d : fine.mean_knn_dist)
        if (d > dist_mean + 3.0 * dist_sd) ++outliers;
    out.outlier_fraction =
        pts.empty() ? 0.0 : static_cast<double>(outliers) / pts.size();
    double s_outlier = clamp01(1.0 - 10.0 * out.outlier_fraction);
    if (mesh) {
        std::vector<double> areas;
        areas.reserve(geometry.faces.size());
        for (const auto& f : geometry.faces) {
            Eigen::Vector3d a = to_eigen(geometry.vertices[f[0]]);
            Eigen::Vector3d b = to_eigen(geometry.vertices[f[1]]);
            Eigen::Vector3d c = to_eigen(geometry.vertices[f[2]]);
            areas.push_back(0.5 * (b - a).cross(c - a).norm());
        }
        out.face_area_cv = cv_of(areas);
        double s_area = clamp01(1.0 - 0.5 * out.face_area_cv);
        out.sampling = (s_uniform + s_outlier + s_area) / 3.0;
    } else {
        out.sampling = (s_uniform + s_outlier) / 2.0;
    }

    out.final_score = (out.topology + out.geometry + out.sampling) / 3.0;
    return out;
}

ThreeDQualityBreakdown threed_quality_file(const std::string& path,
                                           const ThreeDQualityConfig& config) {
    return threed_quality(load_geometry(path), config);
}

}  // namespace unim::threed
