#pragma once

// Core geometric types for lobe registration: triangle surfaces, tetrahedral
// meshes, centerline trees, deformation control grids, and the discrete
// operators (normals, Laplacians, barycentric embedding) shared by the rest
// of the library. All coordinates are millimeters.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lungreg {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;

// Shortest round-trippable decimal form of a double (17 significant digits).
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline constexpr double kEmbedEps = 1e-6;   // inside-test tolerance [mm]
inline constexpr double kSnapTol = 0.1;     // max snap distance for marginal points [mm]
inline constexpr double kDegenerateArea = 1e-12;

struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BindingError : std::runtime_error {
    BindingError(const std::string& msg, int point_index_, double distance_)
        : std::runtime_error(msg), point_index(point_index_), distance(distance_) {}
    int point_index = -1;
    double distance = 0.0;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Triangle surface

struct TriangleSurface {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<Vec3> normals;  // per-vertex unit normals, see compute_vertex_normals
};

inline Vec3 triangle_cross(const TriangleSurface& s, const std::array<int, 3>& t) {
    return (s.vertices[t[1]] - s.vertices[t[0]]).cross(s.vertices[t[2]] - s.vertices[t[0]]);
}

inline double triangle_area(const TriangleSurface& s, const std::array<int, 3>& t) {
    return 0.5 * triangle_cross(s, t).norm();
}

// Area-weighted average of incident triangle normals, normalized to unit
// length. Summing unnormalized cross products weights each face by its area.
inline std::vector<Vec3> compute_vertex_normals(const TriangleSurface& s) {
    std::vector<Vec3> n(s.vertices.size(), Vec3::Zero());
    for (const auto& t : s.triangles) {
        Vec3 c = triangle_cross(s, t);
        n[t[0]] += c;
        n[t[1]] += c;
        n[t[2]] += c;
    }
    for (std::size_t i = 0; i < n.size(); ++i) {
        double len = n[i].norm();
        if (len < kDegenerateArea)
            throw GeometryError("degenerate geometry: zero-area umbrella at vertex " +
                                std::to_string(i));
        n[i] /= len;
    }
    return n;
}

inline void update_normals(TriangleSurface& s) { s.normals = compute_vertex_normals(s); }

inline double surface_signed_volume(const TriangleSurface& s) {
    double v = 0.0;
    for (const auto& t : s.triangles)
        v += s.vertices[t[0]].dot(s.vertices[t[1]].cross(s.vertices[t[2]])) / 6.0;
    return v;
}

inline std::vector<std::vector<int>> vertex_adjacency(const TriangleSurface& s) {
    std::vector<std::vector<int>> adj(s.vertices.size());
    auto link = [&](int a, int b) {
        if (std::find(adj[a].begin(), adj[a].end(), b) == adj[a].end()) adj[a].push_back(b);
    };
    for (const auto& t : s.triangles)
        for (int e = 0; e < 3; ++e) {
            link(t[e], t[(e + 1) % 3]);
            link(t[(e + 1) % 3], t[e]);
        }
    return adj;
}

// Validates index bounds, 2-manifoldness (every edge shared by exactly two
// triangles) and, for closed surfaces, outward orientation.
inline void validate_surface(const TriangleSurface& s, bool require_closed = true) {
    if (s.vertices.empty() || s.triangles.empty())
        throw GeometryError("invariant violated: surface is empty");
    const int nv = static_cast<int>(s.vertices.size());
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& t : s.triangles) {
        for (int idx : t)
            if (idx < 0 || idx >= nv)
                throw GeometryError("invariant violated: triangle index out of range");
        for (int e = 0; e < 3; ++e) {
            int a = t[e], b = t[(e + 1) % 3];
            edge_count[{std::min(a, b), std::max(a, b)}]++;
        }
    }
    if (require_closed) {
        for (const auto& [edge, count] : edge_count)
            if (count != 2)
                throw GeometryError(
                    "invariant violated: surface not closed/manifold (edge " +
                    std::to_string(edge.first) + "-" + std::to_string(edge.second) +
                    " shared by " + std::to_string(count) + " triangles)");
        if (surface_signed_volume(s) <= 0.0)
            throw GeometryError("invariant violated: closed surface not outward-oriented");
    }
    for (const auto& v : s.vertices)
        if (!v.allFinite())
            throw GeometryError("invariant violated: non-finite vertex coordinate");
}

// ---------------------------------------------------------------------------
// Edge-weighted one-ring Laplacian

// Per-directed-edge weights: nbr[i] lists (j, w_ij) over the one-ring of i.
struct EdgeWeights {
    std::vector<std::vector<std::pair<int, double>>> nbr;
};

// L(u_i) = sum_j w_ij (u_i - u_j)
inline std::vector<Vec3> discrete_laplacian(const std::vector<Vec3>& field,
                                            const EdgeWeights& w) {
    std::vector<Vec3> out(field.size(), Vec3::Zero());
    for (std::size_t i = 0; i < field.size(); ++i)
        for (const auto& [j, wij] : w.nbr[i]) out[i] += wij * (field[i] - field[j]);
    return out;
}

// Checked variant taking an explicit adjacency plus an undirected edge-weight
// table; a one-ring edge without a weight is a configuration error.
inline std::vector<Vec3> discrete_laplacian(
    const std::vector<Vec3>& field, const std::vector<std::vector<int>>& adjacency,
    const std::map<std::pair<int, int>, double>& weights) {
    std::vector<Vec3> out(field.size(), Vec3::Zero());
    for (std::size_t i = 0; i < field.size(); ++i) {
        for (int j : adjacency[i]) {
            auto key = std::make_pair(std::min<int>(i, j), std::max<int>(i, j));
            auto it = weights.find(key);
            if (it == weights.end())
                throw ConfigError("missing Laplacian weight for edge " + std::to_string(i) +
                                  "-" + std::to_string(j));
            out[i] += it->second * (field[i] - field[j]);
        }
    }
    return out;
}

inline EdgeWeights uniform_weights(const std::vector<std::vector<int>>& adjacency) {
    EdgeWeights w;
    w.nbr.resize(adjacency.size());
    for (std::size_t i = 0; i < adjacency.size(); ++i) {
        if (adjacency[i].empty()) continue;
        double wi = 1.0 / static_cast<double>(adjacency[i].size());
        for (int j : adjacency[i]) w.nbr[i].emplace_back(j, wi);
    }
    return w;
}

// w_ij = max(0, cot(a_ij) + cot(b_ij)) / (2 A_i) with A_i the mixed Voronoi
// area of vertex i. Negative cotangent sums are clamped at zero.
inline EdgeWeights cotangent_weights(const TriangleSurface& s) {
    const int nv = static_cast<int>(s.vertices.size());
    std::map<std::pair<int, int>, double> cot_sum;
    std::vector<double> area(nv, 0.0);

    for (const auto& t : s.triangles) {
        const Vec3& a = s.vertices[t[0]];
        const Vec3& b = s.vertices[t[1]];
        const Vec3& c = s.vertices[t[2]];
        double tri_area = 0.5 * (b - a).cross(c - a).norm();
        if (tri_area < kDegenerateArea)
            throw GeometryError("degenerate geometry: zero-area triangle");

        // cotangent at each corner
        double cot[3];
        for (int k = 0; k < 3; ++k) {
            const Vec3& p = s.vertices[t[k]];
            const Vec3& q = s.vertices[t[(k + 1) % 3]];
            const Vec3& r = s.vertices[t[(k + 2) % 3]];
            Vec3 e1 = q - p, e2 = r - p;
            cot[k] = e1.dot(e2) / e1.cross(e2).norm();
        }
        for (int k = 0; k < 3; ++k) {
            int i = t[(k + 1) % 3], j = t[(k + 2) % 3];  // edge opposite corner k
            auto key = std::make_pair(std::min(i, j), std::max(i, j));
            cot_sum[key] += cot[k];
        }
        // mixed Voronoi area (obtuse triangles fall back to area fractions)
        bool obtuse = cot[0] < 0 || cot[1] < 0 || cot[2] < 0;
        for (int k = 0; k < 3; ++k) {
            if (obtuse) {
                area[t[k]] += (cot[k] < 0) ? tri_area / 2.0 : tri_area / 4.0;
            } else {
                const Vec3& p = s.vertices[t[k]];
                double l1 = (s.vertices[t[(k + 1) % 3]] - p).squaredNorm();
                double l2 = (s.vertices[t[(k + 2) % 3]] - p).squaredNorm();
                area[t[k]] += (l1 * cot[(k + 2) % 3] + l2 * cot[(k + 1) % 3]) / 8.0;
            }
        }
    }

    auto adj = vertex_adjacency(s);
    EdgeWeights w;
    w.nbr.resize(nv);
    for (int i = 0; i < nv; ++i) {
        for (int j : adj[i]) {
            auto key = std::make_pair(std::min(i, j), std::max(i, j));
            double c = std::max(0.0, cot_sum.at(key));
            w.nbr[i].emplace_back(j, c / (2.0 * area[i]));
        }
    }
    return w;
}

// Rescales each vertex's weights to sum to 1, so L(u_i) = u_i - sum w_ij u_j
// vanishes when u is constant and stays small for smooth fields. Rows whose
// weights sum to zero (all cotangents clamped) are left untouched.
inline EdgeWeights normalize_weights(EdgeWeights w) {
    for (auto& row : w.nbr) {
        double sum = 0.0;
        for (const auto& [j, wij] : row) sum += wij;
        if (sum > 1e-14)
            for (auto& [j, wij] : row) wij /= sum;
    }
    return w;
}

// ---------------------------------------------------------------------------
// Tetrahedral mesh

struct TetrahedralMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 4>> tets;
};

inline double tet_signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    return (b - a).cross(c - a).dot(d - a) / 6.0;
}

inline double tet_signed_volume(const TetrahedralMesh& m, const std::array<int, 4>& t) {
    return tet_signed_volume(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]],
                             m.vertices[t[3]]);
}

// Boundary faces of a tet mesh: faces referenced by exactly one tetrahedron,
// keyed by sorted vertex triple.
inline std::map<std::array<int, 3>, int> face_incidence(const TetrahedralMesh& m) {
    static const int f[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
    std::map<std::array<int, 3>, int> count;
    for (const auto& t : m.tets)
        for (const auto& fi : f) {
            std::array<int, 3> key = {t[fi[0]], t[fi[1]], t[fi[2]]};
            std::sort(key.begin(), key.end());
            count[key]++;
        }
    return count;
}

// Lobe tet meshes share their boundary vertices with the lobe surface: tet
// vertices [0, surface.vertices.size()) are the surface vertices, and the
// boundary faces are exactly the surface triangles.
inline void validate_tet_mesh(const TetrahedralMesh& m, const TriangleSurface& surface) {
    if (m.vertices.empty() || m.tets.empty())
        throw GeometryError("invariant violated: tet mesh is empty");
    const int nv = static_cast<int>(m.vertices.size());
    for (const auto& t : m.tets) {
        for (int idx : t)
            if (idx < 0 || idx >= nv)
                throw GeometryError("invariant violated: tet index out of range");
        if (tet_signed_volume(m, t) <= 0.0)
            throw GeometryError("invariant violated: non-positive tetrahedron volume");
    }
    if (m.vertices.size() < surface.vertices.size())
        throw GeometryError("invariant violated: tet mesh missing surface vertices");
    for (std::size_t i = 0; i < surface.vertices.size(); ++i)
        if (m.vertices[i] != surface.vertices[i])
            throw GeometryError(
                "invariant violated: tet mesh vertices do not start with surface vertices");

    std::map<std::array<int, 3>, int> surf_faces;
    for (const auto& t : surface.triangles) {
        std::array<int, 3> key = {t[0], t[1], t[2]};
        std::sort(key.begin(), key.end());
        surf_faces[key]++;
    }
    for (const auto& [key, count] : face_incidence(m)) {
        if (count == 1) {
            if (!surf_faces.count(key))
                throw GeometryError(
                    "invariant violated: tet mesh boundary face not on surface");
            surf_faces.erase(key);
        } else if (count != 2) {
            throw GeometryError("invariant violated: tet face shared by >2 tets");
        }
    }
    if (!surf_faces.empty())
        throw GeometryError("invariant violated: surface triangle not on tet boundary");
}

inline std::vector<std::vector<int>> tet_vertex_adjacency(const TetrahedralMesh& m) {
    std::vector<std::vector<int>> adj(m.vertices.size());
    auto link = [&](int a, int b) {
        if (std::find(adj[a].begin(), adj[a].end(), b) == adj[a].end()) adj[a].push_back(b);
    };
    for (const auto& t : m.tets)
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j) {
                link(t[i], t[j]);
                link(t[j], t[i]);
            }
    return adj;
}

// ---------------------------------------------------------------------------
// Centerline tree

enum class NodeKind { Root, Junction, Internal, Terminal };

struct CenterlineNode {
    Vec3 position;
    NodeKind kind = NodeKind::Internal;
    int parent = -1;  // -1 for the root (pulmonary hilum)
};

struct CenterlineTree {
    std::vector<CenterlineNode> nodes;

    int root() const {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].parent < 0) return static_cast<int>(i);
        return -1;
    }

    std::vector<std::vector<int>> children() const {
        std::vector<std::vector<int>> ch(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].parent >= 0) ch[nodes[i].parent].push_back(static_cast<int>(i));
        return ch;
    }

    std::vector<int> terminals() const {
        auto ch = children();
        std::vector<int> out;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].parent >= 0 && ch[i].empty()) out.push_back(static_cast<int>(i));
        return out;
    }

    // ordered node path root -> node
    std::vector<int> path_from_root(int node) const {
        std::vector<int> p;
        for (int cur = node; cur >= 0; cur = nodes[cur].parent) p.push_back(cur);
        std::reverse(p.begin(), p.end());
        return p;
    }
};

inline void validate_centerline(const CenterlineTree& c) {
    if (c.nodes.empty()) throw GeometryError("invariant violated: empty centerline");
    int roots = 0;
    for (const auto& n : c.nodes) {
        if (n.parent < 0) roots++;
        if (n.parent >= static_cast<int>(c.nodes.size()))
            throw GeometryError("invariant violated: centerline parent out of range");
        if (!n.position.allFinite())
            throw GeometryError("invariant violated: non-finite centerline node");
    }
    if (roots != 1)
        throw GeometryError("invariant violated: centerline must have exactly one root, has " +
                            std::to_string(roots));
    // reachability (also rejects cycles)
    for (std::size_t i = 0; i < c.nodes.size(); ++i) {
        int cur = static_cast<int>(i);
        std::size_t hops = 0;
        while (c.nodes[cur].parent >= 0) {
            cur = c.nodes[cur].parent;
            if (++hops > c.nodes.size())
                throw GeometryError("invariant violated: centerline parent links form a cycle");
        }
    }
    auto ch = c.children();
    for (std::size_t i = 0; i < c.nodes.size(); ++i) {
        const auto& n = c.nodes[i];
        if (n.kind == NodeKind::Terminal && !ch[i].empty())
            throw GeometryError("invariant violated: terminal node has children");
        if (n.kind == NodeKind::Junction && ch[i].size() < 2)
            throw GeometryError("invariant violated: junction node has < 2 children");
        if ((n.kind == NodeKind::Root) != (n.parent < 0))
            throw GeometryError("invariant violated: root kind does not match parent link");
    }
}

// ---------------------------------------------------------------------------
// Lobe model

enum class LobeLabel { Upper, Lower };

struct LobeModel {
    TriangleSurface surface;
    TetrahedralMesh tet_mesh;
    CenterlineTree centerline;
    LobeLabel label = LobeLabel::Upper;

    Vec3 hilum() const { return centerline.nodes[centerline.root()].position; }
};

// ---------------------------------------------------------------------------
// Barycentric embedding

struct BarycentricBinding {
    int element = -1;
    Vec4 weights = Vec4::Zero();
};

inline Vec4 barycentric_in_tet(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                               const Vec3& d) {
    Eigen::Matrix3d m;
    m.col(0) = b - a;
    m.col(1) = c - a;
    m.col(2) = d - a;
    Vec3 w = m.colPivHouseholderQr().solve(p - a);
    return Vec4(1.0 - w.sum(), w[0], w[1], w[2]);
}

// Closest point on a triangle (Ericson, Real-Time Collision Detection).
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                      const Vec3& c) {
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0 && d2 <= 0) return a;
    Vec3 bp = p - b;
    double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3) return b;
    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;
    Vec3 cp = p - c;
    double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6) return c;
    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;
    double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
    double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

inline Vec3 closest_point_on_tet_boundary(const Vec3& p, const Vec3& a, const Vec3& b,
                                          const Vec3& c, const Vec3& d) {
    const Vec3* v[4] = {&a, &b, &c, &d};
    static const int f[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
    Vec3 best = a;
    double best_d = std::numeric_limits<double>::max();
    for (const auto& fi : f) {
        Vec3 q = closest_point_on_triangle(p, *v[fi[0]], *v[fi[1]], *v[fi[2]]);
        double dd = (p - q).squaredNorm();
        if (dd < best_d) {
            best_d = dd;
            best = q;
        }
    }
    return best;
}

namespace detail {

// Bind one point against an explicit candidate tet list; returns binding or
// the distance to the nearest candidate element for diagnostics.
inline std::optional<BarycentricBinding> try_bind(
    const Vec3& p, const std::vector<Vec3>& verts,
    const std::vector<std::array<int, 4>>& tets, const std::vector<int>& candidates,
    double* nearest_dist, int* nearest_tet, Vec3* nearest_point) {
    for (int ti : candidates) {
        const auto& t = tets[ti];
        Vec4 w = barycentric_in_tet(p, verts[t[0]], verts[t[1]], verts[t[2]], verts[t[3]]);
        if (w.minCoeff() >= -kEmbedEps && w.maxCoeff() <= 1.0 + kEmbedEps)
            return BarycentricBinding{ti, w};
    }
    for (int ti : candidates) {
        const auto& t = tets[ti];
        Vec3 q = closest_point_on_tet_boundary(p, verts[t[0]], verts[t[1]], verts[t[2]],
                                               verts[t[3]]);
        double dd = (p - q).norm();
        if (dd < *nearest_dist) {
            *nearest_dist = dd;
            *nearest_tet = ti;
            *nearest_point = q;
        }
    }
    return std::nullopt;
}

}  // namespace detail

// Binds each point to its containing tetrahedron. Points marginally outside
// (within kSnapTol) are snapped to the nearest element boundary; farther
// points raise a BindingError carrying the point index and distance.
inline std::vector<BarycentricBinding> bind_barycentric(
    const std::vector<Vec3>& points, const std::vector<Vec3>& verts,
    const std::vector<std::array<int, 4>>& tets) {
    std::vector<int> all(tets.size());
    for (std::size_t i = 0; i < tets.size(); ++i) all[i] = static_cast<int>(i);

    std::vector<BarycentricBinding> out;
    out.reserve(points.size());
    for (std::size_t pi = 0; pi < points.size(); ++pi) {
        double nearest = std::numeric_limits<double>::max();
        int nearest_tet = -1;
        Vec3 nearest_point = Vec3::Zero();
        auto b = detail::try_bind(points[pi], verts, tets, all, &nearest, &nearest_tet,
                                  &nearest_point);
        if (!b) {
            if (nearest <= kSnapTol) {
                const auto& t = tets[nearest_tet];
                Vec4 w = barycentric_in_tet(nearest_point, verts[t[0]], verts[t[1]],
                                            verts[t[2]], verts[t[3]]);
                b = BarycentricBinding{nearest_tet, w};
            } else {
                throw BindingError("point " + std::to_string(pi) +
                                       " outside all elements (distance " +
                                       std::to_string(nearest) + " mm)",
                                   static_cast<int>(pi), nearest);
            }
        }
        out.push_back(*b);
    }
    return out;
}

inline std::vector<BarycentricBinding> bind_barycentric(const std::vector<Vec3>& points,
                                                        const TetrahedralMesh& mesh) {
    return bind_barycentric(points, mesh.vertices, mesh.tets);
}

inline std::vector<Vec3> apply_deformation(const std::vector<BarycentricBinding>& bindings,
                                           const std::vector<std::array<int, 4>>& tets,
                                           const std::vector<Vec3>& deformed_verts) {
    std::vector<Vec3> out;
    out.reserve(bindings.size());
    for (const auto& b : bindings) {
        const auto& t = tets[b.element];
        out.push_back(b.weights[0] * deformed_verts[t[0]] + b.weights[1] * deformed_verts[t[1]] +
                      b.weights[2] * deformed_verts[t[2]] + b.weights[3] * deformed_verts[t[3]]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Deformation control grid

struct DeformationGrid {
    int nx = 0, ny = 0, nz = 0;  // cells per axis
    Vec3 origin = Vec3::Zero();
    Vec3 cell = Vec3::Zero();  // cell edge lengths
    std::vector<Vec3> rest_vertices;
    std::vector<Vec3> displacements;
    std::vector<std::array<int, 4>> tets;

    int vertex_index(int i, int j, int k) const {
        return (k * (ny + 1) + j) * (nx + 1) + i;
    }

    std::vector<Vec3> deformed_vertices() const {
        std::vector<Vec3> out(rest_vertices.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = rest_vertices[i] + displacements[i];
        return out;
    }
};

inline std::pair<Vec3, Vec3> bounding_box(const std::vector<Vec3>& pts) {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
    Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());
    for (const auto& p : pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return {lo, hi};
}

inline std::vector<Vec3> model_points(const LobeModel& m) {
    std::vector<Vec3> pts = m.surface.vertices;
    for (const auto& n : m.centerline.nodes) pts.push_back(n.position);
    return pts;
}

// Axis-aligned cuboid lattice around the points, each cell split into the six
// Kuhn tetrahedra along the main diagonal. The split pattern is identical in
// every cell, so shared faces between adjacent cells conform.
inline DeformationGrid build_deformation_grid(const std::vector<Vec3>& pts, int nx, int ny,
                                              int nz, double margin) {
    if (pts.empty()) throw GeometryError("degenerate geometry: no points for grid");
    if (nx < 1 || ny < 1 || nz < 1) throw ConfigError("grid cells must be >= 1 per axis");
    auto [lo, hi] = bounding_box(pts);
    lo -= Vec3::Constant(margin);
    hi += Vec3::Constant(margin);
    Vec3 extent = hi - lo;
    if (extent.minCoeff() <= 0.0)
        throw GeometryError("degenerate geometry: zero-extent bounding box");

    DeformationGrid g;
    g.nx = nx;
    g.ny = ny;
    g.nz = nz;
    g.origin = lo;
    g.cell = Vec3(extent.x() / nx, extent.y() / ny, extent.z() / nz);
    g.rest_vertices.reserve((nx + 1) * (ny + 1) * (nz + 1));
    for (int k = 0; k <= nz; ++k)
        for (int j = 0; j <= ny; ++j)
            for (int i = 0; i <= nx; ++i)
                g.rest_vertices.push_back(lo + Vec3(i * g.cell.x(), j * g.cell.y(),
                                                    k * g.cell.z()));
    g.displacements.assign(g.rest_vertices.size(), Vec3::Zero());

    // Kuhn subdivision: walk from the min corner to the max corner along each
    // axis permutation; all six tets share the cell's main diagonal.
    static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                    {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                for (const auto& perm : perms) {
                    int c[3] = {i, j, k};
                    std::array<int, 4> tet;
                    tet[0] = g.vertex_index(c[0], c[1], c[2]);
                    for (int step = 0; step < 3; ++step) {
                        c[perm[step]] += 1;
                        tet[step + 1] = g.vertex_index(c[0], c[1], c[2]);
                    }
                    const auto& v = g.rest_vertices;
                    if (tet_signed_volume(v[tet[0]], v[tet[1]], v[tet[2]], v[tet[3]]) < 0.0)
                        std::swap(tet[2], tet[3]);
                    g.tets.push_back(tet);
                }
            }
    return g;
}

inline DeformationGrid build_deformation_grid(const LobeModel& model, int nx, int ny, int nz,
                                              double margin) {
    return build_deformation_grid(model_points(model), nx, ny, nz, margin);
}

// Cell-local candidate search, falling back to a global scan plus snapping.
inline std::vector<BarycentricBinding> bind_barycentric(const std::vector<Vec3>& points,
                                                        const DeformationGrid& g) {
    std::vector<BarycentricBinding> out;
    out.reserve(points.size());
    for (std::size_t pi = 0; pi < points.size(); ++pi) {
        const Vec3& p = points[pi];
        int ci = std::clamp(static_cast<int>((p.x() - g.origin.x()) / g.cell.x()), 0, g.nx - 1);
        int cj = std::clamp(static_cast<int>((p.y() - g.origin.y()) / g.cell.y()), 0, g.ny - 1);
        int ck = std::clamp(static_cast<int>((p.z() - g.origin.z()) / g.cell.z()), 0, g.nz - 1);
        int cell_id = (ck * g.ny + cj) * g.nx + ci;
        std::vector<int> candidates;
        for (int t = 0; t < 6; ++t) candidates.push_back(cell_id * 6 + t);
        double nearest = std::numeric_limits<double>::max();
        int nearest_tet = -1;
        Vec3 nearest_point = Vec3::Zero();
        auto b = detail::try_bind(p, g.rest_vertices, g.tets, candidates, &nearest,
                                  &nearest_tet, &nearest_point);
        if (!b) {
            auto full = bind_barycentric({p}, g.rest_vertices, g.tets);
            b = full[0];
        }
        out.push_back(*b);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ray casting (used for branch sampling and phantom construction)

struct RayHit {
    double t = 0.0;  // ray parameter, p = origin + t * dir
    int triangle = -1;
    Vec3 bary = Vec3::Zero();
    Vec3 point = Vec3::Zero();
};

// First intersection of ray origin + t*dir with the surface at t > t_min.
inline std::optional<RayHit> ray_surface_intersection(const Vec3& origin, const Vec3& dir,
                                                      const TriangleSurface& s,
                                                      double t_min = 0.0) {
    std::optional<RayHit> best;
    for (std::size_t ti = 0; ti < s.triangles.size(); ++ti) {
        const auto& t = s.triangles[ti];
        const Vec3& a = s.vertices[t[0]];
        Vec3 e1 = s.vertices[t[1]] - a;
        Vec3 e2 = s.vertices[t[2]] - a;
        Vec3 h = dir.cross(e2);
        double det = e1.dot(h);
        if (std::abs(det) < 1e-14) continue;
        double inv = 1.0 / det;
        Vec3 sv = origin - a;
        double u = sv.dot(h) * inv;
        if (u < -1e-12 || u > 1.0 + 1e-12) continue;
        Vec3 q = sv.cross(e1);
        double v = dir.dot(q) * inv;
        if (v < -1e-12 || u + v > 1.0 + 1e-12) continue;
        double tt = e2.dot(q) * inv;
        if (tt <= t_min) continue;
        if (!best || tt < best->t) {
            RayHit hit;
            hit.t = tt;
            hit.triangle = static_cast<int>(ti);
            hit.bary = Vec3(1.0 - u - v, u, v);
            hit.point = origin + tt * dir;
            best = hit;
        }
    }
    return best;
}

// Full lobe validation: all per-type invariants plus centerline embedding in
// the tet mesh (marginally-outside nodes within the snap tolerance accepted).
inline void validate_lobe(const LobeModel& m) {
    validate_surface(m.surface);
    validate_tet_mesh(m.tet_mesh, m.surface);
    validate_centerline(m.centerline);
    std::vector<Vec3> nodes;
    for (const auto& n : m.centerline.nodes) nodes.push_back(n.position);
    bind_barycentric(nodes, m.tet_mesh);  // throws BindingError if not embeddable
}

}  // namespace lungreg
