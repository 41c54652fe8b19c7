#pragma once

// Deterministic lobe phantom generator: ellipsoidal closed surfaces with a
// tetrahedralized interior and a bifurcating bronchial centerline, plus
// ground-truth deflation deformations (two-slope radial contraction about the
// hilum composed with a rigid rotation), terminal pruning and surface noise.
// Every generated quantity is reproducible from the seed.

#include "lungreg/geometry.hpp"
#include "lungreg/metrics.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace lungreg {

struct PhantomSpec {
    std::uint64_t seed = 0;
    Vec3 half_axes = Vec3(50.0, 42.0, 36.0);  // mm
    int target_triangles = 500;
    int branch_depth = 6;   // binary tree depth, 2^depth terminals
    int fan_out = 2;
    double bronchus_strain = 0.292;    // deflated-referenced Cauchy strain
    double parenchyma_strain = 0.395;
    Vec3 rotation_axis = Vec3(0.0, 0.0, 1.0);
    double rotation_angle_deg = 0.0;   // rigid rotation about the hilum
    double prune_fraction = 0.0;       // fraction of target terminals removed
    double noise_amplitude = 0.0;      // surface noise along normals [mm]
    int landmark_count = 12;           // per region (surface / bronchus)

    void validate() const {
        if (bronchus_strain <= -1.0 || parenchyma_strain <= -1.0)
            throw ConfigError("phantom spec: strains must be > -1");
        if (prune_fraction < 0.0 || prune_fraction >= 1.0)
            throw ConfigError("phantom spec: prune fraction must be in [0,1)");
        if (branch_depth < 1 || fan_out < 2)
            throw ConfigError("phantom spec: need branch_depth >= 1 and fan_out >= 2");
        if (half_axes.minCoeff() <= 0.0)
            throw ConfigError("phantom spec: half axes must be positive");
    }
};

struct PhantomCase {
    LobeModel inflated;
    LobeModel deflated;  // ground-truth deformation + noise, centerline pruned
    // ground-truth correspondence (pre-noise, unpruned): deformed positions
    // indexed like the inflated model
    std::vector<Vec3> true_surface;
    std::vector<Vec3> true_tet;
    std::vector<Vec3> true_centerline;
    std::vector<Landmark> surface_landmarks;
    std::vector<Landmark> bronchus_landmarks;
    double true_bronchus_strain = 0.0;
    double true_parenchyma_strain = 0.0;
    double region_boundary_radius = 0.0;  // terminal radius from the hilum [mm]
    Vec3 hilum = Vec3::Zero();

    // noise-free, unpruned deformed model sharing the inflated topology
    LobeModel true_model() const {
        LobeModel m = inflated;
        m.surface.vertices = true_surface;
        update_normals(m.surface);
        m.tet_mesh.vertices = true_tet;
        for (std::size_t i = 0; i < true_centerline.size(); ++i)
            m.centerline.nodes[i].position = true_centerline[i];
        return m;
    }
};

namespace detail {

// UV-sphere stack/sector counts hitting the requested triangle budget:
// triangles = 2 * sectors * (stacks - 1).
inline std::pair<int, int> sphere_resolution(int target_triangles) {
    int stacks = std::max(4, static_cast<int>(std::lround(std::sqrt(target_triangles / 5.0))));
    int sectors = std::max(6, static_cast<int>(std::lround(target_triangles / (2.0 * (stacks - 1)))));
    return {stacks, sectors};
}

}  // namespace detail

// Closed ellipsoid surface from a UV sphere with poles on the x axis.
inline TriangleSurface make_ellipsoid_surface(const Vec3& half_axes, int target_triangles) {
    auto [stacks, sectors] = detail::sphere_resolution(target_triangles);
    TriangleSurface s;
    // poles at -x and +x
    s.vertices.push_back(Vec3(-half_axes.x(), 0.0, 0.0));
    for (int r = 1; r < stacks; ++r) {
        double phi = std::numbers::pi * r / stacks;  // from -x pole
        double x = -std::cos(phi);
        double rad = std::sin(phi);
        for (int q = 0; q < sectors; ++q) {
            double theta = 2.0 * std::numbers::pi * q / sectors;
            Vec3 unit(x, rad * std::cos(theta), rad * std::sin(theta));
            s.vertices.push_back(unit.cwiseProduct(half_axes));
        }
    }
    s.vertices.push_back(Vec3(half_axes.x(), 0.0, 0.0));
    const int last = static_cast<int>(s.vertices.size()) - 1;
    auto ring = [&](int r, int q) { return 1 + (r - 1) * sectors + (q % sectors); };

    for (int q = 0; q < sectors; ++q)
        s.triangles.push_back({0, ring(1, q + 1), ring(1, q)});
    for (int r = 1; r < stacks - 1; ++r)
        for (int q = 0; q < sectors; ++q) {
            int a = ring(r, q), b = ring(r, q + 1), c = ring(r + 1, q), d = ring(r + 1, q + 1);
            s.triangles.push_back({a, b, d});
            s.triangles.push_back({a, d, c});
        }
    for (int q = 0; q < sectors; ++q)
        s.triangles.push_back({last, ring(stacks - 1, q), ring(stacks - 1, q + 1)});

    if (surface_signed_volume(s) < 0.0)
        for (auto& t : s.triangles) std::swap(t[1], t[2]);
    update_normals(s);
    return s;
}

// Star-shaped tetrahedralization: one cone tet per surface triangle apexed at
// the centroid, then 1-to-4 splits of the largest tets until the count lands
// in [650, 750]. Splitting inserts interior Steiner points only, so the
// boundary stays identical to the surface.
inline TetrahedralMesh tetrahedralize(const TriangleSurface& surface) {
    TetrahedralMesh m;
    m.vertices = surface.vertices;
    Vec3 centroid = Vec3::Zero();
    for (const auto& v : surface.vertices) centroid += v;
    centroid /= static_cast<double>(surface.vertices.size());
    int apex = static_cast<int>(m.vertices.size());
    m.vertices.push_back(centroid);
    for (const auto& t : surface.triangles) {
        std::array<int, 4> tet = {t[0], t[2], t[1], apex};
        if (tet_signed_volume(m, tet) < 0.0) std::swap(tet[1], tet[2]);
        m.tets.push_back(tet);
    }

    const int target_lo = 650, target_hi = 750;
    int want_splits = 0;
    if (static_cast<int>(m.tets.size()) < target_lo)
        want_splits = ((target_lo + target_hi) / 2 - static_cast<int>(m.tets.size())) / 3;
    for (int s = 0; s < want_splits; ++s) {
        // split the largest tet; deterministic (volume then index order)
        std::size_t best = 0;
        double best_vol = -1.0;
        for (std::size_t i = 0; i < m.tets.size(); ++i) {
            double v = tet_signed_volume(m, m.tets[i]);
            if (v > best_vol) {
                best_vol = v;
                best = i;
            }
        }
        auto tet = m.tets[best];
        Vec3 c = (m.vertices[tet[0]] + m.vertices[tet[1]] + m.vertices[tet[2]] +
                  m.vertices[tet[3]]) /
                 4.0;
        int ci = static_cast<int>(m.vertices.size());
        m.vertices.push_back(c);
        m.tets.erase(m.tets.begin() + best);
        static const int faces[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
        for (const auto& f : faces) {
            std::array<int, 4> nt = {tet[f[0]], tet[f[1]], tet[f[2]], ci};
            if (tet_signed_volume(m, nt) < 0.0) std::swap(nt[1], nt[2]);
            m.tets.push_back(nt);
        }
    }
    return m;
}

// Recursive bifurcating centerline grown from a hilum near the -x pole. Nodes
// at tree level l sit at radius (l / depth) * terminal_radius from the hilum
// along their branch direction, so all terminals share one radius.
inline CenterlineTree make_centerline(const TriangleSurface& surface, const Vec3& hilum,
                                      int depth, int fan_out, std::mt19937_64& rng,
                                      double* terminal_radius_out) {
    // directions: cone around +x, deterministically jittered
    std::uniform_real_distribution<double> jitter(-0.08, 0.08);

    struct Branch {
        int parent;
        Vec3 dir;
        int level;
    };
    CenterlineTree tree;
    tree.nodes.push_back({hilum, NodeKind::Root, -1});

    // find the usable radius: min surface-exit distance over the direction fan
    // is established after directions are drawn, so draw the full direction
    // tree first.
    std::vector<Branch> branches;
    std::vector<int> frontier;  // indices into branches of the previous level
    branches.push_back({-1, Vec3(1, 0, 0), 0});
    frontier.push_back(0);
    for (int level = 1; level <= depth; ++level) {
        std::vector<int> next;
        for (int bi : frontier) {
            for (int cidx = 0; cidx < fan_out; ++cidx) {
                double spread = 0.55 / level;  // narrowing fan keeps terminals inside
                double az = 2.0 * std::numbers::pi * (cidx + 0.5) / fan_out +
                            (level * 0.7) + jitter(rng);
                Vec3 axis1 = branches[bi].dir.unitOrthogonal();
                Vec3 axis2 = branches[bi].dir.cross(axis1);
                Vec3 dir = (branches[bi].dir +
                            std::tan(spread + jitter(rng) * 0.3) *
                                (std::cos(az) * axis1 + std::sin(az) * axis2))
                               .normalized();
                branches.push_back({bi, dir, level});
                next.push_back(static_cast<int>(branches.size()) - 1);
            }
        }
        frontier = next;
    }

    double min_exit = std::numeric_limits<double>::max();
    for (const auto& b : branches) {
        if (b.level == 0) continue;
        auto hit = ray_surface_intersection(hilum, b.dir, surface, 0.0);
        if (!hit) throw ConfigError("phantom spec: branch direction misses the surface");
        min_exit = std::min(min_exit, hit->t);
    }
    double terminal_radius = 0.62 * min_exit;
    if (terminal_radius_out) *terminal_radius_out = terminal_radius;

    std::vector<int> node_of_branch(branches.size(), -1);
    node_of_branch[0] = 0;
    for (std::size_t bi = 1; bi < branches.size(); ++bi) {
        const auto& b = branches[bi];
        double radius = terminal_radius * b.level / depth;
        Vec3 pos = hilum + radius * b.dir;
        NodeKind kind = (b.level == depth) ? NodeKind::Terminal : NodeKind::Junction;
        tree.nodes.push_back({pos, kind, node_of_branch[b.parent]});
        node_of_branch[bi] = static_cast<int>(tree.nodes.size()) - 1;
    }
    return tree;
}

inline LobeModel generate_lobe(const PhantomSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    LobeModel m;
    m.surface = make_ellipsoid_surface(spec.half_axes, spec.target_triangles);
    m.tet_mesh = tetrahedralize(m.surface);
    Vec3 hilum(-0.85 * spec.half_axes.x(), 0.0, 0.0);
    double terminal_radius = 0.0;
    m.centerline = make_centerline(m.surface, hilum, spec.branch_depth, spec.fan_out, rng,
                                   &terminal_radius);
    validate_lobe(m);
    return m;
}

// Radial profile f(r): piecewise-linear with slope 1/(1+eps_b) inside the
// terminal radius and 1/(1+eps_p) outside, cosine-blended over a 2 mm band.
// The deflated-referenced strain (r - f) / f then equals eps in each region.
class RadialContractionProfile {
  public:
    RadialContractionProfile(double bronchus_strain, double parenchyma_strain,
                             double boundary_radius, double band_half_width = 1.0)
        : m_inner_(1.0 / (1.0 + bronchus_strain)),
          m_outer_(1.0 / (1.0 + parenchyma_strain)),
          rb_(boundary_radius),
          h_(band_half_width) {}

    double slope(double r) const {
        if (r <= rb_ - h_) return m_inner_;
        if (r >= rb_ + h_) return m_outer_;
        double t = (r - (rb_ - h_)) / (2.0 * h_);
        double w = 0.5 - 0.5 * std::cos(std::numbers::pi * t);
        return (1.0 - w) * m_inner_ + w * m_outer_;
    }

    double operator()(double r) const {
        if (r <= rb_ - h_) return m_inner_ * r;
        double f = m_inner_ * (rb_ - h_);
        // integrate the blended slope over the band
        double lo = rb_ - h_;
        double hi = std::min(r, rb_ + h_);
        int steps = 64;
        double dr = (hi - lo) / steps;
        for (int i = 0; i < steps; ++i) f += slope(lo + (i + 0.5) * dr) * dr;
        if (r > rb_ + h_) f += m_outer_ * (r - rb_ - h_);
        return f;
    }

  private:
    double m_inner_, m_outer_, rb_, h_;
};

inline Eigen::Matrix3d rotation_about_axis(const Vec3& axis, double angle_deg) {
    double angle = angle_deg * std::numbers::pi / 180.0;
    return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

// Ground-truth deflation: two-slope radial contraction about the hilum
// followed by a rigid rotation about the hilum. Returns the deformed position
// of an arbitrary point.
struct GroundTruthDeformation {
    Vec3 hilum;
    RadialContractionProfile profile;
    Eigen::Matrix3d rotation;

    Vec3 operator()(const Vec3& p) const {
        Vec3 d = p - hilum;
        double r = d.norm();
        Vec3 contracted = (r < kEmbedEps) ? Vec3(Vec3::Zero()) : Vec3((profile(r) / r) * d);
        return hilum + rotation * contracted;
    }
};

inline GroundTruthDeformation make_ground_truth(const PhantomSpec& spec, const Vec3& hilum,
                                                double boundary_radius) {
    return GroundTruthDeformation{
        hilum,
        RadialContractionProfile(spec.bronchus_strain, spec.parenchyma_strain,
                                 boundary_radius),
        rotation_about_axis(spec.rotation_axis, spec.rotation_angle_deg)};
}

// Removes ceil(fraction * N_t) terminal branches, deepest first with seeded
// random tie-breaking. Parents left with one child are demoted to internal
// nodes; parents left with none become terminals.
inline CenterlineTree prune_terminals(const CenterlineTree& tree, double fraction,
                                      std::uint64_t seed) {
    if (fraction < 0.0 || fraction >= 1.0)
        throw ConfigError("prune_terminals: fraction must be in [0,1)");
    CenterlineTree t = tree;
    if (fraction == 0.0) return t;
    auto terms = t.terminals();
    if (terms.empty()) throw ConfigError("prune_terminals: pruning would remove the root");
    int remove_count = static_cast<int>(std::lround(fraction * terms.size()));
    remove_count = std::min<int>(remove_count, static_cast<int>(terms.size()));

    std::mt19937_64 rng(seed);
    std::vector<std::pair<int, int>> depth_order;  // (depth, node)
    for (int n : terms)
        depth_order.emplace_back(static_cast<int>(t.path_from_root(n).size()), n);
    std::shuffle(depth_order.begin(), depth_order.end(), rng);
    std::stable_sort(depth_order.begin(), depth_order.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    std::vector<bool> removed(t.nodes.size(), false);
    for (int i = 0; i < remove_count; ++i) removed[depth_order[i].second] = true;

    // compact and reclassify
    CenterlineTree out;
    std::vector<int> remap(t.nodes.size(), -1);
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        if (removed[i]) continue;
        remap[i] = static_cast<int>(out.nodes.size());
        auto n = t.nodes[i];
        n.parent = n.parent >= 0 ? remap[n.parent] : -1;
        out.nodes.push_back(n);
    }
    auto ch = out.children();
    for (std::size_t i = 0; i < out.nodes.size(); ++i) {
        auto& n = out.nodes[i];
        if (n.parent < 0) continue;
        if (ch[i].empty())
            n.kind = NodeKind::Terminal;
        else if (ch[i].size() == 1)
            n.kind = NodeKind::Internal;
        else
            n.kind = NodeKind::Junction;
    }
    validate_centerline(out);
    return out;
}

// Full deterministic phantom case: inflated model, ground-truth deformation,
// deflated model (noisy surface, pruned centerline) and landmark pairs.
inline PhantomCase generate_case(const PhantomSpec& spec) {
    PhantomCase pc;
    pc.inflated = generate_lobe(spec);
    pc.hilum = pc.inflated.hilum();

    // terminal radius defines the bronchus/parenchyma boundary
    double radius = 0.0;
    for (int term : pc.inflated.centerline.terminals())
        radius = std::max(radius, (pc.inflated.centerline.nodes[term].position - pc.hilum).norm());
    pc.region_boundary_radius = radius;
    pc.true_bronchus_strain = spec.bronchus_strain;
    pc.true_parenchyma_strain = spec.parenchyma_strain;

    auto gt = make_ground_truth(spec, pc.hilum, radius);
    for (const auto& v : pc.inflated.surface.vertices) pc.true_surface.push_back(gt(v));
    for (const auto& v : pc.inflated.tet_mesh.vertices) pc.true_tet.push_back(gt(v));
    for (const auto& n : pc.inflated.centerline.nodes)
        pc.true_centerline.push_back(gt(n.position));

    // deflated model: ground truth plus surface noise, then terminal pruning
    pc.deflated = pc.inflated;
    pc.deflated.surface.vertices = pc.true_surface;
    pc.deflated.tet_mesh.vertices = pc.true_tet;
    update_normals(pc.deflated.surface);
    if (spec.noise_amplitude > 0.0) {
        std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
        std::uniform_real_distribution<double> amp(-spec.noise_amplitude,
                                                   spec.noise_amplitude);
        for (std::size_t i = 0; i < pc.deflated.surface.vertices.size(); ++i) {
            Vec3 dv = amp(rng) * pc.deflated.surface.normals[i];
            pc.deflated.surface.vertices[i] += dv;
            pc.deflated.tet_mesh.vertices[i] += dv;  // boundary verts shared by index
        }
        update_normals(pc.deflated.surface);
    }
    CenterlineTree deflated_tree = pc.inflated.centerline;
    for (std::size_t i = 0; i < deflated_tree.nodes.size(); ++i)
        deflated_tree.nodes[i].position = pc.true_centerline[i];
    pc.deflated.centerline =
        prune_terminals(deflated_tree, spec.prune_fraction, spec.seed ^ 0x5bf03635ull);
    validate_lobe(pc.deflated);

    // landmarks: junctions surviving the prune and spread-out surface vertices
    std::mt19937_64 rng(spec.seed ^ 0xc2b2ae3d27d4eb4full);
    std::vector<int> junctions;
    for (std::size_t i = 0; i < pc.inflated.centerline.nodes.size(); ++i)
        if (pc.inflated.centerline.nodes[i].kind == NodeKind::Junction)
            junctions.push_back(static_cast<int>(i));
    std::shuffle(junctions.begin(), junctions.end(), rng);
    for (int i = 0; i < std::min<int>(spec.landmark_count, junctions.size()); ++i) {
        Landmark lm;
        lm.on_surface = false;
        lm.index = junctions[i];
        lm.inflated = pc.inflated.centerline.nodes[lm.index].position;
        lm.deflated = pc.true_centerline[lm.index];
        pc.bronchus_landmarks.push_back(lm);
    }
    std::vector<int> surf_ids(pc.inflated.surface.vertices.size());
    for (std::size_t i = 0; i < surf_ids.size(); ++i) surf_ids[i] = static_cast<int>(i);
    std::shuffle(surf_ids.begin(), surf_ids.end(), rng);
    for (int i = 0; i < std::min<int>(spec.landmark_count, surf_ids.size()); ++i) {
        Landmark lm;
        lm.on_surface = true;
        lm.index = surf_ids[i];
        lm.inflated = pc.inflated.surface.vertices[lm.index];
        lm.deflated = pc.true_surface[lm.index];
        pc.surface_landmarks.push_back(lm);
    }
    return pc;
}

}  // namespace lungreg
