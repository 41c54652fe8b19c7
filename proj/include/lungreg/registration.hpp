#pragma once

// Three-step deformable mesh registration per lobe: global affine alignment,
// piecewise-affine deformation on a tetrahedral control grid, and direct
// Laplacian-regularized surface refinement with harmonic propagation to the
// interior and centerline. All steps minimize the same objective
//   E = d_s^2 + alpha * d_c^2 + beta * sum ||L(u_i)||^2
// with ICP-style alternation: correspondences are frozen per outer iteration
// and every accepted update must decrease the objective.

#include "lungreg/geometry.hpp"
#include "lungreg/metrics.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <sstream>

namespace lungreg {

struct RegistrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RegistrationConfig {
    double alpha = 2.0;  // centerline term weight
    double beta = 2.0;   // Laplacian regularization weight
    double gamma = 1.0;  // normal-compatibility weight in closest-point search
    int patience = 20;
    int max_iters = 1000;
    double improvement_eps = 1e-9;
    double step_cap_factor = 0.05;  // per-iteration displacement cap, x bbox diagonal
    double min_step = 1e-6;         // mm; line-search underflow threshold
    std::array<int, 3> grid_cells = {4, 4, 4};
    double grid_margin = 2.0;  // mm
    bool run_affine = true;
    bool run_pwa = true;
    bool run_local = true;
    // STEP-2 regularization domain: the model's surface vertices through the
    // barycentric map (default), or the control-grid vertices directly. The
    // grid variant penalizes boundary control vertices of any uniform
    // contraction, so the surface-field form is the default.
    bool regularize_model_vertices = true;

    void validate() const {
        if (alpha < 0 || beta < 0 || gamma < 0)
            throw ConfigError("registration config: weights must be >= 0");
        if (patience < 1) throw ConfigError("registration config: patience must be >= 1");
        if (max_iters < patience)
            throw ConfigError("registration config: max_iters must be >= patience");
    }
};

struct ObjectiveBreakdown {
    double total = 0.0;
    double surface_term = 0.0;        // d_s^2
    double centerline_term = 0.0;     // alpha * d_c^2
    double regularization_term = 0.0; // beta * sum ||L(u)||^2
};

struct AffineTransform {
    Eigen::Matrix3d linear = Eigen::Matrix3d::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 operator()(const Vec3& p) const { return linear * p + translation; }
};

struct StepTrace {
    std::string name;
    std::vector<double> best_objective;  // best-so-far value per outer iteration
    std::vector<std::string> warnings;
};

struct RegistrationResult {
    LobeModel deformed;  // same topology as the source, deformed positions
    AffineTransform global_affine;
    std::vector<Vec3> surface_displacement;
    std::vector<Vec3> tet_displacement;
    std::vector<Vec3> centerline_displacement;
    std::vector<StepTrace> traces;
    MetricReport metrics;
};

// ---------------------------------------------------------------------------
// Correspondences (frozen per outer iteration)

struct Correspondences {
    std::vector<int> fwd;  // source surface vertex -> target vertex
    std::vector<int> bwd;  // target vertex -> source surface vertex
    struct Segment {
        int a = 0, b = 0;   // source centerline node indices
        double t = 0.0;     // frozen parameter along the segment
    };
    std::vector<Segment> cl;  // per target centerline node
};

namespace detail {

inline Correspondences compute_correspondences(const TriangleSurface& cur,
                                               const CenterlineTree& cur_cl,
                                               const TriangleSurface& target,
                                               const CenterlineTree& target_cl,
                                               double gamma) {
    Correspondences c;
    c.fwd.resize(cur.vertices.size());
    for (std::size_t j = 0; j < cur.vertices.size(); ++j)
        c.fwd[j] = normal_aware_closest_point(cur.vertices[j], cur.normals[j], target, gamma)
                       .match;
    c.bwd.resize(target.vertices.size());
    for (std::size_t k = 0; k < target.vertices.size(); ++k)
        c.bwd[k] =
            normal_aware_closest_point(target.vertices[k], target.normals[k], cur, gamma)
                .match;

    c.cl.resize(target_cl.nodes.size());
    int root = cur_cl.root();
    for (std::size_t k = 0; k < target_cl.nodes.size(); ++k) {
        const Vec3& p = target_cl.nodes[k].position;
        double best = std::numeric_limits<double>::max();
        Correspondences::Segment seg{root, root, 0.0};
        for (std::size_t n = 0; n < cur_cl.nodes.size(); ++n) {
            int par = cur_cl.nodes[n].parent;
            if (par < 0) continue;
            const Vec3& a = cur_cl.nodes[par].position;
            const Vec3& b = cur_cl.nodes[n].position;
            Vec3 ab = b - a;
            double len2 = ab.squaredNorm();
            double t = len2 < 1e-30 ? 0.0 : std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
            double d = (p - (a + t * ab)).norm();
            if (d < best) {
                best = d;
                seg = {par, static_cast<int>(n), t};
            }
        }
        c.cl[k] = seg;
    }
    return c;
}

// d_s and d_c evaluated at explicit positions with frozen correspondences.
struct DistanceTerms {
    double ds = 0.0;
    double dc = 0.0;
};

inline DistanceTerms frozen_distances(const std::vector<Vec3>& surf,
                                      const std::vector<Vec3>& cl,
                                      const TriangleSurface& target,
                                      const CenterlineTree& target_cl,
                                      const Correspondences& corr) {
    DistanceTerms d;
    double fwd = 0.0, bwd = 0.0;
    for (std::size_t j = 0; j < surf.size(); ++j)
        fwd += (surf[j] - target.vertices[corr.fwd[j]]).norm();
    for (std::size_t k = 0; k < target.vertices.size(); ++k)
        bwd += (target.vertices[k] - surf[corr.bwd[k]]).norm();
    d.ds = fwd / surf.size() + bwd / target.vertices.size();
    double dc = 0.0;
    for (std::size_t k = 0; k < target_cl.nodes.size(); ++k) {
        const auto& s = corr.cl[k];
        Vec3 y = (1.0 - s.t) * cl[s.a] + s.t * cl[s.b];
        dc += (target_cl.nodes[k].position - y).norm();
    }
    d.dc = dc / target_cl.nodes.size();
    return d;
}

// Gradient of ds^2 + alpha*dc^2 with respect to the deformed surface vertex
// and centerline node positions (correspondences frozen).
inline void frozen_distance_gradient(const std::vector<Vec3>& surf,
                                     const std::vector<Vec3>& cl,
                                     const TriangleSurface& target,
                                     const CenterlineTree& target_cl,
                                     const Correspondences& corr, double alpha,
                                     std::vector<Vec3>* g_surf, std::vector<Vec3>* g_cl) {
    DistanceTerms d = frozen_distances(surf, cl, target, target_cl, corr);
    g_surf->assign(surf.size(), Vec3::Zero());
    g_cl->assign(cl.size(), Vec3::Zero());

    const double ws = 2.0 * d.ds;
    const double nj = static_cast<double>(surf.size());
    const double nk = static_cast<double>(target.vertices.size());
    for (std::size_t j = 0; j < surf.size(); ++j) {
        Vec3 r = surf[j] - target.vertices[corr.fwd[j]];
        double len = r.norm();
        if (len > 1e-14) (*g_surf)[j] += ws * r / (len * nj);
    }
    for (std::size_t k = 0; k < target.vertices.size(); ++k) {
        Vec3 r = surf[corr.bwd[k]] - target.vertices[k];
        double len = r.norm();
        if (len > 1e-14) (*g_surf)[corr.bwd[k]] += ws * r / (len * nk);
    }

    const double wc = 2.0 * alpha * d.dc;
    const double nc = static_cast<double>(target_cl.nodes.size());
    for (std::size_t k = 0; k < target_cl.nodes.size(); ++k) {
        const auto& s = corr.cl[k];
        Vec3 y = (1.0 - s.t) * cl[s.a] + s.t * cl[s.b];
        Vec3 r = y - target_cl.nodes[k].position;
        double len = r.norm();
        if (len > 1e-14) {
            Vec3 g = wc * r / (len * nc);
            (*g_cl)[s.a] += (1.0 - s.t) * g;
            (*g_cl)[s.b] += s.t * g;
        }
    }
}

// Mean (not sum) of ||L(u_i)||^2 so the regularizer lives on the same
// per-point scale as the mean-based distance terms regardless of mesh
// resolution.
inline double laplacian_energy(const std::vector<Vec3>& field, const EdgeWeights& w) {
    if (field.empty()) return 0.0;
    double e = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i) {
        Vec3 l = Vec3::Zero();
        for (const auto& [j, wij] : w.nbr[i]) l += wij * (field[i] - field[j]);
        e += l.squaredNorm();
    }
    return e / static_cast<double>(field.size());
}

// Adds beta * grad of sum ||L(u_i)||^2 to g (g indexed like field).
inline void add_laplacian_energy_gradient(const std::vector<Vec3>& field,
                                          const EdgeWeights& w, double beta,
                                          std::vector<Vec3>* g) {
    if (field.empty()) return;
    const double scale = 2.0 * beta / static_cast<double>(field.size());
    std::vector<Vec3> l(field.size(), Vec3::Zero());
    for (std::size_t i = 0; i < field.size(); ++i)
        for (const auto& [j, wij] : w.nbr[i]) l[i] += wij * (field[i] - field[j]);
    for (std::size_t i = 0; i < field.size(); ++i)
        for (const auto& [j, wij] : w.nbr[i]) {
            Vec3 c = scale * wij * l[i];
            (*g)[i] += c;
            (*g)[j] -= c;
        }
}

inline double max_norm(const std::vector<Vec3>& v) {
    double m = 0.0;
    for (const auto& x : v) m = std::max(m, x.norm());
    return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Standalone objective evaluation (fresh correspondences)

inline ObjectiveBreakdown evaluate_objective(const TriangleSurface& deformed_surface,
                                             const CenterlineTree& deformed_centerline,
                                             const TriangleSurface& target_surface,
                                             const CenterlineTree& target_centerline,
                                             const std::vector<Vec3>& displacement_field,
                                             const EdgeWeights& field_weights,
                                             const RegistrationConfig& cfg) {
    auto corr = detail::compute_correspondences(deformed_surface, deformed_centerline,
                                                target_surface, target_centerline, cfg.gamma);
    std::vector<Vec3> cl_pos;
    for (const auto& n : deformed_centerline.nodes) cl_pos.push_back(n.position);
    auto d = detail::frozen_distances(deformed_surface.vertices, cl_pos, target_surface,
                                      target_centerline, corr);
    ObjectiveBreakdown b;
    b.surface_term = d.ds * d.ds;
    b.centerline_term = cfg.alpha * d.dc * d.dc;
    b.regularization_term =
        cfg.beta * detail::laplacian_energy(displacement_field, field_weights);
    b.total = b.surface_term + b.centerline_term + b.regularization_term;
    return b;
}

// ---------------------------------------------------------------------------
// Internal deformable state (a topology-preserving copy of the source)

namespace detail {

struct DeformState {
    TriangleSurface surface;       // current deformed surface (normals current)
    std::vector<Vec3> tet;         // current tet vertex positions
    std::vector<Vec3> cl;          // current centerline node positions

    static DeformState from_model(const LobeModel& m) {
        DeformState s;
        s.surface = m.surface;
        s.tet = m.tet_mesh.vertices;
        for (const auto& n : m.centerline.nodes) s.cl.push_back(n.position);
        return s;
    }

    CenterlineTree centerline_tree(const CenterlineTree& topology) const {
        CenterlineTree t = topology;
        for (std::size_t i = 0; i < t.nodes.size(); ++i) t.nodes[i].position = cl[i];
        return t;
    }
};

// Best-so-far bookkeeping shared by all three steps.
struct Monitor {
    double best = std::numeric_limits<double>::max();
    int stall = 0;
    StepTrace trace;

    explicit Monitor(std::string name) { trace.name = std::move(name); }

    // Returns true when the value improves the best-so-far.
    bool observe(double value, double eps) {
        bool improved = value < best - eps;
        if (improved) {
            best = value;
            stall = 0;
        } else {
            stall++;
        }
        trace.best_objective.push_back(best);
        return improved;
    }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// STEP 1: global affine

struct AffineStepResult {
    AffineTransform transform;  // acts on hilum-centered source coordinates
    StepTrace trace;
};

namespace detail {
template <typename StateAt>
void affine_descend(const LobeModel& source, const LobeModel& target,
                    const RegistrationConfig& cfg, StateAt&& state_at, Eigen::Matrix3d& A,
                    Vec3& t, Monitor& mon, int max_iters);
}  // namespace detail

// Optimizes the 12 affine parameters of x = A (v - h_src) + h_tgt + t against
// d_s^2 + alpha d_c^2 (affine fields have zero Laplacian). Gauss-Newton style:
// the damped least-squares affine fit to the frozen correspondences is the
// step proposal, accepted only if the frozen objective decreases.
inline AffineStepResult step1_global_affine(const LobeModel& source, const LobeModel& target,
                                            const RegistrationConfig& cfg) {
    cfg.validate();
    const Vec3 h_src = source.hilum();
    const Vec3 h_tgt = target.hilum();

    Eigen::Matrix3d A = Eigen::Matrix3d::Identity();
    Vec3 t = Vec3::Zero();

    auto state_at = [&](const Eigen::Matrix3d& A_, const Vec3& t_) {
        detail::DeformState s = detail::DeformState::from_model(source);
        auto map = [&](const Vec3& p) { return A_ * (p - h_src) + h_tgt + t_; };
        for (auto& v : s.surface.vertices) v = map(v);
        for (auto& v : s.tet) v = map(v);
        for (auto& v : s.cl) v = map(v);
        update_normals(s.surface);
        return s;
    };

    auto fresh = [&](const Eigen::Matrix3d& A_, const Vec3& t_) {
        auto s = state_at(A_, t_);
        auto corr = detail::compute_correspondences(
            s.surface, s.centerline_tree(source.centerline), target.surface,
            target.centerline, cfg.gamma);
        auto d = detail::frozen_distances(s.surface.vertices, s.cl, target.surface,
                                          target.centerline, corr);
        return d.ds * d.ds + cfg.alpha * d.dc * d.dc;
    };

    // Moment-based initialization: closest-point iteration alone cannot cross
    // large rotation offsets, so seed with principal-axes alignments of the
    // two vertex clouds (anisotropic scale from the moment ratios). Shear and
    // near-isotropy make the pairing of the two bases ambiguous, so every
    // axis permutation and orientation-preserving sign choice is a candidate
    // alongside identity. Moments only pin the map down modulo a rotation in
    // covariance-whitened coordinates (any B = C_t^{1/2} Q C_s^{-1/2} matches
    // the second moments), and surface correspondences slide tangentially on
    // a near-ellipsoid, so that residual Q cannot be corrected later by the
    // descent. Each discrete candidate therefore also gets a sibling whose Q
    // is refined by a rotation-only closest-point alignment of the whitened
    // centerline node clouds.
    std::vector<std::pair<Eigen::Matrix3d, Vec3>> candidates;
    candidates.emplace_back(A, t);
    {
        auto moments = [](const std::vector<Vec3>& pts) {
            Vec3 c = Vec3::Zero();
            for (const auto& p : pts) c += p;
            c /= static_cast<double>(pts.size());
            Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
            for (const auto& p : pts) m += (p - c) * (p - c).transpose();
            m /= static_cast<double>(pts.size());
            return std::make_pair(c, m);
        };
        auto [c_src, m_src] = moments(source.surface.vertices);
        auto [c_tgt, m_tgt] = moments(target.surface.vertices);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m_src), et(m_tgt);

        const bool whitenable =
            es.eigenvalues().minCoeff() > 1e-9 && et.eigenvalues().minCoeff() > 1e-9;
        const Eigen::Matrix3d w_src = whitenable ? es.operatorInverseSqrt()
                                                 : Eigen::Matrix3d::Identity();
        const Eigen::Matrix3d w_tgt = whitenable ? et.operatorInverseSqrt()
                                                 : Eigen::Matrix3d::Identity();
        std::vector<Vec3> wp_src, wp_tgt;
        for (const auto& n : source.centerline.nodes)
            wp_src.push_back(w_src * (n.position - c_src));
        for (const auto& n : target.centerline.nodes)
            wp_tgt.push_back(w_tgt * (n.position - c_tgt));

        // Kabsch alternation for the whitened rotation, seeded from a discrete
        // candidate; pairs every (pruned) target node with its nearest rotated
        // source node.
        auto refine_rotation = [&](const Eigen::Matrix3d& cand) -> Eigen::Matrix3d {
            Eigen::Matrix3d q0 =
                w_tgt * cand *
                (whitenable ? es.operatorSqrt() : Eigen::Matrix3d::Identity());
            Eigen::JacobiSVD<Eigen::Matrix3d> svd0(q0,
                                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
            Eigen::Matrix3d q = svd0.matrixU() * svd0.matrixV().transpose();
            if (q.determinant() < 0) return cand;
            for (int it = 0; it < 30; ++it) {
                Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
                for (const auto& pt : wp_tgt) {
                    double best = std::numeric_limits<double>::max();
                    Vec3 match = Vec3::Zero();
                    for (const auto& ps : wp_src) {
                        double d = (q * ps - pt).squaredNorm();
                        if (d < best) {
                            best = d;
                            match = ps;
                        }
                    }
                    h += match * pt.transpose();
                }
                Eigen::JacobiSVD<Eigen::Matrix3d> svd(h,
                                                      Eigen::ComputeFullU | Eigen::ComputeFullV);
                Eigen::Matrix3d v = svd.matrixV();
                if ((v * svd.matrixU().transpose()).determinant() < 0) v.col(2) *= -1.0;
                Eigen::Matrix3d qn = v * svd.matrixU().transpose();
                if ((qn - q).norm() < 1e-12) {
                    q = qn;
                    break;
                }
                q = qn;
            }
            return (whitenable ? et.operatorSqrt() : Eigen::Matrix3d::Identity()) * q * w_src;
        };

        static const int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                         {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
        for (const auto& perm : kPerms) {
            Eigen::Matrix3d ut;
            Vec3 scale;
            for (int i = 0; i < 3; ++i) {
                ut.col(i) = et.eigenvectors().col(perm[i]);
                scale[i] = std::sqrt(et.eigenvalues()[perm[i]] / es.eigenvalues()[i]);
            }
            double basis_sign = es.eigenvectors().determinant() * ut.determinant();
            for (int sx : {1, -1})
                for (int sy : {1, -1}) {
                    int sz = (basis_sign > 0 ? 1 : -1) * sx * sy;
                    Eigen::Matrix3d flip = Eigen::Vector3d(sx, sy, sz).asDiagonal();
                    Eigen::Matrix3d cand =
                        ut * scale.asDiagonal() * flip * es.eigenvectors().transpose();
                    if (cand.determinant() < 0.01) continue;
                    Vec3 cand_t = c_tgt - h_tgt - cand * (c_src - h_src);
                    candidates.emplace_back(cand, cand_t);
                    if (whitenable && wp_src.size() >= 3 && wp_tgt.size() >= 3) {
                        Eigen::Matrix3d refined = refine_rotation(cand);
                        if (refined.determinant() >= 0.01) {
                            Vec3 rt = c_tgt - h_tgt - refined * (c_src - h_src);
                            candidates.emplace_back(refined, rt);
                        }
                    }
                }
        }
    }

    // Rank candidates by fresh objective, short-descend the leaders to see
    // which basin actually converges, then run the survivor to completion.
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        double e = fresh(candidates[i].first, candidates[i].second);
        if (std::isfinite(e)) ranked.emplace_back(e, i);
    }
    std::sort(ranked.begin(), ranked.end());
    const std::size_t kExplore = std::min<std::size_t>(5, ranked.size());
    const int kExploreIters = 40;

    double best_explored = std::numeric_limits<double>::max();
    for (std::size_t r = 0; r < kExplore; ++r) {
        auto [A_c, t_c] = candidates[ranked[r].second];
        try {
            detail::Monitor probe("affine");
            detail::affine_descend(source, target, cfg, state_at, A_c, t_c, probe,
                                   kExploreIters);
            double e = fresh(A_c, t_c);
            if (std::isfinite(e) && e < best_explored) {
                best_explored = e;
                A = A_c;
                t = t_c;
            }
        } catch (const RegistrationError&) {
            // degenerate basin; other candidates may still work
        }
    }
    if (!std::isfinite(best_explored)) {
        A = candidates[ranked.empty() ? 0 : ranked.front().second].first;
        t = candidates[ranked.empty() ? 0 : ranked.front().second].second;
    }

    detail::Monitor mon("affine");
    detail::affine_descend(source, target, cfg, state_at, A, t, mon, cfg.max_iters);

    AffineStepResult r;
    // compose into a plain affine on original coordinates
    r.transform.linear = A;
    r.transform.translation = h_tgt + t - A * h_src;
    r.trace = mon.trace;
    return r;
}

namespace detail {

// Closest-point iteration on the 12 affine parameters: the damped
// least-squares affine fit to the frozen correspondences is the step
// proposal, accepted only if the frozen objective decreases, with a frozen
// gradient fallback. Updates A and t in place.
template <typename StateAt>
inline void affine_descend(const LobeModel& source, const LobeModel& target,
                           const RegistrationConfig& cfg, StateAt&& state_at,
                           Eigen::Matrix3d& A, Vec3& t, Monitor& mon, int max_iters) {
    const Vec3 h_src = source.hilum();
    const Vec3 h_tgt = target.hilum();
    for (int iter = 0; iter < max_iters; ++iter) {
        auto state = state_at(A, t);
        auto corr = compute_correspondences(state.surface,
                                            state.centerline_tree(source.centerline),
                                            target.surface, target.centerline, cfg.gamma);
        auto eval = [&](const Eigen::Matrix3d& A_, const Vec3& t_) {
            auto s = state_at(A_, t_);
            auto d = frozen_distances(s.surface.vertices, s.cl, target.surface,
                                      target.centerline, corr);
            return d.ds * d.ds + cfg.alpha * d.dc * d.dc;
        };
        double e0 = eval(A, t);
        if (!std::isfinite(e0) || std::abs(A.determinant()) < 0.01)
            throw RegistrationError("affine step aborted: transform degenerated (det " +
                                    std::to_string(A.determinant()) + ")");
        mon.observe(e0, cfg.improvement_eps);
        if (mon.stall >= cfg.patience) break;

        // weighted least-squares affine fit to the frozen pairs
        Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
        Eigen::Matrix<double, 3, 4> N = Eigen::Matrix<double, 3, 4>::Zero();
        auto accumulate = [&](const Vec3& rest, const Vec3& goal, double w) {
            Eigen::Vector4d ph;
            ph << rest - h_src, 1.0;
            M += w * ph * ph.transpose();
            N += w * (goal - h_tgt) * ph.transpose();
        };
        double wj = 1.0 / source.surface.vertices.size();
        double wk = 1.0 / target.surface.vertices.size();
        double wc = cfg.alpha / target.centerline.nodes.size();
        for (std::size_t j = 0; j < source.surface.vertices.size(); ++j)
            accumulate(source.surface.vertices[j], target.surface.vertices[corr.fwd[j]], wj);
        for (std::size_t k = 0; k < target.surface.vertices.size(); ++k)
            accumulate(source.surface.vertices[corr.bwd[k]], target.surface.vertices[k], wk);
        for (std::size_t k = 0; k < target.centerline.nodes.size(); ++k) {
            const auto& s = corr.cl[k];
            Vec3 rest = (1.0 - s.t) * source.centerline.nodes[s.a].position +
                        s.t * source.centerline.nodes[s.b].position;
            accumulate(rest, target.centerline.nodes[k].position, wc);
        }
        Eigen::Matrix<double, 3, 4> X = M.ldlt().solve(N.transpose()).transpose();
        Eigen::Matrix3d A_fit = X.leftCols<3>();
        Vec3 t_fit = X.col(3);
        if (!A_fit.allFinite() || std::abs(A_fit.determinant()) < 0.01)
            throw RegistrationError(
                "affine step aborted: fitted transform collapses volume below 1% (det " +
                std::to_string(A_fit.determinant()) + ")");

        bool accepted = false;
        for (double s = 1.0; s >= 1.0 / 1024.0; s *= 0.5) {
            Eigen::Matrix3d A_try = A + s * (A_fit - A);
            Vec3 t_try = t + s * (t_fit - t);
            if (std::abs(A_try.determinant()) < 0.01) continue;
            double e = eval(A_try, t_try);
            if (std::isfinite(e) && e < e0) {
                A = A_try;
                t = t_try;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // gradient fallback on the frozen objective
            auto s = state_at(A, t);
            std::vector<Vec3> gs, gc;
            frozen_distance_gradient(s.surface.vertices, s.cl, target.surface,
                                     target.centerline, corr, cfg.alpha, &gs, &gc);
            Eigen::Matrix3d gA = Eigen::Matrix3d::Zero();
            Vec3 gt = Vec3::Zero();
            for (std::size_t j = 0; j < gs.size(); ++j) {
                gA += gs[j] * (source.surface.vertices[j] - h_src).transpose();
                gt += gs[j];
            }
            for (std::size_t n = 0; n < gc.size(); ++n) {
                gA += gc[n] * (source.centerline.nodes[n].position - h_src).transpose();
                gt += gc[n];
            }
            double gmax = std::max(gA.cwiseAbs().maxCoeff(), gt.cwiseAbs().maxCoeff());
            if (gmax > 0) {
                for (double s2 = 0.1 / gmax; s2 * gmax >= cfg.min_step; s2 *= 0.5) {
                    Eigen::Matrix3d A_try = A - s2 * gA;
                    Vec3 t_try = t - s2 * gt;
                    if (std::abs(A_try.determinant()) < 0.01) continue;
                    double e = eval(A_try, t_try);
                    if (std::isfinite(e) && e < e0) {
                        A = A_try;
                        t = t_try;
                        accepted = true;
                        break;
                    }
                }
            }
        }
        if (!accepted && mon.stall == 0) mon.stall = 1;  // no usable descent direction
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// STEP 2: piecewise-affine control grid

// Exposed as a class so the analytic gradient can be checked externally
// against finite differences.
class PiecewiseAffineProblem {
  public:
    PiecewiseAffineProblem(const detail::DeformState& start, const LobeModel& source,
                           const LobeModel& target, const RegistrationConfig& cfg)
        : source_(&source), target_(&target), cfg_(cfg), start_(start) {
        std::vector<Vec3> pts = start.surface.vertices;
        for (const auto& p : start.cl) pts.push_back(p);
        grid_ = build_deformation_grid(pts, cfg.grid_cells[0], cfg.grid_cells[1],
                                       cfg.grid_cells[2], cfg.grid_margin);
        surf_bind_ = bind_barycentric(start.surface.vertices, grid_);
        tet_bind_ = bind_barycentric(start.tet, grid_);
        cl_bind_ = bind_barycentric(start.cl, grid_);
        grid_weights_ = uniform_weights(grid_adjacency());
        if (cfg.regularize_model_vertices)
            surface_weights_ = normalize_weights(cotangent_weights(start.surface));
    }

    const DeformationGrid& grid() const { return grid_; }
    std::size_t dof_count() const { return grid_.rest_vertices.size(); }

    std::vector<std::vector<int>> grid_adjacency() const {
        std::vector<std::vector<int>> adj(grid_.rest_vertices.size());
        auto link = [&](int a, int b) {
            if (std::find(adj[a].begin(), adj[a].end(), b) == adj[a].end())
                adj[a].push_back(b);
        };
        for (const auto& t : grid_.tets)
            for (int i = 0; i < 4; ++i)
                for (int j = i + 1; j < 4; ++j) {
                    link(t[i], t[j]);
                    link(t[j], t[i]);
                }
        return adj;
    }

    detail::DeformState state_at(const std::vector<Vec3>& u) const {
        std::vector<Vec3> ctrl(grid_.rest_vertices.size());
        for (std::size_t i = 0; i < ctrl.size(); ++i) ctrl[i] = grid_.rest_vertices[i] + u[i];
        detail::DeformState s;
        s.surface = start_.surface;
        s.surface.vertices = apply_deformation(surf_bind_, grid_.tets, ctrl);
        update_normals(s.surface);
        s.tet = apply_deformation(tet_bind_, grid_.tets, ctrl);
        s.cl = apply_deformation(cl_bind_, grid_.tets, ctrl);
        return s;
    }

    Correspondences correspond(const detail::DeformState& s) const {
        return detail::compute_correspondences(s.surface,
                                               s.centerline_tree(source_->centerline),
                                               target_->surface, target_->centerline,
                                               cfg_.gamma);
    }

    ObjectiveBreakdown objective(const std::vector<Vec3>& u,
                                 const Correspondences& corr) const {
        auto s = positions_at(u);
        auto d = detail::frozen_distances(s.first, s.second, target_->surface,
                                          target_->centerline, corr);
        ObjectiveBreakdown b;
        b.surface_term = d.ds * d.ds;
        b.centerline_term = cfg_.alpha * d.dc * d.dc;
        b.regularization_term = cfg_.beta * regularizer_value(u, s.first);
        b.total = b.surface_term + b.centerline_term + b.regularization_term;
        return b;
    }

    std::vector<Vec3> gradient(const std::vector<Vec3>& u,
                               const Correspondences& corr) const {
        auto s = positions_at(u);
        std::vector<Vec3> gs, gc;
        detail::frozen_distance_gradient(s.first, s.second, target_->surface,
                                         target_->centerline, corr, cfg_.alpha, &gs, &gc);
        std::vector<Vec3> g(u.size(), Vec3::Zero());
        scatter(surf_bind_, gs, &g);
        scatter(cl_bind_, gc, &g);

        if (cfg_.regularize_model_vertices) {
            std::vector<Vec3> field(s.first.size());
            for (std::size_t i = 0; i < field.size(); ++i)
                field[i] = s.first[i] - start_.surface.vertices[i];
            std::vector<Vec3> gf(field.size(), Vec3::Zero());
            detail::add_laplacian_energy_gradient(field, surface_weights_, cfg_.beta, &gf);
            scatter(surf_bind_, gf, &g);
        } else {
            detail::add_laplacian_energy_gradient(u, grid_weights_, cfg_.beta, &g);
        }
        return g;
    }

    bool grid_valid(const std::vector<Vec3>& u) const {
        std::vector<Vec3> ctrl(grid_.rest_vertices.size());
        for (std::size_t i = 0; i < ctrl.size(); ++i) ctrl[i] = grid_.rest_vertices[i] + u[i];
        for (const auto& t : grid_.tets)
            if (tet_signed_volume(ctrl[t[0]], ctrl[t[1]], ctrl[t[2]], ctrl[t[3]]) <= 0.0)
                return false;
        return true;
    }

  private:
    // surface vertex and centerline node positions only (no normals)
    std::pair<std::vector<Vec3>, std::vector<Vec3>> positions_at(
        const std::vector<Vec3>& u) const {
        std::vector<Vec3> ctrl(grid_.rest_vertices.size());
        for (std::size_t i = 0; i < ctrl.size(); ++i) ctrl[i] = grid_.rest_vertices[i] + u[i];
        return {apply_deformation(surf_bind_, grid_.tets, ctrl),
                apply_deformation(cl_bind_, grid_.tets, ctrl)};
    }

    double regularizer_value(const std::vector<Vec3>& u,
                             const std::vector<Vec3>& surf_pos) const {
        if (cfg_.regularize_model_vertices) {
            std::vector<Vec3> field(surf_pos.size());
            for (std::size_t i = 0; i < field.size(); ++i)
                field[i] = surf_pos[i] - start_.surface.vertices[i];
            return detail::laplacian_energy(field, surface_weights_);
        }
        return detail::laplacian_energy(u, grid_weights_);
    }

    void scatter(const std::vector<BarycentricBinding>& bind, const std::vector<Vec3>& g_pts,
                 std::vector<Vec3>* g) const {
        for (std::size_t i = 0; i < bind.size(); ++i) {
            const auto& t = grid_.tets[bind[i].element];
            for (int k = 0; k < 4; ++k) (*g)[t[k]] += bind[i].weights[k] * g_pts[i];
        }
    }

    const LobeModel* source_;
    const LobeModel* target_;
    RegistrationConfig cfg_;
    detail::DeformState start_;
    DeformationGrid grid_;
    std::vector<BarycentricBinding> surf_bind_, tet_bind_, cl_bind_;
    EdgeWeights grid_weights_;
    EdgeWeights surface_weights_;

    friend class Step2Runner;
};

namespace detail {

// Shared first-order descent loop: per outer iteration the correspondences
// are refreshed once, then several gradient steps with backtracking line
// search run against the frozen objective. A per-iteration displacement cap
// bounds the largest DOF move, candidate validity (inverted elements /
// flipped triangles) is enforced, and the best-so-far trace is monotone.
template <typename Objective, typename Gradient, typename Valid, typename Refresh>
inline StepTrace descend(std::vector<Vec3>* dofs, double step_cap, std::string name,
                         const RegistrationConfig& cfg, Refresh refresh, Objective objective,
                         Gradient gradient, Valid valid) {
    constexpr int kMaxInner = 25;
    Monitor mon(std::move(name));
    double step = step_cap;  // adaptive trial size of the largest DOF move [mm]
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        auto ctx = refresh(*dofs);
        double e_cur = objective(*dofs, ctx);
        mon.observe(e_cur, cfg.improvement_eps);
        if (mon.stall >= cfg.patience) break;

        for (int inner = 0; inner < kMaxInner; ++inner) {
            std::vector<Vec3> g = gradient(*dofs, ctx);
            double gmax = max_norm(g);
            if (gmax < 1e-18) break;

            bool accepted = false;
            bool saw_valid = false;
            int halvings = 0;
            double trial = std::min(step, step_cap);
            while (trial >= cfg.min_step) {
                double scale = trial / gmax;
                std::vector<Vec3> cand(dofs->size());
                for (std::size_t i = 0; i < cand.size(); ++i)
                    cand[i] = (*dofs)[i] - scale * g[i];
                if (valid(cand)) {
                    saw_valid = true;
                    double e = objective(cand, ctx);
                    if (std::isfinite(e) && e < e_cur) {
                        *dofs = std::move(cand);
                        e_cur = e;
                        accepted = true;
                        step = std::min(trial * 2.0, step_cap);
                        break;
                    }
                } else if (++halvings > 10 && !saw_valid) {
                    // every trial down to here hit a fold-over: the state is
                    // pinned against the validity boundary
                    mon.trace.warnings.push_back(
                        mon.trace.name + ": fold-over persisted after 10 step halvings");
                    return mon.trace;
                }
                trial *= 0.5;
            }
            // a failed search at fresh correspondences is a (frozen) local
            // minimum; the next refresh may unlock it, so patience decides
            if (!accepted) break;
        }
    }
    return mon.trace;
}

}  // namespace detail

class Step2Runner {
  public:
    static StepTrace run(PiecewiseAffineProblem& prob, std::vector<Vec3>* u,
                         double step_cap) {
        const auto& cfg = prob.cfg_;
        return detail::descend(
            u, step_cap, "pwa", cfg,
            [&](const std::vector<Vec3>& uu) { return prob.correspond(prob.state_at(uu)); },
            [&](const std::vector<Vec3>& uu, const Correspondences& c) {
                return prob.objective(uu, c).total;
            },
            [&](const std::vector<Vec3>& uu, const Correspondences& c) {
                return prob.gradient(uu, c);
            },
            [&](const std::vector<Vec3>& uu) { return prob.grid_valid(uu); });
    }
};

// ---------------------------------------------------------------------------
// STEP 3: Laplacian-regularized local surface refinement

class LocalRefinementProblem {
  public:
    LocalRefinementProblem(const detail::DeformState& start, const LobeModel& source,
                           const LobeModel& target, const RegistrationConfig& cfg)
        : source_(&source), target_(&target), cfg_(cfg), start_(start) {
        n_surf_ = static_cast<int>(start.surface.vertices.size());
        n_tet_ = static_cast<int>(start.tet.size());
        // weights from the rest geometry: the regularized field is the total
        // displacement from the rest model
        surface_weights_ = normalize_weights(cotangent_weights(source.surface));

        // harmonic propagation: interior tet displacement solves the graph
        // Laplace equation with the surface displacement as boundary data
        auto adj = tet_vertex_adjacency(source.tet_mesh);
        int n_int = n_tet_ - n_surf_;
        if (n_int > 0) {
            Eigen::SparseMatrix<double> aii(n_int, n_int);
            Eigen::SparseMatrix<double> aib(n_int, n_surf_);
            std::vector<Eigen::Triplet<double>> tii, tib;
            for (int i = n_surf_; i < n_tet_; ++i) {
                int row = i - n_surf_;
                tii.emplace_back(row, row, static_cast<double>(adj[i].size()));
                for (int j : adj[i]) {
                    if (j >= n_surf_)
                        tii.emplace_back(row, j - n_surf_, -1.0);
                    else
                        tib.emplace_back(row, j, -1.0);
                }
            }
            aii.setFromTriplets(tii.begin(), tii.end());
            aib.setFromTriplets(tib.begin(), tib.end());
            Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(aii);
            if (solver.info() != Eigen::Success)
                throw RegistrationError("harmonic interpolation: factorization failed");
            // K maps boundary displacement to interior displacement, U = K W
            Eigen::MatrixXd rhs = -Eigen::MatrixXd(aib);
            harmonic_ = solver.solve(rhs);
        } else {
            harmonic_.resize(0, n_surf_);
        }

        // centerline nodes ride the tet mesh through their rest bindings
        std::vector<Vec3> rest_cl;
        for (const auto& n : source.centerline.nodes) rest_cl.push_back(n.position);
        cl_bind_ = bind_barycentric(rest_cl, source.tet_mesh);
        cl_map_ = Eigen::MatrixXd::Zero(static_cast<int>(rest_cl.size()), n_surf_);
        for (std::size_t n = 0; n < cl_bind_.size(); ++n) {
            const auto& t = source.tet_mesh.tets[cl_bind_[n].element];
            for (int k = 0; k < 4; ++k) {
                int v = t[k];
                double wk = cl_bind_[n].weights[k];
                if (v < n_surf_)
                    cl_map_(static_cast<int>(n), v) += wk;
                else
                    cl_map_.row(static_cast<int>(n)) += wk * harmonic_.row(v - n_surf_);
            }
        }
    }

    detail::DeformState state_at(const std::vector<Vec3>& w) const {
        detail::DeformState s = start_;
        Eigen::MatrixXd wb(n_surf_, 3);
        for (int i = 0; i < n_surf_; ++i) {
            s.surface.vertices[i] += w[i];
            s.tet[i] += w[i];
            wb.row(i) = w[i].transpose();
        }
        if (harmonic_.rows() > 0) {
            Eigen::MatrixXd ui = harmonic_ * wb;
            for (int i = 0; i < harmonic_.rows(); ++i)
                s.tet[n_surf_ + i] += ui.row(i).transpose();
        }
        Eigen::MatrixXd uc = cl_map_ * wb;
        for (std::size_t n = 0; n < s.cl.size(); ++n) s.cl[n] += uc.row(n).transpose();
        update_normals(s.surface);
        return s;
    }

    Correspondences correspond(const detail::DeformState& s) const {
        return detail::compute_correspondences(s.surface,
                                               s.centerline_tree(source_->centerline),
                                               target_->surface, target_->centerline,
                                               cfg_.gamma);
    }

    ObjectiveBreakdown objective(const std::vector<Vec3>& w,
                                 const Correspondences& corr) const {
        auto [surf, cl] = positions_at(w);
        auto d = detail::frozen_distances(surf, cl, target_->surface, target_->centerline,
                                          corr);
        ObjectiveBreakdown b;
        b.surface_term = d.ds * d.ds;
        b.centerline_term = cfg_.alpha * d.dc * d.dc;
        // regularize the total displacement field from the rest model
        std::vector<Vec3> field(n_surf_);
        for (int i = 0; i < n_surf_; ++i)
            field[i] = surf[i] - source_->surface.vertices[i];
        b.regularization_term = cfg_.beta * detail::laplacian_energy(field, surface_weights_);
        b.total = b.surface_term + b.centerline_term + b.regularization_term;
        return b;
    }

    std::vector<Vec3> gradient(const std::vector<Vec3>& w,
                               const Correspondences& corr) const {
        auto [surf, cl] = positions_at(w);
        std::vector<Vec3> gs, gc;
        detail::frozen_distance_gradient(surf, cl, target_->surface, target_->centerline,
                                         corr, cfg_.alpha, &gs, &gc);
        // pull the centerline gradient back to the surface DOFs
        Eigen::MatrixXd gcm(static_cast<int>(gc.size()), 3);
        for (std::size_t n = 0; n < gc.size(); ++n) gcm.row(n) = gc[n].transpose();
        Eigen::MatrixXd pulled = cl_map_.transpose() * gcm;
        std::vector<Vec3> g(n_surf_);
        for (int i = 0; i < n_surf_; ++i) g[i] = gs[i] + Vec3(pulled.row(i).transpose());

        std::vector<Vec3> field(n_surf_);
        for (int i = 0; i < n_surf_; ++i)
            field[i] = surf[i] - source_->surface.vertices[i];
        detail::add_laplacian_energy_gradient(field, surface_weights_, cfg_.beta, &g);
        return g;
    }

    // fold-over check relative to the step start: no surface triangle may flip
    // against its start orientation, and no tet that started positive may
    // invert. Elements already degenerate at step start are exempt.
    bool valid(const std::vector<Vec3>& w) const {
        auto s = positions_at_full(w);
        for (const auto& t : source_->surface.triangles) {
            Vec3 before = (start_.surface.vertices[t[1]] - start_.surface.vertices[t[0]])
                              .cross(start_.surface.vertices[t[2]] - start_.surface.vertices[t[0]]);
            if (before.squaredNorm() < kDegenerateArea * kDegenerateArea) continue;
            Vec3 after = (s.first[t[1]] - s.first[t[0]]).cross(s.first[t[2]] - s.first[t[0]]);
            if (before.dot(after) <= 0.0) return false;
        }
        for (const auto& t : source_->tet_mesh.tets) {
            if (tet_signed_volume(start_.tet[t[0]], start_.tet[t[1]], start_.tet[t[2]],
                                  start_.tet[t[3]]) <= 0.0)
                continue;
            if (tet_signed_volume(s.second[t[0]], s.second[t[1]], s.second[t[2]],
                                  s.second[t[3]]) <= 0.0)
                return false;
        }
        return true;
    }

    const RegistrationConfig& config() const { return cfg_; }

  private:
    std::pair<std::vector<Vec3>, std::vector<Vec3>> positions_at(
        const std::vector<Vec3>& w) const {
        std::vector<Vec3> surf(n_surf_);
        Eigen::MatrixXd wb(n_surf_, 3);
        for (int i = 0; i < n_surf_; ++i) {
            surf[i] = start_.surface.vertices[i] + w[i];
            wb.row(i) = w[i].transpose();
        }
        Eigen::MatrixXd uc = cl_map_ * wb;
        std::vector<Vec3> cl(start_.cl.size());
        for (std::size_t n = 0; n < cl.size(); ++n)
            cl[n] = start_.cl[n] + Vec3(uc.row(n).transpose());
        return {std::move(surf), std::move(cl)};
    }

    // surface positions plus full tet positions (for the validity check)
    std::pair<std::vector<Vec3>, std::vector<Vec3>> positions_at_full(
        const std::vector<Vec3>& w) const {
        std::vector<Vec3> surf(n_surf_);
        std::vector<Vec3> tet = start_.tet;
        Eigen::MatrixXd wb(n_surf_, 3);
        for (int i = 0; i < n_surf_; ++i) {
            surf[i] = start_.surface.vertices[i] + w[i];
            tet[i] = surf[i];
            wb.row(i) = w[i].transpose();
        }
        if (harmonic_.rows() > 0) {
            Eigen::MatrixXd ui = harmonic_ * wb;
            for (int i = 0; i < harmonic_.rows(); ++i)
                tet[n_surf_ + i] += Vec3(ui.row(i).transpose());
        }
        return {std::move(surf), std::move(tet)};
    }

    const LobeModel* source_;
    const LobeModel* target_;
    RegistrationConfig cfg_;
    detail::DeformState start_;
    int n_surf_ = 0, n_tet_ = 0;
    EdgeWeights surface_weights_;
    Eigen::MatrixXd harmonic_;  // (n_tet - n_surf) x n_surf
    std::vector<BarycentricBinding> cl_bind_;
    Eigen::MatrixXd cl_map_;  // n_centerline x n_surf
};

// ---------------------------------------------------------------------------
// Full pipeline

inline RegistrationResult register_lobe(const LobeModel& source, const LobeModel& target,
                                        const RegistrationConfig& cfg,
                                        const std::vector<Landmark>& surface_landmarks = {},
                                        const std::vector<Landmark>& bronchus_landmarks = {}) {
    cfg.validate();
    auto [lo, hi] = bounding_box(source.surface.vertices);
    const double diag = (hi - lo).norm();
    const double step_cap = cfg.step_cap_factor * diag;

    detail::DeformState state = detail::DeformState::from_model(source);
    RegistrationResult result;

    if (cfg.run_affine) {
        auto aff = step1_global_affine(source, target, cfg);
        result.global_affine = aff.transform;
        result.traces.push_back(aff.trace);
        for (auto& v : state.surface.vertices) v = aff.transform(v);
        for (auto& v : state.tet) v = aff.transform(v);
        for (auto& v : state.cl) v = aff.transform(v);
        update_normals(state.surface);
    }

    if (cfg.run_pwa) {
        PiecewiseAffineProblem prob(state, source, target, cfg);
        std::vector<Vec3> u(prob.dof_count(), Vec3::Zero());
        result.traces.push_back(Step2Runner::run(prob, &u, step_cap));
        state = prob.state_at(u);
    }

    if (cfg.run_local) {
        LocalRefinementProblem prob(state, source, target, cfg);
        std::vector<Vec3> w(state.surface.vertices.size(), Vec3::Zero());
        auto trace = detail::descend(
            &w, step_cap, "local", cfg,
            [&](const std::vector<Vec3>& ww) { return prob.correspond(prob.state_at(ww)); },
            [&](const std::vector<Vec3>& ww, const Correspondences& c) {
                return prob.objective(ww, c).total;
            },
            [&](const std::vector<Vec3>& ww, const Correspondences& c) {
                return prob.gradient(ww, c);
            },
            [&](const std::vector<Vec3>& ww) { return prob.valid(ww); });
        result.traces.push_back(std::move(trace));
        state = prob.state_at(w);
    }

    // assemble the deformed model and displacement fields
    result.deformed = source;
    result.deformed.surface = state.surface;
    result.deformed.tet_mesh.vertices = state.tet;
    for (std::size_t i = 0; i < state.cl.size(); ++i)
        result.deformed.centerline.nodes[i].position = state.cl[i];
    result.surface_displacement.resize(state.surface.vertices.size());
    for (std::size_t i = 0; i < state.surface.vertices.size(); ++i)
        result.surface_displacement[i] =
            state.surface.vertices[i] - source.surface.vertices[i];
    result.tet_displacement.resize(state.tet.size());
    for (std::size_t i = 0; i < state.tet.size(); ++i)
        result.tet_displacement[i] = state.tet[i] - source.tet_mesh.vertices[i];
    result.centerline_displacement.resize(state.cl.size());
    for (std::size_t i = 0; i < state.cl.size(); ++i)
        result.centerline_displacement[i] =
            state.cl[i] - source.centerline.nodes[i].position;

    std::vector<Vec3> def_surf_lm, tgt_surf_lm, def_br_lm, tgt_br_lm;
    for (const auto& lm : surface_landmarks) {
        def_surf_lm.push_back(state.surface.vertices[lm.index]);
        tgt_surf_lm.push_back(lm.deflated);
    }
    for (const auto& lm : bronchus_landmarks) {
        def_br_lm.push_back(state.cl[lm.index]);
        tgt_br_lm.push_back(lm.deflated);
    }
    result.metrics = compute_metric_report(
        result.deformed.surface, result.deformed.centerline, target.surface,
        target.centerline, def_surf_lm, tgt_surf_lm, def_br_lm, tgt_br_lm);
    return result;
}

struct LobePair {
    LobeModel inflated;
    LobeModel deflated;
    std::vector<Landmark> surface_landmarks;
    std::vector<Landmark> bronchus_landmarks;
};

struct CaseResult {
    RegistrationResult upper;
    RegistrationResult lower;
};

// Lobes are registered independently; each carries its own transform and
// deformation field.
inline CaseResult register_case(const LobePair& upper, const LobePair& lower,
                                const RegistrationConfig& cfg) {
    CaseResult r;
    r.upper = register_lobe(upper.inflated, upper.deflated, cfg, upper.surface_landmarks,
                            upper.bronchus_landmarks);
    r.lower = register_lobe(lower.inflated, lower.deflated, cfg, lower.surface_landmarks,
                            lower.bronchus_landmarks);
    return r;
}

}  // namespace lungreg
