#pragma once

// Shape-difference measures: the bidirectional normal-aware surface distance
// and one-way centerline distance used by the registration objective, plus
// the evaluation metrics (mean distance, Hausdorff, centerline distances,
// target registration error).

#include "lungreg/geometry.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace lungreg {

struct CorrespondencePair {
    int query = -1;
    int match = -1;
    double distance = 0.0;  // pure Euclidean distance [mm]
};

struct MetricSummary {
    double mean = 0.0;
    double sd = 0.0;
};

struct MetricReport {
    double mean_distance = 0.0;
    double hausdorff = 0.0;
    double centerline_mean = 0.0;
    double centerline_max = 0.0;
    std::vector<double> tre_surface;
    std::vector<double> tre_bronchus;
};

// A tracked anatomical point: a vertex or centerline node of the inflated
// model paired with its known position in the deflated model.
struct Landmark {
    bool on_surface = true;
    int index = -1;       // surface vertex index or centerline node index
    Vec3 inflated = Vec3::Zero();
    Vec3 deflated = Vec3::Zero();
};

inline MetricSummary summarize(const std::vector<double>& values) {
    MetricSummary s;
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    double var = 0.0;
    for (double v : values) var += (v - s.mean) * (v - s.mean);
    s.sd = values.size() > 1 ? std::sqrt(var / (values.size() - 1)) : 0.0;
    return s;
}

// Closest target vertex under the normal-compatibility score
// |v - v_p| + gamma * (1 - n . n_p); the reported distance is the pure
// Euclidean distance to the selected vertex. Ties break to the lowest index.
inline CorrespondencePair normal_aware_closest_point(const Vec3& v, const Vec3& n,
                                                     const TriangleSurface& target,
                                                     double gamma) {
    if (target.vertices.empty())
        throw std::invalid_argument("normal_aware_closest_point: empty target surface");
    if (target.normals.size() != target.vertices.size())
        throw std::invalid_argument("normal_aware_closest_point: target has no normals");
    double best_score = std::numeric_limits<double>::max();
    int best = -1;
    for (std::size_t p = 0; p < target.vertices.size(); ++p) {
        double score = (v - target.vertices[p]).norm() +
                       gamma * (1.0 - n.dot(target.normals[p]));
        if (score < best_score) {
            best_score = score;
            best = static_cast<int>(p);
        }
    }
    CorrespondencePair out;
    out.match = best;
    out.distance = (v - target.vertices[best]).norm();
    return out;
}

// Bidirectional mean of normal-aware minimum point distances; symmetric in
// its two arguments.
inline double surface_distance(const TriangleSurface& src, const TriangleSurface& tgt,
                               double gamma) {
    if (src.vertices.empty() || tgt.vertices.empty())
        throw std::invalid_argument("surface_distance: empty surface");
    double sum_fwd = 0.0, sum_bwd = 0.0;
    for (std::size_t j = 0; j < src.vertices.size(); ++j)
        sum_fwd += normal_aware_closest_point(src.vertices[j], src.normals[j], tgt, gamma)
                       .distance;
    for (std::size_t k = 0; k < tgt.vertices.size(); ++k)
        sum_bwd += normal_aware_closest_point(tgt.vertices[k], tgt.normals[k], src, gamma)
                       .distance;
    return sum_fwd / src.vertices.size() + sum_bwd / tgt.vertices.size();
}

inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
    Vec3 ab = b - a;
    double len2 = ab.squaredNorm();
    if (len2 < 1e-30) return (p - a).norm();
    double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

// Minimum distance from a point to the centerline polyline (all parent-child
// segments; an isolated root degenerates to point distance).
inline double point_centerline_distance(const Vec3& p, const CenterlineTree& c) {
    double best = std::numeric_limits<double>::max();
    bool has_segment = false;
    for (const auto& n : c.nodes) {
        if (n.parent < 0) continue;
        has_segment = true;
        best = std::min(best, point_segment_distance(p, c.nodes[n.parent].position,
                                                     n.position));
    }
    if (!has_segment)
        best = (p - c.nodes[c.root()].position).norm();
    return best;
}

// One-way: mean distance from each *target* node to the source polyline.
// Extra source branches without target counterparts are never penalized.
inline double centerline_one_way_distance(const CenterlineTree& src,
                                          const CenterlineTree& tgt) {
    if (src.nodes.empty() || tgt.nodes.empty())
        throw std::invalid_argument("centerline_one_way_distance: empty centerline");
    double sum = 0.0;
    for (const auto& n : tgt.nodes) sum += point_centerline_distance(n.position, src);
    return sum / tgt.nodes.size();
}

inline double centerline_one_way_max(const CenterlineTree& src, const CenterlineTree& tgt) {
    double m = 0.0;
    for (const auto& n : tgt.nodes)
        m = std::max(m, point_centerline_distance(n.position, src));
    return m;
}

// Symmetric Hausdorff distance over vertex sets (pure geometry, no normal
// term).
inline double hausdorff_distance(const TriangleSurface& a, const TriangleSurface& b) {
    if (a.vertices.empty() || b.vertices.empty())
        throw std::invalid_argument("hausdorff_distance: empty surface");
    auto directed = [](const TriangleSurface& from, const TriangleSurface& to) {
        double worst = 0.0;
        for (const auto& v : from.vertices) {
            double best = std::numeric_limits<double>::max();
            for (const auto& w : to.vertices) best = std::min(best, (v - w).norm());
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(a, b), directed(b, a));
}

inline std::vector<double> target_registration_error(const std::vector<Vec3>& deformed,
                                                     const std::vector<Vec3>& target) {
    if (deformed.size() != target.size())
        throw std::invalid_argument("target_registration_error: landmark count mismatch");
    std::vector<double> out;
    out.reserve(deformed.size());
    for (std::size_t i = 0; i < deformed.size(); ++i)
        out.push_back((deformed[i] - target[i]).norm());
    return out;
}

// Evaluation-metric bundle for a registered pair. Mean/Hausdorff distances are
// computed with gamma = 0 (pure geometry); the normal term only steers the
// registration loss.
inline MetricReport compute_metric_report(const TriangleSurface& deformed_surface,
                                          const CenterlineTree& deformed_centerline,
                                          const TriangleSurface& target_surface,
                                          const CenterlineTree& target_centerline,
                                          const std::vector<Vec3>& deformed_surface_landmarks,
                                          const std::vector<Vec3>& target_surface_landmarks,
                                          const std::vector<Vec3>& deformed_bronchus_landmarks,
                                          const std::vector<Vec3>& target_bronchus_landmarks) {
    MetricReport r;
    r.mean_distance = surface_distance(deformed_surface, target_surface, 0.0) / 2.0;
    r.hausdorff = hausdorff_distance(deformed_surface, target_surface);
    r.centerline_mean = centerline_one_way_distance(deformed_centerline, target_centerline);
    r.centerline_max = centerline_one_way_max(deformed_centerline, target_centerline);
    r.tre_surface =
        target_registration_error(deformed_surface_landmarks, target_surface_landmarks);
    r.tre_bronchus =
        target_registration_error(deformed_bronchus_landmarks, target_bronchus_landmarks);
    return r;
}

}  // namespace lungreg
