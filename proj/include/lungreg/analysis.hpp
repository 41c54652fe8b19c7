#pragma once

// Downstream heterogeneity analysis of a recovered deformation field:
// decomposition of each displacement into a contraction component (along the
// line to the hilum) and a rotation remainder, per-branch strain estimation
// along airway paths and in the surrounding parenchyma, and a two-region
// comparison test.

#include "lungreg/geometry.hpp"
#include "lungreg/metrics.hpp"

#include <ostream>

namespace lungreg {

struct AnalysisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DisplacementDecomposition {
    Vec3 contraction = Vec3::Zero();  // along the hilum-to-point direction
    Vec3 rotation = Vec3::Zero();     // remainder, u = contraction + rotation
};

// v: hilum-centered rest position, u: displacement in hilum-centered frame
// (i.e. phi(v) - v with both ends measured from their respective hila).
// contraction = ((|phi v| - |v|) / |v|) v; rotation = u - contraction.
inline DisplacementDecomposition decompose_displacement(const Vec3& v, const Vec3& u) {
    double len = v.norm();
    if (len <= 1e-6)
        throw AnalysisError("decompose_displacement: point coincides with the hilum");
    DisplacementDecomposition d;
    double deformed_len = (v + u).norm();
    d.contraction = ((deformed_len - len) / len) * v;
    d.rotation = u - d.contraction;
    return d;
}

// Deformation field in hilum-centered coordinates: positions are measured
// from the inflated hilum, displacements carry each point to its deflated
// position measured from the deflated hilum. The root displacement is zero
// by construction.
struct DeformationField {
    Vec3 hilum_inflated = Vec3::Zero();
    Vec3 hilum_deflated = Vec3::Zero();
    std::vector<Vec3> surface_v, surface_u;
    std::vector<Vec3> centerline_v, centerline_u;
};

// `deformed` must share topology with `source` (a registration output or a
// ground-truth deformed copy).
inline DeformationField make_deformation_field(const LobeModel& source,
                                               const LobeModel& deformed) {
    if (deformed.surface.vertices.size() != source.surface.vertices.size() ||
        deformed.centerline.nodes.size() != source.centerline.nodes.size())
        throw AnalysisError("make_deformation_field: topology mismatch");
    DeformationField f;
    f.hilum_inflated = source.hilum();
    f.hilum_deflated = deformed.hilum();
    f.surface_v.reserve(source.surface.vertices.size());
    f.surface_u.reserve(source.surface.vertices.size());
    for (std::size_t i = 0; i < source.surface.vertices.size(); ++i) {
        Vec3 v = source.surface.vertices[i] - f.hilum_inflated;
        f.surface_v.push_back(v);
        f.surface_u.push_back(deformed.surface.vertices[i] - f.hilum_deflated - v);
    }
    for (std::size_t i = 0; i < source.centerline.nodes.size(); ++i) {
        Vec3 v = source.centerline.nodes[i].position - f.hilum_inflated;
        f.centerline_v.push_back(v);
        f.centerline_u.push_back(deformed.centerline.nodes[i].position - f.hilum_deflated -
                                 v);
    }
    return f;
}

// Cauchy strain: length change over reference length. The deflated state is
// the reference, so a contraction from 10mm to 8mm has strain 0.25.
inline double cauchy_strain(double reference_length, double length_change) {
    if (reference_length <= 0.0)
        throw AnalysisError("cauchy_strain: reference length must be positive");
    return length_change / reference_length;
}

// One airway path root -> terminal plus the pleural surface point pierced by
// the ray from the hilum through the terminal.
struct BranchSample {
    int terminal = -1;
    std::vector<int> path;          // centerline node indices, root first
    Vec3 surface_v = Vec3::Zero();  // hilum-centered inflated surface point
    Vec3 surface_u = Vec3::Zero();  // its displacement
};

inline std::vector<BranchSample> sample_branches(const LobeModel& source,
                                                 const DeformationField& field) {
    std::vector<BranchSample> out;
    for (int term : source.centerline.terminals()) {
        BranchSample b;
        b.terminal = term;
        b.path = source.centerline.path_from_root(term);

        Vec3 dir = field.centerline_v[term];
        double term_r = dir.norm();
        if (term_r <= 1e-9)
            throw AnalysisError("sample_branches: terminal coincides with the hilum");
        dir /= term_r;
        auto hit = ray_surface_intersection(field.hilum_inflated, dir, source.surface,
                                            term_r);
        if (!hit)
            throw AnalysisError("sample_branches: hilum-terminal ray misses the surface");
        b.surface_v = hit->point - field.hilum_inflated;
        const auto& t = source.surface.triangles[hit->triangle];
        b.surface_u = hit->bary[0] * field.surface_u[t[0]] +
                      hit->bary[1] * field.surface_u[t[1]] +
                      hit->bary[2] * field.surface_u[t[2]];
        out.push_back(std::move(b));
    }
    return out;
}

struct BranchStrain {
    int terminal = -1;
    double bronchus_slope = 0.0;       // OLS slope of |s| vs deflated radius
    double parenchyma_gradient = 0.0;  // two-point gradient terminal -> surface
};

struct StrainReport {
    std::vector<double> bronchus_samples;    // per-node |s| / deflated radius
    std::vector<double> parenchyma_samples;  // per-branch gradients
    std::vector<BranchStrain> branches;
    MetricSummary bronchus;    // over bronchus_samples
    MetricSummary parenchyma;  // over parenchyma_samples
};

namespace detail {

// strain sample at a hilum-centered point: ratio of radial shortening to the
// deflated radius
inline std::pair<double, double> radial_sample(const Vec3& v, const Vec3& u) {
    auto d = decompose_displacement(v, u);
    double x = (v + u).norm();  // deflated radius
    if (x <= 1e-9) throw AnalysisError("radial_sample: point collapsed onto the hilum");
    return {x, d.contraction.norm()};
}

inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= x.size();
    my /= x.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx < 1e-12) throw AnalysisError("ols_slope: degenerate abscissa spread");
    return sxy / sxx;
}

}  // namespace detail

inline StrainReport strain_report(const LobeModel& source, const DeformationField& field) {
    StrainReport r;
    auto branches = sample_branches(source, field);
    int root = source.centerline.root();

    // pooled per-node bronchus strains (every non-root centerline node once)
    for (std::size_t n = 0; n < field.centerline_v.size(); ++n) {
        if (static_cast<int>(n) == root) continue;
        auto [x, s] = detail::radial_sample(field.centerline_v[n], field.centerline_u[n]);
        r.bronchus_samples.push_back(cauchy_strain(x, s));
    }

    for (const auto& b : branches) {
        BranchStrain bs;
        bs.terminal = b.terminal;
        std::vector<double> xs, ss;
        for (int n : b.path) {
            if (n == root) continue;
            auto [x, s] = detail::radial_sample(field.centerline_v[n], field.centerline_u[n]);
            xs.push_back(x);
            ss.push_back(s);
        }
        bs.bronchus_slope = xs.size() >= 2 ? detail::ols_slope(xs, ss)
                                           : (xs.empty() ? 0.0 : ss[0] / xs[0]);

        auto [x_t, s_t] =
            detail::radial_sample(field.centerline_v[b.terminal], field.centerline_u[b.terminal]);
        auto [x_p, s_p] = detail::radial_sample(b.surface_v, b.surface_u);
        if (std::abs(x_p - x_t) < 1e-9)
            throw AnalysisError("strain_report: terminal and pleural samples coincide");
        bs.parenchyma_gradient = (s_p - s_t) / (x_p - x_t);
        r.parenchyma_samples.push_back(bs.parenchyma_gradient);
        r.branches.push_back(bs);
    }

    r.bronchus = summarize(r.bronchus_samples);
    r.parenchyma = summarize(r.parenchyma_samples);
    return r;
}

// ---------------------------------------------------------------------------
// Two-region comparison: one-way ANOVA over two sample groups.

struct AnovaResult {
    double f = 0.0;
    double p = 1.0;
    MetricSummary group_a, group_b;
};

namespace detail {

// regularized incomplete beta I_x(a,b) via the standard continued fraction
// (Lentz's method)
inline double betacf(double a, double b, double x) {
    const int kMaxIter = 200;
    const double eps = 3e-14, fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                b * std::log(1.0 - x);
    double front = std::exp(ln);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// upper tail of the F distribution with (d1, d2) degrees of freedom
inline double f_upper_tail(double f, double d1, double d2) {
    if (f <= 0.0) return 1.0;
    return incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

}  // namespace detail

inline AnovaResult compare_regions(const std::vector<double>& a,
                                   const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw AnalysisError("compare_regions: each group needs at least two samples");
    AnovaResult r;
    r.group_a = summarize(a);
    r.group_b = summarize(b);
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double grand = (na * r.group_a.mean + nb * r.group_b.mean) / (na + nb);
    double ss_between = na * (r.group_a.mean - grand) * (r.group_a.mean - grand) +
                        nb * (r.group_b.mean - grand) * (r.group_b.mean - grand);
    double ss_within = (na - 1) * r.group_a.sd * r.group_a.sd +
                       (nb - 1) * r.group_b.sd * r.group_b.sd;
    double d1 = 1.0, d2 = na + nb - 2.0;
    if (ss_within <= 0.0) {
        // zero within-group variance: identical means are indistinguishable,
        // different means are separated with certainty
        r.f = ss_between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        r.p = ss_between > 0.0 ? 0.0 : 1.0;
        return r;
    }
    r.f = (ss_between / d1) / (ss_within / d2);
    r.p = detail::f_upper_tail(r.f, d1, d2);
    return r;
}

// ---------------------------------------------------------------------------
// CSV export of the decomposed field (one record per surface vertex and
// centerline node): origin, total displacement, contraction, rotation, and
// component magnitudes. u = s + r holds per record.

inline void export_field_visualization(const DeformationField& field, std::ostream& os) {
    os << "kind,index,ox,oy,oz,ux,uy,uz,sx,sy,sz,rx,ry,rz,contraction_mag,rotation_mag\n";
    auto row = [&](const char* kind, std::size_t i, const Vec3& v, const Vec3& u) {
        DisplacementDecomposition d;
        if (v.norm() > 1e-6) d = decompose_displacement(v, u);
        else d.rotation = u;  // hilum itself: no radial direction
        os << kind << ',' << i;
        for (const Vec3* p :
             std::initializer_list<const Vec3*>{&v, &u, &d.contraction, &d.rotation})
            for (int k = 0; k < 3; ++k) os << ',' << format_double((*p)[k]);
        os << ',' << format_double(d.contraction.norm()) << ','
           << format_double(d.rotation.norm()) << '\n';
    };
    for (std::size_t i = 0; i < field.surface_v.size(); ++i)
        row("surface", i, field.surface_v[i], field.surface_u[i]);
    for (std::size_t i = 0; i < field.centerline_v.size(); ++i)
        row("centerline", i, field.centerline_v[i], field.centerline_u[i]);
}

}  // namespace lungreg
