#include "ifs/affine_construction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ifs/error.hpp"
#include "ifs/hutchinson.hpp"
#include "ifs/minimality.hpp"

namespace ifs {

double rotation_sign(int m) { return m % 2 == 0 ? -1.0 : 1.0; }

AffineMapd rotation_R(int m) {
    if (m < 2) throw Error("rotation_R needs m >= 2", {{"m", m}});
    Mat r = Mat::Zero(m, m);
    r(0, m - 1) = rotation_sign(m);
    for (int i = 1; i < m; ++i) r(i, i - 1) = 1;
    return AffineMapd(r, Vec::Zero(m));
}

namespace {

void validate(const AffineParams& p) {
    if (p.m < 2) throw Error("AffineParams: m must be >= 2", {{"m", p.m}});
    if (p.v.size() != p.m - 1) throw Error("AffineParams: v must hold v_2..v_m", {{"m", p.m}, {"len_v", p.v.size()}});
}

}  // namespace

AffineMapd build_S(const AffineParams& p) {
    validate(p);
    Vec shift = Vec::Zero(p.m);
    shift[0] = p.s;
    return AffineMapd(p.r * rotation_R(p.m).linear(), shift);
}

AffineMapd build_T(const AffineParams& p) {
    validate(p);
    Vec diag = Vec::Constant(p.m, p.a);
    diag[0] = -p.a;
    diag[p.m - 1] = -p.a;
    Vec shift = Vec::Zero(p.m);
    shift[p.m - 1] = -rotation_sign(p.m) * 2 * p.s / p.r;
    return AffineMapd(diag.asDiagonal(), shift);
}

AffineMapd build_ST(const AffineParams& p) { return compose(build_S(p), build_T(p)); }

Vec st_closed_form(const AffineParams& p, const Vec& x) {
    const int m = p.m;
    const double ar = p.a * p.r;
    Vec y(m);
    y[0] = -rotation_sign(m) * ar * x[m - 1] - p.s;
    y[1] = -ar * x[0];
    for (int i = 2; i < m; ++i) y[i] = ar * x[i - 1];
    return y;
}

Vec fixed_point_T(const AffineParams& p) {
    validate(p);
    Vec x = Vec::Zero(p.m);
    x[p.m - 1] = -rotation_sign(p.m) * 2 * p.s / (p.r * (p.a + 1));
    return x;
}

Boxd box_B(const AffineParams& p) {
    validate(p);
    Vec half(p.m);
    half[0] = 1;
    half.tail(p.m - 1) = p.v;
    return Boxd{Vec::Zero(p.m), half};
}

MapFamily generators(const AffineParams& p) {
    return MapFamily({{"S", Map(build_S(p))}, {"T", Map(build_T(p))}});
}

MapFamily blending_family(const AffineParams& p) {
    return MapFamily({{"S", Map(build_S(p))}, {"ST", Map(build_ST(p))}});
}

bool ConditionReport::all_pass() const { return failures().empty(); }

std::vector<std::string> ConditionReport::failures() const {
    std::vector<std::string> out;
    for (const auto* group : {&basic, &box, &expanded})
        for (const auto& q : *group)
            if (!q.pass()) out.push_back(q.name);
    if (!fixed_point_inside.pass()) out.push_back(fixed_point_inside.name);
    return out;
}

ConditionReport check_conditions(const AffineParams& p) {
    validate(p);
    ConditionReport rep;
    rep.basic = {{"r > 0", p.r, 0}, {"1 > r", 1, p.r}, {"s > 0", p.s, 0}, {"a > 1", p.a, 1}, {"1 > a r", 1, p.a * p.r}};
    const int m = p.m;
    const double vm = p.v[m - 2];
    auto inequalities = [&](double c, const std::string& tag) {
        std::vector<Inequality> out;
        out.push_back({tag + " v_m + s > 1", c * vm + p.s, 1});
        out.push_back({"0 > -" + tag + " v_m + s", 0, -c * vm + p.s});
        out.push_back({tag + " > v_2", c, p.v[0]});
        for (int i = 2; i < m; ++i)
            out.push_back({tag + " v_" + std::to_string(i) + " > v_" + std::to_string(i + 1), c * p.v[i - 2], p.v[i - 1]});
        return out;
    };
    rep.box = inequalities(p.r, "r");
    rep.expanded = inequalities(p.a * p.r, "a r");
    rep.fixed_point_inside = {"v_m r (a+1) > 2 s", vm * p.r * (p.a + 1), 2 * p.s};
    return rep;
}

CoverReport box_covering(const AffineParams& p, double spacing) {
    const Boxd b = box_B(p);
    const AffineMapd s_inv = build_S(p).inverse();
    const AffineMapd st_inv = build_ST(p).inverse();
    std::vector<Membership> pieces{
        [b, s_inv](const Vec& x) { return b.contains(s_inv(x)); },
        [b, st_inv](const Vec& x) { return b.contains(st_inv(x)); },
    };
    return covering_test(Region(b), pieces, Grid(Region(b), spacing));
}

namespace {

AffineParams candidate(int m, double r, double a) {
    AffineParams p;
    p.m = m;
    p.r = r;
    p.a = a;
    p.v.resize(m - 1);
    if (m == 2) {
        p.v[0] = std::sqrt(0.99 * 0.9) * r;
    } else {
        for (int i = 0; i < m - 1; ++i)
            p.v[i] = 0.99 * r * std::pow(0.9 / 0.99, static_cast<double>(i) / (m - 2));
    }
    const double vm = p.v[m - 2];
    p.s = 1 - vm * vm;
    return p;
}

bool pipeline_gate(const AffineParams& p, const SearchOptions& options, double spacing) {
    const MapFamily family = blending_family(p);
    CertifyOptions co;
    co.spacing = spacing;
    const auto cert = certify(family, Region(box_B(p)), co);
    if (!cert.passed) return false;
    const Balld outer = absorbing_ball(family, Balld{Vec::Zero(p.m), 1e-9});
    return std::pow(cert.kappa, options.blender_generations) * outer.radius <= options.blender_resolution;
}

}  // namespace

AffineParams find_parameters(int m, const SearchOptions& options) {
    if (m < 2) throw Error("find_parameters needs m >= 2", {{"m", m}});
    const double h = options.spacing > 0 ? options.spacing : default_spacing(m);
    nlohmann::json tried = nlohmann::json::array();
    for (int i = 0;; ++i) {
        const double r = std::round((options.r_start - i * options.r_step) * 1e12) / 1e12;
        if (r < options.r_stop - 1e-12) break;
        const AffineParams p = candidate(m, r, options.a);
        std::string verdict = "accepted";
        if (!check_conditions(p).all_pass()) {
            verdict = "conditions";
        } else if (!box_covering(p, h).covered) {
            verdict = "covering";
        } else if (m == 2 && options.pipeline_gate && !pipeline_gate(p, options, h)) {
            verdict = "pipeline";
        }
        if (verdict == "accepted") return p;
        tried.push_back({{"r", r}, {"failed", verdict}});
    }
    throw Error("find_parameters: search schedule exhausted", {{"m", m}, {"tried", tried}});
}

AffineParams rescale(const AffineParams& p, double delta) {
    if (!(delta > 0)) throw Error("rescale: delta must be positive");
    AffineParams out = p;
    out.s = delta * p.s;
    return out;
}

std::vector<Vec> CoverPlan::translations() const {
    std::vector<Vec> out;
    out.reserve(centers.size());
    for (const auto& b : centers) out.push_back(delta * b);
    return out;
}

CoverPlan cover_unit_ball(double lambda, int m, double delta, double margin, double spacing) {
    if (!(lambda > 0)) throw Error("cover_unit_ball: lambda must be positive");
    if (m < 1) throw Error("cover_unit_ball: m must be >= 1");
    CoverPlan plan;
    plan.m = m;
    plan.lambda = lambda;
    plan.delta = delta;
    plan.spacing = spacing > 0 ? spacing : (m <= 3 ? 0.005 : 0.05);
    if (lambda >= 1) {
        plan.centers.push_back(Vec::Zero(m));
        return plan;
    }

    const double d = lambda / std::sqrt(static_cast<double>(m));
    const double reach = 1 + lambda / 2;
    const long n = static_cast<long>(std::ceil(reach / d)) + 1;
    std::vector<Vec> lattice;
    std::vector<long> z(static_cast<std::size_t>(m), -n);
    for (;;) {
        Vec q(m);
        for (int i = 0; i < m; ++i) q[i] = d * static_cast<double>(z[static_cast<std::size_t>(i)]);
        const double norm = q.norm();
        if (norm <= reach + 1e-12) lattice.push_back(norm > 1 ? Vec(q / norm) : q);
        int k = 0;
        while (k < m && ++z[static_cast<std::size_t>(k)] > n) z[static_cast<std::size_t>(k++)] = -n;
        if (k == m) break;
    }
    std::sort(lattice.begin(), lattice.end(), lex_less);
    lattice.erase(std::unique(lattice.begin(), lattice.end(),
                              [](const Vec& a, const Vec& b) { return (a - b).norm() < 1e-12; }),
                  lattice.end());

    const Region unit(Balld{Vec::Zero(m), 1.0});
    const PointCloud grid = Grid(unit, plan.spacing).points();
    const double reach_eff = lambda - margin - plan.spacing * std::sqrt(static_cast<double>(m)) / 2;
    std::vector<std::vector<std::size_t>> covers(lattice.size());
    std::vector<int> count(grid.size(), 0);
    for (std::size_t c = 0; c < lattice.size(); ++c)
        for (std::size_t g = 0; g < grid.size(); ++g)
            if ((grid[g] - lattice[c]).norm() <= reach_eff) {
                covers[c].push_back(g);
                ++count[g];
            }
    for (std::size_t g = 0; g < grid.size(); ++g)
        if (count[g] == 0) throw Error("cover_unit_ball: lattice does not cover the unit ball", {{"lambda", lambda}});

    std::vector<std::size_t> order(lattice.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return lattice[a].norm() < lattice[b].norm() - 1e-12; });
    std::vector<char> keep(lattice.size(), 1);
    for (std::size_t c : order) {
        const bool redundant =
            std::all_of(covers[c].begin(), covers[c].end(), [&](std::size_t g) { return count[g] >= 2; });
        if (!redundant) continue;
        keep[c] = 0;
        for (std::size_t g : covers[c]) --count[g];
    }
    for (std::size_t c = 0; c < lattice.size(); ++c)
        if (keep[c]) plan.centers.push_back(lattice[c]);
    return plan;
}

TranslatedFamily translated_family(const CoverPlan& plan, double contraction) {
    if (!(contraction > 0 && contraction < 1)) throw Error("translated_family: contraction must lie in (0,1)");
    if (contraction < plan.lambda) throw Error("translated_family: contraction below the cover radius");
    TranslatedFamily out;
    out.plan = plan;
    out.contraction = contraction;
    std::vector<LabeledMap> maps;
    const auto shifts = plan.translations();
    for (std::size_t i = 0; i < shifts.size(); ++i)
        maps.push_back({"b" + std::to_string(i + 1), Map(AffineMapd(contraction * Mat::Identity(plan.m, plan.m), shifts[i]))});
    out.family = MapFamily(std::move(maps));
    out.domain = Balld{Vec::Zero(plan.m), plan.delta};
    return out;
}

}  // namespace ifs
