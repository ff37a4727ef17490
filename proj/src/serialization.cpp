#include "ifs/serialization.hpp"

#include "ifs/error.hpp"

namespace ifs {

json to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec vec_from_json(const json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json to_json(const Mat& a) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(a.size()));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index k = 0; k < a.cols(); ++k) flat.push_back(a(i, k));
    return flat;
}

Mat mat_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
    const auto flat = j.get<std::vector<double>>();
    if (static_cast<Eigen::Index>(flat.size()) != rows * cols)
        throw Error("matrix has the wrong number of entries", {{"expected", rows * cols}, {"got", flat.size()}});
    Mat a(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index k = 0; k < cols; ++k) a(i, k) = flat[static_cast<std::size_t>(i * cols + k)];
    return a;
}

json to_json(const Balld& b) { return {{"kind", "ball"}, {"center", to_json(b.center)}, {"radius", b.radius}}; }

Balld ball_from_json(const json& j) { return Balld{vec_from_json(j.at("center")), j.at("radius").get<double>()}; }

json to_json(const Region& r) {
    if (r.is_ball()) return to_json(r.ball());
    return {{"kind", "box"}, {"center", to_json(r.box().center)}, {"halfwidths", to_json(r.box().halfwidths)}};
}

Region region_from_json(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "ball") return Region(ball_from_json(j));
    if (kind == "box") return Region(Boxd{vec_from_json(j.at("center")), vec_from_json(j.at("halfwidths"))});
    throw Error("unknown region kind", {{"kind", kind}});
}

json to_json(const LabeledMap& m) {
    json j{{"label", m.label}};
    if (m.map.is_affine()) {
        const auto& f = m.map.affine();
        j["kind"] = "affine";
        j["matrix"] = to_json(f.linear());
        j["shift"] = to_json(f.shift());
    } else if (m.map.is_bump()) {
        const auto& b = m.map.bump();
        j["kind"] = "bump-perturbed";
        j["matrix"] = to_json(b.base.linear());
        j["shift"] = to_json(b.base.shift());
        j["center"] = to_json(b.center);
        j["radius"] = b.radius;
        j["amplitude"] = b.amplitude;
        j["direction"] = to_json(b.direction);
    } else {
        throw Error("black-box maps cannot be serialized", {{"label", m.label}});
    }
    return j;
}

LabeledMap labeled_map_from_json(const json& j, Eigen::Index dim) {
    const auto label = j.at("label").get<std::string>();
    const auto kind = j.at("kind").get<std::string>();
    AffineMapd base(mat_from_json(j.at("matrix"), dim, dim), vec_from_json(j.at("shift")));
    if (base.shift().size() != dim) throw Error("shift has the wrong dimension", {{"label", label}});
    if (kind == "affine") {
        if (std::abs(base.determinant()) == 0) throw Error("affine map is singular", {{"label", label}});
        return {label, Map(std::move(base))};
    }
    if (kind == "bump-perturbed")
        return {label, Map(BumpPerturbedMap{std::move(base), vec_from_json(j.at("center")), j.at("radius").get<double>(),
                                            j.at("amplitude").get<double>(), vec_from_json(j.at("direction"))})};
    throw Error("unknown map kind", {{"kind", kind}, {"label", label}});
}

json to_json(const MapFamily& f) {
    json maps = json::array();
    for (const auto& m : f.members()) maps.push_back(to_json(m));
    return {{"dim", f.dim()}, {"maps", maps}};
}

MapFamily family_from_json(const json& j) {
    const auto dim = j.at("dim").get<Eigen::Index>();
    if (dim < 1) throw Error("family dimension must be positive");
    std::vector<LabeledMap> maps;
    for (const auto& m : j.at("maps")) maps.push_back(labeled_map_from_json(m, dim));
    return MapFamily(std::move(maps));
}

json to_json(const AffineParams& p) {
    return {{"m", p.m}, {"r", p.r}, {"s", p.s}, {"a", p.a}, {"v", to_json(p.v)}};
}

AffineParams params_from_json(const json& j) {
    const json& q = j.contains("params") ? j.at("params") : j;
    AffineParams p;
    p.m = q.at("m").get<int>();
    p.r = q.at("r").get<double>();
    p.s = q.at("s").get<double>();
    p.a = q.at("a").get<double>();
    p.v = vec_from_json(q.at("v"));
    if (p.m < 2 || p.v.size() != p.m - 1) throw Error("params: v must hold v_2..v_m", {{"m", p.m}});
    return p;
}

json params_document(const AffineParams& p) {
    return {{"params", to_json(p)}, {"generators", to_json(generators(p))}, {"family", to_json(blending_family(p))}};
}

json to_json(const ConditionReport& r) {
    auto group = [](const std::vector<Inequality>& items) {
        json out = json::array();
        for (const auto& q : items)
            out.push_back({{"name", q.name}, {"lhs", q.lhs}, {"rhs", q.rhs}, {"slack", q.slack()}, {"pass", q.pass()}});
        return out;
    };
    const auto& f = r.fixed_point_inside;
    return {{"basic", group(r.basic)},
            {"box", group(r.box)},
            {"expanded", group(r.expanded)},
            {"fixed_point_inside", {{"name", f.name}, {"lhs", f.lhs}, {"rhs", f.rhs}, {"slack", f.slack()}, {"pass", f.pass()}}},
            {"all_pass", r.all_pass()},
            {"failures", r.failures()}};
}

json to_json(const CoverReport& r, std::size_t max_witnesses) {
    json w = json::array();
    for (std::size_t i = 0; i < std::min(max_witnesses, r.witnesses.size()); ++i) w.push_back(to_json(r.witnesses[i]));
    return {{"covered", r.covered}, {"spacing", r.spacing}, {"checked", r.checked},
            {"uncovered", r.witnesses.size()}, {"witnesses", w}};
}

json to_json(const MinimalityCertificate& c) {
    json checks = json::array();
    for (const auto& h : c.checks) checks.push_back({{"name", h.name}, {"pass", h.pass}, {"detail", h.detail}});
    return {{"family", to_json(c.family)},
            {"domain", to_json(c.domain)},
            {"working_domain", to_json(c.working_domain)},
            {"lambda", c.lambda},
            {"kappa", c.kappa},
            {"rho", c.rho},
            {"delta", c.delta},
            {"n0", c.n0},
            {"density", c.density},
            {"density_by_length", c.density_by_length},
            {"k", c.k},
            {"spacing", c.spacing},
            {"checks", checks},
            {"passed", c.passed}};
}

MinimalityCertificate certificate_from_json(const json& j) {
    MinimalityCertificate c;
    c.family = family_from_json(j.at("family"));
    c.domain = region_from_json(j.at("domain"));
    c.working_domain = region_from_json(j.at("working_domain"));
    c.lambda = j.at("lambda").get<double>();
    c.kappa = j.at("kappa").get<double>();
    c.rho = j.at("rho").get<double>();
    c.delta = j.at("delta").get<double>();
    c.n0 = j.at("n0").get<std::size_t>();
    c.density = j.at("density").get<double>();
    c.density_by_length = j.at("density_by_length").get<std::vector<double>>();
    c.k = j.at("k").get<int>();
    c.spacing = j.at("spacing").get<double>();
    for (const auto& h : j.at("checks")) c.checks.push_back({h.at("name"), h.at("pass"), h.at("detail")});
    c.passed = j.at("passed").get<bool>();
    attach_anchors(c);
    return c;
}

json to_json(const BranchPlan& p, const MapFamily& family) {
    json phases = json::array(), labels = json::array(), endpoints = json::array();
    for (const auto& ph : p.phases)
        phases.push_back({{"step", ph.step}, {"case", std::string(1, ph.phase)}, {"member", ph.member}});
    for (auto w : p.word) labels.push_back(family[w].label);
    for (const auto& e : p.endpoints) endpoints.push_back(to_json(e));
    return {{"start", to_json(p.start)},
            {"target", to_json(p.target)},
            {"aim", to_json(p.aim)},
            {"word", p.word},
            {"labels", labels},
            {"phases", phases},
            {"endpoints", endpoints},
            {"first_step", p.first_step},
            {"next_step", p.next_step},
            {"blocks", p.blocks},
            {"pullbacks", p.pullbacks},
            {"block_word", p.block_word},
            {"length", p.word.size()}};
}

json to_json(const TrialReport& r) {
    return {{"eps", r.eps},
            {"precheck_passed", r.precheck_passed},
            {"reason", r.reason},
            {"trials", r.trials},
            {"branches", r.branches},
            {"successes", r.successes},
            {"success_rate", r.success_rate()},
            {"max_length", r.max_length},
            {"step_bound", r.step_bound},
            {"slack", r.slack},
            {"failures", r.failures}};
}

json to_json(const BlenderReport& r) {
    json gens = json::array();
    for (const auto& g : r.generations)
        gens.push_back({{"generation", g.generation}, {"strips", g.strips}, {"pruned", g.pruned},
                        {"max_radius", g.max_radius}, {"covered", g.covered}, {"uncovered", g.uncovered}});
    json w = json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(64, r.witnesses.size()); ++i) w.push_back(to_json(r.witnesses[i]));
    return {{"n_max", r.n_max},
            {"spacing", r.spacing},
            {"precheck", r.precheck},
            {"precheck_detail", r.precheck_detail},
            {"generations", gens},
            {"decay_ratios", r.decay_ratios},
            {"domination", r.domination},
            {"pruned_total", r.pruned_total},
            {"witnesses", w},
            {"lamination_check", "strip-density proxy only"},
            {"passed", r.passed}};
}

json to_json(const MixingReport& r) {
    return {{"mixing", r.mixing}, {"first_time", r.first_time}, {"samples", r.samples}, {"hits", r.hits}};
}

}  // namespace ifs
