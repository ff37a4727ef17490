#include "ifs/minimality.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ifs/error.hpp"
#include "ifs/parallel.hpp"

namespace ifs {

namespace {

nlohmann::json point_json(const Vec& x) { return std::vector<double>(x.data(), x.data() + x.size()); }

nlohmann::json witness_json(const std::vector<Vec>& pts, std::size_t limit = 64) {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = 0; i < std::min(limit, pts.size()); ++i) out.push_back(point_json(pts[i]));
    return out;
}

std::vector<Membership> image_pieces(const MapFamily& family, const Region& domain) {
    std::vector<Membership> pieces;
    for (const auto& member : family.members()) {
        if (member.map.is_affine()) {
            const AffineMapd inv = member.map.affine().inverse();
            pieces.push_back([inv, domain](const Vec& x) { return domain.contains(inv(x)); });
        } else {
            const Map f = member.map;
            pieces.push_back([f, domain](const Vec& x) { return domain.contains(f.inverse(x)); });
        }
    }
    return pieces;
}

}  // namespace

const HypothesisCheck* MinimalityCertificate::failed_check() const {
    for (const auto& c : checks)
        if (!c.pass) return &c;
    return nullptr;
}

int block_bound(double delta, double diameter, double kappa) {
    if (!(kappa > 0 && kappa < 1)) throw Error("block_bound: kappa must lie in (0,1)");
    const double x = std::log(delta / diameter) / std::log(kappa);
    return std::max(1, static_cast<int>(std::floor(x)) + 1);
}

int pullback_bound(double radius, double delta, double kappa) {
    if (radius >= 2 * delta) return 0;
    if (!(kappa > 0 && kappa < 1)) throw Error("pullback_bound: kappa must lie in (0,1)");
    return static_cast<int>(std::floor(std::log(radius / (2 * delta)) / std::log(kappa))) + 1;
}

MinimalityCertificate certify(const MapFamily& family, const Region& domain, const CertifyOptions& options) {
    if (family.dim() != domain.dim()) throw Error("certify: family and domain dimensions differ");
    MinimalityCertificate cert;
    cert.family = family;
    cert.domain = domain;
    cert.working_domain = domain;
    cert.spacing = options.spacing > 0 ? options.spacing : default_spacing(domain.dim());
    const Grid grid(domain, cert.spacing);

    auto finish = [&](HypothesisCheck check) {
        cert.checks.push_back(std::move(check));
        cert.passed = false;
        return cert;
    };

    const auto bounds = lipschitz_bounds(family, domain);
    cert.lambda = bounds.lower;
    cert.kappa = bounds.upper;
    {
        HypothesisCheck c{"contraction", bounds.lower > 0 && bounds.upper < 1, {{"lambda", bounds.lower}, {"kappa", bounds.upper}}};
        if (!c.pass) {
            for (std::size_t i = 0; i < family.size(); ++i) {
                const auto b = lipschitz_bounds(family[i].map, domain);
                if (b.upper >= 1 || b.lower <= 0) {
                    c.detail["member"] = family[i].label;
                    c.detail["member_kappa"] = b.upper;
                    break;
                }
            }
            return finish(std::move(c));
        }
        cert.checks.push_back(std::move(c));
    }
    try {
        cert.working_domain = Region(absorbing_ball(family, Balld{domain.center(), domain.circumradius()}));
    } catch (const Error& e) {
        return finish({"contraction", false, {{"reason", e.what()}}});
    }

    for (const auto& member : family.members())
        if (!member.map.has_inverse())
            return finish({"covering", false, {{"reason", "member has no inverse evaluator"}, {"member", member.label}}});
    const auto pieces = image_pieces(family, domain);
    const CoverReport cover = covering_test(domain, pieces, grid);
    if (!cover.covered)
        return finish({"covering", false,
                       {{"uncovered", cover.witnesses.size()}, {"witnesses", witness_json(cover.witnesses)},
                        {"spacing", cover.spacing}}});
    cert.checks.push_back({"covering", true, {{"checked", cover.checked}, {"spacing", cover.spacing}}});

    cert.rho = lebesgue_radius(pieces, domain, grid).radius;
    cert.delta = options.delta_fraction * cert.rho;
    if (!(cert.delta > 0)) return finish({"lebesgue", false, {{"rho", cert.rho}}});
    cert.checks.push_back({"lebesgue", true, {{"rho", cert.rho}, {"delta", cert.delta}}});

    const double target = cert.delta / 2;
    for (std::size_t n = 1; n <= options.max_word_length; ++n) {
        if (std::pow(static_cast<double>(family.size()), static_cast<double>(n)) > static_cast<double>(options.word_budget))
            break;
        FixedPointSet y = fixed_point_set(family, n, options.word_budget);
        const double d = density_radius(y.points, domain, grid);
        cert.density_by_length.push_back(d);
        if (d <= target) {
            cert.n0 = n;
            cert.density = d;
            cert.anchors = std::move(y);
            break;
        }
    }
    if (cert.n0 == 0)
        return finish({"density", false,
                       {{"target", target}, {"density_by_length", cert.density_by_length},
                        {"max_word_length", options.max_word_length}}});
    cert.checks.push_back({"density", true, {{"n0", cert.n0}, {"density", cert.density}, {"target", target}}});

    cert.k = block_bound(cert.delta, domain.diameter(), cert.kappa);
    cert.passed = true;
    return cert;
}

void attach_anchors(MinimalityCertificate& cert) {
    if (cert.n0 > 0) cert.anchors = fixed_point_set(cert.family, cert.n0);
}

namespace {

struct MapBounds {
    double lower;
    double upper;
};

MapBounds map_bounds(const Map& f, const Region& domain) {
    if (f.is_affine()) {
        const Vec sv = f.affine().singular_values();
        return {sv.minCoeff(), sv.maxCoeff()};
    }
    if (f.is_bump()) {
        const auto& b = f.bump();
        const Vec sv = b.base.singular_values();
        const double wobble = b.amplitude * BumpPerturbedMap::bump_slope() / b.radius;
        return {sv.minCoeff() - wobble, sv.maxCoeff() + wobble};
    }
    const auto lb = lipschitz_bounds(f, domain);
    return {lb.lower * 0.95, lb.upper * 1.05};
}

// Outer bound on the image of D under the maps applied so far.
class ImageTracker {
public:
    explicit ImageTracker(const Region& domain)
        : domain_(domain), composite_(AffineMapd::identity(domain.dim())) {}

    void apply(const Map& f) {
        if (exact_ && f.is_affine()) {
            composite_ = f.affine().after(composite_);
            return;
        }
        if (exact_) {
            const Grid grid(domain_, domain_.diameter() / 24);
            const PointCloud pts = grid.points();
            sample_ = PointCloud(pts.dim());
            for (std::size_t i = 0; i < pts.size(); ++i) sample_.push_back(composite_(Vec(pts[i])));
            slack_ = composite_.singular_values().maxCoeff() * grid.resolution();
            exact_ = false;
        }
        PointCloud next(sample_.dim());
        for (std::size_t i = 0; i < sample_.size(); ++i) next.push_back(f(Vec(sample_[i])));
        sample_ = std::move(next);
        slack_ *= map_bounds(f, domain_).upper;
    }

    /// sup over the image of the distance to c.
    double reach(const Vec& c) const {
        if (exact_) {
            if (domain_.is_box()) {
                double r = 0;
                for (const auto& v : domain_.box().vertices()) r = std::max(r, (composite_(v) - c).norm());
                return r;
            }
            const auto& b = domain_.ball();
            return (composite_(b.center) - c).norm() + composite_.singular_values().maxCoeff() * b.radius;
        }
        double r = 0;
        for (std::size_t i = 0; i < sample_.size(); ++i) r = std::max(r, (sample_[i] - c).norm());
        return r + slack_;
    }

    bool inside(const Balld& ball) const { return reach(ball.center) <= ball.radius; }

private:
    Region domain_;
    bool exact_{true};
    AffineMapd composite_;
    PointCloud sample_;
    double slack_{0};
};

// Family of a sequence at a step, cached for one branch computation.
class StepFamilies {
public:
    explicit StepFamilies(const FamilySequence& seq) : seq_(seq) {}
    const MapFamily& at(std::size_t step) {
        auto it = cache_.find(step);
        if (it == cache_.end()) it = cache_.emplace(step, seq_.at(step)).first;
        return it->second;
    }

private:
    const FamilySequence& seq_;
    std::map<std::size_t, MapFamily> cache_;
};

struct Pull {
    std::size_t member;
    Balld ball;  // ball pulled back through the member
};

// Deepest containment of `ball` in g(D) over the family; returns member and margin.
std::pair<std::size_t, double> best_pullback(const MapFamily& family, const Region& domain, const Balld& ball,
                                             Balld& pulled) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t choice = 0;
    for (std::size_t i = 0; i < family.size(); ++i) {
        const Map& g = family[i].map;
        double margin;
        Balld candidate;
        if (g.is_affine()) {
            const AffineMapd inv = g.affine().inverse();
            const Vec c = inv(ball.center);
            const Mat& ainv = inv.linear();
            if (domain.is_box()) {
                const auto& box = domain.box();
                margin = std::numeric_limits<double>::infinity();
                for (Eigen::Index j = 0; j < c.size(); ++j)
                    margin = std::min(margin, box.halfwidths[j] - std::abs(c[j] - box.center[j]) -
                                                  ball.radius * ainv.row(j).norm());
            } else {
                margin = domain.ball().radius - (c - domain.ball().center).norm() -
                         ball.radius * Eigen::JacobiSVD<Mat>(ainv).singularValues().maxCoeff();
            }
            candidate = Balld{c, ball.radius / g.affine().singular_values().maxCoeff()};
        } else {
            const Vec c = g.inverse(ball.center);
            const auto b = map_bounds(g, domain);
            if (b.lower <= 0) continue;
            margin = domain.depth(c) - ball.radius / b.lower;
            candidate = Balld{c, ball.radius / b.upper};
        }
        if (margin > best) {
            best = margin;
            choice = i;
            pulled = candidate;
        }
    }
    return {choice, best};
}

std::size_t nearest_anchor(const FixedPointSet& anchors, const Vec& c) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < anchors.points.size(); ++i) {
        const double d = (anchors.points[i] - c).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

bool contains_region(const Balld& ball, const Region& d) {
    if (d.is_ball()) return (d.ball().center - ball.center).norm() + d.ball().radius <= ball.radius;
    for (const auto& v : d.box().vertices())
        if ((v - ball.center).norm() > ball.radius) return false;
    return true;
}

}  // namespace

BranchPlan dense_branch(const Vec& x, const Balld& target, const FamilySequence& seq,
                        const MinimalityCertificate& cert, std::size_t first_step) {
    if (!cert.passed) throw Error("dense_branch needs a passing certificate");
    if (cert.anchors.points.empty()) throw Error("dense_branch: certificate has no anchors");
    const Region& domain = cert.domain;
    BranchPlan plan;
    plan.start = x;
    plan.target = target;
    plan.first_step = plan.next_step = first_step;
    if (x.size() != domain.dim() || target.center.size() != domain.dim())
        throw Error("dense_branch: dimension mismatch");
    if (!domain.contains(x, 1e-12)) throw Error("dense_branch: start point lies outside D", {{"x", point_json(x)}});
    if (contains_region(target, domain)) {
        plan.aim = target;
        return plan;
    }
    plan.aim = domain.inscribed(target);
    if (!(plan.aim.radius > 0)) throw Error("dense_branch: target does not meet D", {{"center", point_json(target.center)}});

    const double two_delta = 2 * cert.delta;
    const std::size_t n0 = cert.n0;
    const std::size_t max_blocks = static_cast<std::size_t>(cert.k) + 16;
    const std::size_t max_pulls = static_cast<std::size_t>(pullback_bound(plan.aim.radius, cert.delta, cert.kappa)) + 16;
    StepFamilies families(seq);

    // Pullback chain for a given number of blocks: pulls[j] is applied at step
    // first + J n₀ + j and maps ball j+1 (or the block target) into ball j.
    auto pullback = [&](std::size_t blocks, std::vector<Pull>& pulls) {
        if (plan.aim.radius >= two_delta) {
            pulls.clear();
            return true;
        }
        for (std::size_t count = 1; count <= max_pulls; ++count) {
            pulls.assign(count, Pull{});
            Balld ball = plan.aim;
            bool ok = true;
            for (std::size_t j = count; j-- > 0;) {
                const std::size_t step = first_step + blocks * n0 + j;
                Balld pulled;
                const auto [member, margin] = best_pullback(families.at(step), domain, ball, pulled);
                if (margin < 0) {
                    ok = false;
                    break;
                }
                pulls[j] = Pull{member, pulled};
                ball = pulled;
            }
            if (ok && ball.radius >= two_delta) return true;
        }
        return false;
    };

    std::vector<Pull> pulls;
    std::size_t anchor = std::numeric_limits<std::size_t>::max();
    ImageTracker blocks_image(domain);
    std::size_t tracked_blocks = 0;
    for (std::size_t blocks = 1; blocks <= max_blocks; ++blocks) {
        if (!pullback(blocks, pulls))
            throw Error("dense_branch: no covering member for a pullback step",
                        {{"first_step", first_step}, {"blocks", blocks}, {"radius", plan.aim.radius}});
        const Balld& aim = pulls.empty() ? plan.aim : pulls.front().ball;
        const std::size_t a = nearest_anchor(cert.anchors, aim.center);
        if (a != anchor) {
            anchor = a;
            blocks_image = ImageTracker(domain);
            tracked_blocks = 0;
        }
        const Word& u = cert.anchors.words[anchor];
        for (; tracked_blocks < blocks; ++tracked_blocks)
            for (std::size_t j = 0; j < n0; ++j)
                blocks_image.apply(families.at(first_step + tracked_blocks * n0 + j)[u[j]].map);
        if (!blocks_image.inside(aim)) continue;

        ImageTracker full = blocks_image;
        for (std::size_t j = 0; j < pulls.size(); ++j)
            full.apply(families.at(first_step + blocks * n0 + j)[pulls[j].member].map);
        if (!full.inside(plan.aim)) continue;

        plan.blocks = blocks;
        plan.pullbacks = pulls.size();
        plan.block_word = u;
        std::size_t step = first_step;
        for (std::size_t b = 0; b < blocks; ++b)
            for (std::size_t j = 0; j < n0; ++j, ++step) {
                plan.word.push_back(u[j]);
                plan.phases.push_back({step, 'a', u[j]});
            }
        for (const auto& p : pulls) {
            plan.word.push_back(p.member);
            plan.phases.push_back({step++, 'b', p.member});
        }
        plan.next_step = step;
        Vec y = x;
        for (const auto& ph : plan.phases) {
            y = families.at(ph.step)[ph.member].map(y);
            plan.endpoints.push_back(y);
        }
        return plan;
    }
    throw Error("dense_branch: block budget exceeded", {{"first_step", first_step}, {"max_blocks", max_blocks}});
}

std::vector<BranchPlan> dense_orbit(const Vec& x, const FamilySequence& seq, const MinimalityCertificate& cert,
                                    const std::vector<Balld>& base, std::size_t first_step) {
    std::vector<BranchPlan> plans;
    plans.reserve(base.size());
    Vec cursor = x;
    std::size_t step = first_step;
    for (const auto& ball : base) {
        plans.push_back(dense_branch(cursor, ball, seq, cert, step));
        cursor = plans.back().end();
        step = plans.back().next_step;
    }
    return plans;
}

PointCloud replay(const BranchPlan& plan, const FamilySequence& seq, const PointCloud& sample) {
    PointCloud pts = sample;
    for (std::size_t i = 0; i < plan.word.size(); ++i) {
        const MapFamily fam = seq.at(plan.first_step + i);
        const Map& f = fam[plan.word[i]].map;
        for (std::size_t p = 0; p < pts.size(); ++p) pts[p] = f(Vec(pts[p]));
    }
    return pts;
}

Vec random_point(const Region& domain, Rng& rng) {
    const Eigen::Index m = domain.dim();
    if (domain.is_box()) {
        const auto& b = domain.box();
        Vec x(m);
        for (Eigen::Index i = 0; i < m; ++i) x[i] = b.center[i] + b.halfwidths[i] * rng.uniform(-1, 1);
        return x;
    }
    const auto& b = domain.ball();
    for (;;) {
        const Vec u = rng.uniform_vector(m, -1, 1);
        if (u.squaredNorm() <= 1) return b.center + b.radius * u;
    }
}

std::vector<Balld> random_targets(const Region& domain, std::size_t count, double radius, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Balld> out;
    out.reserve(count);
    if (domain.is_box()) {
        Boxd eroded = domain.box();
        eroded.halfwidths.array() -= radius;
        if ((eroded.halfwidths.array() < 0).any()) throw Error("random_targets: radius exceeds the domain");
        const Region inner(eroded);
        for (std::size_t i = 0; i < count; ++i) out.push_back({random_point(inner, rng), radius});
    } else {
        const Region inner(Balld{domain.ball().center, domain.ball().radius - radius});
        if (!(domain.ball().radius > radius)) throw Error("random_targets: radius exceeds the domain");
        for (std::size_t i = 0; i < count; ++i) out.push_back({random_point(inner, rng), radius});
    }
    return out;
}

std::optional<std::string> trial_precheck(const MinimalityCertificate& cert, double eps) {
    if (!cert.passed) return std::string("certificate did not pass");
    if (eps < 0) return std::string("eps must be nonnegative");
    if (eps == 0) return std::nullopt;
    if (cert.kappa + eps >= 1) return std::string("eps too large for this certificate: kappa + eps >= 1");
    if (2 * cert.delta + eps > cert.rho)
        return std::string("eps too large for this certificate: 2 delta + eps exceeds the Lebesgue radius");
    const double drift = eps / ((1 - cert.kappa) * (1 - std::pow(cert.kappa, static_cast<double>(cert.n0))));
    if (cert.delta / 2 + drift >= 2 * cert.delta)
        return std::string("eps too large for this certificate: fixed-point drift exceeds the density margin");
    return std::nullopt;
}

std::size_t eps_slack(const MinimalityCertificate& cert, double eps) { return eps > 0 ? cert.n0 + 1 : 0; }

TrialReport strong_trial(const MinimalityCertificate& cert, double eps, std::size_t n_trials,
                         const std::vector<Balld>& targets, std::uint64_t seed, const TrialOptions& options) {
    TrialReport report;
    report.eps = eps;
    report.trials = n_trials;
    if (auto reason = trial_precheck(cert, eps)) {
        report.reason = *reason;
        return report;
    }
    report.precheck_passed = true;
    report.slack = eps_slack(cert, eps);

    PointCloud sample(cert.domain.dim());
    {
        Rng rng(mix_seed(seed, 0x5a));
        for (std::size_t i = 0; i < options.sample_size; ++i) sample.push_back(random_point(cert.domain, rng));
    }

    struct Outcome {
        std::size_t successes{0};
        std::size_t max_length{0};
        nlohmann::json failures = nlohmann::json::array();
    };
    std::vector<Outcome> outcomes(n_trials);
    parallel_for(n_trials, [&](std::size_t t) {
        Outcome& out = outcomes[t];
        const FamilySequence seq(cert.family, cert.working_domain, eps, options.model, mix_seed(seed, t, 1));
        Rng rng(mix_seed(seed, t, 2));
        const Vec start = random_point(cert.domain, rng);
        Vec cursor = start;
        std::size_t step = 1;
        for (std::size_t i = 0; i < targets.size(); ++i) {
            const auto& target = targets[i];
            const std::size_t bound = static_cast<std::size_t>(cert.k) * cert.n0 +
                                      static_cast<std::size_t>(pullback_bound(
                                          std::min(target.radius, cert.domain.inscribed(target).radius), cert.delta,
                                          cert.kappa)) +
                                      eps_slack(cert, eps);
            try {
                const BranchPlan plan = dense_branch(cursor, target, seq, cert, step);
                const PointCloud image = replay(plan, seq, sample);
                bool ok = plan.word.size() <= bound;
                for (std::size_t p = 0; p < image.size() && ok; ++p) ok = target.contains(image[p], 1e-12);
                out.max_length = std::max(out.max_length, plan.word.size());
                if (ok) {
                    ++out.successes;
                } else {
                    out.failures.push_back({{"trial", t}, {"target", i}, {"length", plan.word.size()}, {"bound", bound}});
                }
                cursor = plan.end();
                step = plan.next_step;
            } catch (const Error& e) {
                out.failures.push_back({{"trial", t}, {"target", i}, {"error", e.what()}});
                break;
            }
        }
    });
    report.branches = n_trials * targets.size();
    for (auto& o : outcomes) {
        report.successes += o.successes;
        report.max_length = std::max(report.max_length, o.max_length);
        for (auto& f : o.failures) report.failures.push_back(std::move(f));
    }
    report.step_bound = targets.empty() ? 0
                                        : static_cast<std::size_t>(cert.k) * cert.n0 +
                                              static_cast<std::size_t>(pullback_bound(targets.front().radius,
                                                                                      cert.delta, cert.kappa));
    return report;
}

}  // namespace ifs
