#include "ifs/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <unordered_map>

#include "ifs/error.hpp"
#include "ifs/hutchinson.hpp"
#include "ifs/minimality.hpp"
#include "ifs/parallel.hpp"
#include "ifs/random.hpp"

namespace ifs {

std::string SymbolWord::str() const {
    std::string out;
    for (auto l : letters) out += static_cast<char>('1' + l);
    return out;
}

SymbolWord SymbolWord::parse(const std::string& text, std::size_t alphabet) {
    if (alphabet < 2 || alphabet > 9) throw Error("symbol words support alphabets of size 2..9");
    SymbolWord w;
    w.alphabet = alphabet;
    for (char ch : text) {
        const int l = ch - '1';
        if (l < 0 || static_cast<std::size_t>(l) >= alphabet)
            throw Error("symbol out of range", {{"word", text}, {"alphabet", alphabet}});
        w.letters.push_back(static_cast<std::uint8_t>(l));
    }
    return w;
}

std::size_t SkewProduct::window_count() const {
    std::size_t n = 1;
    for (std::size_t i = 0; i < window; ++i) n *= alphabet;
    return n;
}

std::size_t SkewProduct::window_index(const std::uint8_t* letters) const {
    std::size_t idx = 0, scale = 1;
    for (std::size_t i = 0; i < window; ++i, scale *= alphabet) idx += letters[i] * scale;
    return idx;
}

const Map& SkewProduct::fiber(const std::uint8_t* letters) const { return fibers[window_index(letters)].map; }

SkewProduct skew_product(const MapFamily& family, const Balld& outer, const Region& inner) {
    if (family.size() < 2) throw Error("skew product needs at least two fiber maps");
    SkewProduct p;
    p.alphabet = family.size();
    p.window = 1;
    p.fibers = family.members();
    p.outer = outer;
    p.inner = inner;
    return p;
}

SkewProduct perturbed_skew_product(const MapFamily& family, const Balld& outer, const Region& inner,
                                   std::size_t window, double eps, std::uint64_t seed, PerturbModel model) {
    if (window < 1 || window > 5) throw Error("window length must lie in 1..5", {{"window", window}});
    SkewProduct p = skew_product(family, outer, inner);
    p.window = window;
    p.fibers.clear();
    const std::size_t count = p.window_count();
    std::vector<std::uint8_t> letters(window);
    for (std::size_t code = 0; code < count; ++code) {
        std::size_t rest = code;
        SymbolWord label;
        for (std::size_t i = 0; i < window; ++i, rest /= p.alphabet) letters[i] = static_cast<std::uint8_t>(rest % p.alphabet);
        label.letters = letters;
        const auto& base = family[letters[0]];
        p.fibers.push_back({base.label + "@" + label.str(),
                            perturb(base.map, eps, model, mix_seed(seed, code), Region(outer))});
    }
    return p;
}

SkewProduct blender_product(const MapFamily& family, const Region& inner, std::size_t window, double eps,
                            std::uint64_t seed) {
    Balld outer = absorbing_ball(family, Balld{inner.center(), 1e-9});
    outer.radius = std::max(outer.radius, inner.circumradius());
    if (window == 1 && eps == 0) return skew_product(family, outer, inner);
    SkewProduct p = perturbed_skew_product(family, outer, inner, window, eps, seed);
    Balld fitted = absorbing_ball(MapFamily(p.fibers), Balld{inner.center(), 1e-9});
    p.outer.radius = std::max(fitted.radius, inner.circumradius());
    return p;
}

std::pair<SymbolWord, Vec> skew_step(const SkewProduct& p, const SymbolWord& omega, const Vec& y) {
    if (omega.origin + p.window > omega.letters.size())
        throw Error("skew_step: window exhausted", {{"origin", omega.origin}, {"length", omega.letters.size()}});
    SymbolWord next = omega;
    const Vec out = p.fiber(omega.letters.data() + omega.origin)(y);
    ++next.origin;
    return {std::move(next), out};
}

namespace {

Balld strip_bound(const SkewProduct& p, const AffineMapd& composite) {
    return Balld{composite(p.outer.center), composite.singular_values().maxCoeff() * p.outer.radius};
}

const AffineMapd& affine_fiber(const SkewProduct& p, const std::uint8_t* letters) {
    const Map& f = p.fiber(letters);
    if (!f.is_affine()) throw Error("strip refinement needs affine fiber maps");
    return f.affine();
}

// Buckets ball bounds by centre on a square grid of side `cell`.
class BallIndex {
public:
    BallIndex(const std::vector<Strip>& strips, double cell) : strips_(strips), cell_(cell) {
        for (std::size_t i = 0; i < strips.size(); ++i) buckets_[key(strips[i].bound.center)].push_back(i);
    }

    template <typename F>
    bool any_containing(const Vec& x, F&& accept) const {
        const Eigen::Index m = x.size();
        std::vector<long> base(static_cast<std::size_t>(m)), offset(static_cast<std::size_t>(m), -1);
        for (Eigen::Index i = 0; i < m; ++i) base[static_cast<std::size_t>(i)] = static_cast<long>(std::floor(x[i] / cell_));
        for (;;) {
            std::vector<long> k(base);
            for (std::size_t i = 0; i < k.size(); ++i) k[i] += offset[i];
            auto it = buckets_.find(k);
            if (it != buckets_.end())
                for (std::size_t idx : it->second) {
                    const auto& b = strips_[idx].bound;
                    if ((x - b.center).norm() <= b.radius && accept(idx)) return true;
                }
            std::size_t d = 0;
            while (d < offset.size() && ++offset[d] > 1) offset[d++] = -1;
            if (d == offset.size()) return false;
        }
    }

private:
    struct Hash {
        std::size_t operator()(const std::vector<long>& v) const {
            std::size_t h = 1469598103934665603ULL;
            for (long x : v) h = (h ^ static_cast<std::size_t>(x)) * 1099511628211ULL;
            return h;
        }
    };
    std::vector<long> key(const Vec& c) const {
        std::vector<long> k(static_cast<std::size_t>(c.size()));
        for (Eigen::Index i = 0; i < c.size(); ++i) k[static_cast<std::size_t>(i)] = static_cast<long>(std::floor(c[i] / cell_));
        return k;
    }

    const std::vector<Strip>& strips_;
    double cell_;
    std::unordered_map<std::vector<long>, std::vector<std::size_t>, Hash> buckets_;
};

double max_radius(const std::vector<Strip>& strips) {
    double r = 0;
    for (const auto& s : strips) r = std::max(r, s.bound.radius);
    return r;
}

double index_cell(const std::vector<Strip>& strips, double spacing) { return std::max(max_radius(strips), spacing); }

std::vector<Vec> uncovered_points(const std::vector<Strip>& strips, const PointCloud& grid, double spacing) {
    const BallIndex index(strips, index_cell(strips, spacing));
    std::vector<char> hit(grid.size(), 0);
    parallel_for(grid.size(), [&](std::size_t i) {
        hit[i] = index.any_containing(Vec(grid[i]), [](std::size_t) { return true; }) ? 1 : 0;
    });
    std::vector<Vec> out;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (!hit[i]) out.emplace_back(grid[i]);
    return out;
}

// One witness strip per grid point p with composite⁻¹(p) ∈ E_in (first in bucket
// order), plus the widest strip.
std::vector<Strip> prune(const SkewProduct& p, std::vector<Strip> strips, const PointCloud& grid, double spacing) {
    const BallIndex index(strips, index_cell(strips, spacing));
    std::vector<char> keep(strips.size(), 0);
    std::size_t widest = 0;
    for (std::size_t i = 0; i < strips.size(); ++i)
        if (strips[i].bound.radius > strips[widest].bound.radius) widest = i;
    keep[widest] = 1;
    std::vector<std::size_t> witness(grid.size(), strips.size());
    parallel_for(grid.size(), [&](std::size_t g) {
        const Vec x = grid[g];
        index.any_containing(x, [&](std::size_t idx) {
            const AffineMapd& d = strips[idx].composite;
            const Vec pre = d.linear().partialPivLu().solve(Vec(x - d.shift()));
            if (!p.inner.contains(pre, 1e-12)) return false;
            witness[g] = idx;
            return true;
        });
    });
    for (std::size_t w : witness)
        if (w < strips.size()) keep[w] = 1;
    std::vector<Strip> out;
    for (std::size_t i = 0; i < strips.size(); ++i)
        if (keep[i]) out.push_back(std::move(strips[i]));
    return out;
}

}  // namespace

std::vector<Strip> initial_strips(const SkewProduct& p) {
    Strip s;
    s.composite = AffineMapd::identity(p.dim());
    s.bound = p.outer;
    s.generation = 0;
    return {s};
}

std::vector<Strip> strip_refine(const SkewProduct& p, const std::vector<Strip>& strips) {
    std::vector<Strip> out(strips.size() * p.alphabet);
    parallel_for(strips.size(), [&](std::size_t i) {
        const Strip& parent = strips[i];
        const std::size_t n = parent.generation;
        for (std::size_t a = 0; a < p.alphabet; ++a) {
            Strip& child = out[i * p.alphabet + a];
            child.generation = n + 1;
            child.past.reserve(parent.past.size() + 1);
            child.past.push_back(static_cast<std::uint8_t>(a));
            child.past.insert(child.past.end(), parent.past.begin(), parent.past.end());
            if (n + 1 >= p.window) {
                child.composite = parent.composite.after(affine_fiber(p, child.past.data()));
                child.bound = strip_bound(p, child.composite);
            } else {
                child.composite = parent.composite;
                child.bound = parent.bound;
            }
        }
    });
    return out;
}

bool check_domination(const SkewProduct& p, double base_rate) {
    if (!(base_rate > 1)) throw Error("check_domination: base rate must exceed 1", {{"rate", base_rate}});
    for (const auto& f : p.fibers) {
        const auto b = lipschitz_bounds(f.map, Region(p.outer));
        if (!(1 / base_rate < b.lower && b.upper < base_rate)) return false;
    }
    return true;
}

BlenderReport blender_verify(const SkewProduct& p, std::size_t n_max, double spacing, const BlenderOptions& options,
                             std::vector<Strip>* final_strips) {
    BlenderReport rep;
    rep.n_max = n_max;
    rep.spacing = spacing;
    const Region outer(p.outer);

    for (std::size_t code = 0; code < p.fibers.size(); ++code) {
        const auto b = lipschitz_bounds(p.fibers[code].map, outer);
        if (b.upper >= 1)
            throw Error("blender_verify: fiber map is not a contraction on E_out",
                        {{"window", p.fibers[code].label}, {"kappa", b.upper}});
    }
    for (const auto& f : p.fibers) {
        if (!f.map.is_affine()) throw Error("blender_verify needs affine fiber maps", {{"window", f.label}});
        const auto& a = f.map.affine();
        const double reach = (a(p.outer.center) - p.outer.center).norm() + a.singular_values().maxCoeff() * p.outer.radius;
        if (reach > p.outer.radius * (1 + 1e-9)) {
            rep.precheck_detail = "E_out is not absorbing for " + f.label;
            return rep;
        }
    }
    const Grid inner_grid(p.inner, spacing);
    const std::size_t contexts = p.window_count() / p.alphabet;
    std::vector<std::uint8_t> letters(p.window);
    for (std::size_t ctx = 0; ctx < contexts; ++ctx) {
        std::size_t rest = ctx;
        for (std::size_t i = 1; i < p.window; ++i, rest /= p.alphabet) letters[i] = static_cast<std::uint8_t>(rest % p.alphabet);
        std::vector<Membership> pieces;
        for (std::size_t a = 0; a < p.alphabet; ++a) {
            letters[0] = static_cast<std::uint8_t>(a);
            const AffineMapd inv = p.fiber(letters.data()).affine().inverse();
            const Region inner = p.inner;
            pieces.push_back([inv, inner](const Vec& x) { return inner.contains(inv(x)); });
        }
        const auto cover = covering_test(p.inner, pieces, inner_grid);
        if (!cover.covered) {
            rep.precheck_detail = "E_in is not covered by its images for context " + std::to_string(ctx);
            rep.witnesses = cover.witnesses;
            return rep;
        }
    }
    rep.precheck = true;
    rep.domination = check_domination(p, options.base_rate);

    const PointCloud grid = inner_grid.points();
    std::vector<Strip> strips = initial_strips(p);
    double previous = p.outer.radius;
    for (std::size_t n = 1; n <= n_max; ++n) {
        std::size_t pruned = 0;
        if (strips.size() * p.alphabet > options.strip_budget) {
            const std::size_t before = strips.size();
            strips = prune(p, std::move(strips), grid, spacing);
            pruned = before - strips.size();
            rep.pruned_total += pruned;
        }
        strips = strip_refine(p, strips);
        GenerationRecord rec;
        rec.generation = n;
        rec.strips = strips.size();
        rec.pruned = pruned;
        rec.max_radius = max_radius(strips);
        const auto missing = uncovered_points(strips, grid, spacing);
        rec.uncovered = missing.size();
        rec.covered = missing.empty();
        if (n == n_max) rep.witnesses = missing;
        if (n >= 2) rep.decay_ratios.push_back(rec.max_radius / previous);
        previous = rec.max_radius;
        rep.generations.push_back(rec);
    }
    if (!rep.generations.empty()) {
        const auto& last = rep.generations.back();
        rep.passed = last.covered && last.max_radius <= 2 * spacing;
    }
    if (final_strips) *final_strips = std::move(strips);
    return rep;
}

MixingReport mixing_probe(const SkewProduct& p, const Cylinder& u, const Cylinder& v, std::size_t n,
                          std::size_t horizon, const MixingOptions& options) {
    for (const auto* c : {&u, &v}) {
        if (c->fiber.center.size() != p.dim()) throw Error("mixing_probe: fiber ball dimension mismatch");
        for (auto l : c->prefix.letters)
            if (l >= p.alphabet) throw Error("mixing_probe: prefix symbol out of range");
    }
    const std::size_t length = std::max(u.prefix.size(), horizon + std::max(v.prefix.size(), p.window) + 1);
    if (options.samples == 0) throw Error("mixing_probe: batch size must be positive");
    const std::size_t chunks = 64;
    MixingReport rep;
    rep.hits.assign(horizon + 1, 0);
    std::vector<std::vector<std::size_t>> hits(chunks, std::vector<std::size_t>(horizon + 1, 0));
    auto all_hit = [&] {
        for (std::size_t t = std::min(n, horizon + 1); t <= horizon; ++t)
            if (rep.hits[t] == 0) return false;
        return true;
    };
    for (;;) {
        const std::size_t begin = rep.samples, end = begin + options.samples;
        for (auto& h : hits) std::fill(h.begin(), h.end(), 0);
        parallel_for(chunks, [&](std::size_t c) {
            std::vector<std::uint8_t> omega(length);
            for (std::size_t s = begin + c; s < end; s += chunks) {
                Rng rng(mix_seed(options.seed, s));
                for (std::size_t i = 0; i < length; ++i)
                    omega[i] = i < u.prefix.size() ? u.prefix.letters[i] : static_cast<std::uint8_t>(rng.index(p.alphabet));
                Vec y;
                do {
                    y = u.fiber.center + u.fiber.radius * rng.uniform_vector(p.dim(), -1, 1);
                } while (!u.fiber.contains(y));
                for (std::size_t t = 0; t <= horizon; ++t) {
                    bool match = v.fiber.contains(y);
                    for (std::size_t i = 0; i < v.prefix.size() && match; ++i) match = omega[t + i] == v.prefix.letters[i];
                    if (match) ++hits[c][t];
                    if (t < horizon) y = p.fiber(omega.data() + t)(y);
                }
            }
        });
        for (const auto& h : hits)
            for (std::size_t t = 0; t <= horizon; ++t) rep.hits[t] += h[t];
        rep.samples = end;
        if (all_hit() || rep.samples + options.samples > options.max_samples) break;
    }
    rep.first_time = horizon + 1;
    for (std::size_t t = horizon + 1; t-- > 0;) {
        if (rep.hits[t] == 0) break;
        rep.first_time = t;
    }
    rep.mixing = rep.first_time <= n;
    return rep;
}

Cylinder random_cylinder(const SkewProduct& p, std::size_t length, double radius, std::uint64_t seed) {
    Rng rng(seed);
    Cylinder c;
    c.prefix.alphabet = p.alphabet;
    for (std::size_t i = 0; i < length; ++i) c.prefix.letters.push_back(static_cast<std::uint8_t>(rng.index(p.alphabet)));
    c.fiber = random_targets(p.inner, 1, radius, mix_seed(seed, 1)).front();
    return c;
}

void write_strips_csv(std::ostream& out, const std::vector<Strip>& strips) {
    const Eigen::Index m = strips.empty() ? 0 : strips.front().bound.center.size();
    out << "prefix";
    for (Eigen::Index i = 0; i < m; ++i) out << ",c" << (i + 1);
    out << ",radius,generation\n";
    char buf[32];
    for (const auto& s : strips) {
        for (auto l : s.past) out << static_cast<char>('1' + l);
        for (Eigen::Index i = 0; i < m; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", s.bound.center[i]);
            out << ',' << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g", s.bound.radius);
        out << ',' << buf << ',' << s.generation << '\n';
    }
}

}  // namespace ifs
