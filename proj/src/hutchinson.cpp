#include "ifs/hutchinson.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ifs/error.hpp"
#include "ifs/random.hpp"

namespace ifs {

std::string word_label(const MapFamily& family, const Word& w) {
    std::string out;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) out += '.';
        out += family[w[i]].label;
    }
    return out;
}

Map compose_word(const MapFamily& family, const Word& w) {
    if (family.all_affine()) return Map(compose_word_affine(family, w));
    if (w.empty()) return Map(AffineMapd::identity(family.dim()));
    Map out = family[w[0]].map;
    for (std::size_t i = 1; i < w.size(); ++i) out = compose(family[w[i]].map, out);
    return out;
}

AffineMapd compose_word_affine(const MapFamily& family, const Word& w) {
    AffineMapd out = AffineMapd::identity(family.dim());
    for (std::size_t letter : w) {
        if (letter >= family.size()) throw Error("word letter out of range");
        out = family[letter].map.affine().after(out);
    }
    return out;
}

Vec apply_word(const MapFamily& family, const Word& w, Vec x) {
    for (std::size_t letter : w) x = family[letter].map(x);
    return x;
}

Balld absorbing_ball(const MapFamily& family, const Balld& seed) {
    const Vec& c = seed.center;
    if (family.all_affine()) {
        double radius = seed.radius;
        for (const auto& member : family.members()) {
            const auto& f = member.map.affine();
            const double norm = f.singular_values().maxCoeff();
            if (norm >= 1) throw Error("family not eventually absorbing", {{"member", member.label}, {"norm", norm}});
            radius = std::max(radius, (f(c) - c).norm() / (1 - norm));
        }
        return Balld{c, radius * (1 + 1e-12)};
    }
    double radius = seed.radius;
    for (int j = 0; j <= 10; ++j, radius *= 2) {
        const Region ball(Balld{c, radius});
        bool ok = true;
        for (std::size_t i = 0; i < family.size() && ok; ++i) {
            const auto bounds = lipschitz_bounds(family[i].map, ball, 256, mix_seed(0xab5, i));
            ok = (family[i].map(c) - c).norm() + bounds.upper * radius <= radius;
        }
        if (ok) return Balld{c, radius};
    }
    throw Error("family not eventually absorbing", {{"max_radius", seed.radius * 1024}});
}

namespace {

struct CellHash {
    std::size_t operator()(const std::vector<long>& key) const {
        std::uint64_t h = 0x84222325cbf29ce4ULL;
        for (long v : key) {
            h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

double upper_lipschitz(const MapFamily& family, const Region& domain) {
    return lipschitz_bounds(family, domain, 256, 0x11f).upper;
}

}  // namespace

PointCloud decimate(const PointCloud& cloud, double cell) {
    PointCloud out(cloud.dim());
    std::unordered_set<std::vector<long>, CellHash> seen;
    seen.reserve(cloud.size());
    std::vector<long> key(static_cast<std::size_t>(cloud.dim()));
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto p = cloud[i];
        for (Eigen::Index d = 0; d < cloud.dim(); ++d)
            key[static_cast<std::size_t>(d)] = static_cast<long>(std::floor(p[d] / cell));
        if (seen.insert(key).second) out.push_back(p);
    }
    return out;
}

PointCloud attractor(const MapFamily& family, const Balld& seed, double tol, const AttractorOptions& options) {
    if (!(tol > 0)) throw Error("attractor: tol must be positive");
    const Balld absorbing = absorbing_ball(family, seed);
    const double kappa = upper_lipschitz(family, Region(absorbing));
    if (kappa >= 1) throw Error("attractor: family is not contracting on its absorbing ball", {{"kappa", kappa}});
    // Iterations after which the seed is forgotten: κ^p · diam(O) ≤ tol/2.
    const auto burn = static_cast<std::size_t>(
        std::max(1.0, std::ceil(std::log(tol / (4 * absorbing.radius)) / std::log(kappa))));

    PointCloud cloud = Grid(Region(seed), seed.radius / 4).points();
    for (std::size_t it = 1; it <= options.max_iterations; ++it) {
        PointCloud next = decimate(family.image(cloud), tol / 2);
        const bool check = it >= burn;
        const double step = check ? hausdorff_distance(next, cloud) : 0.0;
        cloud = std::move(next);
        if (check && step <= tol) return cloud;
    }
    throw Error("attractor: no convergence", {{"iterations", options.max_iterations}});
}

PointCloud chaos_game(const MapFamily& family, const Vec& x0, std::size_t n_points, std::size_t burn_in,
                      std::uint64_t seed) {
    if (x0.size() != family.dim()) throw Error("chaos_game: dimension mismatch");
    PointCloud out(family.dim());
    if (n_points == 0) return out;
    out.reserve(n_points);
    Rng rng(seed);
    Vec x = x0;
    const std::size_t k = family.size();
    if (family.all_affine()) {
        std::vector<Mat> linear;
        std::vector<Vec> shift;
        for (const auto& m : family.members()) {
            linear.push_back(m.map.affine().linear());
            shift.push_back(m.map.affine().shift());
        }
        Vec y(x.size());
        for (std::size_t i = 0; i < burn_in + n_points; ++i) {
            const std::size_t j = rng.index(k);
            y.noalias() = linear[j] * x;
            x = y + shift[j];
            if (i >= burn_in) out.push_back(x);
        }
        return out;
    }
    for (std::size_t i = 0; i < burn_in + n_points; ++i) {
        x = family[rng.index(k)].map(x);
        if (i >= burn_in) out.push_back(x);
    }
    return out;
}

Vec word_fixed_point(const MapFamily& family, const Word& w, const Vec& start) {
    if (w.empty()) throw Error("the empty word has no isolated fixed point");
    if (family.all_affine()) {
        const AffineMapd f = compose_word_affine(family, w);
        const double norm = f.singular_values().maxCoeff();
        if (norm >= 1) throw Error("word is not a contraction", {{"word", word_label(family, w)}, {"kappa", norm}});
        return f.fixed_point();
    }
    const Map f = compose_word(family, w);
    const double norm = Eigen::JacobiSVD<Mat>(f.jacobian(start)).singularValues().maxCoeff();
    if (norm >= 1) throw Error("word is not a contraction", {{"word", word_label(family, w)}, {"kappa", norm}});
    Vec x = start;
    double previous = std::numeric_limits<double>::infinity();
    int stalls = 0;
    for (int it = 0; it < 100000; ++it) {
        const Vec next = f(x);
        const double step = (next - x).norm();
        x = next;
        if (step <= 1e-12) return x;
        stalls = step >= previous ? stalls + 1 : 0;
        if (stalls > 50) break;
        previous = step;
    }
    throw Error("word is not a contraction", {{"word", word_label(family, w)}});
}

Vec word_fixed_point(const MapFamily& family, const Word& w) {
    return word_fixed_point(family, w, Vec::Zero(family.dim()));
}

FixedPointSet fixed_point_set(const MapFamily& family, std::size_t n, std::size_t budget) {
    FixedPointSet out;
    out.n = n;
    out.points = PointCloud(family.dim());
    if (n == 0) return out;
    const std::size_t k = family.size();
    double count = std::pow(static_cast<double>(k), static_cast<double>(n));
    if (count > static_cast<double>(budget))
        throw Error("fixed_point_set: k^n exceeds the word budget; use a smaller n",
                    {{"k", k}, {"n", n}, {"budget", budget}});
    const auto total = static_cast<std::size_t>(count);
    out.points.reserve(total);
    out.words.reserve(total);

    if (!family.all_affine()) {
        Word w(n, 0);
        for (std::size_t idx = 0; idx < total; ++idx) {
            std::size_t rest = idx;
            for (std::size_t i = n; i-- > 0;) {
                w[i] = rest % k;
                rest /= k;
            }
            out.points.push_back(word_fixed_point(family, w));
            out.words.push_back(w);
        }
        return out;
    }

    const Eigen::Index m = family.dim();
    const Mat eye = Mat::Identity(m, m);
    std::vector<Mat> linear(n + 1, eye);
    std::vector<Vec> shift(n + 1, Vec::Zero(m));
    Word w(n, 0);
    // Depth-first enumeration in lexicographic order, composites cached per depth.
    std::size_t depth = 0;
    std::vector<std::size_t> next(n, 0);
    while (true) {
        if (depth == n) {
            const Vec x = (eye - linear[n]).partialPivLu().solve(shift[n]);
            out.points.push_back(x);
            out.words.push_back(w);
            --depth;
            continue;
        }
        if (next[depth] == k) {
            next[depth] = 0;
            if (depth == 0) break;
            --depth;
            continue;
        }
        const std::size_t letter = next[depth]++;
        w[depth] = letter;
        const auto& f = family[letter].map.affine();
        linear[depth + 1].noalias() = f.linear() * linear[depth];
        shift[depth + 1] = f.linear() * shift[depth] + f.shift();
        ++depth;
    }
    return out;
}

}  // namespace ifs
