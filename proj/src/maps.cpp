#include "ifs/maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ifs/error.hpp"
#include "ifs/random.hpp"

namespace ifs {

Mat BlackBoxMap::jacobian_at(const Vec& x) const {
    if (jacobian) return jacobian(x);
    Mat j(dim, dim);
    Vec probe = x;
    for (Eigen::Index k = 0; k < dim; ++k) {
        probe[k] = x[k] + kDifferenceStep;
        const Vec fwd = evaluate(probe);
        probe[k] = x[k] - kDifferenceStep;
        const Vec bwd = evaluate(probe);
        probe[k] = x[k];
        j.col(k) = (fwd - bwd) / (2 * kDifferenceStep);
    }
    return j;
}

double BumpPerturbedMap::bump_slope() { return 8.0 / (3.0 * std::sqrt(3.0)); }

Vec BumpPerturbedMap::operator()(const Vec& x) const {
    Vec y = base(x);
    const double t = (x - center).norm() / radius;
    if (t < 1) {
        const double u = 1 - t * t;
        y += amplitude * u * u * direction;
    }
    return y;
}

Mat BumpPerturbedMap::jacobian(const Vec& x) const {
    Mat j = base.linear();
    const Vec d = x - center;
    const double t = d.norm() / radius;
    if (t < 1) {
        const Vec grad = -4.0 * (1 - t * t) * d / (radius * radius);
        j += amplitude * direction * grad.transpose();
    }
    return j;
}

Vec BumpPerturbedMap::inverse(const Vec& y) const {
    // base(x) + bump(x) = y  ⇔  x = base⁻¹(y − bump(x)); a contraction for small amplitude.
    const AffineMapd inv = base.inverse();
    Vec x = inv(y);
    for (int it = 0; it < 500; ++it) {
        const Vec bumped = (*this)(x) - base(x);
        const Vec next = inv(Vec(y - bumped));
        const double change = (next - x).norm();
        x = next;
        if (change <= 1e-15 * (1 + x.norm())) break;
    }
    return x;
}

Eigen::Index Map::dim() const {
    return std::visit(
        [](const auto& f) -> Eigen::Index {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, AffineMapd>) return f.dim();
            else if constexpr (std::is_same_v<T, BumpPerturbedMap>) return f.base.dim();
            else return f.dim;
        },
        impl_);
}

Vec Map::operator()(const Vec& x) const {
    return std::visit(
        [&](const auto& f) -> Vec {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, BlackBoxMap>) return f.evaluate(x);
            else return f(x);
        },
        impl_);
}

Mat Map::jacobian(const Vec& x) const {
    return std::visit(
        [&](const auto& f) -> Mat {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, AffineMapd>) return f.linear();
            else if constexpr (std::is_same_v<T, BumpPerturbedMap>) return f.jacobian(x);
            else return f.jacobian_at(x);
        },
        impl_);
}

bool Map::has_inverse() const {
    if (auto* b = std::get_if<BlackBoxMap>(&impl_)) return static_cast<bool>(b->inverse);
    return true;
}

Vec Map::inverse(const Vec& y) const {
    return std::visit(
        [&](const auto& f) -> Vec {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, AffineMapd>) {
                return f.linear().fullPivLu().solve(Vec(y - f.shift()));
            } else if constexpr (std::is_same_v<T, BumpPerturbedMap>) {
                return f.inverse(y);
            } else {
                if (!f.inverse) throw Error("black-box map has no inverse evaluator");
                return f.inverse(y);
            }
        },
        impl_);
}

BlackBoxMap Map::as_black_box() const {
    if (auto* b = std::get_if<BlackBoxMap>(&impl_)) return *b;
    BlackBoxMap out;
    out.dim = dim();
    const Map self = *this;
    out.evaluate = [self](const Vec& x) { return self(x); };
    out.jacobian = [self](const Vec& x) { return self.jacobian(x); };
    out.inverse = [self](const Vec& y) { return self.inverse(y); };
    return out;
}

Map compose(const Map& f, const Map& g) {
    if (f.dim() != g.dim()) throw Error("compose: dimension mismatch");
    if (f.is_affine() && g.is_affine()) return Map(compose(f.affine(), g.affine()));
    BlackBoxMap out;
    out.dim = f.dim();
    out.evaluate = [f, g](const Vec& x) { return f(g(x)); };
    out.jacobian = [f, g](const Vec& x) -> Mat { return f.jacobian(g(x)) * g.jacobian(x); };
    if (f.has_inverse() && g.has_inverse())
        out.inverse = [f, g](const Vec& y) { return g.inverse(f.inverse(y)); };
    return Map(std::move(out));
}

MapFamily::MapFamily(std::vector<LabeledMap> maps) : maps_(std::move(maps)) {
    if (maps_.empty()) throw Error("map family must be nonempty");
    for (const auto& m : maps_)
        if (m.map.dim() != maps_.front().map.dim()) throw Error("map family members differ in dimension");
}

bool MapFamily::all_affine() const {
    return std::all_of(maps_.begin(), maps_.end(), [](const LabeledMap& m) { return m.map.is_affine(); });
}

PointCloud MapFamily::image(const PointCloud& cloud) const {
    PointCloud out(cloud.dim());
    out.reserve(cloud.size() * maps_.size());
    for (const auto& m : maps_) {
        if (m.map.is_affine()) {
            const auto& f = m.map.affine();
            for (std::size_t i = 0; i < cloud.size(); ++i) out.push_back(f.linear() * cloud[i] + f.shift());
        } else {
            for (std::size_t i = 0; i < cloud.size(); ++i) out.push_back(m.map(Vec(cloud[i])));
        }
    }
    return out;
}

MapFamily compose_families(const MapFamily& f, const MapFamily& g) {
    if (f.dim() != g.dim()) throw Error("compose_families: dimension mismatch");
    std::vector<LabeledMap> out;
    out.reserve(f.size() * g.size());
    for (const auto& a : f.members())
        for (const auto& b : g.members()) out.push_back({a.label + "*" + b.label, compose(a.map, b.map)});
    return MapFamily(std::move(out));
}

namespace {

Vec sample_in(const Region& domain, Rng& rng) {
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

}  // namespace

LipschitzBounds lipschitz_bounds(const Map& f, const Region& domain, std::size_t n_samples, std::uint64_t seed) {
    LipschitzBounds out;
    out.lower = std::numeric_limits<double>::infinity();
    out.upper = 0;
    Rng rng(seed);
    const std::size_t n = f.is_affine() ? 1 : std::max<std::size_t>(n_samples, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec x = i == 0 ? domain.center() : sample_in(domain, rng);
        const Vec sv = Eigen::JacobiSVD<Mat>(f.jacobian(x)).singularValues();
        const double hi = sv.maxCoeff(), lo = sv.minCoeff();
        out.upper = std::max(out.upper, hi);
        if (lo <= 1e-12 * std::max(hi, 1.0)) {
            out.lower = 0;
            if (!out.singular_witness) out.singular_witness = x;
        } else {
            out.lower = std::min(out.lower, lo);
        }
    }
    out.samples = n;
    return out;
}

LipschitzBounds lipschitz_bounds(const MapFamily& family, const Region& domain, std::size_t n_samples,
                                 std::uint64_t seed) {
    LipschitzBounds out;
    out.lower = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < family.size(); ++i) {
        const auto b = lipschitz_bounds(family[i].map, domain, n_samples, mix_seed(seed, i));
        out.lower = std::min(out.lower, b.lower);
        out.upper = std::max(out.upper, b.upper);
        out.samples += b.samples;
        if (b.singular_witness && !out.singular_witness) out.singular_witness = b.singular_witness;
    }
    return out;
}

bool weak_hyperbolicity(const Mat& a, Eigen::Index dim_s, Eigen::Index dim_u, double delta) {
    if (a.rows() != a.cols() || dim_s + dim_u != a.rows() || dim_s < 0 || dim_u < 0)
        throw Error("weak_hyperbolicity: split does not match the matrix size");
    if (!(delta > 0 && delta < 1)) throw Error("weak_hyperbolicity: delta must lie in (0,1)");
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    const double off = std::max(dim_s && dim_u ? a.topRightCorner(dim_s, dim_u).cwiseAbs().maxCoeff() : 0.0,
                                dim_s && dim_u ? a.bottomLeftCorner(dim_u, dim_s).cwiseAbs().maxCoeff() : 0.0);
    if (off > 1e-12 * scale) throw Error("weak_hyperbolicity: matrix is not block diagonal for the split");

    if (dim_s > 0) {
        const Vec sv = Eigen::JacobiSVD<Mat>(a.topLeftCorner(dim_s, dim_s)).singularValues();
        if (!(1 - delta < sv.minCoeff() && sv.maxCoeff() < 1)) return false;
    }
    if (dim_u > 0) {
        const Vec sv = Eigen::JacobiSVD<Mat>(a.bottomRightCorner(dim_u, dim_u)).singularValues();
        if (!(1 < sv.minCoeff() && sv.maxCoeff() < 1 / (1 - delta))) return false;
    } else {
        return false;
    }
    return true;
}

Map perturb(const Map& f, double eps, PerturbModel model, std::uint64_t seed, const Region& working_domain) {
    if (eps < 0) throw Error("perturb: eps must be nonnegative");
    if (eps == 0) return f;
    const Eigen::Index m = f.dim();
    const double reach = std::max(1.0, working_domain.center().norm() + working_domain.circumradius());
    Rng rng(seed);

    if (model == PerturbModel::Affine) {
        if (!f.is_affine()) throw Error("perturb: affine model needs an affine map");
        const auto& base = f.affine();
        // ‖ΔA‖₂ ≤ ‖ΔA‖_F ≤ ε/(2·reach), |Δb| ≤ ε/2: value deviation ≤ ε on the domain.
        const double a_range = eps / (2.0 * static_cast<double>(m) * reach);
        const double b_range = eps / (2.0 * std::sqrt(static_cast<double>(m)));
        for (int attempt = 0; attempt < 100; ++attempt) {
            Mat da(m, m);
            for (Eigen::Index i = 0; i < m; ++i)
                for (Eigen::Index j = 0; j < m; ++j) da(i, j) = rng.uniform(-a_range, a_range);
            const Vec db = rng.uniform_vector(m, -b_range, b_range);
            AffineMapd out(base.linear() + da, base.shift() + db);
            const Vec sv = out.singular_values();
            if (sv.minCoeff() > 1e-12 * std::max(1.0, sv.maxCoeff())) return Map(std::move(out));
        }
        throw Error("perturb: perturbation keeps producing singular maps");
    }

    Vec center(m);
    const Vec lo = working_domain.lower(), hi = working_domain.upper();
    for (Eigen::Index i = 0; i < m; ++i) center[i] = rng.uniform(lo[i], hi[i]);
    Vec direction = rng.uniform_vector(m, -1, 1);
    while (direction.norm() < 1e-3) direction = rng.uniform_vector(m, -1, 1);
    direction.normalize();
    const double radius = 0.25 * working_domain.diameter();
    const double amplitude = eps / std::max(1.0, BumpPerturbedMap::bump_slope() / radius);

    if (f.is_affine()) return Map(BumpPerturbedMap{f.affine(), center, radius, amplitude, direction});

    const BumpPerturbedMap bump{AffineMapd::identity(m), center, radius, amplitude, direction};
    auto added = [bump](const Vec& x) -> Vec { return bump(x) - x; };
    BlackBoxMap out;
    out.dim = m;
    out.evaluate = [f, added](const Vec& x) { return Vec(f(x) + added(x)); };
    out.jacobian = [f, bump](const Vec& x) -> Mat {
        return f.jacobian(x) + bump.jacobian(x) - Mat::Identity(x.size(), x.size());
    };
    if (f.has_inverse()) {
        out.inverse = [f, added](const Vec& y) {
            Vec x = f.inverse(y);
            for (int it = 0; it < 500; ++it) {
                const Vec next = f.inverse(Vec(y - added(x)));
                const double change = (next - x).norm();
                x = next;
                if (change <= 1e-15 * (1 + x.norm())) break;
            }
            return x;
        };
    }
    return Map(std::move(out));
}

FamilySequence::FamilySequence(MapFamily base, Region working_domain, double eps, PerturbModel model,
                               std::uint64_t seed)
    : base_(std::move(base)), domain_(std::move(working_domain)), eps_(eps), model_(model), seed_(seed) {
    if (eps < 0) throw Error("FamilySequence: eps must be nonnegative");
}

MapFamily FamilySequence::at(std::size_t step) const {
    if (eps_ == 0) return base_;
    std::vector<LabeledMap> maps;
    maps.reserve(base_.size());
    for (std::size_t i = 0; i < base_.size(); ++i)
        maps.push_back({base_[i].label, perturb(base_[i].map, eps_, model_, mix_seed(seed_, step, i), domain_)});
    return MapFamily(std::move(maps));
}

std::vector<MapFamily> FamilySequence::realize(std::size_t first, std::size_t count) const {
    std::vector<MapFamily> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(at(first + i));
    return out;
}

}  // namespace ifs
