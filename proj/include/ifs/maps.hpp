#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ifs/geometry.hpp"

namespace ifs {

/// x ↦ linear·x + shift.
template <typename Scalar>
class AffineMap {
public:
    using VectorType = VectorX<Scalar>;
    using MatrixType = MatrixX<Scalar>;

    AffineMap() = default;
    AffineMap(MatrixType linear, VectorType shift) : linear_(std::move(linear)), shift_(std::move(shift)) {}

    static AffineMap identity(Eigen::Index m) {
        return AffineMap(MatrixType::Identity(m, m), VectorType::Zero(m));
    }
    static AffineMap translation(const VectorType& c) {
        return AffineMap(MatrixType::Identity(c.size(), c.size()), c);
    }
    static AffineMap scaling(Eigen::Index m, Scalar factor) {
        return AffineMap(factor * MatrixType::Identity(m, m), VectorType::Zero(m));
    }

    Eigen::Index dim() const { return shift_.size(); }
    const MatrixType& linear() const { return linear_; }
    const VectorType& shift() const { return shift_; }

    template <typename Derived>
    VectorType operator()(const Eigen::MatrixBase<Derived>& x) const {
        return linear_ * x + shift_;
    }

    /// (*this) ∘ inner.
    AffineMap after(const AffineMap& inner) const {
        return AffineMap(linear_ * inner.linear_, linear_ * inner.shift_ + shift_);
    }

    AffineMap inverse() const {
        const auto lu = linear_.fullPivLu();
        MatrixType inv = lu.inverse();
        return AffineMap(inv, -(inv * shift_));
    }

    /// Unique fixed point (I − A)⁻¹ b.
    VectorType fixed_point() const {
        const MatrixType eye = MatrixType::Identity(dim(), dim());
        return (eye - linear_).fullPivLu().solve(shift_);
    }

    Scalar determinant() const { return linear_.determinant(); }

    VectorType singular_values() const {
        return Eigen::JacobiSVD<MatrixType>(linear_).singularValues();
    }

private:
    MatrixType linear_;
    VectorType shift_;
};

using AffineMapd = AffineMap<double>;

/// f ∘ g for affine maps.
template <typename Scalar>
AffineMap<Scalar> compose(const AffineMap<Scalar>& f, const AffineMap<Scalar>& g) {
    return f.after(g);
}

/// A differentiable map given by an evaluator. The Jacobian defaults to
/// central finite differences with step 1e-6.
struct BlackBoxMap {
    Eigen::Index dim{0};
    std::function<Vec(const Vec&)> evaluate;
    std::function<Mat(const Vec&)> jacobian;
    std::function<Vec(const Vec&)> inverse;

    static constexpr double kDifferenceStep = 1e-6;

    Mat jacobian_at(const Vec& x) const;
};

/// Affine base plus one smooth compactly supported bump:
/// x ↦ base(x) + amplitude·ψ(|x − center|/radius)·direction, ψ(t) = (1 − t²)².
struct BumpPerturbedMap {
    AffineMapd base;
    Vec center;
    double radius{1};
    double amplitude{0};
    Vec direction;

    Vec operator()(const Vec& x) const;
    Mat jacobian(const Vec& x) const;
    Vec inverse(const Vec& y) const;

    /// Sup of |ψ'| on [0, 1], attained at t = 1/√3.
    static double bump_slope();
};

/// A map of ℝ^m: exact affine, bump-perturbed affine, or a black box.
class Map {
public:
    Map(AffineMapd f) : impl_(std::move(f)) {}
    Map(BumpPerturbedMap f) : impl_(std::move(f)) {}
    Map(BlackBoxMap f) : impl_(std::move(f)) {}

    Eigen::Index dim() const;
    Vec operator()(const Vec& x) const;
    Mat jacobian(const Vec& x) const;
    bool has_inverse() const;
    Vec inverse(const Vec& y) const;

    bool is_affine() const { return std::holds_alternative<AffineMapd>(impl_); }
    const AffineMapd& affine() const { return std::get<AffineMapd>(impl_); }
    bool is_bump() const { return std::holds_alternative<BumpPerturbedMap>(impl_); }
    const BumpPerturbedMap& bump() const { return std::get<BumpPerturbedMap>(impl_); }

    /// Black-box view of any map.
    BlackBoxMap as_black_box() const;

private:
    std::variant<AffineMapd, BumpPerturbedMap, BlackBoxMap> impl_;
};

/// f ∘ g; stays exact when both are affine.
Map compose(const Map& f, const Map& g);

struct LabeledMap {
    std::string label;
    Map map;
};

/// Finite ordered family of maps sharing one dimension.
class MapFamily {
public:
    MapFamily() = default;
    explicit MapFamily(std::vector<LabeledMap> maps);

    Eigen::Index dim() const { return maps_.empty() ? 0 : maps_.front().map.dim(); }
    std::size_t size() const { return maps_.size(); }
    const LabeledMap& operator[](std::size_t i) const { return maps_[i]; }
    const std::vector<LabeledMap>& members() const { return maps_; }
    bool all_affine() const;

    /// Hutchinson operator on a cloud.
    PointCloud image(const PointCloud& cloud) const;

private:
    std::vector<LabeledMap> maps_;
};

/// All f∘g, f ∈ F, g ∈ G, labels joined as "f*g", ordered by (f, g).
MapFamily compose_families(const MapFamily& f, const MapFamily& g);

struct LipschitzBounds {
    double lower{0};
    double upper{0};
    std::size_t samples{0};
    /// Sample point where the Jacobian was numerically singular, if any.
    std::optional<Vec> singular_witness;
};

/// Extreme singular values of the Jacobian over domain samples. One sample
/// suffices (and the result is exact) for affine maps.
LipschitzBounds lipschitz_bounds(const Map& f, const Region& domain, std::size_t n_samples = 256,
                                 std::uint64_t seed = 0);

/// Extreme bounds over every member of a family.
LipschitzBounds lipschitz_bounds(const MapFamily& family, const Region& domain, std::size_t n_samples = 256,
                                 std::uint64_t seed = 0);

/// δ-weak hyperbolicity of a linear map that is block diagonal with respect to
/// the first dim_s and last dim_u coordinates.
bool weak_hyperbolicity(const Mat& a, Eigen::Index dim_s, Eigen::Index dim_u, double delta);

enum class PerturbModel { Affine, Bump };

/// C¹-small perturbation of f on a working domain: value and Jacobian
/// deviations stay ≤ eps (Euclidean norms) on the domain.
Map perturb(const Map& f, double eps, PerturbModel model, std::uint64_t seed, const Region& working_domain);

/// Per-step perturbed families F_1, F_2, … of a base family. Step n is a pure
/// function of (seed, n), so any prefix can be replayed.
class FamilySequence {
public:
    FamilySequence(MapFamily base, Region working_domain, double eps = 0.0,
                   PerturbModel model = PerturbModel::Affine, std::uint64_t seed = 0);

    /// Family used at step `step` (1-based, as in F_1, F_2, …).
    MapFamily at(std::size_t step) const;
    std::vector<MapFamily> realize(std::size_t first, std::size_t count) const;

    const MapFamily& base() const { return base_; }
    const Region& working_domain() const { return domain_; }
    double eps() const { return eps_; }
    PerturbModel model() const { return model_; }
    std::uint64_t seed() const { return seed_; }

private:
    MapFamily base_;
    Region domain_;
    double eps_;
    PerturbModel model_;
    std::uint64_t seed_;
};

}  // namespace ifs
