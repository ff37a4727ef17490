#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace ifs {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vec = VectorX<double>;
using Mat = MatrixX<double>;

/// Closed Euclidean ball. Open/closed distinctions are resolved by the callers
/// through explicit tolerances; `contains` is the closed test.
template <typename Scalar>
struct Ball {
    VectorX<Scalar> center;
    Scalar radius{1};

    Eigen::Index dim() const { return center.size(); }

    template <typename Derived>
    bool contains(const Eigen::MatrixBase<Derived>& x, Scalar slack = Scalar(0)) const {
        return (x - center).norm() <= radius + slack;
    }

    /// Distance from an interior point to the sphere (negative outside).
    template <typename Derived>
    Scalar depth(const Eigen::MatrixBase<Derived>& x) const {
        return radius - (x - center).norm();
    }
};

/// Axis-aligned box `center ± halfwidths`.
template <typename Scalar>
struct Box {
    VectorX<Scalar> center;
    VectorX<Scalar> halfwidths;

    Eigen::Index dim() const { return center.size(); }

    template <typename Derived>
    bool contains(const Eigen::MatrixBase<Derived>& x, Scalar slack = Scalar(0)) const {
        return ((x - center).cwiseAbs() - halfwidths).maxCoeff() <= slack;
    }

    template <typename Derived>
    Scalar depth(const Eigen::MatrixBase<Derived>& x) const {
        return -((x - center).cwiseAbs() - halfwidths).maxCoeff();
    }

    /// Corners in binary order: bit i of the index selects +halfwidth_i.
    std::vector<VectorX<Scalar>> vertices() const {
        const auto m = dim();
        std::vector<VectorX<Scalar>> out;
        out.reserve(std::size_t{1} << m);
        for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
            VectorX<Scalar> v = center;
            for (Eigen::Index i = 0; i < m; ++i)
                v[i] += ((mask >> i) & 1U) ? halfwidths[i] : -halfwidths[i];
            out.push_back(std::move(v));
        }
        return out;
    }
};

using Balld = Ball<double>;
using Boxd = Box<double>;

/// A bounded domain: a box or a ball.
class Region {
public:
    Region(Boxd box) : shape_(std::move(box)) {}
    Region(Balld ball) : shape_(std::move(ball)) {}

    Eigen::Index dim() const;
    bool is_box() const { return std::holds_alternative<Boxd>(shape_); }
    bool is_ball() const { return std::holds_alternative<Balld>(shape_); }
    const Boxd& box() const { return std::get<Boxd>(shape_); }
    const Balld& ball() const { return std::get<Balld>(shape_); }

    Vec center() const;
    bool contains(const Vec& x, double slack = 0.0) const;
    /// Signed distance to the boundary, positive inside. Exact for balls; for
    /// boxes this is the distance to the nearest facet plane.
    double depth(const Vec& x) const;
    double diameter() const;
    /// Radius of the smallest ball about center() that contains the region.
    double circumradius() const;
    Vec lower() const;
    Vec upper() const;

    /// Nearest point of the region.
    Vec project(const Vec& x) const;

    /// Largest ball centred at `c` (clamped into the region) that fits inside
    /// both the region and `target`.
    Balld inscribed(const Balld& target) const;

private:
    std::variant<Boxd, Balld> shape_;
};

/// Finite multiset of points of equal dimension, stored contiguously.
class PointCloud {
public:
    PointCloud() = default;
    explicit PointCloud(Eigen::Index dim) : dim_(dim) {}

    Eigen::Index dim() const { return dim_; }
    std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / static_cast<std::size_t>(dim_); }
    bool empty() const { return size() == 0; }

    void reserve(std::size_t n) { data_.reserve(n * static_cast<std::size_t>(dim_)); }
    void clear() { data_.clear(); }

    template <typename Derived>
    void push_back(const Eigen::MatrixBase<Derived>& p) {
        for (Eigen::Index i = 0; i < dim_; ++i) data_.push_back(p[i]);
    }
    void append(const PointCloud& other);

    Eigen::Map<const Vec> operator[](std::size_t i) const {
        return Eigen::Map<const Vec>(data_.data() + i * static_cast<std::size_t>(dim_), dim_);
    }
    Eigen::Map<Vec> operator[](std::size_t i) {
        return Eigen::Map<Vec>(data_.data() + i * static_cast<std::size_t>(dim_), dim_);
    }

    const std::vector<double>& raw() const { return data_; }

    PointCloud scaled(double factor) const;

private:
    Eigen::Index dim_{0};
    std::vector<double> data_;
};

/// Lattice of spacing at most `spacing` over a region. Lattice points of a
/// ball domain that fall just outside are projected onto the sphere, so every
/// domain point lies within spacing*sqrt(m)/2 of some grid point.
struct Grid {
    Region domain;
    double spacing;

    Grid(Region d, double h);
    PointCloud points() const;
    /// Visits the points in order, in chunks of at most `chunk` points.
    void for_each_chunk(const std::function<void(const PointCloud&)>& visit, std::size_t chunk = 1 << 16) const;
    /// spacing * sqrt(m) / 2.
    double resolution() const;
};

/// Default grid spacing used by the membership oracles.
double default_spacing(Eigen::Index m);

/// Predicate deciding membership of a point in one piece of a cover.
using Membership = std::function<bool(const Vec&)>;

struct CoverReport {
    bool covered{false};
    double spacing{0};
    std::size_t checked{0};
    /// Uncovered grid points, lexicographically sorted.
    std::vector<Vec> witnesses;
};

double hausdorff_distance(const PointCloud& a, const PointCloud& b);
/// sup over `from` of the distance to `to`.
double directed_hausdorff(const PointCloud& from, const PointCloud& to);

CoverReport covering_test(const Region& region, const std::vector<Membership>& pieces, const Grid& grid);

struct LebesgueRadius {
    double radius{0};
    double spacing{0};
};

/// Largest rho such that for every grid point x of the region the set
/// B_rho(x) ∩ region lies in a single piece. Computed as the grid distance to
/// region∖piece, made conservative by subtracting spacing*sqrt(m).
LebesgueRadius lebesgue_radius(const std::vector<Membership>& pieces, const Region& region, const Grid& grid);

/// Maximum over grid points of the region of the distance to `s`.
double density_radius(const PointCloud& s, const Region& region, const Grid& grid);

void write_csv(std::ostream& out, const PointCloud& cloud);
PointCloud read_csv(std::istream& in);

/// Lexicographic order on equal-length vectors.
bool lex_less(const Vec& a, const Vec& b);

}  // namespace ifs
