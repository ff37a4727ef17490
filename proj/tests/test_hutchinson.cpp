#include <doctest.h>

#include <cmath>
#include <set>

#include "ifs/affine_construction.hpp"
#include "ifs/hutchinson.hpp"
#include "oracles.hpp"

using namespace ifs;

namespace {

MapFamily halving(Eigen::Index m = 2) { return MapFamily({{"h", Map(AffineMapd::scaling(m, 0.5))}}); }

struct Derived {
    AffineParams p = oracle::golden_params(2);
    MapFamily family = blending_family(p);
    Region box{box_B(p)};
    Balld absorbing = absorbing_ball(family, Balld{Vec::Zero(2), 1e-9});
};

const Derived& derived() {
    static const Derived d;
    return d;
}

}  // namespace

TEST_CASE("absorbing ball") {
    const auto& d = derived();
    CHECK(d.absorbing.radius > d.box.circumradius());
    for (const auto& m : d.family.members()) {
        const auto& f = m.map.affine();
        const double norm = f.singular_values()[0];
        CHECK(norm * d.absorbing.radius + (f(d.absorbing.center) - d.absorbing.center).norm() <= d.absorbing.radius);
    }
    const MapFamily expanding({{"T", Map(build_T(d.p))}});
    CHECK_THROWS_WITH_AS(absorbing_ball(expanding, Balld{Vec::Zero(2), 1.0}), "family not eventually absorbing", Error);
}

TEST_CASE("attractor of a single halving map is the origin") {
    const double tol = 0.01;
    const auto cloud = attractor(halving(), Balld{Vec::Constant(2, 1.0), 1.0}, tol);
    REQUIRE_FALSE(cloud.empty());
    for (std::size_t i = 0; i < cloud.size(); ++i) CHECK(cloud[i].norm() <= tol);
}

TEST_CASE("attractor of {S, S∘T} contains B") {
    const auto& d = derived();
    const double tol = 0.01;
    static const auto cloud = attractor(d.family, d.absorbing, tol);
    SUBCASE("every 0.02-cell of B holds a point") {
        // Equal cells of side ≤ 0.02 per axis.
        const Vec lo = d.box.lower(), span = d.box.upper() - lo;
        const int nx = static_cast<int>(std::ceil(span[0] / 0.02)), ny = static_cast<int>(std::ceil(span[1] / 0.02));
        std::set<std::pair<int, int>> hit;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const Vec x = cloud[i];
            if (!d.box.contains(x)) continue;
            hit.insert({std::min(nx - 1, static_cast<int>((x[0] - lo[0]) / span[0] * nx)),
                        std::min(ny - 1, static_cast<int>((x[1] - lo[1]) / span[1] * ny))});
        }
        CHECK(hit.size() == static_cast<std::size_t>(nx * ny));
    }
    SUBCASE("the cloud is invariant under the Hutchinson operator") {
        CHECK(hausdorff_distance(d.family.image(cloud), cloud) <= 2 * tol);
    }
    SUBCASE("another seed gives the same attractor") {
        const auto other = attractor(d.family, Balld{Vec::Constant(2, 0.7), 0.1}, tol);
        CHECK(hausdorff_distance(cloud, other) <= 2 * tol);
    }
}

TEST_CASE("chaos game") {
    SUBCASE("halving map: points collapse to the origin") {
        const Vec x0 = Vec::Constant(2, 3.0);
        const auto cloud = chaos_game(halving(), x0, 100, 30, 1);
        REQUIRE(cloud.size() == 100);
        for (std::size_t i = 0; i < cloud.size(); ++i) CHECK(cloud[i].norm() <= std::pow(0.5, 30) * x0.norm() + 1e-12);
    }
    SUBCASE("zero points") { CHECK(chaos_game(derived().family, Vec::Zero(2), 0, 10, 1).empty()); }
    SUBCASE("deterministic in the seed") {
        const auto a = chaos_game(derived().family, Vec::Zero(2), 500, 100, 9);
        const auto b = chaos_game(derived().family, Vec::Zero(2), 500, 100, 9);
        const auto c = chaos_game(derived().family, Vec::Zero(2), 500, 100, 10);
        CHECK(a.raw() == b.raw());
        CHECK(a.raw() != c.raw());
    }
    SUBCASE("lies within the deterministic attractor") {
        const double tol = 0.02;
        const auto det = attractor(derived().family, derived().absorbing, tol);
        const auto chaos = chaos_game(derived().family, Vec::Zero(2), 200000, 1000, 3);
        CHECK(directed_hausdorff(chaos, det) <= 3 * tol);
    }
    SUBCASE("reaches the period-2 point of S·ST only slowly") {
        // The word tail must follow (S·ST)^L to come close, so uniform
        // sampling misses this part of the attractor.
        const auto& d = derived();
        PointCloud p(2);
        p.push_back(word_fixed_point(d.family, Word{0, 1}));
        const double far = directed_hausdorff(p, chaos_game(d.family, Vec::Zero(2), 20000, 1000, 3));
        const double near = directed_hausdorff(p, chaos_game(d.family, Vec::Zero(2), 200000, 1000, 3));
        CHECK(near <= far);
        CHECK(near > 0.1);
    }
}

TEST_CASE("decimate keeps one point per occupied cell") {
    PointCloud c(2);
    for (int i = 0; i < 10; ++i) c.push_back(Eigen::Vector2d(0.001 * i, 0.0));
    c.push_back(Eigen::Vector2d(0.5, 0.5));
    const auto d = decimate(c, 0.1);
    CHECK(d.size() == 2);
    CHECK(d[0] == c[0]);
}

TEST_CASE("fixed points of words") {
    const auto& d = derived();
    SUBCASE("an expanding word is rejected") {
        const MapFamily gen = generators(d.p);
        CHECK_THROWS_WITH_AS(word_fixed_point(gen, Word{1}), "word is not a contraction", Error);
    }
    SUBCASE("single letter S matches a linear solve") {
        const Vec x = word_fixed_point(d.family, Word{0});
        const auto want = oracle::affine_fixed_point(build_S(d.p));
        CHECK((d.family[0].map(x) - x).norm() <= 1e-12);
        for (int i = 0; i < 2; ++i) CHECK(std::abs(x[i] - want[i]) <= 1e-12);
    }
    SUBCASE("S·ST lies inside the absorbing ball, also by Banach iteration") {
        const Word w{0, 1};
        const Vec x = word_fixed_point(d.family, w);
        CHECK(d.absorbing.contains(x));
        const MapFamily bb({{"S", Map(d.family[0].map.as_black_box())}, {"ST", Map(d.family[1].map.as_black_box())}});
        const Vec y = word_fixed_point(bb, w);
        CHECK((x - y).norm() <= 1e-10);
        CHECK((apply_word(d.family, w, x) - x).norm() <= 1e-12);
    }
}

TEST_CASE("fixed point sets") {
    const auto& d = derived();
    CHECK(fixed_point_set(d.family, 0).points.empty());
    const auto y1 = fixed_point_set(d.family, 1);
    REQUIRE(y1.points.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto want = oracle::affine_fixed_point(d.family[i].map.affine());
        for (int k = 0; k < 2; ++k) CHECK(std::abs(y1.points[i][k] - want[k]) <= 1e-12);
    }
    const auto maps = oracle::affine_members(d.family);
    for (std::size_t n = 1; n <= 8; ++n) {
        const auto y = fixed_point_set(d.family, n);
        CHECK(y.n == n);
        CHECK(y.points.size() == (std::size_t{1} << n));
        CHECK(y.words.size() == y.points.size());
        for (std::size_t i = 0; i < y.points.size(); ++i) {
            CHECK(y.words[i].size() == n);
            const auto x = oracle::to_point(y.points[i]);
            CHECK(oracle::dist(oracle::apply_word(maps, y.words[i], x), x) <= 1e-10);
        }
        for (std::size_t i = 1; i < y.words.size(); ++i) CHECK(y.words[i - 1] < y.words[i]);
    }
    CHECK_THROWS_AS(fixed_point_set(d.family, 8, 100), Error);
}

TEST_CASE("fixed point sets get denser with word length") {
    // Fix(w) = Fix(ww), so Y_n ⊂ Y_2n; Y_n ⊄ Y_{n+1} in general.
    const auto& d = derived();
    const Grid grid(d.box, 0.02);
    std::vector<double> r(13);
    for (std::size_t n = 1; n <= 12; ++n) r[n] = density_radius(fixed_point_set(d.family, n).points, d.box, grid);
    for (std::size_t n = 1; n <= 6; ++n) CHECK(r[2 * n] <= r[n] + 1e-9);
    for (std::size_t n = 1; n + 2 <= 12; ++n) CHECK(r[n + 2] <= r[n] + 1e-9);
    const auto y3 = fixed_point_set(d.family, 3), y6 = fixed_point_set(d.family, 6);
    for (std::size_t i = 0; i < y3.points.size(); ++i) {
        Word ww = y3.words[i];
        ww.insert(ww.end(), y3.words[i].begin(), y3.words[i].end());
        const auto at = std::lower_bound(y6.words.begin(), y6.words.end(), ww) - y6.words.begin();
        CHECK((y6.points[static_cast<std::size_t>(at)] - y3.points[i]).norm() <= 1e-10);
    }
}
