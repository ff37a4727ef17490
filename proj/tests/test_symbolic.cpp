#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ifs/affine_construction.hpp"
#include "ifs/hutchinson.hpp"
#include "ifs/minimality.hpp"
#include "ifs/symbolic.hpp"
#include "oracles.hpp"

using namespace ifs;

namespace {

struct Derived {
    AffineParams p = oracle::golden_params(2);
    MapFamily family = blending_family(p);
    Region box{box_B(p)};
    SkewProduct product = blender_product(family, box);
};

const Derived& derived() {
    static const Derived d;
    return d;
}

MapFamily scalings(double a, double b, const Vec& shift = Vec::Zero(2)) {
    return MapFamily({{"a", Map(AffineMapd(a * Mat::Identity(2, 2), shift))},
                      {"b", Map(AffineMapd(b * Mat::Identity(2, 2), shift))}});
}

bool ball_inside(const Balld& inner, const Balld& outer, double tol) {
    return (inner.center - outer.center).norm() + inner.radius <= outer.radius + tol;
}

std::vector<Strip> generations(const SkewProduct& p, std::size_t n) {
    auto s = initial_strips(p);
    for (std::size_t i = 0; i < n; ++i) s = strip_refine(p, s);
    return s;
}

double widest(const std::vector<Strip>& s) {
    double r = 0;
    for (const auto& x : s) r = std::max(r, x.bound.radius);
    return r;
}

}  // namespace

TEST_CASE("symbol words") {
    const auto w = SymbolWord::parse("1221", 2);
    CHECK(w.letters == std::vector<std::uint8_t>{0, 1, 1, 0});
    CHECK(w.str() == "1221");
    CHECK(w.origin == 0);
    CHECK(SymbolWord::parse("", 3).size() == 0);
    CHECK_THROWS_AS(SymbolWord::parse("13", 2), Error);
    CHECK_THROWS_AS(SymbolWord::parse("1x", 2), Error);
    CHECK_THROWS_AS(SymbolWord::parse("1", 1), Error);
}

TEST_CASE("blender product") {
    const auto& d = derived();
    const auto& p = d.product;
    CHECK(p.alphabet == 2);
    CHECK(p.window == 1);
    CHECK(p.window_count() == 2);
    CHECK(p.outer.radius >= d.box.circumradius());
    for (const auto& f : p.fibers) {
        const auto& a = f.map.affine();
        CHECK((a(p.outer.center) - p.outer.center).norm() + a.singular_values().maxCoeff() * p.outer.radius <=
              p.outer.radius * (1 + 1e-12));
    }
    const auto w3 = blender_product(d.family, d.box, 3, 0.01, 4);
    CHECK(w3.window == 3);
    REQUIRE(w3.fibers.size() == 8);
    CHECK(w3.outer.radius >= d.box.circumradius());
    Rng rng(2);
    const std::uint8_t letters[3] = {1, 0, 1};
    CHECK(w3.window_index(letters) == 5);
    for (std::size_t code = 0; code < 8; ++code) {
        const auto& base = d.family[code % 2].map;
        for (int t = 0; t < 20; ++t) {
            const Vec x = rng.uniform_vector(2, -1, 1);
            CHECK((w3.fibers[code].map(x) - base(x)).norm() <= 0.01);
        }
    }
    CHECK_THROWS_AS(perturbed_skew_product(d.family, p.outer, d.box, 6, 0.01, 1), Error);
    CHECK_THROWS_AS(skew_product(MapFamily({{"a", Map(AffineMapd::identity(2))}}), p.outer, d.box), Error);
}

TEST_CASE("skew_step") {
    const auto& d = derived();
    const auto& p = d.product;
    SUBCASE("symbol 2 at the origin applies S∘T") {
        const auto omega = SymbolWord::parse("2", 2);
        const auto [next, y] = skew_step(p, omega, Vec::Zero(2));
        CHECK(next.origin == 1);
        CHECK(next.letters == omega.letters);
        CHECK(y[0] == doctest::Approx(-d.p.s).epsilon(1e-15));
        CHECK(std::abs(y[1]) <= 1e-15);
        CHECK_THROWS_WITH_AS(skew_step(p, next, y), "skew_step: window exhausted", Error);
    }
    SUBCASE("identity fibers leave y unchanged") {
        const MapFamily ids({{"a", Map(AffineMapd::identity(2))}, {"b", Map(AffineMapd::identity(2))}});
        const auto q = skew_product(ids, p.outer, d.box);
        const Vec y0 = Eigen::Vector2d(0.3, -0.7);
        auto state = std::make_pair(SymbolWord::parse("12211", 2), y0);
        for (int i = 0; i < 5; ++i) state = skew_step(q, state.first, state.second);
        CHECK(state.second == y0);
    }
    SUBCASE("n steps compose the selected word") {
        const auto maps = oracle::affine_members(d.family);
        Rng rng(3);
        for (int t = 0; t < 20; ++t) {
            SymbolWord omega;
            std::vector<std::size_t> word;
            for (int i = 0; i < 15; ++i) {
                omega.letters.push_back(static_cast<std::uint8_t>(rng.index(2)));
                word.push_back(omega.letters.back());
            }
            const Vec y0 = rng.uniform_vector(2, -1, 1);
            auto state = std::make_pair(omega, y0);
            for (int i = 0; i < 15; ++i) state = skew_step(p, state.first, state.second);
            const auto want = oracle::apply_word(maps, word, oracle::to_point(y0));
            CHECK(oracle::dist(oracle::to_point(state.second), want) <= 1e-12);
        }
    }
    SUBCASE("window-3 product reads three symbols") {
        const auto w3 = blender_product(d.family, d.box, 3, 0.01, 4);
        const auto omega = SymbolWord::parse("212", 2);
        const auto [next, y] = skew_step(w3, omega, Vec::Zero(2));
        CHECK(y == w3.fibers[w3.window_index(omega.letters.data())].map(Vec::Zero(2)));
        CHECK_THROWS_AS(skew_step(w3, SymbolWord::parse("21", 2), Vec::Zero(2)), Error);
    }
}

TEST_CASE("strip refinement") {
    const auto& d = derived();
    const auto& p = d.product;
    const auto maps = oracle::affine_members(d.family);
    const double kappa = d.p.a * d.p.r;
    std::vector<Strip> strips = initial_strips(p);
    REQUIRE(strips.size() == 1);
    CHECK(strips[0].past.empty());
    CHECK(strips[0].bound.radius == p.outer.radius);
    Rng rng(5);
    for (std::size_t n = 1; n <= 10; ++n) {
        const auto children = strip_refine(p, strips);
        REQUIRE(children.size() == (std::size_t{1} << n));
        for (std::size_t i = 0; i < children.size(); ++i) {
            const auto& c = children[i];
            CHECK(c.generation == n);
            CHECK(c.past.size() == n);
            // Children extend the past; the parent's past is the newer tail.
            const auto& parent = strips[i / 2];
            CHECK(std::equal(parent.past.begin(), parent.past.end(), c.past.begin() + 1));
            CHECK(ball_inside(c.bound, parent.bound, 1e-12));
            CHECK(c.bound.radius <= std::pow(kappa, static_cast<double>(n)) * p.outer.radius * (1 + 1e-12));
            const Vec x = rng.uniform_vector(2, -1, 1);
            const auto want = oracle::apply_word(maps, std::vector<std::size_t>(c.past.begin(), c.past.end()),
                                                 oracle::to_point(x));
            CHECK(oracle::dist(oracle::to_point(c.composite(x)), want) <= 1e-12);
        }
        CHECK(widest(children) == doctest::Approx(std::pow(kappa, static_cast<double>(n)) * p.outer.radius).epsilon(1e-12));
        strips = children;
    }
}

TEST_CASE("window-3 perturbed strips decay at rate ≤ r + 2 eps") {
    const auto& d = derived();
    const double eps = 0.01;
    const auto w3 = blender_product(d.family, d.box, 3, eps, 11);
    auto strips = initial_strips(w3);
    double previous = w3.outer.radius;
    for (std::size_t n = 1; n <= 12; ++n) {
        const auto children = strip_refine(w3, strips);
        CHECK(children.size() == (std::size_t{1} << n));
        const double r = widest(children);
        // The first w − 1 symbols do not yet select a fiber map.
        if (n < 3) CHECK(r == previous);
        else CHECK(r / previous <= d.p.r + 2 * eps);
        for (std::size_t i = 0; i < children.size(); ++i) CHECK(ball_inside(children[i].bound, strips[i / 2].bound, 1e-12));
        previous = r;
        strips = children;
    }
}

TEST_CASE("strip refinement needs affine fibers") {
    const auto& d = derived();
    const auto bump = perturbed_skew_product(d.family, d.product.outer, d.box, 1, 0.01, 3, PerturbModel::Bump);
    CHECK_THROWS_AS(strip_refine(bump, initial_strips(bump)), Error);
}

TEST_CASE("blender_verify") {
    const auto& d = derived();
    SUBCASE("derived product, first generations") {
        std::vector<Strip> last;
        const auto rep = blender_verify(d.product, 12, 0.05, {}, &last);
        CHECK(rep.precheck);
        CHECK(rep.domination);
        REQUIRE(rep.generations.size() == 12);
        for (std::size_t n = 0; n < 12; ++n) {
            CHECK(rep.generations[n].generation == n + 1);
            CHECK(rep.generations[n].strips == (std::size_t{2} << n));
            CHECK(rep.generations[n].pruned == 0);
        }
        // Covering is monotone in n.
        for (std::size_t n = 1; n < 12; ++n)
            if (rep.generations[n - 1].covered) CHECK(rep.generations[n].covered);
        CHECK(rep.generations.back().covered);
        REQUIRE(rep.decay_ratios.size() == 11);
        for (double q : rep.decay_ratios) CHECK(q == doctest::Approx(d.p.a * d.p.r).epsilon(1e-12));
        // Strips are still wider than 2h, so the report does not pass yet.
        CHECK_FALSE(rep.passed);
        CHECK(last.size() == 4096);
    }
    SUBCASE("pruning keeps the covering and is reported") {
        BlenderOptions small;
        small.strip_budget = 256;
        const auto full = blender_verify(d.product, 11, 0.05);
        const auto pruned = blender_verify(d.product, 11, 0.05, small);
        CHECK(pruned.pruned_total > 0);
        std::size_t reported = 0;
        for (std::size_t n = 0; n < 11; ++n) {
            reported += pruned.generations[n].pruned;
            CHECK(pruned.generations[n].covered == full.generations[n].covered);
            CHECK(pruned.generations[n].max_radius == full.generations[n].max_radius);
        }
        CHECK(reported == pruned.pruned_total);
    }
    SUBCASE("a constant fiber map with fixed point outside E_in fails") {
        const Vec shift = Eigen::Vector2d(3.0, 0.0);
        const auto same = scalings(0.5, 0.5, shift);
        const auto p = skew_product(same, Balld{Eigen::Vector2d(6.0, 0.0), 6.0}, Region(Balld{Vec::Zero(2), 1.0}));
        const auto rep = blender_verify(p, 5, 0.1);
        CHECK_FALSE(rep.precheck);
        CHECK_FALSE(rep.passed);
        CHECK_FALSE(rep.witnesses.empty());
        CHECK(rep.generations.empty());
    }
    SUBCASE("a non-contracting fiber is rejected") {
        const auto p = skew_product(scalings(1.5, 0.5), Balld{Vec::Zero(2), 1.0}, Region(Balld{Vec::Zero(2), 1.0}));
        CHECK_THROWS_AS(blender_verify(p, 3, 0.1), Error);
    }
}

TEST_CASE("check_domination") {
    const auto& d = derived();
    CHECK(check_domination(d.product, 2.0));
    CHECK_FALSE(check_domination(d.product, 1.1));
    CHECK_THROWS_AS(check_domination(d.product, 1.0), Error);
    const auto steep = skew_product(scalings(3.0, 0.9), Balld{Vec::Zero(2), 1.0}, Region(Balld{Vec::Zero(2), 1.0}));
    CHECK_FALSE(check_domination(steep, 2.0));
}

TEST_CASE("mixing probe") {
    const auto& d = derived();
    const auto& p = d.product;
    SUBCASE("whole space") {
        const Cylinder all{SymbolWord{}, p.outer};
        const auto rep = mixing_probe(p, all, all, 0, 20, {2000, 1});
        CHECK(rep.mixing);
        CHECK(rep.first_time == 0);
        REQUIRE(rep.hits.size() == 21);
        CHECK(rep.samples == 2000);
        for (auto h : rep.hits) CHECK(h == 2000);
    }
    SUBCASE("common fixed point confines the orbit") {
        const auto q = skew_product(scalings(0.5, 0.8), Balld{Vec::Zero(2), 1.0}, Region(Balld{Vec::Zero(2), 1.0}));
        const Cylinder u{SymbolWord::parse("1", 2), Balld{Vec::Zero(2), 0.01}};
        const Cylinder v{SymbolWord::parse("1", 2), Balld{Eigen::Vector2d(0.5, 0.0), 0.1}};
        const auto rep = mixing_probe(q, u, v, 30, 60, {2000, 1, 10000});
        CHECK_FALSE(rep.mixing);
        CHECK(rep.first_time == 61);
        CHECK(rep.samples == 10000);
    }
    SUBCASE("a random cylinder pair on the derived product") {
        const auto u = random_cylinder(p, 3, 0.1, 21), v = random_cylinder(p, 3, 0.1, 22);
        CHECK(u.prefix.size() == 3);
        CHECK(d.box.depth(u.fiber.center) >= 0.1 - 1e-15);
        CHECK(random_cylinder(p, 3, 0.1, 21).fiber.center == u.fiber.center);
        const auto rep = mixing_probe(p, u, v, 30, 60, {20000, 5});
        CHECK(rep.mixing);
        CHECK(rep.first_time <= 30);
    }
    SUBCASE("batches stop once every time has a hit") {
        const auto u = random_cylinder(p, 3, 0.1, 21), v = random_cylinder(p, 3, 0.1, 22);
        const auto one = mixing_probe(p, u, v, 30, 60, {1000, 5, 1000});
        const auto more = mixing_probe(p, u, v, 30, 60, {1000, 5, 50000});
        CHECK(one.samples == 1000);
        CHECK(more.samples >= 1000);
        CHECK(more.samples % 1000 == 0);
        for (std::size_t t = 0; t <= 60; ++t) CHECK(more.hits[t] >= one.hits[t]);
        if (more.samples < 50000) CHECK(more.mixing);
    }
    SUBCASE("bad input") {
        const Cylinder u{SymbolWord::parse("3", 3), Balld{Vec::Zero(2), 0.1}};
        CHECK_THROWS_AS(mixing_probe(p, u, u, 1, 2), Error);
        const Cylinder w{SymbolWord{}, Balld{Vec::Zero(3), 0.1}};
        CHECK_THROWS_AS(mixing_probe(p, w, w, 1, 2), Error);
    }
}

TEST_CASE("strips csv") {
    const auto& d = derived();
    const auto strips = generations(d.product, 3);
    std::ostringstream out;
    write_strips_csv(out, strips);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "prefix,c1,c2,radius,generation");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        REQUIRE(cells.size() == 5);
        CHECK(cells[0] == SymbolWord{2, strips[rows].past, 0}.str());
        CHECK(std::stod(cells[3]) == strips[rows].bound.radius);
        CHECK(cells[4] == "3");
        ++rows;
    }
    CHECK(rows == 8);
}
