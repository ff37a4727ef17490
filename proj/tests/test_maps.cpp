#include <doctest.h>

#include <cmath>

#include "ifs/affine_construction.hpp"
#include "ifs/maps.hpp"
#include "ifs/random.hpp"
#include "ifs/serialization.hpp"
#include "oracles.hpp"

using namespace ifs;

namespace {

AffineMapd random_affine(Rng& rng, Eigen::Index m) {
    Mat a(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) a(i, j) = rng.uniform(-1, 1);
    a += 1.5 * Mat::Identity(m, m);
    return AffineMapd(a, rng.uniform_vector(m, -1, 1));
}

MapFamily single(const std::string& label, Map f) { return MapFamily({{label, std::move(f)}}); }

}  // namespace

TEST_CASE("compose_families") {
    const auto p = oracle::golden_params(2);
    SUBCASE("{Id} ∘ G is G relabeled") {
        const auto g = blending_family(p);
        const auto c = compose_families(single("Id", AffineMapd::identity(2)), g);
        REQUIRE(c.size() == 2);
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(c[i].label == "Id*" + g[i].label);
            CHECK(c[i].map.affine().linear() == g[i].map.affine().linear());
            CHECK(c[i].map.affine().shift() == g[i].map.affine().shift());
        }
    }
    SUBCASE("{S} ∘ {T} equals the closed form") {
        const auto c = compose_families(single("S", build_S(p)), single("T", build_T(p)));
        REQUIRE(c.size() == 1);
        CHECK(c[0].map.is_affine());
        Rng rng(1);
        for (int t = 0; t < 100; ++t) {
            const Vec x = rng.uniform_vector(2, -1, 1);
            const auto want = oracle::ST(p, oracle::to_point(x));
            const Vec got = c[0].map(x);
            for (int i = 0; i < 2; ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-14);
        }
    }
    SUBCASE("counting") {
        CHECK(compose_families(blending_family(p), generators(p)).size() == 4);
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(compose_families(single("a", AffineMapd::identity(2)), single("b", AffineMapd::identity(3))),
                        Error);
    }
}

TEST_CASE("lipschitz bounds") {
    const auto p = oracle::golden_params(2);
    const Region box(box_B(p));
    auto s = lipschitz_bounds(Map(build_S(p)), box);
    CHECK(s.lower == doctest::Approx(p.r).epsilon(1e-14));
    CHECK(s.upper == doctest::Approx(p.r).epsilon(1e-14));
    CHECK(s.samples == 1);
    auto t = lipschitz_bounds(Map(build_T(p)), box);
    CHECK(t.lower == doctest::Approx(p.a).epsilon(1e-14));
    CHECK(t.upper == doctest::Approx(p.a).epsilon(1e-14));
    auto id = lipschitz_bounds(Map(AffineMapd::identity(2)), box);
    CHECK(id.lower == 1.0);
    CHECK(id.upper == 1.0);
    SUBCASE("singular map reports zero with a witness") {
        Mat a = Mat::Zero(2, 2);
        a(0, 0) = 1;
        BlackBoxMap f;
        f.dim = 2;
        f.evaluate = [a](const Vec& x) { return Vec(a * x); };
        const auto b = lipschitz_bounds(Map(f), box, 16);
        CHECK(b.lower == 0.0);
        CHECK(b.singular_witness.has_value());
    }
    SUBCASE("composition is submultiplicative") {
        Rng rng(4);
        for (int i = 0; i < 20; ++i) {
            const auto f = random_affine(rng, 3), g = random_affine(rng, 3);
            const Region dom(Balld{Vec::Zero(3), 1.0});
            const auto bf = lipschitz_bounds(Map(f), dom), bg = lipschitz_bounds(Map(g), dom);
            const auto bfg = lipschitz_bounds(Map(compose(f, g)), dom);
            CHECK(bfg.lower >= bf.lower * bg.lower - 1e-12);
            CHECK(bfg.upper <= bf.upper * bg.upper + 1e-12);
        }
    }
}

TEST_CASE("weak hyperbolicity") {
    CHECK(weak_hyperbolicity(Eigen::Vector2d(0.99, 1.01).asDiagonal().toDenseMatrix(), 1, 1, 0.05));
    CHECK_FALSE(weak_hyperbolicity(Eigen::Vector2d(0.5, 2.0).asDiagonal().toDenseMatrix(), 1, 1, 0.05));
    CHECK_FALSE(weak_hyperbolicity(Mat::Identity(2, 2), 1, 1, 0.05));
    CHECK_FALSE(weak_hyperbolicity(Mat::Identity(2, 2), 1, 1, 0.5));
    Mat coupled = Eigen::Vector2d(0.99, 1.01).asDiagonal().toDenseMatrix();
    coupled(0, 1) = 0.1;
    CHECK_THROWS_AS(weak_hyperbolicity(coupled, 1, 1, 0.05), Error);
}

TEST_CASE("affine algebra") {
    Rng rng(8);
    for (int t = 0; t < 50; ++t) {
        const auto f = random_affine(rng, 3), g = random_affine(rng, 3), h = random_affine(rng, 3);
        const auto left = compose(compose(f, g), h), right = compose(f, compose(g, h));
        CHECK((left.linear() - right.linear()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((left.shift() - right.shift()).cwiseAbs().maxCoeff() <= 1e-12);
        const Vec x = rng.uniform_vector(3, -2, 2);
        CHECK((f.inverse()(f(x)) - x).norm() <= 1e-12);
        const auto fp = oracle::affine_fixed_point(f);
        const Vec lib = f.fixed_point();
        for (int i = 0; i < 3; ++i) CHECK(std::abs(lib[i] - fp[i]) <= 1e-10 * (1 + std::abs(fp[i])));
    }
}

TEST_CASE("black-box jacobians match finite differences") {
    const BlackBoxMap f{2, [](const Vec& x) { return Vec(Eigen::Vector2d(std::sin(x[0]) + x[1] * x[1], x[0] * x[1])); },
                        nullptr, nullptr};
    Rng rng(2);
    for (int t = 0; t < 20; ++t) {
        const Vec x = rng.uniform_vector(2, -1, 1);
        Mat exact(2, 2);
        exact << std::cos(x[0]), 2 * x[1], x[1], x[0];
        CHECK((f.jacobian_at(x) - exact).norm() <= 1e-4 * std::max(1.0, exact.norm()));
    }
}

TEST_CASE("perturb") {
    const auto p = oracle::golden_params(2);
    const Region dom(Balld{Vec::Zero(2), 2.8});
    const Map s(build_S(p));
    SUBCASE("eps = 0 is the identity perturbation") {
        const Map q = perturb(s, 0.0, PerturbModel::Affine, 1, dom);
        Rng rng(1);
        for (int t = 0; t < 20; ++t) {
            const Vec x = rng.uniform_vector(2, -2, 2);
            CHECK(q(x) == s(x));
        }
    }
    SUBCASE("affine model moves the singular values of S by at most eps") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto b = lipschitz_bounds(perturb(s, 0.01, PerturbModel::Affine, seed, dom), dom);
            CHECK(b.lower >= p.r - 0.01);
            CHECK(b.upper <= p.r + 0.01);
        }
    }
    SUBCASE("same seed, same map") {
        for (auto model : {PerturbModel::Affine, PerturbModel::Bump}) {
            const Map a = perturb(s, 0.01, model, 42, dom), b = perturb(s, 0.01, model, 42, dom);
            Rng rng(3);
            for (int t = 0; t < 20; ++t) {
                const Vec x = rng.uniform_vector(2, -2, 2);
                CHECK(a(x) == b(x));
            }
        }
    }
    SUBCASE("value and Jacobian deviations stay below eps on the working domain") {
        const double eps = 0.01;
        for (auto model : {PerturbModel::Affine, PerturbModel::Bump}) {
            const Map q = perturb(s, eps, model, 7, dom);
            Rng rng(5);
            double worst_value = 0, worst_jac = 0;
            for (int t = 0; t < 10000; ++t) {
                Vec x;
                do {
                    x = rng.uniform_vector(2, -2.8, 2.8);
                } while (!dom.contains(x));
                worst_value = std::max(worst_value, (q(x) - s(x)).norm());
                Eigen::JacobiSVD<Mat> svd(q.jacobian(x) - s.jacobian(x));
                worst_jac = std::max(worst_jac, svd.singularValues()[0]);
            }
            CHECK(worst_value <= eps);
            CHECK(worst_jac <= eps);
        }
    }
    SUBCASE("bump-perturbed inverse") {
        const Map q = perturb(s, 0.01, PerturbModel::Bump, 9, dom);
        REQUIRE(q.has_inverse());
        Rng rng(6);
        for (int t = 0; t < 50; ++t) {
            const Vec x = rng.uniform_vector(2, -2, 2);
            CHECK((q.inverse(q(x)) - x).norm() <= 1e-10);
        }
    }
    SUBCASE("negative eps is rejected") { CHECK_THROWS_AS(perturb(s, -1.0, PerturbModel::Affine, 0, dom), Error); }
}

TEST_CASE("family sequences") {
    const auto p = oracle::golden_params(2);
    const auto base = blending_family(p);
    const Region dom(Balld{Vec::Zero(2), 2.8});
    const FamilySequence seq(base, dom, 0.01, PerturbModel::Affine, 77);
    const FamilySequence again(base, dom, 0.01, PerturbModel::Affine, 77);
    for (std::size_t step = 1; step <= 5; ++step) {
        const auto f = seq.at(step), g = again.at(step);
        REQUIRE(f.size() == base.size());
        for (std::size_t i = 0; i < base.size(); ++i) {
            CHECK(f[i].label == base[i].label);
            CHECK(f[i].map.affine().linear() == g[i].map.affine().linear());
            CHECK(f[i].map.affine().shift() == g[i].map.affine().shift());
            const Vec x = Vec::Constant(2, 0.3);
            CHECK((f[i].map(x) - base[i].map(x)).norm() <= 0.01);
        }
    }
    const auto prefix = seq.realize(3, 2);
    CHECK(prefix.size() == 2);
    CHECK(prefix[0][1].map.affine().shift() == seq.at(3)[1].map.affine().shift());
    CHECK(seq.at(1)[0].map.affine().shift() != seq.at(2)[0].map.affine().shift());
}

TEST_CASE("family json round trip is lossless") {
    const auto p = oracle::golden_params(3);
    const Region dom(Balld{Vec::Zero(3), 3.0});
    std::vector<LabeledMap> maps = blending_family(p).members();
    maps.push_back({"bumped", perturb(Map(build_S(p)), 0.01, PerturbModel::Bump, 3, dom)});
    const MapFamily f(maps);
    const auto text = to_json(f).dump();
    const MapFamily g = family_from_json(nlohmann::json::parse(text));
    REQUIRE(g.size() == f.size());
    Rng rng(1);
    for (std::size_t i = 0; i < f.size(); ++i) {
        CHECK(g[i].label == f[i].label);
        const Vec x = rng.uniform_vector(3, -1, 1);
        CHECK(g[i].map(x) == f[i].map(x));
    }
    CHECK(to_json(g).dump() == text);
    CHECK_THROWS_AS(family_from_json(nlohmann::json::parse(R"({"dim":2,"maps":[{"label":"z","kind":"affine",
        "matrix":[0,0,0,0],"shift":[0,0]}]})")),
                    Error);
}
