#pragma once

#include <string>
#include <vector>

#include "ifs/geometry.hpp"
#include "ifs/maps.hpp"

namespace ifs {

/// Parameters of the blending pair S, T in ℝ^m. `v` holds (v_2, …, v_m).
struct AffineParams {
    int m{2};
    double r{0};
    double s{0};
    double a{0};
    Vec v;
};

/// R(x) = (±x_m, x_1, …, x_{m−1}) with the sign making det R = +1.
AffineMapd rotation_R(int m);

/// +1 for odd m, −1 for even m.
double rotation_sign(int m);

AffineMapd build_S(const AffineParams& p);
AffineMapd build_T(const AffineParams& p);
AffineMapd build_ST(const AffineParams& p);

/// Closed form of S∘T: (−σ·ar x_m − s, −ar x_1, ar x_2, …, ar x_{m−1}).
Vec st_closed_form(const AffineParams& p, const Vec& x);

Vec fixed_point_T(const AffineParams& p);

/// The box B(1, v_2, …, v_m) centred at the origin.
Boxd box_B(const AffineParams& p);

/// {S, T} and {S, S∘T}, labelled "S", "T", "ST".
MapFamily generators(const AffineParams& p);
MapFamily blending_family(const AffineParams& p);

struct Inequality {
    std::string name;
    double lhs{0};
    double rhs{0};
    /// lhs − rhs for a strict "lhs > rhs".
    double slack() const { return lhs - rhs; }
    bool pass() const { return lhs > rhs; }
};

struct ConditionReport {
    std::vector<Inequality> box;          // r v_m + s > 1, …
    std::vector<Inequality> expanded;     // the same with r replaced by a r
    Inequality fixed_point_inside;        // v_m r (a+1) > 2 s
    std::vector<Inequality> basic;        // 0 < r < 1, s > 0, a > 1, a r < 1

    bool all_pass() const;
    std::vector<std::string> failures() const;
};

ConditionReport check_conditions(const AffineParams& p);

struct SearchOptions {
    double r_start{0.99};
    double r_step{0.01};
    double r_stop{0.5};
    double a{1.005};
    /// Grid spacing of the covering gate (0: default_spacing(m)).
    double spacing{0};
    /// For m = 2 also require the certificate and strip resolution gates.
    bool pipeline_gate{true};
    double blender_resolution{0.04};
    int blender_generations{40};
};

AffineParams find_parameters(int m, const SearchOptions& options = {});

/// The covering S(B) ∪ S∘T(B) ⊃ B, decided through exact inverses.
CoverReport box_covering(const AffineParams& p, double spacing);

/// s ← δ s: the system conjugated by x ↦ δx.
AffineParams rescale(const AffineParams& p, double delta);

struct CoverPlan {
    int m{1};
    double lambda{1};
    double delta{1};
    std::vector<Vec> centers;
    double spacing{0};

    std::size_t k() const { return centers.size(); }
    /// c_i = δ b_i.
    std::vector<Vec> translations() const;
};

/// Balls B_λ(b_i) covering the closed unit ball of ℝ^m, from a lattice of
/// spacing λ/√m followed by greedy removal. Each kept centre must leave every
/// grid point at depth ≥ `margin` inside some ball.
CoverPlan cover_unit_ball(double lambda, int m, double delta = 1.0, double margin = 0.0, double spacing = 0.0);

/// {x ↦ c x + δ b_i}: contractions whose images cover B_δ(0).
struct TranslatedFamily {
    CoverPlan plan;
    double contraction{0};
    MapFamily family;
    Balld domain;
};

TranslatedFamily translated_family(const CoverPlan& plan, double contraction);

}  // namespace ifs
