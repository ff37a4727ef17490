#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ifs/geometry.hpp"
#include "ifs/maps.hpp"

namespace ifs {

/// Member indices; w[0] is applied first.
using Word = std::vector<std::size_t>;

std::string word_label(const MapFamily& family, const Word& w);

/// f_{w[n−1]} ∘ … ∘ f_{w[0]}; identity for the empty word.
Map compose_word(const MapFamily& family, const Word& w);
AffineMapd compose_word_affine(const MapFamily& family, const Word& w);

/// Applies the word letter by letter.
Vec apply_word(const MapFamily& family, const Word& w, Vec x);

/// Ball O about `seed`'s centre with F(O) ⊂ O. Exact for affine families
/// (radius max_j |f_j(c) − c| / (1 − ‖A_j‖)); otherwise a doubling search up
/// to 2¹⁰ times the seed radius.
Balld absorbing_ball(const MapFamily& family, const Balld& seed);

struct AttractorOptions {
    std::size_t max_iterations{2000};
};

/// Hutchinson iteration on a decimated cloud (spatial hash at tol/2) until
/// consecutive clouds are within tol.
PointCloud attractor(const MapFamily& family, const Balld& seed, double tol, const AttractorOptions& options = {});

PointCloud chaos_game(const MapFamily& family, const Vec& x0, std::size_t n_points, std::size_t burn_in,
                      std::uint64_t seed);

/// Keeps the first point of every occupied cell of side `cell`.
PointCloud decimate(const PointCloud& cloud, double cell);

/// Fixed point of the word's composition. Exact linear solve for affine
/// families, Banach iteration otherwise.
Vec word_fixed_point(const MapFamily& family, const Word& w, const Vec& start);
Vec word_fixed_point(const MapFamily& family, const Word& w);

struct FixedPointSet {
    std::size_t n{0};
    PointCloud points;
    std::vector<Word> words;
};

constexpr std::size_t kWordBudget = std::size_t{1} << 20;

/// Fixed points of all k^n words of length n, in lexicographic word order.
FixedPointSet fixed_point_set(const MapFamily& family, std::size_t n, std::size_t budget = kWordBudget);

}  // namespace ifs
