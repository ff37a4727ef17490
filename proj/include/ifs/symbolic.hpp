#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ifs/geometry.hpp"
#include "ifs/maps.hpp"

namespace ifs {

/// Finite word over {0, …, k−1} with a marked origin. Letters print 1-based.
struct SymbolWord {
    std::size_t alphabet{2};
    std::vector<std::uint8_t> letters;
    std::size_t origin{0};

    std::size_t size() const { return letters.size(); }
    std::string str() const;
    static SymbolWord parse(const std::string& text, std::size_t alphabet);
};

/// Fiber-contracting skew product (ω, y) ↦ (σω, h_{ω_0 … ω_{w−1}}(y)).
/// The fiber map at time j is selected by the window ω_j, …, ω_{j+w−1};
/// table index Σ_i ω_{j+i} k^i.
struct SkewProduct {
    std::size_t alphabet{2};
    std::size_t window{1};
    std::vector<LabeledMap> fibers;
    Balld outer;
    Region inner{Balld{Vec::Zero(1), 1.0}};

    Eigen::Index dim() const { return outer.center.size(); }
    std::size_t window_count() const;
    std::size_t window_index(const std::uint8_t* letters) const;
    const Map& fiber(const std::uint8_t* letters) const;
};

/// Window-1 product with fiber maps h_i = family[i].
SkewProduct skew_product(const MapFamily& family, const Balld& outer, const Region& inner);

/// Window-w product whose fiber map for a window is an eps-perturbation of
/// the map named by the window's first letter.
SkewProduct perturbed_skew_product(const MapFamily& family, const Balld& outer, const Region& inner,
                                   std::size_t window, double eps, std::uint64_t seed,
                                   PerturbModel model = PerturbModel::Affine);

/// Product over `family` with E_in = `inner` and E_out the smallest absorbing
/// ball about E_in's centre that contains E_in; eps > 0 or window > 1 gives the
/// windowed perturbation.
SkewProduct blender_product(const MapFamily& family, const Region& inner, std::size_t window = 1, double eps = 0.0,
                            std::uint64_t seed = 0);

/// One step: origin moves right by one, the selected fiber map is applied.
std::pair<SymbolWord, Vec> skew_step(const SkewProduct& p, const SymbolWord& omega, const Vec& y);

/// Strip of generation n: past word ω_{−n} … ω_{−1} (oldest first) and the
/// composite of the fiber maps it determines; `bound` ⊇ composite(E_out).
struct Strip {
    std::vector<std::uint8_t> past;
    AffineMapd composite;
    Balld bound;
    std::size_t generation{0};
};

std::vector<Strip> initial_strips(const SkewProduct& p);
std::vector<Strip> strip_refine(const SkewProduct& p, const std::vector<Strip>& strips);

struct GenerationRecord {
    std::size_t generation{0};
    std::size_t strips{0};
    std::size_t pruned{0};
    double max_radius{0};
    bool covered{false};
    std::size_t uncovered{0};
};

struct BlenderReport {
    std::size_t n_max{0};
    double spacing{0};
    bool precheck{false};
    std::string precheck_detail;
    std::vector<GenerationRecord> generations;
    std::vector<double> decay_ratios;
    bool domination{false};
    bool passed{false};
    std::size_t pruned_total{0};
    std::vector<Vec> witnesses;
};

struct BlenderOptions {
    std::size_t strip_budget{std::size_t{1} << 20};
    double base_rate{2.0};
};

/// Verifies, per generation, that the strip bounds cover the E_in grid; the
/// report passes when the covering holds at n_max with max radius ≤ 2h.
/// `final_strips`, when given, receives the last generation.
BlenderReport blender_verify(const SkewProduct& p, std::size_t n_max, double spacing,
                             const BlenderOptions& options = {}, std::vector<Strip>* final_strips = nullptr);

bool check_domination(const SkewProduct& p, double base_rate);

struct Cylinder {
    SymbolWord prefix;
    Balld fiber;
};

/// Cylinder with a uniform prefix of `length` symbols and a fiber ball of
/// `radius` centred uniformly in E_in eroded by `radius`.
Cylinder random_cylinder(const SkewProduct& p, std::size_t length, double radius, std::uint64_t seed);

struct MixingOptions {
    /// Batch size; batches continue until every n ∈ [N, horizon] has a hit.
    std::size_t samples{20000};
    std::uint64_t seed{0};
    std::size_t max_samples{1000000};
};

struct MixingReport {
    bool mixing{false};
    /// Smallest N with a hit at every n ∈ [N, horizon]; horizon + 1 if none.
    std::size_t first_time{0};
    std::vector<std::size_t> hits;
    std::size_t samples{0};
};

MixingReport mixing_probe(const SkewProduct& p, const Cylinder& u, const Cylinder& v, std::size_t n,
                          std::size_t horizon, const MixingOptions& options = {});

void write_strips_csv(std::ostream& out, const std::vector<Strip>& strips);

}  // namespace ifs
