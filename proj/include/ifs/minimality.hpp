#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ifs/geometry.hpp"
#include "ifs/hutchinson.hpp"
#include "ifs/maps.hpp"
#include "ifs/random.hpp"

namespace ifs {

struct HypothesisCheck {
    std::string name;
    bool pass{false};
    nlohmann::json detail = nlohmann::json::object();
};

struct CertifyOptions {
    /// Grid spacing (0: default_spacing(m)).
    double spacing{0};
    std::size_t max_word_length{12};
    std::size_t word_budget{kWordBudget};
    /// δ = delta_fraction · ρ.
    double delta_fraction{0.45};
};

/// Verified hypotheses for strong robust minimality of a family on D:
/// contraction (κ < 1), covering D̄ ⊂ F(D), and a word length n₀ whose
/// fixed points are δ/2-dense.
struct MinimalityCertificate {
    MapFamily family;
    Region domain{Balld{Vec::Zero(1), 1.0}};
    /// Absorbing ball containing D; perturbations are measured on it.
    Region working_domain{Balld{Vec::Zero(1), 1.0}};
    double lambda{0};
    double kappa{0};
    double rho{0};
    double delta{0};
    std::size_t n0{0};
    double density{0};
    std::vector<double> density_by_length;
    int k{0};
    double spacing{0};
    std::vector<HypothesisCheck> checks;
    bool passed{false};

    /// Fixed points of all words of length n₀ (anchors for the dense branch).
    FixedPointSet anchors;

    const HypothesisCheck* failed_check() const;
};

MinimalityCertificate certify(const MapFamily& family, const Region& domain, const CertifyOptions& options = {});

/// Rebuilds the anchors of a certificate read from disk.
void attach_anchors(MinimalityCertificate& cert);

/// k = smallest integer > ln(δ / diam D) / ln κ (at least 1).
int block_bound(double delta, double diameter, double kappa);
/// k(r) = smallest integer > ln(r / (2δ)) / ln κ, or 0 when r ≥ 2δ.
int pullback_bound(double radius, double delta, double kappa);

struct PhaseEntry {
    std::size_t step{0};
    char phase{'a'};
    std::size_t member{0};
};

struct BranchPlan {
    Vec start;
    Balld target;
    /// Ball actually aimed at: target ∩ D shrunk to an inscribed ball.
    Balld aim;
    Word word;
    std::vector<PhaseEntry> phases;
    /// Orbit of `start`: endpoints[i] is the point after word[i].
    std::vector<Vec> endpoints;
    std::size_t first_step{1};
    std::size_t next_step{1};
    std::size_t blocks{0};
    std::size_t pullbacks{0};
    /// Nominal word repeated in the block phase.
    Word block_word;

    Vec end() const { return endpoints.empty() ? start : endpoints.back(); }
};

/// Word mapping all of D into `target` when replayed with families
/// seq.at(first_step), seq.at(first_step + 1), ….
BranchPlan dense_branch(const Vec& x, const Balld& target, const FamilySequence& seq,
                        const MinimalityCertificate& cert, std::size_t first_step = 1);

std::vector<BranchPlan> dense_orbit(const Vec& x, const FamilySequence& seq, const MinimalityCertificate& cert,
                                    const std::vector<Balld>& base, std::size_t first_step = 1);

/// Images of D's sample under the plan, one per sample point.
PointCloud replay(const BranchPlan& plan, const FamilySequence& seq, const PointCloud& sample);

/// Balls of `radius` with centres drawn uniformly in D eroded by `radius`.
std::vector<Balld> random_targets(const Region& domain, std::size_t count, double radius, std::uint64_t seed);
Vec random_point(const Region& domain, Rng& rng);

struct TrialOptions {
    PerturbModel model{PerturbModel::Affine};
    /// Sample of D checked on replay.
    std::size_t sample_size{100};
};

struct TrialReport {
    double eps{0};
    bool precheck_passed{false};
    std::string reason;
    std::size_t trials{0};
    std::size_t branches{0};
    std::size_t successes{0};
    std::size_t max_length{0};
    std::size_t step_bound{0};
    std::size_t slack{0};
    double success_rate() const { return branches ? static_cast<double>(successes) / branches : 0.0; }
    nlohmann::json failures = nlohmann::json::array();
};

/// Margin precheck for per-step perturbations of size eps.
std::optional<std::string> trial_precheck(const MinimalityCertificate& cert, double eps);

/// Extra steps allowed over k·n₀ + k(r) under perturbation.
std::size_t eps_slack(const MinimalityCertificate& cert, double eps);

TrialReport strong_trial(const MinimalityCertificate& cert, double eps, std::size_t n_trials,
                         const std::vector<Balld>& targets, std::uint64_t seed, const TrialOptions& options = {});

}  // namespace ifs
