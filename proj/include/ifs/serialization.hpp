#pragma once

#include <json.hpp>

#include "ifs/affine_construction.hpp"
#include "ifs/geometry.hpp"
#include "ifs/maps.hpp"
#include "ifs/minimality.hpp"
#include "ifs/symbolic.hpp"

namespace ifs {

using nlohmann::json;

json to_json(const Vec& v);
Vec vec_from_json(const json& j);
json to_json(const Mat& a);
Mat mat_from_json(const json& j, Eigen::Index rows, Eigen::Index cols);

json to_json(const Region& r);
Region region_from_json(const json& j);
json to_json(const Balld& b);
Balld ball_from_json(const json& j);

/// {label, kind: "affine" | "bump-perturbed", matrix (row-major), shift, …}.
json to_json(const LabeledMap& m);
LabeledMap labeled_map_from_json(const json& j, Eigen::Index dim);

/// {dim, maps: [...]}.
json to_json(const MapFamily& f);
MapFamily family_from_json(const json& j);

json to_json(const AffineParams& p);
AffineParams params_from_json(const json& j);
/// {"params": …, "generators": {S, T}, "family": {S, S∘T}}.
json params_document(const AffineParams& p);

json to_json(const ConditionReport& r);
json to_json(const CoverReport& r, std::size_t max_witnesses = 64);

json to_json(const MinimalityCertificate& c);
/// Reads a certificate and rebuilds its anchors.
MinimalityCertificate certificate_from_json(const json& j);

json to_json(const BranchPlan& p, const MapFamily& family);
json to_json(const TrialReport& r);
json to_json(const BlenderReport& r);
json to_json(const MixingReport& r);

}  // namespace ifs
