#pragma once

// JSON forms of the library's results. Doubles are written by the json
// library's shortest round-trip formatting, so parse(dump(x)) reproduces x.

#include <json.hpp>

#include "segwelfare/curvature.hpp"
#include "segwelfare/demand.hpp"
#include "segwelfare/market.hpp"
#include "segwelfare/monotonicity.hpp"
#include "segwelfare/oracles.hpp"
#include "segwelfare/welfare.hpp"

namespace segwelfare {

nlohmann::json to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

/// {prior: [..], atoms: [{w, mu: [..]}]}
nlohmann::json to_json(const Segmentation& s);
/// Throws ConfigParse on a malformed document; Bayes plausibility is checked
/// by the Segmentation constructor.
Segmentation segmentation_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ValidationReport& r);
nlohmann::json to_json(const PartialInclusionReport& r);
nlohmann::json to_json(const MonotonicityVerdict& v);
nlohmann::json to_json(const SpanningFit& f);
nlohmann::json to_json(const BoundsReport& b);
nlohmann::json to_json(const WitnessResult& w);
nlohmann::json to_json(const StepLimitTable& t);

}  // namespace segwelfare
