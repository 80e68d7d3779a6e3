#include "segwelfare/io.hpp"

#include "segwelfare/errors.hpp"

namespace segwelfare {

using nlohmann::json;

namespace {

std::string kind_name(InclusionKind k) {
  return k == InclusionKind::FullExclusion ? "full_exclusion" : "full_inclusion";
}

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

json to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::ConfigParse, "expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(ErrorCode::ConfigParse, "expected an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

json to_json(const Segmentation& s) {
  json atoms = json::array();
  for (const Atom& a : s.atoms()) atoms.push_back({{"w", a.weight}, {"mu", to_json(a.market.mu())}});
  return {{"prior", to_json(s.prior().mu())}, {"atoms", atoms}};
}

Segmentation segmentation_from_json(const json& j) {
  if (!j.is_object() || !j.contains("prior") || !j.contains("atoms") || !j.at("atoms").is_array())
    throw Error(ErrorCode::ConfigParse, "segmentation needs 'prior' and an 'atoms' array");
  std::vector<Atom> atoms;
  for (const json& a : j.at("atoms")) {
    if (!a.is_object() || !a.contains("w") || !a.at("w").is_number() || !a.contains("mu"))
      throw Error(ErrorCode::ConfigParse, "atom needs numeric 'w' and 'mu'");
    atoms.push_back({a.at("w").get<double>(), Market(vector_from_json(a.at("mu")))});
  }
  return Segmentation(std::move(atoms), Market(vector_from_json(j.at("prior"))));
}

json to_json(const ValidationReport& r) {
  json checks = json::array();
  for (const ValidationCheck& c : r.checks)
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"worst_margin", c.worst_margin},
                      {"at_price", c.at_price},
                      {"detail", c.detail}});
  return {{"passed", r.passed()}, {"monopoly_price", optional_json(r.monopoly_price)}, {"checks", checks}};
}

json to_json(const PartialInclusionReport& r) {
  json v = json::array();
  for (const InclusionViolation& x : r.violations)
    v.push_back({{"type", x.type}, {"other", x.other}, {"kind", kind_name(x.kind)}});
  return {{"holds", r.holds}, {"violations", v}};
}

json to_json(const MonotonicityVerdict& v) {
  json w;
  w["rising"] = optional_json(v.witness.rising);
  w["falling"] = optional_json(v.witness.falling);
  w["type"] = optional_json(v.witness.type);
  w["residual"] = optional_json(v.witness.residual);
  std::vector<double> p, e;
  for (const ExpressionSample& s : v.diagnostics) {
    p.push_back(s.price);
    e.push_back(s.value);
  }
  return {{"verdict", to_string(v.verdict)},
          {"failed_condition", to_string(v.failed)},
          {"alpha", v.alpha},
          {"imb", v.imb()},
          {"img", v.img()},
          {"band", v.band},
          {"note", v.note},
          {"witness", w},
          {"diagnostics", {{"price", p}, {"expression", e}}}};
}

json to_json(const SpanningFit& f) {
  json c = json::array();
  for (const SpanCoefficients& k : f.coeffs)
    c.push_back({{"f1", k.f1},
                 {"f2", k.f2},
                 {"unconstrained_f1", k.unconstrained_f1},
                 {"unconstrained_f2", k.unconstrained_f2},
                 {"unconstrained_negative", k.unconstrained_negative},
                 {"residual", k.residual}});
  return {{"coefficients", c},
          {"max_residual", f.max_residual},
          {"worst_type", f.worst_type},
          {"any_unconstrained_negative", f.any_unconstrained_negative}};
}

json to_json(const BoundsReport& b) {
  return {{"min_lambda_lo", b.min_lambda_lo},
          {"max_lambda_hi", b.max_lambda_hi},
          {"lower_rate", b.lower_rate},
          {"upper_rate", b.upper_rate},
          {"arg_min", to_json(b.arg_min)},
          {"arg_max", to_json(b.arg_max)},
          {"magnitude_lower", optional_json(b.magnitude_lower)},
          {"magnitude_upper", optional_json(b.magnitude_upper)},
          {"evaluations", b.evaluations},
          {"method", b.method}};
}

json to_json(const WitnessResult& w) {
  auto one = [](const std::optional<Witness>& x) -> json {
    if (!x) return nullptr;
    return {{"delta", x->delta}, {"trial", x->trial}, {"segmentation", to_json(x->chain)}};
  };
  return {{"improving", one(w.improving)},
          {"worsening", one(w.worsening)},
          {"trials", w.trials},
          {"rng_seed", w.seed},
          {"brute_pricing", w.brute_pricing},
          {"tolerance", w.tolerance}};
}

json to_json(const StepLimitTable& t) {
  json rows = json::array();
  for (const StepLimitRow& r : t.rows)
    rows.push_back({{"eps", r.eps},
                    {"partial_inclusion", r.partial_inclusion},
                    {"verdict", to_string(r.verdict.verdict)},
                    {"failed_condition", to_string(r.verdict.failed)}});
  return {{"rows", rows}, {"crossover", optional_json(t.crossover)}};
}

}  // namespace segwelfare
