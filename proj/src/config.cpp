#include "segwelfare/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "segwelfare/errors.hpp"

namespace segwelfare {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ConfigParse, where + ": " + what);
}

void allow_only(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  const std::set<std::string> ok(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items())
    if (!ok.count(k)) fail(where, "unknown field '" + k + "'");
}

double number(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) fail(where, "missing field '" + key + "'");
  const json& v = obj.at(key);
  if (!v.is_number()) fail(where + "." + key, "expected a number");
  return v.get<double>();
}

std::optional<double> maybe_number(const json& obj, const std::string& key,
                                   const std::string& where) {
  if (!obj.contains(key)) return std::nullopt;
  return number(obj, key, where);
}

std::vector<double> numbers(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(where + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

std::size_t count(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() < 0) fail(where, "expected a non-negative integer");
  return v.get<std::size_t>();
}

std::string kind_of(const json& obj, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  if (!obj.contains("kind") || !obj.at("kind").is_string()) fail(where, "missing string field 'kind'");
  return obj.at("kind").get<std::string>();
}

using BaseMap = std::map<std::string, std::shared_ptr<const DemandSpec>>;

struct SpecContext {
  const BaseMap* bases;
  std::filesystem::path base_dir;
  std::optional<double> ces_theta_min;
};

DemandSpec build_spec(const json& obj, const std::string& where, const SpecContext& ctx) {
  const std::string kind = kind_of(obj, where);
  try {
    if (kind == "linear_shift") {
      allow_only(obj, where, {"kind", "a", "c", "p_lo"});
      return DemandSpec::linear_shift(number(obj, "a", where), number(obj, "c", where),
                                      maybe_number(obj, "p_lo", where));
    }
    if (kind == "ces") {
      allow_only(obj, where, {"kind", "c", "theta", "p_hi", "p_lo"});
      const double c = number(obj, "c", where);
      const double theta = number(obj, "theta", where);
      std::optional<double> p_hi = maybe_number(obj, "p_hi", where);
      if (!p_hi && ctx.ces_theta_min && *ctx.ces_theta_min > 1.0)
        p_hi = 2.0 * c / (*ctx.ces_theta_min - 1.0);
      return DemandSpec::constant_elasticity(c, theta, p_hi,
                                             maybe_number(obj, "p_lo", where).value_or(0.0));
    }
    if (kind == "power_unit") {
      allow_only(obj, where, {"kind", "theta"});
      return DemandSpec::power_unit(number(obj, "theta", where));
    }
    if (kind == "power_density") {
      allow_only(obj, where, {"kind", "c", "support"});
      if (!obj.contains("c")) fail(where, "missing field 'c'");
      if (!obj.contains("support")) fail(where, "missing field 'support'");
      const std::vector<double> c = numbers(obj.at("c"), where + ".c");
      const std::vector<double> s = numbers(obj.at("support"), where + ".support");
      if (c.size() != 4) fail(where + ".c", "expected four coefficients");
      if (s.size() != 2) fail(where + ".support", "expected [lo, hi]");
      return DemandSpec::power_density(c[0], c[1], c[2], c[3], {s[0], s[1]});
    }
    if (kind == "smooth_step") {
      allow_only(obj, where, {"kind", "value", "width"});
      return DemandSpec::smooth_step(number(obj, "value", where), number(obj, "width", where));
    }
    if (kind == "affine") {
      allow_only(obj, where, {"kind", "base", "scale", "shift"});
      if (!obj.contains("base") || !obj.at("base").is_string())
        fail(where, "missing string field 'base'");
      const std::string name = obj.at("base").get<std::string>();
      if (!ctx.bases || !ctx.bases->count(name)) fail(where + ".base", "unknown base '" + name + "'");
      return DemandSpec::affine_of_base(ctx.bases->at(name), number(obj, "scale", where),
                                        maybe_number(obj, "shift", where).value_or(0.0));
    }
    if (kind == "tabulated") {
      allow_only(obj, where, {"kind", "csv", "prices", "quantities"});
      if (obj.contains("csv")) {
        if (!obj.at("csv").is_string()) fail(where + ".csv", "expected a path");
        std::filesystem::path p = obj.at("csv").get<std::string>();
        if (p.is_relative()) p = ctx.base_dir / p;
        return DemandSpec::tabulated_csv(p);
      }
      if (!obj.contains("prices") || !obj.contains("quantities"))
        fail(where, "tabulated needs 'csv' or 'prices' and 'quantities'");
      return DemandSpec::tabulated(numbers(obj.at("prices"), where + ".prices"),
                                   numbers(obj.at("quantities"), where + ".quantities"));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigParse) throw;
    fail(where, e.what());
  }
  fail(where + ".kind", "unknown kind '" + kind + "'");
}

std::vector<DemandSpec> build_types(const json& arr, const std::string& where,
                                    const BaseMap& bases, const std::filesystem::path& dir) {
  if (!arr.is_array() || arr.empty()) fail(where, "expected a non-empty array of types");
  SpecContext ctx{&bases, dir, std::nullopt};
  for (const json& t : arr)
    if (t.is_object() && t.value("kind", "") == "ces" && t.contains("theta") &&
        t.at("theta").is_number()) {
      const double th = t.at("theta").get<double>();
      ctx.ces_theta_min = ctx.ces_theta_min ? std::min(*ctx.ces_theta_min, th) : th;
    }
  std::vector<DemandSpec> out;
  for (std::size_t i = 0; i < arr.size(); ++i)
    out.push_back(build_spec(arr[i], where + "[" + std::to_string(i) + "]", ctx));
  return out;
}

void read_tolerances(const json& obj, Tolerances& t) {
  const std::string where = "tolerances";
  if (!obj.is_object()) fail(where, "expected an object");
  allow_only(obj, where,
             {"root", "mono", "conc", "mono_expr", "span", "simplex", "bayes", "fd_rel_step",
              "imb_upper", "validate_grid", "expression_grid", "fallback_grid"});
  auto num = [&](const char* k, double& dst) {
    if (obj.contains(k)) dst = number(obj, k, where);
  };
  auto cnt = [&](const char* k, std::size_t& dst) {
    if (obj.contains(k)) dst = count(obj.at(k), where + "." + k);
  };
  num("root", t.root);
  num("mono", t.mono);
  num("conc", t.conc);
  num("mono_expr", t.mono_expr);
  num("span", t.span);
  num("simplex", t.simplex);
  num("bayes", t.bayes);
  num("fd_rel_step", t.fd_rel_step);
  num("imb_upper", t.imb_upper);
  cnt("validate_grid", t.validate_grid);
  cnt("expression_grid", t.expression_grid);
  cnt("fallback_grid", t.fallback_grid);
}

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigParse, line_col(text, e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) fail("(root)", "expected an object");
  allow_only(doc, "(root)",
             {"schema", "bases", "family", "families", "alpha", "prior", "resolution",
              "field_resolution", "sobol_points", "threads", "seed", "search_trials", "scan_points",
              "fallback_grid", "scale_arrows", "step_limit", "tolerances", "out", "lattice_csv"});
  if (!doc.contains("schema") || doc.at("schema") != kConfigSchema)
    fail("schema", std::string("expected \"") + kConfigSchema + "\"");

  RunConfig cfg;
  cfg.document = doc;

  BaseMap bases;
  if (doc.contains("bases")) {
    if (!doc.at("bases").is_object()) fail("bases", "expected an object of named curves");
    for (const auto& [name, spec] : doc.at("bases").items()) {
      if (kind_of(spec, "bases." + name) == "affine") fail("bases." + name, "a base cannot be affine");
      bases[name] = std::make_shared<const DemandSpec>(
          build_spec(spec, "bases." + name, SpecContext{nullptr, base_dir, std::nullopt}));
    }
  }

  if (doc.contains("family") && doc.contains("families"))
    fail("(root)", "give either 'family' or 'families', not both");
  if (doc.contains("family")) {
    cfg.families.push_back({"family", build_types(doc.at("family"), "family", bases, base_dir)});
  } else if (doc.contains("families")) {
    const json& fs = doc.at("families");
    if (!fs.is_array() || fs.empty()) fail("families", "expected a non-empty array");
    for (std::size_t i = 0; i < fs.size(); ++i) {
      const std::string where = "families[" + std::to_string(i) + "]";
      if (!fs[i].is_object()) fail(where, "expected an object");
      allow_only(fs[i], where, {"name", "types"});
      if (!fs[i].contains("types")) fail(where, "missing field 'types'");
      const std::string name =
          fs[i].contains("name") && fs[i].at("name").is_string() ? fs[i].at("name").get<std::string>()
                                                                 : "family" + std::to_string(i);
      cfg.families.push_back({name, build_types(fs[i].at("types"), where + ".types", bases, base_dir)});
    }
  }

  if (doc.contains("alpha")) {
    const json& a = doc.at("alpha");
    cfg.alphas = a.is_array() ? numbers(a, "alpha") : std::vector<double>{number(doc, "alpha", "(root)")};
    if (cfg.alphas.empty()) fail("alpha", "expected at least one value");
    for (double x : cfg.alphas)
      if (!(x > 0.0 && x <= 1.0)) fail("alpha", "every alpha must lie in (0, 1]");
  }
  if (doc.contains("prior")) {
    const std::vector<double> p = numbers(doc.at("prior"), "prior");
    cfg.prior = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
  }
  if (doc.contains("resolution")) cfg.resolution = count(doc.at("resolution"), "resolution");
  if (doc.contains("field_resolution"))
    cfg.field_resolution = count(doc.at("field_resolution"), "field_resolution");
  if (doc.contains("sobol_points")) cfg.sobol_points = count(doc.at("sobol_points"), "sobol_points");
  if (doc.contains("threads")) cfg.threads = static_cast<unsigned>(count(doc.at("threads"), "threads"));
  if (doc.contains("seed")) cfg.seed = doc.at("seed").is_number_unsigned()
                                           ? doc.at("seed").get<std::uint64_t>()
                                           : count(doc.at("seed"), "seed");
  if (doc.contains("search_trials"))
    cfg.search_trials = count(doc.at("search_trials"), "search_trials");
  if (doc.contains("scan_points")) cfg.scan_points = count(doc.at("scan_points"), "scan_points");
  for (const char* flag : {"fallback_grid", "scale_arrows"})
    if (doc.contains(flag) && !doc.at(flag).is_boolean()) fail(flag, "expected true or false");
  cfg.fallback_grid = doc.value("fallback_grid", false);
  cfg.scale_arrows = doc.value("scale_arrows", false);
  if (doc.contains("step_limit")) {
    const json& s = doc.at("step_limit");
    if (!s.is_object()) fail("step_limit", "expected an object");
    allow_only(s, "step_limit", {"eps", "values", "alpha"});
    if (s.contains("eps")) cfg.step_limit.eps = numbers(s.at("eps"), "step_limit.eps");
    if (s.contains("values")) {
      const std::vector<double> v = numbers(s.at("values"), "step_limit.values");
      if (v.size() != 2) fail("step_limit.values", "expected two values");
      cfg.step_limit.values = {v[0], v[1]};
    }
    if (s.contains("alpha")) cfg.step_limit.alpha = number(s, "alpha", "step_limit");
  }
  if (doc.contains("tolerances")) read_tolerances(doc.at("tolerances"), cfg.tol);
  for (const char* key : {"out", "lattice_csv"})
    if (doc.contains(key) && !doc.at(key).is_string()) fail(key, "expected a path");
  if (doc.contains("out")) cfg.out = doc.at("out").get<std::string>();
  if (doc.contains("lattice_csv")) cfg.lattice_csv = doc.at("lattice_csv").get<std::string>();
  if (cfg.threads == 0) fail("threads", "expected at least one thread");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigParse, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.has_parent_path() ? path.parent_path() : ".");
}

json settings_json(const RunConfig& cfg) {
  const Tolerances& t = cfg.tol;
  json s;
  s["alpha"] = cfg.alphas;
  if (cfg.prior) s["prior"] = std::vector<double>(cfg.prior->data(), cfg.prior->data() + cfg.prior->size());
  s["resolution"] = cfg.resolution;
  s["field_resolution"] = cfg.field_resolution;
  s["sobol_points"] = cfg.sobol_points;
  s["threads"] = cfg.threads;
  s["seed"] = cfg.seed;
  s["search_trials"] = cfg.search_trials;
  s["scan_points"] = cfg.scan_points;
  s["fallback_grid"] = cfg.fallback_grid;
  s["scale_arrows"] = cfg.scale_arrows;
  s["step_limit"] = {{"eps", cfg.step_limit.eps},
                     {"values", cfg.step_limit.values},
                     {"alpha", cfg.step_limit.alpha}};
  s["tolerances"] = {{"root", t.root},
                     {"mono", t.mono},
                     {"conc", t.conc},
                     {"mono_expr", t.mono_expr},
                     {"span", t.span},
                     {"simplex", t.simplex},
                     {"bayes", t.bayes},
                     {"fd_rel_step", t.fd_rel_step},
                     {"imb_upper", t.imb_upper},
                     {"validate_grid", t.validate_grid},
                     {"expression_grid", t.expression_grid},
                     {"fallback_grid", t.fallback_grid}};
  json fams = json::array();
  for (const NamedFamily& f : cfg.families) {
    json types = json::array();
    for (const DemandSpec& d : f.types) types.push_back(d.describe());
    fams.push_back({{"name", f.name}, {"types", types}});
  }
  s["families"] = fams;
  return s;
}

std::string config_hash(const RunConfig& cfg) {
  const std::string text = settings_json(cfg).dump() + cfg.document.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace segwelfare
