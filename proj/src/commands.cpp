#include "segwelfare/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "segwelfare/curvature.hpp"
#include "segwelfare/errors.hpp"
#include "segwelfare/io.hpp"
#include "segwelfare/market.hpp"
#include "segwelfare/monotonicity.hpp"
#include "segwelfare/oracles.hpp"

namespace segwelfare {

using nlohmann::json;

namespace {

void require_families(const RunConfig& cfg) {
  if (cfg.families.empty())
    throw Error(ErrorCode::ConfigParse, "family: this command needs a 'family' or 'families' entry");
}

json error_json(const Error& e) { return {{"code", std::string(to_string(e.code()))}, {"message", e.what()}}; }

std::optional<Market> prior_for(const RunConfig& cfg, std::size_t n) {
  if (!cfg.prior) return std::nullopt;
  if (static_cast<std::size_t>(cfg.prior->size()) != n)
    throw Error(ErrorCode::WrongDimension, "prior has " + std::to_string(cfg.prior->size()) +
                                               " entries for a family of " + std::to_string(n));
  return Market(*cfg.prior, cfg.tol.simplex);
}

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

json report_header(const RunConfig& cfg, const std::string& command) {
  return {{"schema", kReportSchema},
          {"command", command},
          {"version", kVersion},
          {"config_hash", config_hash(cfg)},
          {"settings", settings_json(cfg)}};
}

CommandOutput cmd_validate(const RunConfig& cfg) {
  require_families(cfg);
  CommandOutput out;
  out.report = report_header(cfg, "validate");
  json fams = json::array();
  for (const NamedFamily& nf : cfg.families) {
    json types = json::array();
    bool ok = true;
    for (const DemandSpec& s : nf.types) {
      const ValidationReport r = validate_assumption1(s, cfg.tol.validate_grid, cfg.tol);
      ok = ok && r.passed();
      json t = to_json(r);
      t["spec"] = s.describe();
      types.push_back(t);
    }
    json f = {{"name", nf.name}, {"types", types}};
    try {
      const Family fam(nf.types, cfg.tol);
      const PartialInclusionReport pi = check_partial_inclusion(fam);
      ok = ok && pi.holds;
      f["partial_inclusion"] = to_json(pi);
    } catch (const Error& e) {
      ok = false;
      f["partial_inclusion"] = nullptr;
      f["error"] = error_json(e);
    }
    f["passed"] = ok;
    if (!ok) out.exit_code = 1;
    fams.push_back(f);
  }
  out.report["families"] = fams;
  return out;
}

CommandOutput cmd_classify(const RunConfig& cfg, const ClassifyOptions& opt) {
  require_families(cfg);
  CommandOutput out;
  out.report = report_header(cfg, "classify");
  const std::size_t grid = cfg.tol.expression_grid;
  json fams = json::array();
  for (const NamedFamily& nf : cfg.families) {
    const Family fam(nf.types, cfg.tol);
    json f = {{"name", nf.name},
              {"size", fam.size()},
              {"low_type", fam.low_type()},
              {"high_type", fam.high_type()},
              {"partial_inclusion", to_json(check_partial_inclusion(fam))}};
    if (fam.size() > 2 && fam.partial_inclusion()) f["spanning"] = to_json(spanning_fit(fam, grid));

    json verdicts = json::array();
    for (double a : cfg.alphas) {
      const WelfareWeight w(a);
      json v = to_json(classify(fam, w, grid));
      if (fam.size() == 2 && fam.partial_inclusion()) {
        const SufficientConditions sc = sufficient_conditions(fam, w, grid);
        json conds = json::array();
        for (const ConditionCheck& c : sc.per_condition)
          conds.push_back({{"name", c.name}, {"img_ok", c.img_ok}, {"imb_ok", c.imb_ok},
                           {"worst_price", c.worst_price}});
        v["sufficient_conditions"] = {{"img_ok", sc.img_ok}, {"imb_ok", sc.imb_ok}, {"checks", conds}};
      }
      verdicts.push_back(v);
    }
    f["verdicts"] = verdicts;

    if (opt.alpha_scan) {
      std::vector<double> alphas = cfg.alphas;
      std::sort(alphas.begin(), alphas.end());
      alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());
      try {
        json rows = json::array();
        for (const AlphaVerdict& r : alpha_monotone_scan(fam, alphas, grid))
          rows.push_back({{"alpha", r.alpha},
                          {"verdict", to_string(r.verdict.verdict)},
                          {"imb", r.verdict.imb()},
                          {"img", r.verdict.img()}});
        f["alpha_scan"] = rows;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::CorollaryViolation) throw;
        f["alpha_scan"] = {{"error", error_json(e)}};
        out.exit_code = 1;
      }
    }
    if (opt.affine) {
      json rows = json::array();
      for (double a : cfg.alphas) {
        const AffineVerdict av = classify_affine(fam, WelfareWeight(a), grid);
        json r = to_json(av.verdict);
        r["alpha_hat"] = av.alpha_hat ? json(*av.alpha_hat) : json(nullptr);
        rows.push_back(r);
      }
      f["affine"] = rows;
    }
    fams.push_back(f);
  }
  out.report["families"] = fams;
  return out;
}

CommandOutput cmd_bounds(const RunConfig& cfg) {
  require_families(cfg);
  CommandOutput out;
  out.report = report_header(cfg, "bounds");
  std::size_t width = 0;
  for (const NamedFamily& nf : cfg.families) width = std::max(width, nf.types.size());

  std::ofstream csv;
  if (cfg.lattice_csv) {
    csv.open(*cfg.lattice_csv);
    if (!csv) throw Error(ErrorCode::InvalidParameter, "cannot write " + cfg.lattice_csv->string());
    csv << "family,alpha";
    for (std::size_t i = 1; i <= width; ++i) csv << ",mu_" << i;
    csv << ",lambda_hi,lambda_lo\n";
  }

  json table = json::array();
  for (const NamedFamily& nf : cfg.families) {
    const Family fam(nf.types, cfg.tol);
    BoundsOptions bo;
    bo.resolution = cfg.resolution;
    bo.sobol_points = cfg.sobol_points;
    bo.threads = cfg.threads;
    bo.prior = prior_for(cfg, fam.size());
    bo.keep_samples = cfg.lattice_csv.has_value();
    for (double a : cfg.alphas) {
      json row = {{"family", nf.name}, {"alpha", a}};
      try {
        const BoundsReport b = global_bounds(fam, WelfareWeight(a), bo);
        row.update(to_json(b));
        for (const LatticeSample& s : b.samples) {
          csv << nf.name << ',' << g17(a);
          for (std::size_t i = 0; i < width; ++i)
            csv << ',' << (i < static_cast<std::size_t>(s.mu.size()) ? g17(s.mu[static_cast<Eigen::Index>(i)]) : "");
          csv << ',' << g17(s.lambda_hi) << ',' << g17(s.lambda_lo) << '\n';
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::PartialInclusionViolated) throw;
        row["error"] = error_json(e);
        row["explanation"] =
            "the rate bounds need every monopoly price inside every other type's support";
        out.exit_code = 1;
      }
      table.push_back(row);
    }
  }
  out.report["table"] = table;
  if (cfg.lattice_csv) out.report["lattice_csv"] = cfg.lattice_csv->string();
  return out;
}

CommandOutput cmd_field(const RunConfig& cfg) {
  require_families(cfg);
  const Family fam(cfg.families.front().types, cfg.tol);
  const std::vector<FieldRow> rows =
      vector_field(fam, WelfareWeight(cfg.alphas.front()), cfg.field_resolution, cfg.threads);
  std::ostringstream os;
  write_field_csv(os, rows, cfg.scale_arrows);
  CommandOutput out;
  out.report = report_header(cfg, "field");
  out.report["rows"] = rows.size();
  out.csv = os.str();
  return out;
}

CommandOutput cmd_witness(const RunConfig& cfg) {
  require_families(cfg);
  if (!cfg.prior) throw Error(ErrorCode::ConfigParse, "prior: the witness search needs a prior");
  CommandOutput out;
  out.report = report_header(cfg, "witness");
  OracleConfig oc;
  oc.search_trials = cfg.search_trials;
  oc.seed = cfg.seed;
  json fams = json::array();
  for (const NamedFamily& nf : cfg.families) {
    const Family fam(nf.types, cfg.tol);
    const Market prior = *prior_for(cfg, fam.size());
    json per_alpha = json::array();
    for (double a : cfg.alphas) {
      const WelfareWeight w(a);
      json r = to_json(witness_search(fam, prior, w, oc));
      r["alpha"] = a;
      if (fam.partial_inclusion() || cfg.fallback_grid) {
        const PriceSolution ps =
            solve_price(fam, prior, cfg.fallback_grid ? PricingMode::GridFallback : PricingMode::FirstOrder);
        r["prior_price"] = ps.price;
        r["prior_tie_break_bound"] = ps.tie_break_bound;
        r["prior_value"] = value_function(
            fam, prior, w, cfg.fallback_grid ? PricingMode::GridFallback : PricingMode::FirstOrder);
      }
      per_alpha.push_back(r);
    }
    fams.push_back({{"name", nf.name}, {"results", per_alpha}});
  }
  out.report["families"] = fams;
  return out;
}

CommandOutput cmd_step_limit(const RunConfig& cfg) {
  CommandOutput out;
  out.report = report_header(cfg, "step-limit");
  out.report["table"] =
      to_json(step_limit_regression(cfg.step_limit.eps, cfg.step_limit.values, cfg.step_limit.alpha));
  return out;
}

}  // namespace segwelfare
