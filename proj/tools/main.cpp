// segwelfare: command-line front end.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "segwelfare/commands.hpp"
#include "segwelfare/errors.hpp"

using namespace segwelfare;

namespace {

struct Flags {
  std::string config;
  std::vector<double> alphas;
  std::optional<std::size_t> resolution;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> lattice_csv;
  std::optional<std::size_t> trials;
  bool fallback_grid = false;
  bool alpha_scan = false;
  bool affine = false;
  bool scale_arrows = false;
};

RunConfig effective(const Flags& f, bool need_config) {
  RunConfig cfg;
  if (!f.config.empty())
    cfg = load_config(f.config);
  else if (need_config)
    throw Error(ErrorCode::ConfigParse, "--config is required for this command");
  if (!f.alphas.empty()) {
    for (double a : f.alphas)
      if (!(a > 0.0 && a <= 1.0)) throw Error(ErrorCode::ConfigParse, "--alpha must lie in (0, 1]");
    cfg.alphas = f.alphas;
  }
  if (f.resolution) {
    cfg.resolution = *f.resolution;
    cfg.field_resolution = *f.resolution;
  }
  if (f.threads) cfg.threads = std::max(1u, *f.threads);
  if (f.seed) cfg.seed = *f.seed;
  if (f.out) cfg.out = *f.out;
  if (f.lattice_csv) cfg.lattice_csv = *f.lattice_csv;
  if (f.trials) cfg.search_trials = *f.trials;
  cfg.fallback_grid = cfg.fallback_grid || f.fallback_grid;
  cfg.scale_arrows = cfg.scale_arrows || f.scale_arrows;
  return cfg;
}

void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.out) {
    std::ofstream os(*cfg.out);
    if (!os) throw Error(ErrorCode::InvalidParameter, "cannot write " + cfg.out->string());
    os << text;
  } else {
    std::cout << text;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Welfare effects of market segmentation under monopoly pricing"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON run configuration");
    sub->add_option("--alpha", f.alphas, "welfare weight on consumer surplus (repeatable)");
    sub->add_option("--resolution", f.resolution, "lattice steps per unit");
    sub->add_option("--threads", f.threads, "worker threads for lattice sweeps");
    sub->add_option("--seed", f.seed, "random seed");
    sub->add_option("--out", f.out, "write the report here instead of stdout");
    sub->add_flag("--fallback-grid", f.fallback_grid, "price by grid search when inclusion fails");
  };

  auto* validate = app.add_subcommand("validate", "check each demand curve and partial inclusion");
  auto* classify = app.add_subcommand("classify", "IMB / IMG / non-monotone verdicts");
  auto* bounds = app.add_subcommand("bounds", "extreme Hessian eigenvalues over the simplex");
  auto* field = app.add_subcommand("field", "best and worst directions on a three-type lattice");
  auto* witness = app.add_subcommand("witness", "search for welfare-raising and -lowering refinements");
  auto* step = app.add_subcommand("step-limit", "smoothed unit demands as the ramp narrows");
  for (CLI::App* sub : {validate, classify, bounds, field, witness, step}) common(sub);
  classify->add_flag("--alpha-scan", f.alpha_scan, "check the ordering of verdicts across alphas");
  classify->add_flag("--affine", f.affine, "shortcut for a D + b families");
  bounds->add_option("--lattice-csv", f.lattice_csv, "eigenvalues at every lattice market");
  field->add_flag("--scale-arrows", f.scale_arrows, "multiply arrows by |lambda|");
  witness->add_option("--trials", f.trials, "number of random refinement chains");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const bool need_config = !step->parsed();
    const RunConfig cfg = effective(f, need_config);
    CommandOutput out;
    if (validate->parsed()) out = cmd_validate(cfg);
    if (classify->parsed()) out = cmd_classify(cfg, {f.alpha_scan, f.affine});
    if (bounds->parsed()) out = cmd_bounds(cfg);
    if (field->parsed()) out = cmd_field(cfg);
    if (witness->parsed()) out = cmd_witness(cfg);
    if (step->parsed()) out = cmd_step_limit(cfg);

    if (field->parsed())
      emit(cfg, out.csv);
    else
      emit(cfg, out.report.dump(2) + "\n");
    return out.exit_code;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::ConfigParse ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
