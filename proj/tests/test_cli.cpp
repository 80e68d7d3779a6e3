#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "segwelfare/commands.hpp"
#include "segwelfare/config.hpp"
#include "segwelfare/errors.hpp"
#include "segwelfare/io.hpp"

using namespace segwelfare;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = SEGWELFARE_CONFIGS;

int run(const std::string& args, const fs::path& out = "/dev/null") {
  const std::string cmd = std::string(SEGWELFARE_CLI) + " " + args + " > " + out.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string parse_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigParse);
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config parsing with defaults") {
    const RunConfig cfg = load_config(kConfigs / "ces_triple.json");
    REQUIRE(cfg.families.size() == 1);
    CHECK(cfg.families[0].types.size() == 3);
    // CES truncation defaults to 2c/(theta_min - 1) across the family.
    for (const DemandSpec& s : cfg.families[0].types) CHECK(s.support().hi == doctest::Approx(4.0));
    CHECK(cfg.alphas == std::vector<double>{0.5});
    CHECK(cfg.resolution == 200);
    CHECK(cfg.prior.has_value());
    const nlohmann::json s = settings_json(cfg);
    CHECK(s["tolerances"]["root"] == 1e-10);
    CHECK(s["tolerances"]["validate_grid"] == 512);
  }

  TEST_CASE("parse errors point at the line or the field") {
    CHECK(parse_error("{\n  \"schema\": \"segwelfare.config/1\",\n  oops\n}").find("line 3") != std::string::npos);
    CHECK(parse_error(R"({"schema": "segwelfare.config/9"})").find("schema") != std::string::npos);
    const std::string bad_theta =
        R"({"schema": "segwelfare.config/1", "family": [{"kind": "ces", "c": 1, "theta": "x"}]})";
    CHECK(parse_error(bad_theta).find("family[0].theta") != std::string::npos);
    const std::string unknown =
        R"({"schema": "segwelfare.config/1", "family": [{"kind": "cubic"}]})";
    CHECK(parse_error(unknown).find("family[0].kind") != std::string::npos);
    CHECK(parse_error(R"({"schema": "segwelfare.config/1", "alpha": 0})").find("alpha") != std::string::npos);
    CHECK(parse_error(R"({"schema": "segwelfare.config/1", "colour": 1})").find("colour") != std::string::npos);
    const std::string base =
        R"({"schema": "segwelfare.config/1", "family": [{"kind": "affine", "base": "nope", "scale": 1}]})";
    CHECK(parse_error(base).find("family[0].base") != std::string::npos);
  }

  TEST_CASE("config hash is stable and sensitive") {
    const std::string a = R"({"schema": "segwelfare.config/1", "family": [{"kind": "power_unit", "theta": 0.3}]})";
    const std::string b = R"({"schema": "segwelfare.config/1", "family": [{"kind": "power_unit", "theta": 0.31}]})";
    CHECK(config_hash(parse_config(a)) == config_hash(parse_config(a)));
    CHECK(config_hash(parse_config(a)) != config_hash(parse_config(b)));
    CHECK(config_hash(parse_config(a)).size() == 16);
  }

  TEST_CASE("segmentation JSON round-trips") {
    const Market prior(Eigen::Vector3d(0.2, 0.3, 0.5));
    const Segmentation s = split_atom(Segmentation::no_information(prior), 0, Eigen::Vector2d(0.3, -0.7), 0.1);
    const nlohmann::json j = to_json(s);
    const Segmentation back = segmentation_from_json(nlohmann::json::parse(j.dump()));
    REQUIRE(back.size() == s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
      CHECK(back.atoms()[k].weight == s.atoms()[k].weight);
      CHECK(back.atoms()[k].market.mu() == s.atoms()[k].market.mu());
    }
    CHECK(to_json(back) == j);
    CHECK_THROWS_AS(segmentation_from_json(nlohmann::json::parse(R"({"atoms": []})")), Error);
  }

  TEST_CASE("validate exit codes") {
    CHECK(run("validate --config " + (kConfigs / "ces_valid.json").string()) == 0);
    CHECK(run("validate --config " + (kConfigs / "ces_untruncated.json").string()) == 1);
    const fs::path bad = fs::temp_directory_path() / "segwelfare_malformed.json";
    std::ofstream(bad) << "{\"schema\": ";
    CHECK(run("validate --config " + bad.string()) == 2);
    fs::remove(bad);
    CHECK(run("validate") == 2);
    CHECK(run("frobnicate") == 2);
  }

  TEST_CASE("untruncated CES names the concavity failure") {
    const CommandOutput out = cmd_validate(load_config(kConfigs / "ces_untruncated.json"));
    CHECK(out.exit_code == 1);
    bool named = false;
    for (const auto& t : out.report["families"][0]["types"])
      for (const auto& c : t["checks"])
        if (c["name"] == "concave_revenue" && c["passed"] == false) named = true;
    CHECK(named);
  }

  TEST_CASE("classify reports verdicts with diagnostics") {
    const CommandOutput out = cmd_classify(load_config(kConfigs / "ces_pair.json"), {true, false});
    CHECK(out.exit_code == 0);
    const auto& f = out.report["families"][0];
    CHECK(f["verdicts"].size() == 4);
    CHECK(f["verdicts"][1]["verdict"] == "IMB");
    CHECK(f["verdicts"][1]["diagnostics"]["price"].size() == 400);
    CHECK(f["alpha_scan"].size() == 4);
    CHECK(out.report["schema"] == kReportSchema);
    CHECK(out.report["config_hash"].get<std::string>().size() == 16);
  }

  TEST_CASE("classify the a D + b shortcut") {
    const CommandOutput out = cmd_classify(load_config(kConfigs / "density_affine.json"), {false, true});
    const auto& rows = out.report["families"][0]["affine"];
    CHECK(rows[0]["alpha_hat"].get<double>() == doctest::Approx(1.0 / 3.0));
    CHECK(rows[0]["verdict"] == "IMG");
    CHECK(rows.back()["verdict"] == "IMB");
  }

  TEST_CASE("bounds writes the lattice CSV and refuses exclusion") {
    RunConfig cfg = load_config(kConfigs / "ces_triple.json");
    cfg.resolution = 20;
    cfg.lattice_csv = fs::temp_directory_path() / "segwelfare_lattice.csv";
    const CommandOutput out = cmd_bounds(cfg);
    CHECK(out.exit_code == 0);
    CHECK(out.report["table"][0]["magnitude_lower"].is_number());
    const std::string csv = slurp(*cfg.lattice_csv);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 231);
    fs::remove(*cfg.lattice_csv);

    const RunConfig steps = parse_config(R"({"schema": "segwelfare.config/1", "family": [
      {"kind": "smooth_step", "value": 1.0, "width": 0.2},
      {"kind": "smooth_step", "value": 1.25, "width": 0.2}]})");
    const CommandOutput refused = cmd_bounds(steps);
    CHECK(refused.exit_code == 1);
    CHECK(refused.report["table"][0]["error"]["code"] == "PartialInclusionViolated");
  }

  TEST_CASE("field CSV through the binary is reproducible") {
    const fs::path a = fs::temp_directory_path() / "segwelfare_field_a.csv";
    const fs::path b = fs::temp_directory_path() / "segwelfare_field_b.csv";
    const std::string cfg = (kConfigs / "power_unit.json").string();
    CHECK(run("field --config " + cfg, a) == 0);
    CHECK(run("field --threads 2 --config " + cfg, b) == 0);
    const std::string csv = slurp(a);
    CHECK(csv == slurp(b));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 742);
    CHECK(run("field --config " + (kConfigs / "ces_pair.json").string()) == 1);
    fs::remove(a);
    fs::remove(b);
  }

  TEST_CASE("witness needs a prior and echoes the seed") {
    CHECK(run("witness --config " + (kConfigs / "ces_pair.json").string()) == 2);
    RunConfig cfg = load_config(kConfigs / "ces_triple.json");
    cfg.search_trials = 100;
    const CommandOutput out = cmd_witness(cfg);
    const auto& r = out.report["families"][0]["results"][0];
    CHECK(r["rng_seed"] == 7);
    CHECK(r["trials"] == 100);
    if (!r["worsening"].is_null()) CHECK_NOTHROW(segmentation_from_json(r["worsening"]["segmentation"]));
  }

  TEST_CASE("step-limit runs without a config") {
    const fs::path out = fs::temp_directory_path() / "segwelfare_step.json";
    CHECK(run("step-limit", out) == 0);
    const nlohmann::json j = nlohmann::json::parse(slurp(out));
    CHECK(j["table"]["crossover"].get<double>() == doctest::Approx(0.5));
    fs::remove(out);
  }
}
