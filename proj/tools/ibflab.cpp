#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ibf/errors.hpp"
#include "ibf/harness.hpp"
#include "ibf/io.hpp"
#include "ibf/version.hpp"

namespace {

void write_failure(const std::filesystem::path& dir, const std::string& suite,
                   const ibf::ErrorClass& f, const std::exception& e) {
  nlohmann::json rec = {{"suite", suite}, {"error", f.kind}, {"message", e.what()},
                        {"exit_code", f.exit_code}, {"code_version", ibf::kVersion}};
  if (auto* ce = dynamic_cast<const ibf::ConfigError*>(&e)) rec["violations"] = ce->violations();
  try {
    std::filesystem::create_directories(dir);
    ibf::write_json(dir / "failure.json", rec);
  } catch (const std::exception&) {
    // nowhere to put it; stderr still has the message
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Isotropic Brownian flow experiments"};
  app.set_version_flag("--version", std::string(ibf::kVersion));
  std::string suite_name, config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicas;
  app.add_option("suite", suite_name, "analyze|radial|lyapunov-fn|sweep|simulate|shape|verify")
      ->required()
      ->check(CLI::IsMember({"analyze", "radial", "lyapunov-fn", "sweep", "simulate", "shape",
                             "verify"}));
  app.add_option("--config", config_path, "JSON configuration file")->required();
  app.add_option("--seed", seed, "override master_seed");
  app.add_option("--replicas", replicas, "override replicas")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory (default: output.dir from the config)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ibf::kExitPass : ibf::kExitConfig;
  }

  std::filesystem::path out = out_dir.empty() ? std::string("ibf-out") : out_dir;
  try {
    ibf::ExperimentConfig config = ibf::load_config(config_path);
    if (seed) config.master_seed = *seed;
    if (replicas) config.replicas = *replicas;
    if (out_dir.empty()) out = config.output.dir;
    const ibf::Suite suite = ibf::suite_from_string(suite_name);
    auto progress = [](const ibf::CriterionResult& r) {
      std::cout << ibf::format_result_line(r) << std::endl;
    };
    const ibf::RunRecord rec = ibf::run_suite(config, suite, out, progress);
    std::cout << suite_name << ": " << (rec.passed ? "pass" : "FAIL") << " ("
              << rec.wall_seconds << " s, digest " << rec.config_digest << ", artifacts in "
              << out.string() << ")\n";
    return rec.passed ? ibf::kExitPass : ibf::kExitAcceptance;
  } catch (const ibf::ConfigError& e) {
    for (const auto& v : e.violations()) std::cerr << "config: " << v << "\n";
    write_failure(out, suite_name, ibf::classify_error(e), e);
    return ibf::kExitConfig;
  } catch (const std::exception& e) {
    const ibf::ErrorClass f = ibf::classify_error(e);
    std::cerr << suite_name << ": " << f.kind << " error: " << e.what() << "\n";
    write_failure(out, suite_name, f, e);
    return f.exit_code;
  }
}
