#include <CLI11.hpp>
#include <iostream>

#include "feedloc/error.hpp"
#include "feedloc_tools/commands.hpp"

int main(int argc, char** argv) {
  using namespace feedloc::tools;

  CLI::App app{"feedloc: metric localization from feed-forward reconstruction bundles"};
  app.require_subcommand(1);

  SimulateOptions sim;
  std::string spec_path;
  std::string corruption_path;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic bundle and its oracle");
  simulate->add_option("--spec", spec_path, "Scene spec JSON");
  simulate->add_option("--corruption", corruption_path, "Corruption spec JSON");
  simulate->add_option("--seed", sim.seed, "RNG seed");
  simulate->add_option("--out", sim.out, "Output bundle directory")->required();

  LocalizeOptions loc;
  std::string scale_mode = "auto";
  auto* localize = app.add_subcommand("localize", "Localize the query of one bundle or a directory of bundles");
  localize->add_option("--bundle", loc.bundle, "Bundle directory")->required();
  localize->add_option("--out", loc.out, "Output directory")->required();
  localize->add_option("--k-max", loc.config.k_max, "Maximum number of references")->capture_default_str();
  localize->add_option("--min-baseline", loc.config.min_baseline, "Reference filter baseline, meters")
      ->capture_default_str();
  localize->add_option("--stage1-threshold", loc.config.stage1_threshold, "Stage-1 deviation threshold")
      ->capture_default_str();
  localize->add_option("--ransac-iters", loc.config.ransac_iterations, "Trajectory RANSAC iterations")
      ->capture_default_str();
  localize->add_option("--inlier-radius", loc.config.inlier_radius, "Trajectory inlier radius, meters")
      ->capture_default_str();
  localize->add_option("--search-radius", loc.config.search_radius, "Guided matching radius, pixels")
      ->capture_default_str();
  localize->add_option("--scale-mode", scale_mode, "auto | tri_only | traj_only")
      ->check(CLI::IsMember({"auto", "tri_only", "traj_only"}))
      ->capture_default_str();
  localize->add_option("--pnp-inlier-px", loc.config.pnp_inlier_px, "PnP reprojection inlier threshold, pixels")
      ->capture_default_str();
  localize->add_option("--seed", loc.config.seed, "RNG seed")->capture_default_str();
  localize->add_option("--thresholds", loc.thresholds, "Recall thresholds 'cm,deg;cm,deg'")->capture_default_str();

  EvaluateOptions eval;
  std::string eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "Median errors and recall of localization results");
  evaluate->add_option("--results", eval.results, "Directory of per-query result files")->required();
  evaluate->add_option("--gt", eval.gt, "oracle.json, bundle, or directory holding either")->required();
  evaluate->add_option("--thresholds", eval.thresholds, "Recall thresholds 'cm,deg;cm,deg'")->capture_default_str();
  evaluate->add_option("--out", eval_out, "Directory for report.txt and report.json");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check that a bundle loads");
  validate->add_option("--bundle", validate_path, "Bundle directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  if (*simulate) {
    if (!spec_path.empty()) sim.spec = spec_path;
    if (!corruption_path.empty()) sim.corruption = corruption_path;
    return cmd_simulate(sim, std::cerr);
  }
  if (*localize) {
    loc.config.scale_mode = parse_scale_mode(scale_mode);
    return cmd_localize(loc, std::cout, std::cerr);
  }
  if (*evaluate) {
    if (!eval_out.empty()) eval.out = eval_out;
    return cmd_evaluate(eval, std::cout, std::cerr);
  }
  return cmd_validate(validate_path, std::cout, std::cerr);
}
