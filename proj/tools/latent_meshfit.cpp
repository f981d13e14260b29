#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "meshfit/commands.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out = "out";
  long long seed = -1;
  int workers = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Configuration file");
  cmd->add_option("--set", args.sets, "Override: key=value (repeatable)");
  cmd->add_option("--out", args.out, "Output directory");
  cmd->add_option("--seed", args.seed, "Run seed");
  cmd->add_option("--workers", args.workers, "Batch worker count");
}

meshfit::Config build_config(const CommonArgs& args) {
  meshfit::Config cfg = meshfit::Config::defaults();
  if (!args.config_path.empty()) cfg.apply_file(args.config_path);
  for (const std::string& s : args.sets) cfg.apply_set_arg(s);
  if (args.seed >= 0) cfg.apply_kv("seed", std::to_string(args.seed));
  if (args.workers > 0) cfg.apply_kv("workers", std::to_string(args.workers));
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latent-meshfit: textured mesh reconstruction by latent-space search"};
  app.require_subcommand(1);

  CommonArgs args;
  CLI::App* c_invert = app.add_subcommand(
      "invert", "Reconstruct a mesh from an image + silhouette");
  CLI::App* c_sens = app.add_subcommand(
      "sensitivity", "Mask-loss sensitivity sweep against 3D Chamfer");
  CLI::App* c_eps = app.add_subcommand(
      "eps-sweep", "Invert a synthetic suite across eps_s values");
  CLI::App* c_make = app.add_subcommand(
      "make-synthetic", "Generate a ground-truth target bundle");
  CLI::App* c_render = app.add_subcommand(
      "render", "Render an exported mesh.obj with a texture PNG");
  CLI::App* c_grad = app.add_subcommand(
      "grad-check", "Finite-difference gradient suite");
  for (CLI::App* c : {c_invert, c_sens, c_eps, c_make, c_render, c_grad})
    add_common(c, args);

  CLI11_PARSE(app, argc, argv);

  try {
    meshfit::Config cfg = build_config(args);
    if (c_invert->parsed())
      return meshfit::cmd_invert(cfg, args.sets, args.out);
    if (c_sens->parsed()) return meshfit::cmd_sensitivity(cfg, args.out);
    if (c_eps->parsed()) return meshfit::cmd_eps_sweep(cfg, args.out);
    if (c_make->parsed()) return meshfit::cmd_make_synthetic(cfg, args.out);
    if (c_render->parsed()) return meshfit::cmd_render(cfg, args.out);
    if (c_grad->parsed()) return meshfit::cmd_grad_check(cfg, args.out);
  } catch (const meshfit::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const meshfit::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 2;
  } catch (const meshfit::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
