// Command-line driver for the cutDG experiment suite.
#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "cutdg/study.hpp"

namespace {

using namespace cutdg;

bool is_interface(const std::string& problem) { return problem.rfind("iface", 0) == 0; }

std::string out_path(const std::string& out_dir, const Config& cfg, const std::string& dflt) {
  std::filesystem::create_directories(out_dir);
  return (std::filesystem::path(out_dir) / cfg.get("out_csv", dflt)).string();
}

int table_status(const EocTable& table, bool strict) {
  bool any_failed = false;
  for (const EocRow& r : table.rows) {
    if (!r.solved) {
      any_failed = true;
      std::cerr << "row n=" << r.n << " failed: " << r.error << "\n";
    }
  }
  return (any_failed && strict) ? 2 : 0;
}

EocTable run_converge_any(const Config& cfg, const std::string& problem, int order,
                          const std::vector<int>& n_list) {
  if (is_interface(problem)) {
    InterfaceProblem pb = interface_problem(problem);
    InterfaceParams params = interface_params_from_config(cfg, pb);
    return run_interface_convergence(pb, n_list, order, params);
  }
  BvpProblem pb = bvp_problem(problem);
  BvpParams params = bvp_params_from_config(cfg);
  return run_convergence(pb, n_list, order, params);
}

int cmd_converge(const Config& cfg, const std::string& out_dir, bool strict,
                 bool force_interface) {
  std::string problem =
      cfg.get("problem", force_interface ? "iface2d_flower_a" : "bvp2d_flower");
  if (force_interface && !is_interface(problem))
    throw std::invalid_argument("interface-converge requires an interface problem, got " +
                                problem);
  int order = cfg.get_int("order", 1);
  std::vector<int> n_list = cfg.get_int_list("n_list", {8, 16, 32});
  EocTable table = run_converge_any(cfg, problem, order, n_list);
  std::string path = out_path(out_dir, cfg, problem + "_converge.csv");
  std::ofstream os(path);
  write_converge_csv(os, table);
  write_converge_csv(std::cout, table);
  std::cout << "wrote " << path << "\n";
  return table_status(table, strict);
}

int cmd_solve(const Config& cfg, const std::string& out_dir, bool strict) {
  std::string problem = cfg.get("problem", "bvp2d_flower");
  int order = cfg.get_int("order", 1);
  std::vector<int> n_list = cfg.get_int_list("n_list", {16});
  EocTable table = run_converge_any(cfg, problem, order, {n_list.front()});
  std::string path = out_path(out_dir, cfg, problem + "_solve.csv");
  std::ofstream os(path);
  write_converge_csv(os, table);
  const EocRow& r = table.rows.front();
  std::cout << "problem=" << problem << " order=" << order << " n=" << r.n << " h=" << r.h
            << " dofs=" << r.dofs << " l2=" << r.l2 << " h1=" << r.h1 << " energy=" << r.energy
            << " solved=" << (r.solved ? 1 : 0) << "\n";
  std::cout << "wrote " << path << "\n";
  return table_status(table, strict);
}

SweepConfig sweep_from_config(const Config& cfg) {
  SweepConfig sc;
  sc.base = bvp_problem(cfg.get("problem", "bvp2d_circle"));
  sc.n = cfg.get_int("n", 16);
  sc.order = cfg.get_int("order", 1);
  sc.direction = Vec{cfg.get_double("dir_x", 1.0), cfg.get_double("dir_y", 1.0),
                     cfg.get_double("dir_z", 0.0)};
  sc.step = cfg.get_double("delta_step", 0.002);
  sc.steps = cfg.get_int("steps", 200);
  sc.params = bvp_params_from_config(cfg);
  sc.variants.clear();
  for (const std::string& v : cfg.get_list("gp_variant", {"face_jumps"}))
    sc.variants.push_back(parse_gp_variant(v));
  sc.with_errors = cfg.get_int("with_errors", 1) != 0;
  sc.with_condition = cfg.get_int("with_condition", 1) != 0;
  return sc;
}

int cmd_sweep(const Config& cfg, const std::string& out_dir, bool strict) {
  SweepConfig sc = sweep_from_config(cfg);
  std::vector<SweepRow> rows = run_translation_sweep(sc);
  std::string path = out_path(out_dir, cfg, "sweep_translate.csv");
  std::ofstream os(path);
  write_sweep_csv(os, rows);
  std::cout << "wrote " << path << " (" << rows.size() << " rows)\n";
  bool any_failed = false;
  for (const SweepRow& r : rows) any_failed = any_failed || !r.converged;
  if (any_failed) std::cerr << "some sweep rows did not converge (flagged in the CSV)\n";
  return (any_failed && strict) ? 2 : 0;
}

int cmd_param_scale(const Config& cfg, const std::string& out_dir, bool) {
  SweepConfig sc = sweep_from_config(cfg);
  sc.with_errors = false;
  if (!cfg.has("steps")) sc.steps = 50;
  std::vector<double> scales =
      cfg.get_double_list("scales", {1e-6, 1e-4, 1e-2, 1.0, 1e2, 1e4, 1e6});
  std::vector<ScaleRow> rows = run_parameter_scaling(sc, scales);
  std::string path = out_path(out_dir, cfg, "param_scale.csv");
  std::ofstream os(path);
  write_scale_csv(os, rows);
  write_scale_csv(std::cout, rows);
  std::cout << "wrote " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cutDG solver and experiment drivers"};
  app.require_subcommand(1);
  app.fallthrough();  // allow --config/--out/--strict after the subcommand

  std::string config_path, out_dir = ".";
  bool strict = false;
  app.add_option("--config", config_path, "plain-text key = value configuration file");
  app.add_option("--out", out_dir, "output directory for CSV files");
  app.add_flag("--strict", strict, "exit nonzero if any row failed");

  CLI::App* solve = app.add_subcommand("solve", "solve one problem on one mesh");
  CLI::App* converge = app.add_subcommand("converge", "mesh-refinement convergence study");
  CLI::App* sweep = app.add_subcommand("sweep-translate", "geometry translation sweep");
  CLI::App* pscale = app.add_subcommand("param-scale", "penalty-parameter scaling study");
  CLI::App* iface = app.add_subcommand("interface-converge", "interface convergence study");

  CLI11_PARSE(app, argc, argv);

  try {
    cutdg::Config cfg;
    if (!config_path.empty()) cfg = cutdg::parse_config_file(config_path);
    if (solve->parsed()) return cmd_solve(cfg, out_dir, strict);
    if (converge->parsed()) return cmd_converge(cfg, out_dir, strict, false);
    if (sweep->parsed()) return cmd_sweep(cfg, out_dir, strict);
    if (pscale->parsed()) return cmd_param_scale(cfg, out_dir, strict);
    if (iface->parsed()) return cmd_converge(cfg, out_dir, strict, true);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
