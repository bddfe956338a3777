// Command-line front end for the synthesis pipeline.
//
// Exit codes: 0 success, 1 configuration or usage error, 2 failed convexity
// certificate, 3 infeasible schedule, 4 any other typed failure.

#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "compoc/errors.hpp"
#include "compoc/features.hpp"
#include "compoc/oracle.hpp"
#include "compoc/pipeline.hpp"
#include "compoc/serialize.hpp"
#include "compoc/synth.hpp"

namespace {

using compoc::json;

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 0;
  std::string out_path;
  bool print_config = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_config = true) {
  auto* c = cmd->add_option("--config", o.config_path,
                            "pipeline configuration file");
  if (needs_config) c->required();
  cmd->add_option("--seed", o.seed, "override the configured seed")
      ->each([&o](const std::string&) { o.seed_set = true; });
  cmd->add_option("--jobs", o.jobs, "worker thread cap (0 = default)");
  cmd->add_option("--out", o.out_path, "output file (default: stdout)");
  cmd->add_flag("--print-config", o.print_config,
                "echo the effective configuration before running");
}

void apply_jobs(int jobs) {
#ifdef _OPENMP
  if (jobs > 0) omp_set_num_threads(jobs);
#else
  (void)jobs;
#endif
}

compoc::PipelineConfig effective_config(const CommonOpts& o) {
  compoc::PipelineConfig cfg = compoc::load_config(o.config_path);
  if (o.seed_set) {
    cfg.seed = o.seed;
    compoc::apply_env_seed(cfg);  // the environment keeps the last word
  }
  if (o.print_config) {
    json echo = {{"seed", cfg.seed},
                 {"plan_only", cfg.plan_only},
                 {"eval_starts", cfg.eval_starts},
                 {"certify_samples", cfg.certify_samples}};
    std::cerr << echo.dump(2) << "\n";
  }
  return cfg;
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw compoc::ConfigError("cannot write " + out_path);
  out << text;
}

int cmd_run(const CommonOpts& o, const std::string& csv_path,
            const std::string& controller_path, bool plan_only) {
  compoc::PipelineConfig cfg = effective_config(o);
  if (plan_only) cfg.plan_only = true;
  json report = compoc::run_pipeline(cfg);
  if (!csv_path.empty()) emit(csv_path, compoc::report_to_csv(report));
  if (!controller_path.empty() && report.at("status") == "ok" &&
      !cfg.plan_only) {
    // rebuild the first controller deterministically for saving
    compoc::PipelineStages st = compoc::prepare_stages(cfg);
    compoc::Rng root(cfg.seed);
    compoc::SynthesisPlan plan =
        compoc::plan_synthesis(st.lc, st.orig, cfg.epsilons.front());
    compoc::BuildOptions bo;
    bo.seed = root.fork(100).seed();
    bo.max_refits = cfg.max_refits;
    bo.delta_samples = cfg.delta_samples;
    compoc::UnrolledController ctrl =
        compoc::build_controller(st.orig, st.ext, plan, bo);
    compoc::save_json_file(controller_path, compoc::controller_to_json(ctrl));
  }
  emit(o.out_path, report.dump(2));
  return compoc::exit_code_for_report(report);
}

int cmd_sweep(const CommonOpts& o) {
  compoc::PipelineConfig cfg = effective_config(o);
  cfg.plan_only = true;
  json report = compoc::run_pipeline(cfg);
  emit(o.out_path, compoc::report_to_csv(report));
  return compoc::exit_code_for_report(report);
}

int cmd_certify(const CommonOpts& o) {
  compoc::PipelineConfig cfg = effective_config(o);
  cfg.instance.check();
  compoc::Rng root(cfg.seed);
  compoc::ConvexityCertificate cert = compoc::certify_convexity(
      cfg.instance, cfg.certify_samples, root.fork(1).seed());
  json out = {{"min_eig", compoc::to_dec(cert.min_eig)},
              {"samples", cert.samples},
              {"witness_x", compoc::vec_dec(cert.witness_x)},
              {"witness_U", compoc::vec_dec(cert.witness_U)}};
  switch (cert.verdict) {
    case compoc::ConvexityVerdict::StrictlyConvex:
      out["verdict"] = "strictly_convex";
      break;
    case compoc::ConvexityVerdict::ConvexOnly:
      out["verdict"] = "convex_only";
      break;
    case compoc::ConvexityVerdict::NotCertified:
      out["verdict"] = "not_certified";
      break;
  }
  emit(o.out_path, out.dump(2));
  return cert.verdict == compoc::ConvexityVerdict::NotCertified ? 2 : 0;
}

int cmd_extend(const std::string& instance_path, const std::string& out_path) {
  compoc::OcpInstance inst =
      compoc::instance_from_json(compoc::load_json_file(instance_path));
  compoc::OcpInstance ext = compoc::extend_system(inst);
  emit(out_path, compoc::instance_to_json(ext).dump(2));
  return 0;
}

int cmd_calibrate(const CommonOpts& o) {
  compoc::PipelineConfig cfg = effective_config(o);
  compoc::PipelineStages st = compoc::prepare_stages(cfg);
  if (!st.certified) {
    emit(o.out_path, st.report_head.dump(2));
    return 2;
  }
  json out = st.report_head.at("calibration");
  emit(o.out_path, out.dump(2));
  return 0;
}

int cmd_features(const std::string& instance_path,
                 const std::string& out_path) {
  compoc::OcpInstance inst =
      compoc::instance_from_json(compoc::load_json_file(instance_path));
  auto tuple_json = [](const compoc::FeatureTuple& t) {
    return json{{"r_max", compoc::to_dec(t.r_max)},
                {"lambda", compoc::to_dec(t.lambda)},
                {"l_max", compoc::to_dec(t.l_max)},
                {"v_g", t.v_g}};
  };
  auto graph_entry = [&](const compoc::CompGraph& g) {
    return json{{"features", tuple_json(compoc::compute_features(g))},
                {"lipschitz", compoc::to_dec(compoc::graph_lipschitz(g))}};
  };
  json out;
  if (const auto* gd =
          std::get_if<compoc::GraphDynamics>(&inst.dynamics))
    out["dynamics"] = graph_entry(gd->g);
  if (const auto* sep = std::get_if<compoc::SeparatedCost>(&inst.stage)) {
    out["l1"] = graph_entry(sep->l1);
    out["l2"] = graph_entry(sep->l2);
  }
  out["terminal"] = graph_entry(inst.terminal);
  emit(out_path, out.dump(2));
  return 0;
}

int cmd_fitrate(const std::string& graph_path, int node_id,
                const std::vector<int>& widths, std::uint64_t seed,
                const std::string& out_path) {
  compoc::CompGraph g =
      compoc::graph_from_json(compoc::load_json_file(graph_path));
  const auto& nd = g.nodes[g.node_index(node_id)];
  compoc::RateReport rep = compoc::measure_rate(nd.fn, widths, seed);
  json pts = json::array();
  for (const auto& p : rep.points)
    pts.push_back({{"width", p.width}, {"sup_err", compoc::to_dec(p.sup_err)}});
  json out = {{"node_id", node_id},
              {"points", std::move(pts)},
              {"slope", compoc::to_dec(rep.slope)},
              {"r_hat", compoc::to_dec(rep.r_hat)}};
  emit(out_path, out.dump(2));
  return 0;
}

int cmd_synth(const CommonOpts& o) {
  compoc::PipelineConfig cfg = effective_config(o);
  cfg.plan_only = true;
  json report = compoc::run_pipeline(cfg);
  emit(o.out_path, report.dump(2));
  return compoc::exit_code_for_report(report);
}

int cmd_eval(const CommonOpts& o, const std::string& controller_path,
             double epsilon) {
  compoc::PipelineConfig cfg = effective_config(o);
  if (epsilon > 0) cfg.epsilons = {epsilon};
  compoc::PipelineStages st = compoc::prepare_stages(cfg);
  if (!st.certified) {
    emit(o.out_path, st.report_head.dump(2));
    return 2;
  }
  compoc::Rng root(cfg.seed);
  compoc::SynthesisPlan plan =
      compoc::plan_synthesis(st.lc, st.orig, cfg.epsilons.front());
  compoc::UnrolledController ctrl;
  if (!controller_path.empty()) {
    ctrl = compoc::controller_from_json(
        compoc::load_json_file(controller_path));
  } else {
    compoc::BuildOptions bo;
    bo.seed = root.fork(100).seed();
    bo.max_refits = cfg.max_refits;
    bo.delta_samples = cfg.delta_samples;
    ctrl = compoc::build_controller(st.orig, st.ext, plan, bo);
  }
  compoc::EvalOptions eo;
  eo.n_eval = cfg.eval_starts;
  eo.seed = root.fork(200).seed();
  compoc::EvalReport er =
      compoc::evaluate_controller(st.orig, ctrl, plan, st.lc, eo);
  json out = {{"epsilon", compoc::to_dec(plan.epsilon)},
              {"weak_err_max", compoc::to_dec(er.weak_err_max)},
              {"weak_err_mean", compoc::to_dec(er.weak_err_mean)},
              {"delta_used", compoc::to_dec(er.delta_used)},
              {"bound_used", compoc::to_dec(er.bound_used)},
              {"weak_ok", er.weak_ok},
              {"within_eps", er.within_eps}};
  emit(o.out_path, out.dump(2));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compositional optimal-control synthesis"};
  app.require_subcommand(1);

  CommonOpts run_o, sweep_o, certify_o, calibrate_o, synth_o, eval_o;
  std::string run_csv, run_controller;
  bool run_plan_only = false;
  std::string extend_instance, extend_out;
  std::string features_instance, features_out;
  std::string fitrate_graph, fitrate_out;
  int fitrate_node = 0;
  std::vector<int> fitrate_widths = {8, 16, 32, 64, 128};
  std::uint64_t fitrate_seed = 1;
  std::string eval_controller;
  double eval_epsilon = 0;

  auto* run = app.add_subcommand("run", "full synthesis pipeline");
  add_common(run, run_o);
  run->add_option("--csv", run_csv, "also write the schedule table here");
  run->add_option("--save-controller", run_controller,
                  "serialize the first controller here");
  run->add_flag("--plan-only", run_plan_only, "stop after planning");

  auto* sweep = app.add_subcommand(
      "sweep", "plan across every configured accuracy, emit the table");
  add_common(sweep, sweep_o);

  auto* certify = app.add_subcommand("certify", "convexity certificate only");
  add_common(certify, certify_o);

  auto* extend =
      app.add_subcommand("extend", "append the running-cost coordinate");
  extend->add_option("--instance", extend_instance, "instance file")
      ->required();
  extend->add_option("--out", extend_out, "output file (default: stdout)");

  auto* calibrate =
      app.add_subcommand("calibrate", "trust region and box calibration");
  add_common(calibrate, calibrate_o);

  auto* features =
      app.add_subcommand("features", "regularity features of the cost graphs");
  features->add_option("--instance", features_instance, "instance file")
      ->required();
  features->add_option("--out", features_out, "output file (default: stdout)");

  auto* fitrate = app.add_subcommand(
      "fitrate", "fit one node across widths and report the decay");
  fitrate->add_option("--graph", fitrate_graph, "graph file")->required();
  fitrate->add_option("--node", fitrate_node, "node id")->required();
  fitrate->add_option("--widths", fitrate_widths, "widths to fit");
  fitrate->add_option("--seed", fitrate_seed, "feature seed");
  fitrate->add_option("--out", fitrate_out, "output file (default: stdout)");

  auto* synth = app.add_subcommand("synth", "plan only, full report");
  add_common(synth, synth_o);

  auto* eval = app.add_subcommand("eval", "build or load a controller and "
                                          "evaluate it against the oracle");
  add_common(eval, eval_o);
  eval->add_option("--controller", eval_controller,
                   "previously saved controller");
  eval->add_option("--epsilon", eval_epsilon,
                   "override the configured accuracy");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      apply_jobs(run_o.jobs);
      return cmd_run(run_o, run_csv, run_controller, run_plan_only);
    }
    if (sweep->parsed()) {
      apply_jobs(sweep_o.jobs);
      return cmd_sweep(sweep_o);
    }
    if (certify->parsed()) {
      apply_jobs(certify_o.jobs);
      return cmd_certify(certify_o);
    }
    if (extend->parsed()) return cmd_extend(extend_instance, extend_out);
    if (calibrate->parsed()) {
      apply_jobs(calibrate_o.jobs);
      return cmd_calibrate(calibrate_o);
    }
    if (features->parsed())
      return cmd_features(features_instance, features_out);
    if (fitrate->parsed())
      return cmd_fitrate(fitrate_graph, fitrate_node, fitrate_widths,
                         fitrate_seed, fitrate_out);
    if (synth->parsed()) {
      apply_jobs(synth_o.jobs);
      return cmd_synth(synth_o);
    }
    if (eval->parsed()) {
      apply_jobs(eval_o.jobs);
      return cmd_eval(eval_o, eval_controller, eval_epsilon);
    }
  } catch (const compoc::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const compoc::PlanInfeasible& e) {
    std::cerr << "infeasible schedule: " << e.what() << "\n";
    return 3;
  } catch (const compoc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 5;
  }
  return 1;
}
