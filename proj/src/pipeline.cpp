#include "compoc/pipeline.hpp"

#include <cstdlib>
#include <ctime>
#include <filesystem>

#include "compoc/errors.hpp"
#include "compoc/oracle.hpp"
#include "compoc/synth.hpp"

namespace compoc {

namespace {

double number_field(const json& j, const char* key, double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (it->is_string()) return from_dec(it->get<std::string>());
  if (it->is_number()) return it->get<double>();
  throw ConfigError(std::string("field '") + key + "' must be a number");
}

int int_field(const json& j, const char* key, int fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number_integer())
    throw ConfigError(std::string("field '") + key + "' must be an integer");
  return it->get<int>();
}

std::string verdict_name(ConvexityVerdict v) {
  switch (v) {
    case ConvexityVerdict::StrictlyConvex: return "strictly_convex";
    case ConvexityVerdict::ConvexOnly: return "convex_only";
    case ConvexityVerdict::NotCertified: return "not_certified";
  }
  return "not_certified";
}

json tuple_json(const FeatureTuple& t) {
  return {{"r_max", to_dec(t.r_max)},
          {"lambda", to_dec(t.lambda)},
          {"l_max", to_dec(t.l_max)},
          {"v_g", t.v_g}};
}

json cert_json(const ConvexityCertificate& c) {
  return {{"verdict", verdict_name(c.verdict)},
          {"min_eig", to_dec(c.min_eig)},
          {"samples", c.samples},
          {"witness_x", vec_dec(c.witness_x)},
          {"witness_U", vec_dec(c.witness_U)}};
}

json ledger_json(const ConstantLedger& lc) {
  return {{"L1", to_dec(lc.obj.L1)},   {"L2", to_dec(lc.obj.L2)},
          {"lf", to_dec(lc.lf)},       {"lg", to_dec(lc.lg)},
          {"Cf", to_dec(lc.Cf)},       {"Cg", to_dec(lc.Cg)},
          {"geom", to_dec(lc.geom)},   {"c_tilde1", to_dec(lc.c_tilde1)},
          {"c_frak", to_dec(lc.c_frak)}, {"r", to_dec(lc.r)},
          {"C1", to_dec(lc.C1)},       {"C2", to_dec(lc.C2)},
          {"f_dyn", tuple_json(lc.f_dyn)},
          {"f_term", tuple_json(lc.f_term)}};
}

json plan_json(const SynthesisPlan& p) {
  return {{"k_bar", p.k_bar},
          {"mn", to_dec(p.mn)},
          {"h_bar", to_dec(p.h_bar)},
          {"alpha", to_dec(p.alpha)},
          {"delta_bar", to_dec(p.delta_bar)},
          {"n_w", p.n_w},
          {"surrogate_size", p.surrogate_size},
          {"size_total", p.size_total},
          {"bound_predicted", to_dec(p.bound_predicted)}};
}

json fits_json(const std::vector<FitReport>& fits) {
  json a = json::array();
  for (const auto& f : fits)
    a.push_back({{"width", f.width},
                 {"train_sup", to_dec(f.train_sup)},
                 {"valid_sup", to_dec(f.valid_sup)},
                 {"cond", to_dec(f.cond)}});
  return a;
}

json build_json(const UnrolledController& c) {
  return {{"n_w_planned", c.n_w_planned},
          {"n_w_used", c.n_w_used},
          {"refits", c.refits},
          {"delta_build", to_dec(c.delta_build)},
          {"fits_dynamics", fits_json(c.f_hat.fits)},
          {"fits_terminal", fits_json(c.g_hat.fits)}};
}

json eval_json(const EvalReport& e) {
  json errs = json::array();
  for (double w : e.weak_errs) errs.push_back(to_dec(w));
  return {{"n_eval", e.n_eval},
          {"weak_err_max", to_dec(e.weak_err_max)},
          {"weak_err_mean", to_dec(e.weak_err_mean)},
          {"delta_probe", to_dec(e.delta_probe)},
          {"delta_used", to_dec(e.delta_used)},
          {"bound_used", to_dec(e.bound_used)},
          {"weak_ok", e.weak_ok},
          {"within_eps", e.within_eps},
          {"weak_errs", std::move(errs)}};
}

void validate_or_throw(const CompGraph& g, const char* what) {
  ValidationReport rep = validate_graph(g);
  if (rep.pass) return;
  for (const auto& e : rep.edges) {
    if (e.ok) continue;
    throw ConfigError(std::string(what) + ": edge " + std::to_string(e.src) +
                      " -> " + std::to_string(e.dst) + " ranges over [" +
                      to_dec(e.lo) + ", " + to_dec(e.hi) +
                      "] but the consumer admits only " + to_dec(e.limit));
  }
  throw ConfigError(std::string(what) + ": range validation failed");
}

void validate_instance_graphs(const OcpInstance& inst) {
  if (const auto* gd = std::get_if<GraphDynamics>(&inst.dynamics))
    validate_or_throw(gd->g, "dynamics graph");
  if (const auto* sep = std::get_if<SeparatedCost>(&inst.stage)) {
    validate_or_throw(sep->l1, "state cost graph");
    validate_or_throw(sep->l2, "control cost graph");
  }
  validate_or_throw(inst.terminal, "terminal cost graph");
}

std::string utc_timestamp() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

json config_echo(const PipelineConfig& cfg) {
  json eps = json::array();
  for (double e : cfg.epsilons) eps.push_back(to_dec(e));
  return {{"seed", cfg.seed},
          {"epsilons", std::move(eps)},
          {"certify_samples", cfg.certify_samples},
          {"constant_samples", cfg.constant_samples},
          {"eval_starts", cfg.eval_starts},
          {"delta_samples", cfg.delta_samples},
          {"max_refits", cfg.max_refits},
          {"calibration_margin", to_dec(cfg.calibration_margin)},
          {"omega_samples", cfg.omega_samples},
          {"plan_only", cfg.plan_only}};
}

}  // namespace

PipelineConfig config_from_json(const json& j, const std::string& base_dir) {
  PipelineConfig cfg;
  const json& ji = [&]() -> const json& {
    auto it = j.find("instance");
    if (it == j.end()) throw ConfigError("config needs an 'instance' field");
    return *it;
  }();
  if (ji.is_string()) {
    std::filesystem::path p = ji.get<std::string>();
    if (p.is_relative() && !base_dir.empty())
      p = std::filesystem::path(base_dir) / p;
    cfg.instance = instance_from_json(load_json_file(p.string()));
  } else if (ji.is_object()) {
    cfg.instance = instance_from_json(ji);
  } else {
    throw ConfigError("'instance' must be a path or an object");
  }
  if (auto it = j.find("seed"); it != j.end()) {
    if (!it->is_number_integer()) throw ConfigError("'seed' must be an integer");
    cfg.seed = it->get<std::uint64_t>();
  }
  if (auto it = j.find("epsilons"); it != j.end()) {
    for (const auto& e : *it)
      cfg.epsilons.push_back(e.is_string() ? from_dec(e.get<std::string>())
                                           : e.get<double>());
  } else if (j.contains("epsilon")) {
    cfg.epsilons.push_back(number_field(j, "epsilon", 0.0));
  }
  if (cfg.epsilons.empty())
    throw ConfigError("config needs 'epsilon' or 'epsilons'");
  cfg.certify_samples = int_field(j, "certify_samples", cfg.certify_samples);
  cfg.constant_samples = int_field(j, "constant_samples", cfg.constant_samples);
  cfg.eval_starts = int_field(j, "eval_starts", cfg.eval_starts);
  cfg.delta_samples = int_field(j, "delta_samples", cfg.delta_samples);
  cfg.max_refits = int_field(j, "max_refits", cfg.max_refits);
  cfg.calibration_margin =
      number_field(j, "calibration_margin", cfg.calibration_margin);
  cfg.omega_samples = int_field(j, "omega_samples", cfg.omega_samples);
  if (auto it = j.find("plan_only"); it != j.end())
    cfg.plan_only = it->get<bool>();
  return cfg;
}

void apply_env_seed(PipelineConfig& cfg) {
  if (const char* env = std::getenv("COMP_OC_SEED")) {
    try {
      cfg.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("COMP_OC_SEED must be an unsigned integer");
    }
  }
}

PipelineConfig load_config(const std::string& path) {
  PipelineConfig cfg = config_from_json(
      load_json_file(path), std::filesystem::path(path).parent_path().string());
  apply_env_seed(cfg);
  return cfg;
}

PipelineStages prepare_stages(const PipelineConfig& cfg) {
  const OcpInstance& orig0 = cfg.instance;
  orig0.check();
  validate_instance_graphs(orig0);
  Rng root(cfg.seed);

  PipelineStages st;
  st.report_head["config"] = config_echo(cfg);
  st.report_head["instance"] = instance_to_json(orig0);

  st.cert = certify_convexity(orig0, cfg.certify_samples, root.fork(1).seed());
  st.report_head["certificate"] = cert_json(st.cert);
  if (st.cert.verdict == ConvexityVerdict::NotCertified) {
    st.orig = orig0;
    return st;
  }
  st.certified = true;

  const bool lq = instance_is_lq(orig0);
  auto oracle = [&](const Vec& xe) {
    const Vec x = xe.head(orig0.n);
    return lq ? solve_lq(orig0, x) : solve_numeric(orig0, x);
  };
  OcpInstance ext0 = extend_system(orig0);
  OcpInstance cal = calibrate_domain(ext0, oracle, cfg.calibration_margin,
                                     cfg.omega_samples, root.fork(2).seed());
  st.orig = orig0;
  st.orig.domain.U0 = cal.domain.U0;
  st.orig.domain.gamma = cal.domain.gamma;
  st.orig.domain.R = cal.domain.R;
  // re-extend so the nodes the extension authors carry the calibrated box
  st.ext = extend_system(st.orig);
  st.report_head["calibration"] = {{"U0", vec_dec(st.orig.domain.U0)},
                                   {"gamma", to_dec(st.orig.domain.gamma)},
                                   {"R", to_dec(st.orig.domain.R)}};

  st.lc = estimate_constants(st.orig, st.ext, cfg.constant_samples,
                             root.fork(3).seed());
  st.report_head["constants"] = ledger_json(st.lc);
  return st;
}

json run_pipeline(const PipelineConfig& cfg) {
  PipelineStages st = prepare_stages(cfg);
  json report = st.report_head;
  if (!st.certified) {
    report["status"] = "not_certified";
    report["timestamp"] = utc_timestamp();
    report["content_hash"] = report_content_hash(report);
    return report;
  }
  Rng root(cfg.seed);
  const OcpInstance& orig = st.orig;
  const OcpInstance& ext = st.ext;
  const ConstantLedger& lc = st.lc;

  json runs = json::array();
  for (size_t i = 0; i < cfg.epsilons.size(); ++i) {
    const double eps = cfg.epsilons[i];
    json run;
    run["epsilon"] = to_dec(eps);
    SynthesisPlan plan = plan_synthesis(lc, orig, eps);
    run["plan"] = plan_json(plan);
    if (!cfg.plan_only) {
      BuildOptions bo;
      bo.seed = root.fork(100 + i).seed();
      bo.max_refits = cfg.max_refits;
      bo.delta_samples = cfg.delta_samples;
      UnrolledController ctrl = build_controller(orig, ext, plan, bo);
      run["build"] = build_json(ctrl);
      EvalOptions eo;
      eo.n_eval = cfg.eval_starts;
      eo.seed = root.fork(200 + i).seed();
      EvalReport er = evaluate_controller(orig, ctrl, plan, lc, eo);
      run["eval"] = eval_json(er);
    }
    runs.push_back(std::move(run));
  }
  report["runs"] = std::move(runs);
  report["status"] = "ok";
  report["timestamp"] = utc_timestamp();
  report["content_hash"] = report_content_hash(report);
  return report;
}

std::string report_content_hash(json report) {
  report.erase("timestamp");
  report.erase("content_hash");
  return fnv1a64_hex(report.dump());
}

std::string report_to_csv(const json& report) {
  std::string out =
      "epsilon,k_bar,h_bar,delta_bar,n_w,size_total,weak_err_max,"
      "weak_err_mean,bound_predicted\n";
  auto runs = report.find("runs");
  if (runs == report.end()) return out;
  for (const auto& run : *runs) {
    const json& plan = run.at("plan");
    out += run.at("epsilon").get<std::string>() + ",";
    out += std::to_string(plan.at("k_bar").get<long long>()) + ",";
    out += plan.at("h_bar").get<std::string>() + ",";
    out += plan.at("delta_bar").get<std::string>() + ",";
    out += std::to_string(plan.at("n_w").get<long long>()) + ",";
    out += std::to_string(plan.at("size_total").get<long long>()) + ",";
    if (auto ev = run.find("eval"); ev != run.end()) {
      out += ev->at("weak_err_max").get<std::string>() + ",";
      out += ev->at("weak_err_mean").get<std::string>() + ",";
    } else {
      out += ",,";
    }
    out += plan.at("bound_predicted").get<std::string>() + "\n";
  }
  return out;
}

int exit_code_for_report(const json& report) {
  return report.at("status").get<std::string>() == "ok" ? 0 : 2;
}

}  // namespace compoc
