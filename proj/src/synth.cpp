#include "compoc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "compoc/errors.hpp"
#include "compoc/kernels.hpp"
#include "compoc/oracle.hpp"

namespace compoc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Vec> trust_region_sample(const Vec& U0, double gamma, int count,
                                     Rng& rng) {
  std::vector<Vec> Us;
  Us.reserve(count);
  for (int i = 0; i < count; ++i)
    Us.push_back(i == 0 ? U0 : ball_point(rng, U0, 2.0 * gamma));
  return Us;
}

double geom_sum(double l, int N) {
  if (std::abs(l - 1.0) < 1e-9) return (double)N;
  return (std::pow(l, N) - 1.0) / (l - 1.0);
}

// largest frozen rate constant over the fitted nodes; zero when nothing is
// fitted
double max_rate_constant(const CompGraph& g) {
  double c = 0.0;
  for (const auto& nd : g.nodes) {
    if (nd.fn.is_input() || nd.fn.linear()) continue;
    c = std::max(c, calibrated_rate_constant(nd.fn));
  }
  return c;
}

Vec lift_state(const Vec& x) {
  Vec xe(x.size() + 1);
  xe << x, 0.0;
  return xe;
}

}  // namespace

ObjectiveBounds estimate_objective_bounds(const OcpInstance& inst,
                                          int n_samples, std::uint64_t seed) {
  inst.check();
  auto xs = sample_omega(inst.domain.omega, n_samples);
  Rng rng(seed);
  auto Us = trust_region_sample(inst.domain.U0, inst.domain.gamma,
                                (int)xs.size(), rng);
  auto gn = batch_grad_norm(inst, xs, Us);
  auto hn = batch_hess_norm(inst, xs, Us);
  ObjectiveBounds b;
  b.L1 = kFeatureSafety * *std::max_element(gn.begin(), gn.end());
  b.L2 = kFeatureSafety * *std::max_element(hn.begin(), hn.end());
  return b;
}

ConstantLedger estimate_constants(const OcpInstance& orig,
                                  const OcpInstance& ext, int n_samples,
                                  std::uint64_t seed) {
  const auto* gd = std::get_if<GraphDynamics>(&ext.dynamics);
  if (!gd) throw ConfigError("extended instance must carry graph dynamics");

  ConstantLedger lc;
  lc.obj = estimate_objective_bounds(orig, n_samples, seed);
  lc.lf = graph_lipschitz(gd->g);
  lc.lg = graph_lipschitz(ext.terminal);
  lc.f_dyn = compute_features(gd->g);
  lc.f_term = compute_features(ext.terminal);
  lc.Cf = max_rate_constant(gd->g);
  lc.Cg = max_rate_constant(ext.terminal);
  lc.geom = geom_sum(lc.lf, ext.N);
  const double f_term_err =
      lc.Cf * lc.f_dyn.l_max * lc.f_dyn.lambda * (double)lc.f_dyn.v_g;
  const double g_term_err =
      lc.Cg * lc.f_term.l_max * lc.f_term.lambda * (double)lc.f_term.v_g;
  lc.c_tilde1 = lc.lg * lc.geom * f_term_err + g_term_err;
  lc.c_frak = std::max(lc.c_tilde1, 2.0 * lc.geom * f_term_err);
  lc.r = std::max(lc.f_dyn.r_max, lc.f_term.r_max);

  const double gamma = orig.domain.gamma;
  const double mn1 = std::min(1.0 / (3.0 * lc.obj.L1), gamma);
  lc.C1 = 216.0 * lc.obj.L1 * lc.obj.L2 * std::pow(gamma, 4) / mn1;
  lc.C2 = 12.0 * lc.obj.L2 * gamma * gamma;
  return lc;
}

double weak_bound(const ObjectiveBounds& obj, double gamma, int m,
                  long long k_bar, double h_bar, double delta) {
  const double s = std::sqrt((double)m);
  double probe_term = 0.0;
  if (delta > 0.0) {
    if (obj.L2 <= 0.0 || h_bar <= 0.0) return kInf;
    probe_term = 2.0 * delta * s / (h_bar * obj.L2);
  }
  return obj.L1 * (double)k_bar * (h_bar * s + probe_term) +
         2.0 * obj.L2 * gamma * gamma / ((double)k_bar + 4.0);
}

SynthesisPlan plan_synthesis(const ConstantLedger& lc, const OcpInstance& inst,
                             double epsilon, long long max_width) {
  if (!std::isfinite(epsilon) || epsilon <= 0.0)
    throw ConfigError("target accuracy must be positive");
  if (max_width < 1) throw ConfigError("width ceiling must be positive");
  const double gamma = inst.domain.gamma;
  const int m = inst.m();
  const double L1 = lc.obj.L1, L2 = lc.obj.L2;
  if (!(L1 > 0.0) || !(L2 > 0.0))
    throw PlanInfeasible("objective bounds must be positive");

  SynthesisPlan p;
  p.epsilon = epsilon;
  const double kf = std::ceil(6.0 * L2 * gamma * gamma / epsilon);
  if (!std::isfinite(kf) || kf > (double)kMaxKBar)
    throw PlanInfeasible("iteration count out of range");
  p.k_bar = std::max(1LL, (long long)kf);
  p.mn = std::min(epsilon / (3.0 * L1), gamma);
  if (!(2.0 * p.mn <= gamma))
    throw PlanInfeasible(
        "movement budget does not fit the trust region; the gradient bound "
        "is too small for this target");
  const double s = std::sqrt((double)m);
  p.h_bar = p.mn / ((double)p.k_bar * s);
  p.alpha = 1.0 / L2;
  p.delta_bar = p.h_bar * L2 * p.mn / (2.0 * s * (double)p.k_bar);

  if (lc.c_frak <= 0.0) {
    p.n_w = 1;
  } else if (p.delta_bar <= 0.0) {
    throw PlanInfeasible("zero surrogate error budget");
  } else {
    const double need = std::pow(lc.c_frak / p.delta_bar, lc.r);
    if (!std::isfinite(need) || need > (double)max_width)
      throw PlanInfeasible(
          "surrogate width exceeds the per-node ceiling; the accuracy target "
          "is too small for this instance");
    p.n_w = std::max(1LL, (long long)std::ceil(need));
  }

  const long long vf = lc.f_dyn.v_g, vg = lc.f_term.v_g;
  p.surrogate_size = ((long long)inst.N * vf + vg) * p.n_w;
  const double total =
      2.0 * (double)p.k_bar * (double)m * (double)p.surrogate_size;
  if (total > 9e18) throw PlanInfeasible("evaluation accounting overflow");
  p.size_total = 2LL * p.k_bar * (long long)m * p.surrogate_size;

  p.bound_predicted = weak_bound(lc.obj, gamma, m, p.k_bar, p.h_bar,
                                 p.delta_bar);
  if (!(p.bound_predicted <= epsilon * (1.0 + 1e-9)))
    throw PlanInfeasible("schedule misses the accuracy target");
  return p;
}

double UnrolledController::surrogate_cost(const Vec& x_ext,
                                          const Vec& U) const {
  Vec z = x_ext;
  for (int k = 0; k < N; ++k) {
    Vec in(z.size() + q);
    in << z, U.segment(k * q, q);
    z = f_hat.eval(in);
    if (!z.allFinite() || z.cwiseAbs().maxCoeff() > kStateGuard)
      throw IterateEscaped("surrogate rollout diverged");
  }
  return g_hat.eval(z)(0);
}

Vec UnrolledController::solve(const Vec& x_orig, ProbeLog* log) const {
  if (x_orig.size() != n) throw ConfigError("start state length mismatch");
  const Vec xe = lift_state(x_orig);
  const int mm = m();
  Vec U = U0;
  auto probe = [&](const Vec& cand) {
    const double v = surrogate_cost(xe, cand);
    if (log) log->pts.push_back({xe, cand, v});
    return v;
  };
  for (long long j = 0; j < k_bar; ++j) {
    const double base = probe(U);
    Vec step(mm);
    for (int i = 0; i < mm; ++i) {
      Vec up = U;
      up(i) += h_bar;
      step(i) = (probe(up) - base) / h_bar;
    }
    U -= alpha * step;
    if ((U - U0).norm() > 3.0 * gamma + 1e-12)
      throw IterateEscaped("descent iterate left the trust region");
  }
  return U;
}

UnrolledController build_controller(const OcpInstance& orig,
                                    const OcpInstance& ext,
                                    const SynthesisPlan& plan,
                                    const BuildOptions& opt) {
  orig.check();
  ext.check();
  const auto* gd = std::get_if<GraphDynamics>(&ext.dynamics);
  if (!gd) throw ConfigError("extended instance must carry graph dynamics");
  if (!domain_boxes_ok(ext, 33, opt.seed))
    throw PlanInfeasible("domain boxes are inconsistent with the trust region");

  UnrolledController ctrl;
  ctrl.U0 = ext.domain.U0;
  ctrl.gamma = ext.domain.gamma;
  ctrl.h_bar = plan.h_bar;
  ctrl.alpha = plan.alpha;
  ctrl.k_bar = plan.k_bar;
  ctrl.n = orig.n;
  ctrl.q = orig.q;
  ctrl.N = orig.N;
  ctrl.n_w_planned = plan.n_w;

  Rng base(opt.seed);
  auto xs = sample_omega(orig.domain.omega, opt.delta_samples);
  long long nw = plan.n_w;
  for (int attempt = 0; attempt <= opt.max_refits; ++attempt) {
    if (nw > kMaxBuildWidth)
      throw SurrogateTooCoarse("required width " + std::to_string(nw) +
                               " exceeds the build limit");
    ctrl.f_hat = assemble_surrogate(gd->g, (int)nw,
                                    base.fork(2 * attempt + 1).seed());
    ctrl.g_hat = assemble_surrogate(ext.terminal, (int)nw,
                                    base.fork(2 * attempt + 2).seed());
    ctrl.n_w_used = nw;
    ctrl.refits = attempt;

    Rng dr = base.fork(777 + attempt);
    double delta = 0.0;
    for (const auto& x : xs) {
      const Vec xe = lift_state(x);
      for (int rep = 0; rep < 4; ++rep) {
        const Vec U = rep == 0 ? ext.domain.U0
                               : ball_point(dr, ext.domain.U0,
                                            2.0 * ext.domain.gamma);
        const double jh = ctrl.surrogate_cost(xe, U);
        const double jt = cost_J(orig, x, U);
        delta = std::max(delta, std::abs(jh - jt));
      }
    }
    ctrl.delta_build = delta;
    if (plan.n_w == 1 && ctrl.f_hat.fitted_nodes() == 0 &&
        ctrl.g_hat.fitted_nodes() == 0)
      return ctrl;  // exact surrogate, nothing to refit
    if (delta <= plan.delta_bar) return ctrl;
    nw *= 2;
  }
  throw SurrogateTooCoarse(
      "surrogate error " + std::to_string(ctrl.delta_build) +
      " stayed above the budget " + std::to_string(plan.delta_bar) + " after " +
      std::to_string(opt.max_refits) + " width doublings");
}

EvalReport evaluate_controller(const OcpInstance& orig,
                               const UnrolledController& ctrl,
                               const SynthesisPlan& plan,
                               const ConstantLedger& lc,
                               const EvalOptions& opt) {
  auto xs = sample_omega(orig.domain.omega, opt.n_eval);
  const bool lq = instance_is_lq(orig);
  EvalReport rep;
  rep.n_eval = (int)xs.size();
  double sum = 0.0;
  for (const auto& x : xs) {
    ProbeLog log;
    const Vec U = ctrl.solve(x, &log);
    const double jc = cost_J(orig, x, U);
    const Vec Uo = lq ? solve_lq(orig, x) : solve_numeric(orig, x);
    const double jo = cost_J(orig, x, Uo);
    const double w = jc - jo;
    rep.weak_errs.push_back(w);
    rep.weak_err_max = std::max(rep.weak_err_max, w);
    sum += w;
    for (const auto& p : log.pts) {
      const double jt = cost_J(orig, p.x_ext.head(orig.n), p.U);
      rep.delta_probe = std::max(rep.delta_probe, std::abs(p.jhat - jt));
    }
  }
  rep.weak_err_mean = sum / (double)xs.size();
  rep.delta_used = std::max(ctrl.delta_build, rep.delta_probe);
  rep.bound_used = weak_bound(lc.obj, orig.domain.gamma, orig.m(), ctrl.k_bar,
                              ctrl.h_bar, rep.delta_used);
  rep.weak_ok = rep.weak_err_max <= rep.bound_used + 1e-12;
  rep.within_eps = rep.bound_used <= plan.epsilon * (1.0 + 1e-9);
  return rep;
}

}  // namespace compoc
