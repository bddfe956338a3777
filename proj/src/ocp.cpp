#include "compoc/ocp.hpp"

#include <cmath>
#include <string>
#include <unordered_map>

#include "compoc/errors.hpp"
#include "compoc/kernels.hpp"

namespace compoc {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

Vec grad_row(const CompGraph& g, const Vec& x) {
  return grad_graph(g, x).row(0).transpose();
}

void check_state_box(const Vec& x, double R, int k) {
  for (int i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x(i)) || std::abs(x(i)) > R + kDomainTol)
      throw DomainViolation("state coordinate " + std::to_string(i) +
                            " left the box at step " + std::to_string(k));
  }
}

Vec step_dynamics(const OcpInstance& inst, const Vec& xk, const Vec& uk,
                  bool check) {
  Vec z(inst.n + inst.q);
  z << xk, uk;
  if (const auto* lin = std::get_if<LinearDynamics>(&inst.dynamics)) {
    // per-row dot over [x; u], matching the affine nodes of the extended
    // system bit for bit
    Vec next(inst.n);
    Vec w(inst.n + inst.q);
    for (int i = 0; i < inst.n; ++i) {
      w << lin->A.row(i).transpose(), lin->B.row(i).transpose();
      next(i) = w.dot(z) + 0.0;
    }
    return next;
  }
  const auto& g = std::get<GraphDynamics>(inst.dynamics).g;
  if (check) return eval_graph(g, z);
  std::vector<double> vals;
  graph_forward_values(g, z, false, vals);
  const auto& outs = g.output_indices();
  Vec next(inst.n);
  for (int i = 0; i < inst.n; ++i) next(i) = vals[outs[i]];
  return next;
}

// Appends the non-input nodes of src to dst, wiring src input k to the dst
// node input_map[k]; returns the dst ids of src's outputs.
std::vector<int> embed(CompGraph& dst, const CompGraph& src,
                       const std::vector<int>& input_map) {
  std::unordered_map<int, int> idmap;
  const auto& srcin = src.input_indices();
  require((int)srcin.size() == (int)input_map.size(),
          "embed: input arity mismatch");
  for (size_t k = 0; k < srcin.size(); ++k)
    idmap[src.nodes[srcin[k]].id] = input_map[k];
  for (const auto& nd : src.nodes) {
    if (nd.fn.is_input()) continue;
    std::vector<int> preds;
    for (int pi : src.preds_of(src.node_index(nd.id)))
      preds.push_back(idmap.at(src.nodes[pi].id));
    idmap[nd.id] = dst.add_node(nd.layer, nd.fn, preds);
  }
  std::vector<int> outs;
  for (int oi : src.output_indices()) outs.push_back(idmap.at(src.nodes[oi].id));
  return outs;
}

int top_layer(const CompGraph& g) {
  int L = 0;
  for (const auto& nd : g.nodes) L = std::max(L, nd.layer);
  return L;
}

Vec ones2() {
  Vec w(2);
  w << 1.0, 1.0;
  return w;
}

}  // namespace

void OcpInstance::check() const {
  require(n >= 1 && q >= 1 && N >= 1, "instance dimensions must be positive");
  if (const auto* lin = std::get_if<LinearDynamics>(&dynamics)) {
    require(lin->A.rows() == n && lin->A.cols() == n, "A must be n x n");
    require(lin->B.rows() == n && lin->B.cols() == q, "B must be n x q");
  } else {
    const auto& g = std::get<GraphDynamics>(dynamics).g;
    require(g.finalized(), "dynamics graph not finalized");
    require(g.input_dim == n + q, "dynamics graph input dimension");
    require(g.output_dim == n, "dynamics graph output dimension");
  }
  if (const auto* sep = std::get_if<SeparatedCost>(&stage)) {
    require(sep->l1.finalized() && sep->l2.finalized(),
            "stage cost graphs not finalized");
    require(sep->l1.input_dim == n && sep->l1.output_dim == 1,
            "state cost must map R^n to R");
    require(sep->l2.input_dim == q && sep->l2.output_dim == 1,
            "control cost must map R^q to R");
  }
  require(terminal.finalized(), "terminal cost graph not finalized");
  require(terminal.input_dim == n && terminal.output_dim == 1,
          "terminal cost must map R^n to R");
  require(domain.U0.size() == m(), "U0 must have length q*N");
  require(std::isfinite(domain.gamma) && domain.gamma > 0.0,
          "gamma must be positive");
  require(std::isfinite(domain.R) && domain.R > 0.0, "R must be positive");
  if (const auto* box = std::get_if<OmegaBox>(&domain.omega)) {
    require(box->lo.size() == n && box->hi.size() == n,
            "start box dimension mismatch");
    require((box->lo.array() <= box->hi.array()).all(),
            "start box bounds reversed");
  } else {
    const auto& pts = std::get<OmegaPoints>(domain.omega).pts;
    require(!pts.empty(), "start set is empty");
    for (const auto& p : pts)
      require(p.size() == n, "start point dimension mismatch");
  }
}

std::vector<Vec> sample_omega(const Omega& omega, int count) {
  std::vector<Vec> out;
  out.reserve(count);
  if (const auto* box = std::get_if<OmegaBox>(&omega)) {
    for (int i = 1; i <= count; ++i)
      out.push_back(halton_in_box(i, box->lo, box->hi));
  } else {
    const auto& pts = std::get<OmegaPoints>(omega).pts;
    if (pts.empty()) throw ConfigError("start set is empty");
    for (int i = 0; i < count; ++i) out.push_back(pts[i % pts.size()]);
  }
  return out;
}

Rollout rollout(const OcpInstance& inst, const Vec& x, const Vec& U) {
  require(x.size() == inst.n, "rollout: state length mismatch");
  require(U.size() == inst.m(), "rollout: control length mismatch");
  const auto* sep = std::get_if<SeparatedCost>(&inst.stage);
  Rollout out;
  out.states.resize(inst.N + 1, inst.n);
  Vec xk = x;
  double running = 0.0;
  for (int k = 0; k < inst.N; ++k) {
    check_state_box(xk, inst.domain.R, k);
    out.states.row(k) = xk.transpose();
    Vec uk = U.segment(k * inst.q, inst.q);
    if (sep) {
      // association order matches the running-cost track of the extended
      // system, so the two objective values agree bitwise
      double stage_v = eval_graph(sep->l1, xk)(0) + eval_graph(sep->l2, uk)(0);
      running = running + stage_v;
    }
    xk = step_dynamics(inst, xk, uk, true);
  }
  check_state_box(xk, inst.domain.R, inst.N);
  out.states.row(inst.N) = xk.transpose();
  out.running = running;
  out.cost = eval_graph(inst.terminal, xk)(0) + running;
  return out;
}

Mat rollout_states(const OcpInstance& inst, const Vec& x, const Vec& U) {
  require(x.size() == inst.n, "rollout: state length mismatch");
  require(U.size() == inst.m(), "rollout: control length mismatch");
  Mat S(inst.N + 1, inst.n);
  Vec xk = x;
  for (int k = 0; k <= inst.N; ++k) {
    if (!xk.allFinite() || xk.cwiseAbs().maxCoeff() > kStateGuard)
      throw CalibrationFailure("rollout diverged at step " + std::to_string(k));
    S.row(k) = xk.transpose();
    if (k < inst.N)
      xk = step_dynamics(inst, xk, U.segment(k * inst.q, inst.q), false);
  }
  return S;
}

double cost_J(const OcpInstance& inst, const Vec& x, const Vec& U) {
  return rollout(inst, x, U).cost;
}

RolloutMatrices build_rollout_matrices(const OcpInstance& inst) {
  require(inst.linear(), "rollout matrices need linear dynamics");
  const auto& lin = std::get<LinearDynamics>(inst.dynamics);
  RolloutMatrices rm;
  rm.Apow.resize(inst.N + 1);
  rm.C.resize(inst.N + 1);
  rm.Apow[0] = Mat::Identity(inst.n, inst.n);
  rm.C[0] = Mat::Zero(inst.n, inst.m());
  for (int k = 0; k < inst.N; ++k) {
    rm.Apow[k + 1] = lin.A * rm.Apow[k];
    rm.C[k + 1] = lin.A * rm.C[k];
    rm.C[k + 1].middleCols(k * inst.q, inst.q) += lin.B;
  }
  return rm;
}

Vec grad_J(const OcpInstance& inst, const Vec& x, const Vec& U) {
  const auto* sep = std::get_if<SeparatedCost>(&inst.stage);
  Rollout ro = rollout(inst, x, U);
  if (inst.linear()) {
    RolloutMatrices rm = build_rollout_matrices(inst);
    Vec g = Vec::Zero(inst.m());
    for (int k = 1; k < inst.N; ++k) {
      if (!sep) break;
      g.noalias() +=
          rm.C[k].transpose() * grad_row(sep->l1, ro.states.row(k).transpose());
    }
    g.noalias() += rm.C[inst.N].transpose() *
                   grad_row(inst.terminal, ro.states.row(inst.N).transpose());
    if (sep) {
      for (int k = 0; k < inst.N; ++k)
        g.segment(k * inst.q, inst.q) +=
            grad_row(sep->l2, U.segment(k * inst.q, inst.q));
    }
    return g;
  }
  // adjoint sweep through the dynamics graph
  const auto& fg = std::get<GraphDynamics>(inst.dynamics).g;
  Vec lambda = grad_row(inst.terminal, ro.states.row(inst.N).transpose());
  Vec g(inst.m());
  for (int k = inst.N - 1; k >= 0; --k) {
    Vec xk = ro.states.row(k).transpose();
    Vec uk = U.segment(k * inst.q, inst.q);
    Vec z(inst.n + inst.q);
    z << xk, uk;
    Mat Jf = grad_graph(fg, z);
    Vec gu = Jf.rightCols(inst.q).transpose() * lambda;
    if (sep) gu += grad_row(sep->l2, uk);
    g.segment(k * inst.q, inst.q) = gu;
    lambda = Jf.leftCols(inst.n).transpose() * lambda;
    if (sep) lambda += grad_row(sep->l1, xk);
  }
  return g;
}

Mat hess_J(const OcpInstance& inst, const Vec& x, const Vec& U) {
  const auto* sep = std::get_if<SeparatedCost>(&inst.stage);
  if (inst.linear()) {
    Rollout ro = rollout(inst, x, U);
    RolloutMatrices rm = build_rollout_matrices(inst);
    Mat H = Mat::Zero(inst.m(), inst.m());
    if (sep) {
      for (int k = 1; k < inst.N; ++k) {
        Mat Hx = hess_graph(sep->l1, ro.states.row(k).transpose());
        H.noalias() += rm.C[k].transpose() * Hx * rm.C[k];
      }
      for (int k = 0; k < inst.N; ++k)
        H.block(k * inst.q, k * inst.q, inst.q, inst.q) +=
            hess_graph(sep->l2, U.segment(k * inst.q, inst.q));
    }
    Mat Hg = hess_graph(inst.terminal, ro.states.row(inst.N).transpose());
    H.noalias() += rm.C[inst.N].transpose() * Hg * rm.C[inst.N];
    // the sandwich products are symmetric only up to rounding
    return 0.5 * (H + H.transpose());
  }
  // central differences of the adjoint gradient
  const double h = kFdHessStep;
  Mat H(inst.m(), inst.m());
  for (int j = 0; j < inst.m(); ++j) {
    Vec Up = U, Um = U;
    Up(j) += h;
    Um(j) -= h;
    H.col(j) = (grad_J(inst, x, Up) - grad_J(inst, x, Um)) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

ConvexityCertificate certify_convexity(const OcpInstance& inst, int n_samples,
                                       std::uint64_t seed) {
  inst.check();
  auto xs = sample_omega(inst.domain.omega, n_samples);
  Rng rng(seed);
  std::vector<Vec> Us;
  Us.reserve(xs.size());
  for (size_t i = 0; i < xs.size(); ++i)
    Us.push_back(i == 0 ? inst.domain.U0
                        : ball_point(rng, inst.domain.U0,
                                     2.0 * inst.domain.gamma));
  auto eigs = batch_min_eig(inst, xs, Us);
  ConvexityCertificate cert;
  cert.samples = (int)eigs.size();
  int best = 0;
  for (int i = 1; i < (int)eigs.size(); ++i)
    if (eigs[i] < eigs[best]) best = i;
  cert.min_eig = eigs[best];
  cert.witness_x = xs[best];
  cert.witness_U = Us[best];
  if (cert.min_eig > kEigTol)
    cert.verdict = ConvexityVerdict::StrictlyConvex;
  else if (cert.min_eig > -kEigTol)
    cert.verdict = ConvexityVerdict::ConvexOnly;
  else
    cert.verdict = ConvexityVerdict::NotCertified;
  return cert;
}

CompGraph linear_dynamics_graph(const Mat& A, const Mat& B, double R) {
  const int n = (int)A.rows(), q = (int)B.cols();
  require(A.cols() == n && B.rows() == n, "linear dynamics shape mismatch");
  CompGraph g;
  std::vector<int> in;
  for (int i = 0; i < n + q; ++i) in.push_back(g.add_input(R));
  for (int i = 0; i < n; ++i) {
    Vec w(n + q);
    w << A.row(i).transpose(), B.row(i).transpose();
    g.add_node(1, NodeFunction::affine(w, 0.0, R), in);
  }
  g.finalize();
  return g;
}

OcpInstance extend_system(const OcpInstance& inst) {
  inst.check();
  if (!inst.separated())
    throw ConfigError("extension requires a separated stage cost");
  const auto& sep = std::get<SeparatedCost>(inst.stage);
  const double R = inst.domain.R;
  const int n = inst.n, q = inst.q;

  CompGraph F;
  std::vector<int> xin, uin;
  for (int i = 0; i < n; ++i) xin.push_back(F.add_input(R));
  // the bookkeeping coordinate accumulates stage cost, which is not confined
  // to the state radius; only the guard applies to it
  const int yin = F.add_input(kStateGuard);
  for (int j = 0; j < q; ++j) uin.push_back(F.add_input(R));
  std::vector<int> fmap = xin;
  fmap.insert(fmap.end(), uin.begin(), uin.end());
  if (const auto* lin = std::get_if<LinearDynamics>(&inst.dynamics)) {
    for (int i = 0; i < n; ++i) {
      Vec w(n + q);
      w << lin->A.row(i).transpose(), lin->B.row(i).transpose();
      F.add_node(1, NodeFunction::affine(w, 0.0, R), fmap);
    }
  } else {
    embed(F, std::get<GraphDynamics>(inst.dynamics).g, fmap);
  }
  auto l1o = embed(F, sep.l1, xin);
  auto l2o = embed(F, sep.l2, uin);
  const int L = top_layer(F);
  // glue adds are affine, so they never enter the feature ledger or the
  // surrogate fits; give them the guard box because cost values routinely
  // exceed the state radius and the rollout box check already covers states
  const int s1 = F.add_node(L + 1, NodeFunction::affine(ones2(), 0.0, kStateGuard),
                            {l1o[0], l2o[0]});
  F.add_node(L + 2, NodeFunction::affine(ones2(), 0.0, kStateGuard), {yin, s1});
  F.finalize();

  CompGraph G;
  std::vector<int> gxin;
  for (int i = 0; i < n; ++i) gxin.push_back(G.add_input(R));
  const int gyin = G.add_input(kStateGuard);
  auto gouts = embed(G, inst.terminal, gxin);
  const int gl = top_layer(G);
  Vec one1(1);
  one1 << 1.0;
  const int yid = G.add_node(gl, NodeFunction::affine(one1, 0.0, kStateGuard), {gyin});
  G.add_node(gl + 1, NodeFunction::affine(ones2(), 0.0, kStateGuard),
             {gouts[0], yid});
  G.finalize();

  DomainSpec dom = inst.domain;
  if (const auto* box = std::get_if<OmegaBox>(&inst.domain.omega)) {
    Vec lo(n + 1), hi(n + 1);
    lo << box->lo, 0.0;
    hi << box->hi, 0.0;
    dom.omega = OmegaBox{lo, hi};
  } else {
    OmegaPoints pts;
    for (const auto& p : std::get<OmegaPoints>(inst.domain.omega).pts) {
      Vec e(n + 1);
      e << p, 0.0;
      pts.pts.push_back(e);
    }
    dom.omega = pts;
  }

  OcpInstance ext;
  ext.n = n + 1;
  ext.q = q;
  ext.N = inst.N;
  ext.dynamics = GraphDynamics{std::move(F)};
  ext.stage = ZeroCost{};
  ext.terminal = std::move(G);
  ext.domain = std::move(dom);
  ext.check();
  return ext;
}

OcpInstance calibrate_domain(const OcpInstance& inst,
                             const std::function<Vec(const Vec&)>& oracle,
                             double margin, int omega_samples,
                             std::uint64_t seed) {
  inst.check();
  std::vector<Vec> xs;
  if (const auto* p = std::get_if<OmegaPoints>(&inst.domain.omega))
    xs = p->pts;
  else
    xs = sample_omega(inst.domain.omega, omega_samples);

  std::vector<Vec> sols;
  sols.reserve(xs.size());
  for (const auto& x : xs) {
    Vec U = oracle(x);
    require(U.size() == inst.m(), "oracle solution length mismatch");
    sols.push_back(U);
  }
  Vec U0 = Vec::Zero(inst.m());
  for (const auto& U : sols) U0 += U;
  U0 /= (double)sols.size();
  double dmax = 0.0;
  for (const auto& U : sols) dmax = std::max(dmax, (U - U0).norm());
  const double gamma = std::max(margin * dmax, 1e-3);

  Rng rng(seed);
  double peak = U0.size() ? U0.cwiseAbs().maxCoeff() : 0.0;
  for (const auto& x : xs) {
    for (int rep = 0; rep < 9; ++rep) {
      Vec U = rep == 0 ? U0 : ball_point(rng, U0, 2.0 * gamma);
      Mat S = rollout_states(inst, x, U);
      peak = std::max({peak, S.cwiseAbs().maxCoeff(), U.cwiseAbs().maxCoeff()});
    }
  }
  double R = next_pow2_above(std::max(2.0 * peak, 1.0));
  while (U0.size() && U0.cwiseAbs().maxCoeff() + 3.0 * gamma > R) {
    R *= 2.0;
    if (R > 1e18)
      throw CalibrationFailure("control trust region cannot fit any box");
  }

  OcpInstance out = inst;
  out.domain.U0 = U0;
  out.domain.gamma = gamma;
  out.domain.R = R;
  return out;
}

bool domain_boxes_ok(const OcpInstance& inst, int omega_samples,
                     std::uint64_t seed) {
  const auto& dom = inst.domain;
  if (dom.U0.cwiseAbs().maxCoeff() + 3.0 * dom.gamma > dom.R) return false;
  std::vector<Vec> xs;
  if (const auto* p = std::get_if<OmegaPoints>(&dom.omega))
    xs = p->pts;
  else
    xs = sample_omega(dom.omega, omega_samples);
  Rng rng(seed);
  try {
    for (const auto& x : xs) {
      for (int rep = 0; rep < 9; ++rep) {
        Vec U = rep == 0 ? dom.U0 : ball_point(rng, dom.U0, 2.0 * dom.gamma);
        Mat S = rollout_states(inst, x, U);
        if (S.cwiseAbs().maxCoeff() > dom.R / 2.0) return false;
        if (U.cwiseAbs().maxCoeff() > dom.R) return false;
      }
    }
  } catch (const CalibrationFailure&) {
    return false;
  }
  return true;
}

}  // namespace compoc
