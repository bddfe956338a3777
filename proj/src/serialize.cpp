#include "compoc/serialize.hpp"

#include <fstream>

#include "compoc/errors.hpp"

namespace compoc {

namespace {

const json& need(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end())
    throw ConfigError(std::string("missing field '") + key + "'");
  return *it;
}

std::string need_str(const json& j, const char* key) {
  const json& v = need(j, key);
  if (!v.is_string())
    throw ConfigError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

int need_int(const json& j, const char* key) {
  const json& v = need(j, key);
  if (!v.is_number_integer())
    throw ConfigError(std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

long long need_ll(const json& j, const char* key) {
  const json& v = need(j, key);
  if (!v.is_number_integer())
    throw ConfigError(std::string("field '") + key + "' must be an integer");
  return v.get<long long>();
}

double dec_field(const json& j, const char* key) {
  return from_dec(need_str(j, key));
}

}  // namespace

json vec_dec(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(to_dec(v(i)));
  return a;
}

Vec vec_from_dec(const json& j) {
  if (!j.is_array()) throw ConfigError("expected an array of decimal strings");
  Vec v((int)j.size());
  for (int i = 0; i < v.size(); ++i) v(i) = from_dec(j[i].get<std::string>());
  return v;
}

json mat_dec(const Mat& m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back(to_dec(m(i, k)));
    a.push_back(std::move(row));
  }
  return a;
}

Mat mat_from_dec(const json& j) {
  if (!j.is_array() || j.empty())
    throw ConfigError("expected a non-empty array of rows");
  const int rows = (int)j.size(), cols = (int)j[0].size();
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if ((int)j[i].size() != cols) throw ConfigError("ragged matrix rows");
    for (int k = 0; k < cols; ++k) m(i, k) = from_dec(j[i][k].get<std::string>());
  }
  return m;
}

json vec_hex(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(to_hexf(v(i)));
  return a;
}

Vec vec_from_hex(const json& j) {
  if (!j.is_array()) throw ConfigError("expected an array of hex strings");
  Vec v((int)j.size());
  for (int i = 0; i < v.size(); ++i) v(i) = from_hexf(j[i].get<std::string>());
  return v;
}

json mat_hex(const Mat& m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back(to_hexf(m(i, k)));
    a.push_back(std::move(row));
  }
  return a;
}

Mat mat_from_hex(const json& j) {
  if (!j.is_array() || j.empty())
    throw ConfigError("expected a non-empty array of rows");
  const int rows = (int)j.size(), cols = (int)j[0].size();
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if ((int)j[i].size() != cols) throw ConfigError("ragged matrix rows");
    for (int k = 0; k < cols; ++k)
      m(i, k) = from_hexf(j[i][k].get<std::string>());
  }
  return m;
}

namespace {

json node_params(const NodeFunction& fn) {
  json p = json::object();
  switch (fn.kind()) {
    case NodeKind::Input:
      break;
    case NodeKind::Affine:
      p["w"] = vec_dec(fn.w());
      p["c"] = to_dec(fn.c0());
      break;
    case NodeKind::WeightedSum:
      p["w"] = vec_dec(fn.w());
      break;
    case NodeKind::QuadraticForm:
      p["Q"] = mat_dec(fn.Q());
      p["b"] = vec_dec(fn.b());
      p["c"] = to_dec(fn.c0());
      break;
    case NodeKind::SquaredNorm:
      p["dim"] = fn.dim();
      break;
    case NodeKind::ScalarSmooth:
      p["family"] = family_name(fn.family());
      if (fn.family() == ScalarFamily::Polynomial) {
        p["coeffs"] = vec_dec(fn.coeffs());
      } else {
        p["amp"] = to_dec(fn.amp());
        p["scale"] = to_dec(fn.scale());
        p["shift"] = to_dec(fn.shift());
      }
      break;
  }
  return p;
}

NodeFunction node_from_json(NodeKind kind, const json& p, double R, int m) {
  switch (kind) {
    case NodeKind::Input:
      return NodeFunction::input(R);
    case NodeKind::Affine:
      return NodeFunction::affine(vec_from_dec(need(p, "w")),
                                  dec_field(p, "c"), R, m);
    case NodeKind::WeightedSum:
      return NodeFunction::weighted_sum(vec_from_dec(need(p, "w")), R, m);
    case NodeKind::QuadraticForm:
      return NodeFunction::quadratic_form(mat_from_dec(need(p, "Q")),
                                          vec_from_dec(need(p, "b")),
                                          dec_field(p, "c"), R, m);
    case NodeKind::SquaredNorm:
      return NodeFunction::squared_norm(need_int(p, "dim"), R, m);
    case NodeKind::ScalarSmooth: {
      ScalarFamily fam = family_from_name(need_str(p, "family"));
      if (fam == ScalarFamily::Polynomial)
        return NodeFunction::polynomial(vec_from_dec(need(p, "coeffs")), R, m);
      return NodeFunction::scalar_smooth(fam, dec_field(p, "amp"),
                                         dec_field(p, "scale"),
                                         dec_field(p, "shift"), R, m);
    }
  }
  throw ConfigError("unknown node kind");
}

}  // namespace

json graph_to_json(const CompGraph& g) {
  json j;
  j["input_dim"] = g.input_dim;
  j["output_dim"] = g.output_dim;
  json nodes = json::array();
  for (const auto& nd : g.nodes) {
    json n;
    n["id"] = nd.id;
    n["layer"] = nd.layer;
    n["kind"] = kind_name(nd.fn.kind());
    n["R"] = to_dec(nd.fn.radius());
    n["m"] = nd.fn.smooth_order();
    n["params"] = node_params(nd.fn);
    nodes.push_back(std::move(n));
  }
  j["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const auto& [s, d] : g.edges) edges.push_back(json::array({s, d}));
  j["edges"] = std::move(edges);
  return j;
}

CompGraph graph_from_json(const json& j) {
  CompGraph g;
  for (const auto& n : need(j, "nodes")) {
    const NodeKind kind = kind_from_name(need_str(n, "kind"));
    const double R = from_dec(need_str(n, "R"));
    const int m = need_int(n, "m");
    g.nodes.push_back({need_int(n, "id"), need_int(n, "layer"),
                       node_from_json(kind, need(n, "params"), R, m)});
  }
  for (const auto& e : need(j, "edges")) {
    if (!e.is_array() || e.size() != 2)
      throw ConfigError("edges must be [src, dst] pairs");
    g.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  g.finalize();
  if (j.contains("input_dim") && need_int(j, "input_dim") != g.input_dim)
    throw ConfigError("declared input_dim disagrees with the node list");
  if (j.contains("output_dim") && need_int(j, "output_dim") != g.output_dim)
    throw ConfigError("declared output_dim disagrees with the node list");
  return g;
}

json instance_to_json(const OcpInstance& inst) {
  json j;
  j["n"] = inst.n;
  j["q"] = inst.q;
  j["N"] = inst.N;
  if (const auto* lin = std::get_if<LinearDynamics>(&inst.dynamics)) {
    j["dynamics"] = {{"type", "linear"}, {"A", mat_dec(lin->A)},
                     {"B", mat_dec(lin->B)}};
  } else {
    j["dynamics"] = {{"type", "graph"},
                     {"graph", graph_to_json(
                                   std::get<GraphDynamics>(inst.dynamics).g)}};
  }
  if (const auto* sep = std::get_if<SeparatedCost>(&inst.stage)) {
    j["stage"] = {{"type", "separated"}, {"l1", graph_to_json(sep->l1)},
                  {"l2", graph_to_json(sep->l2)}};
  } else {
    j["stage"] = {{"type", "zero"}};
  }
  j["terminal"] = graph_to_json(inst.terminal);
  json dom;
  if (const auto* box = std::get_if<OmegaBox>(&inst.domain.omega)) {
    dom["omega"] = {{"type", "box"}, {"lo", vec_dec(box->lo)},
                    {"hi", vec_dec(box->hi)}};
  } else {
    json pts = json::array();
    for (const auto& p : std::get<OmegaPoints>(inst.domain.omega).pts)
      pts.push_back(vec_dec(p));
    dom["omega"] = {{"type", "points"}, {"points", std::move(pts)}};
  }
  dom["U0"] = vec_dec(inst.domain.U0);
  dom["gamma"] = to_dec(inst.domain.gamma);
  dom["R"] = to_dec(inst.domain.R);
  j["domain"] = std::move(dom);
  return j;
}

OcpInstance instance_from_json(const json& j) {
  OcpInstance inst;
  inst.n = need_int(j, "n");
  inst.q = need_int(j, "q");
  inst.N = need_int(j, "N");
  const json& dyn = need(j, "dynamics");
  const std::string dt = need_str(dyn, "type");
  if (dt == "linear") {
    inst.dynamics = LinearDynamics{mat_from_dec(need(dyn, "A")),
                                   mat_from_dec(need(dyn, "B"))};
  } else if (dt == "graph") {
    inst.dynamics = GraphDynamics{graph_from_json(need(dyn, "graph"))};
  } else {
    throw ConfigError("dynamics type must be 'linear' or 'graph'");
  }
  const json& st = need(j, "stage");
  const std::string stt = need_str(st, "type");
  if (stt == "separated") {
    inst.stage = SeparatedCost{graph_from_json(need(st, "l1")),
                               graph_from_json(need(st, "l2"))};
  } else if (stt == "zero") {
    inst.stage = ZeroCost{};
  } else {
    throw ConfigError("stage type must be 'separated' or 'zero'");
  }
  inst.terminal = graph_from_json(need(j, "terminal"));
  const json& dom = need(j, "domain");
  const json& om = need(dom, "omega");
  const std::string ot = need_str(om, "type");
  if (ot == "box") {
    inst.domain.omega = OmegaBox{vec_from_dec(need(om, "lo")),
                                 vec_from_dec(need(om, "hi"))};
  } else if (ot == "points") {
    OmegaPoints pts;
    for (const auto& p : need(om, "points")) pts.pts.push_back(vec_from_dec(p));
    inst.domain.omega = std::move(pts);
  } else {
    throw ConfigError("omega type must be 'box' or 'points'");
  }
  inst.domain.U0 = vec_from_dec(need(dom, "U0"));
  inst.domain.gamma = dec_field(dom, "gamma");
  inst.domain.R = dec_field(dom, "R");
  inst.check();
  return inst;
}

json shallow_to_json(const ShallowNet& net) {
  json j;
  j["d"] = net.d;
  j["R"] = to_dec(net.R);
  j["W"] = mat_hex(net.W);
  j["b"] = vec_hex(net.b);
  j["c"] = vec_hex(net.c);
  return j;
}

ShallowNet shallow_from_json(const json& j) {
  ShallowNet net;
  net.d = need_int(j, "d");
  net.R = from_dec(need_str(j, "R"));
  net.W = mat_from_hex(need(j, "W"));
  net.b = vec_from_hex(need(j, "b"));
  net.c = vec_from_hex(need(j, "c"));
  if (net.W.rows() != net.b.size() || net.W.rows() != net.c.size() ||
      net.W.cols() != net.d)
    throw ConfigError("surrogate net shape mismatch");
  return net;
}

json surrogate_to_json(const SurrogateNet& s) {
  json j;
  j["width"] = s.width;
  j["graph"] = graph_to_json(s.graph);
  json nets = json::array();
  for (size_t idx = 0; idx < s.nets.size(); ++idx) {
    if (!s.nets[idx]) continue;
    json e = shallow_to_json(*s.nets[idx]);
    e["node_id"] = s.graph.nodes[idx].id;
    nets.push_back(std::move(e));
  }
  j["nets"] = std::move(nets);
  json fits = json::array();
  for (const auto& f : s.fits)
    fits.push_back({{"width", f.width},
                    {"train_sup", to_dec(f.train_sup)},
                    {"valid_sup", to_dec(f.valid_sup)},
                    {"cond", to_dec(f.cond)}});
  j["fits"] = std::move(fits);
  return j;
}

SurrogateNet surrogate_from_json(const json& j) {
  SurrogateNet s;
  s.width = need_int(j, "width");
  s.graph = graph_from_json(need(j, "graph"));
  s.nets.resize(s.graph.nodes.size());
  for (const auto& e : need(j, "nets")) {
    const int id = need_int(e, "node_id");
    s.nets[s.graph.node_index(id)] = shallow_from_json(e);
  }
  for (const auto& f : need(j, "fits")) {
    FitReport r;
    r.width = need_int(f, "width");
    r.train_sup = dec_field(f, "train_sup");
    r.valid_sup = dec_field(f, "valid_sup");
    r.cond = dec_field(f, "cond");
    s.fits.push_back(r);
  }
  return s;
}

json controller_to_json(const UnrolledController& c) {
  json j;
  j["n"] = c.n;
  j["q"] = c.q;
  j["N"] = c.N;
  j["k_bar"] = c.k_bar;
  j["h_bar"] = to_dec(c.h_bar);
  j["alpha"] = to_dec(c.alpha);
  j["gamma"] = to_dec(c.gamma);
  j["U0"] = vec_dec(c.U0);
  j["delta_build"] = to_dec(c.delta_build);
  j["n_w_planned"] = c.n_w_planned;
  j["n_w_used"] = c.n_w_used;
  j["refits"] = c.refits;
  j["f_hat"] = surrogate_to_json(c.f_hat);
  j["g_hat"] = surrogate_to_json(c.g_hat);
  return j;
}

UnrolledController controller_from_json(const json& j) {
  UnrolledController c;
  c.n = need_int(j, "n");
  c.q = need_int(j, "q");
  c.N = need_int(j, "N");
  c.k_bar = need_ll(j, "k_bar");
  c.h_bar = dec_field(j, "h_bar");
  c.alpha = dec_field(j, "alpha");
  c.gamma = dec_field(j, "gamma");
  c.U0 = vec_from_dec(need(j, "U0"));
  c.delta_build = dec_field(j, "delta_build");
  c.n_w_planned = need_ll(j, "n_w_planned");
  c.n_w_used = need_ll(j, "n_w_used");
  c.refits = need_int(j, "refits");
  c.f_hat = surrogate_from_json(need(j, "f_hat"));
  c.g_hat = surrogate_from_json(need(j, "g_hat"));
  return c;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
  return j;
}

void save_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace compoc
