#include "symnet/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "symnet/errors.hpp"

namespace symnet {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ParamError("config " + path + ": " + what);
}

const json& need(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(path, std::string("missing key '") + key + "'");
  return *it;
}

double num_of(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int int_of(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

Vec vec_of(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected a numeric array");
  Vec v;
  for (std::size_t i = 0; i < j.size(); ++i)
    v.push_back(num_of(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

Mat mat_of(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a nonempty matrix");
  std::vector<Vec> rows;
  for (std::size_t r = 0; r < j.size(); ++r) {
    rows.push_back(vec_of(j[r], path + "[" + std::to_string(r) + "]"));
    if (rows.back().size() != rows.front().size())
      fail(path, "ragged matrix rows");
  }
  Mat m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
  return m;
}

Box box_of(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected [[lo, hi], ...] per dimension");
  Box b;
  for (std::size_t d = 0; d < j.size(); ++d) {
    const std::string p = path + "[" + std::to_string(d) + "]";
    const Vec pair = vec_of(j[d], p);
    if (pair.size() != 2) fail(p, "expected [lo, hi]");
    if (!(pair[0] <= pair[1])) fail(p, "lo must not exceed hi");
    b.lo.push_back(pair[0]);
    b.hi.push_back(pair[1]);
  }
  return b;
}

/* accepts either "<key>_box" (one box) or "<key>_boxes" (a union) */
BoxUnion box_union_of(const json& j, const std::string& key, const std::string& path) {
  BoxUnion u;
  const std::string one = key + "_box", many = key + "_boxes";
  const bool has_one = j.is_object() && j.contains(one);
  const bool has_many = j.is_object() && j.contains(many);
  if (has_one && has_many) fail(path, "give either " + one + " or " + many);
  if (has_one) {
    u.boxes.push_back(box_of(j.at(one), path + "." + one));
  } else if (has_many) {
    const json& arr = j.at(many);
    if (!arr.is_array() || arr.empty()) fail(path + "." + many, "expected a box list");
    for (std::size_t i = 0; i < arr.size(); ++i)
      u.boxes.push_back(box_of(arr[i], path + "." + many + "[" + std::to_string(i) + "]"));
  }
  return u;
}

SwitchedSubsystem sub_of(const json& j, int dwell, const std::string& path) {
  SwitchedSubsystem sub;
  sub.state_set = box_union_of(j, "state", path);
  if (sub.state_set.empty()) fail(path, "missing state_box");
  sub.internal_input_set = box_union_of(j, "internal_input", path);
  sub.C1 = mat_of(need(j, "C1", path), path + ".C1");
  sub.C2 = j.contains("C2") ? mat_of(j.at("C2"), path + ".C2")
                            : Mat(0, sub.state_set.dim());
  sub.dwell = dwell;

  const json& modes = need(j, "modes", path);
  if (!modes.is_array() || modes.empty()) fail(path + ".modes", "expected a mode list");
  for (std::size_t p = 0; p < modes.size(); ++p) {
    const std::string mp = path + ".modes[" + std::to_string(p) + "]";
    ModeDynamics md;
    md.A = mat_of(need(modes[p], "A", mp), mp + ".A");
    if (modes[p].contains("D"))
      md.D = mat_of(modes[p].at("D"), mp + ".D");
    else
      md.D = Mat(sub.state_set.dim(), sub.internal_input_set.dim(), 0.0);
    md.B = modes[p].contains("B") ? vec_of(modes[p].at("B"), mp + ".B")
                                  : Vec(static_cast<std::size_t>(sub.state_set.dim()), 0.0);
    sub.modes.push_back(std::move(md));
  }

  try {
    validate_subsystem(sub);
  } catch (const Error& e) {
    fail(path, e.what());
  }
  return sub;
}

SymMatrix symmat_of(const json& j, const std::string& path) {
  return SymMatrix(mat_of(j, path));
}

StorageCertificate cert_of(const json& j, int n_modes, const std::string& path) {
  StorageCertificate cert;
  const json& z = need(j, "Z", path);
  const json& q = need(j, "Q", path);
  if (!z.is_array() || static_cast<int>(z.size()) != n_modes)
    fail(path + ".Z", "expected one storage matrix per mode");
  if (!q.is_array() || static_cast<int>(q.size()) != n_modes)
    fail(path + ".Q", "expected one supply matrix per mode");
  for (int p = 0; p < n_modes; ++p) {
    cert.Z.push_back(symmat_of(z[static_cast<std::size_t>(p)],
                               path + ".Z[" + std::to_string(p) + "]"));
    cert.Q.push_back(symmat_of(q[static_cast<std::size_t>(p)],
                               path + ".Q[" + std::to_string(p) + "]"));
  }
  const Vec kappa = vec_of(need(j, "kappa", path), path + ".kappa");
  if (static_cast<int>(kappa.size()) != n_modes)
    fail(path + ".kappa", "expected one decay rate per mode");
  cert.kappa = kappa;

  const json& alpha = need(j, "alpha", path);
  if (!alpha.is_array() || static_cast<int>(alpha.size()) != n_modes)
    fail(path + ".alpha", "expected one [coeff, exp] lower gain per mode");
  for (int p = 0; p < n_modes; ++p) {
    const Vec a = vec_of(alpha[static_cast<std::size_t>(p)],
                         path + ".alpha[" + std::to_string(p) + "]");
    if (a.size() != 2 || !(a[0] > 0.0) || !(a[1] > 0.0))
      fail(path + ".alpha[" + std::to_string(p) + "]",
           "expected positive [coeff, exp]");
    cert.alpha_lower.push_back(PowerK{a[0], a[1]});
  }

  if (j.contains("mu")) cert.mu = num_of(j.at("mu"), path + ".mu");
  if (j.contains("eps_exp")) cert.eps_exp = num_of(j.at("eps_exp"), path + ".eps_exp");
  if (j.contains("common")) {
    if (!j.at("common").is_boolean()) fail(path + ".common", "expected a boolean");
    cert.common = j.at("common").get<bool>();
  }
  if (j.contains("theta"))
    cert.theta = vec_of(j.at("theta"), path + ".theta");
  return cert;
}

Mat coupling_of(const json& j, const std::vector<SwitchedSubsystem>& subs,
                const std::string& path) {
  std::vector<int> woff(subs.size() + 1, 0), yoff(subs.size() + 1, 0);
  for (std::size_t i = 0; i < subs.size(); ++i) {
    woff[i + 1] = woff[i] + subs[i].wdim();
    yoff[i + 1] = yoff[i] + subs[i].y2dim();
  }
  Mat m(woff.back(), yoff.back(), 0.0);

  const auto place_block = [&](std::size_t i, std::size_t jdx, double value,
                               const std::string& where) {
    if (subs[i].wdim() != subs[jdx].y2dim())
      fail(where, "pattern blocks need matching internal input/output widths");
    for (int d = 0; d < subs[i].wdim(); ++d) m(woff[i] + d, yoff[jdx] + d) = value;
  };

  if (j.contains("triples")) {
    const json& tr = j.at("triples");
    if (!tr.is_array()) fail(path + ".triples", "expected [row, col, value] list");
    for (std::size_t k = 0; k < tr.size(); ++k) {
      const std::string p = path + ".triples[" + std::to_string(k) + "]";
      const Vec t = vec_of(tr[k], p);
      if (t.size() != 3) fail(p, "expected [row, col, value]");
      const int r = static_cast<int>(t[0]), c = static_cast<int>(t[1]);
      if (r < 0 || r >= m.rows || c < 0 || c >= m.cols)
        fail(p, "index out of range");
      m(r, c) = t[2];
    }
    return m;
  }

  const json& pat = need(j, "pattern", path);
  if (!pat.is_string()) fail(path + ".pattern", "expected a pattern name");
  const std::string name = pat.get<std::string>();
  const double value = j.contains("value") ? num_of(j.at("value"), path + ".value") : 1.0;
  if (name == "cyclic_shift") {
    const int offset =
        j.contains("offset") ? int_of(j.at("offset"), path + ".offset") : 1;
    const int n = static_cast<int>(subs.size());
    for (int i = 0; i < n; ++i)
      place_block(static_cast<std::size_t>(i),
                  static_cast<std::size_t>(((i + offset) % n + n) % n), value, path);
  } else if (name == "all_to_all") {
    for (std::size_t i = 0; i < subs.size(); ++i)
      for (std::size_t jdx = 0; jdx < subs.size(); ++jdx)
        if (i != jdx) place_block(i, jdx, value, path);
  } else {
    fail(path + ".pattern", "unknown pattern '" + name +
                                "' (expected cyclic_shift, all_to_all, or triples)");
  }
  return m;
}

}  // namespace

NetworkSpec NetworkConfig::network() const {
  NetworkSpec net;
  net.subs = subs;
  net.M = M;
  net.mu_weights = mu_weights;
  return net;
}

NetworkConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParamError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParamError("config root must be an object");

  NetworkConfig cfg;
  if (j.contains("name")) {
    if (!j.at("name").is_string()) fail("name", "expected a string");
    cfg.name = j.at("name").get<std::string>();
  }

  if (j.contains("abstraction")) {
    const json& a = j.at("abstraction");
    cfg.has_abstraction = true;
    cfg.eta = num_of(need(a, "eta", "abstraction"), "abstraction.eta");
    if (a.contains("varpi")) cfg.varpi = num_of(a.at("varpi"), "abstraction.varpi");
    if (a.contains("dwell")) cfg.dwell = int_of(a.at("dwell"), "abstraction.dwell");
    if (!(cfg.eta > 0.0)) fail("abstraction.eta", "must be positive");
    if (cfg.varpi < 0.0) fail("abstraction.varpi", "must be nonnegative");
    if (cfg.dwell < 1) fail("abstraction.dwell", "must be at least 1");
  }

  /* subsystems: a template with a count, or an explicit list */
  if (j.contains("subsystem") == j.contains("subsystems"))
    throw ParamError("config: give either 'subsystem' (template) or 'subsystems'");
  if (j.contains("subsystem")) {
    const json& t = j.at("subsystem");
    int count = 1;
    if (t.contains("count")) count = int_of(t.at("count"), "subsystem.count");
    if (count < 1) fail("subsystem.count", "must be at least 1");
    const SwitchedSubsystem sub = sub_of(t, cfg.dwell, "subsystem");
    cfg.subs.assign(static_cast<std::size_t>(count), sub);
  } else {
    const json& arr = j.at("subsystems");
    if (!arr.is_array() || arr.empty())
      fail("subsystems", "expected a nonempty list");
    for (std::size_t i = 0; i < arr.size(); ++i)
      cfg.subs.push_back(
          sub_of(arr[i], cfg.dwell, "subsystems[" + std::to_string(i) + "]"));
  }

  if (j.contains("certificate") && j.contains("certificates"))
    throw ParamError("config: give either 'certificate' or 'certificates'");
  if (j.contains("certificate")) {
    cfg.has_certs = true;
    const StorageCertificate cert =
        cert_of(j.at("certificate"), cfg.subs.front().n_modes(), "certificate");
    for (std::size_t i = 1; i < cfg.subs.size(); ++i)
      if (cfg.subs[i].n_modes() != cfg.subs.front().n_modes())
        fail("certificate", "shared certificate needs a uniform mode count");
    cfg.certs.assign(cfg.subs.size(), cert);
  } else if (j.contains("certificates")) {
    cfg.has_certs = true;
    const json& arr = j.at("certificates");
    if (!arr.is_array() || arr.size() != cfg.subs.size())
      fail("certificates", "expected one certificate per subsystem");
    for (std::size_t i = 0; i < arr.size(); ++i)
      cfg.certs.push_back(cert_of(arr[i], cfg.subs[i].n_modes(),
                                  "certificates[" + std::to_string(i) + "]"));
  }

  if (j.contains("network")) {
    const json& n = j.at("network");
    cfg.has_network = true;
    cfg.M = coupling_of(need(n, "coupling", "network"), cfg.subs, "network.coupling");
    if (n.contains("mu_weights")) {
      cfg.mu_weights = vec_of(n.at("mu_weights"), "network.mu_weights");
      if (cfg.mu_weights.size() != cfg.subs.size())
        fail("network.mu_weights", "expected one weight per subsystem");
    }
  }

  if (j.contains("spec")) {
    const json& s = j.at("spec");
    cfg.has_spec = true;
    cfg.safe = box_union_of(s, "safe", "spec");
    if (cfg.safe.empty()) fail("spec", "missing safe_box");
    if (s.contains("fairness_limit"))
      cfg.fairness_limit = int_of(s.at("fairness_limit"), "spec.fairness_limit");
    if (s.contains("red_mode"))
      cfg.red_mode = int_of(s.at("red_mode"), "spec.red_mode");
    if (s.contains("psi")) cfg.psi = num_of(s.at("psi"), "spec.psi");
    if (!(cfg.psi > 0.0 && cfg.psi < 1.0)) fail("spec.psi", "must lie in (0, 1)");
    cfg.assumed_outputs = box_union_of(s, "assumed_output", "spec");
    if (s.contains("shrink")) cfg.shrink = num_of(s.at("shrink"), "spec.shrink");
  }

  if (j.contains("simulation")) {
    const json& s = j.at("simulation");
    cfg.has_sim = true;
    const json& x0 = need(s, "x0", "simulation");
    if (!x0.is_array() || x0.empty()) fail("simulation.x0", "expected an array");
    if (x0.front().is_array()) {
      if (x0.size() != cfg.subs.size())
        fail("simulation.x0", "expected one state per subsystem");
      for (std::size_t i = 0; i < x0.size(); ++i)
        cfg.x0.push_back(vec_of(x0[i], "simulation.x0[" + std::to_string(i) + "]"));
    } else {
      const Vec shared = vec_of(x0, "simulation.x0");
      cfg.x0.assign(cfg.subs.size(), shared);
    }
    for (std::size_t i = 0; i < cfg.x0.size(); ++i)
      if (static_cast<int>(cfg.x0[i].size()) != cfg.subs[i].dim())
        fail("simulation.x0", "state dimension mismatch for subsystem " +
                                  std::to_string(i));
    if (s.contains("horizon")) cfg.horizon = int_of(s.at("horizon"), "simulation.horizon");
    if (cfg.horizon < 0) fail("simulation.horizon", "must be nonnegative");
    if (s.contains("seed")) {
      if (!s.at("seed").is_number_unsigned() && !s.at("seed").is_number_integer())
        fail("simulation.seed", "expected an integer");
      cfg.seed = s.at("seed").get<std::uint64_t>();
    }
    if (s.contains("policy")) {
      if (!s.at("policy").is_string()) fail("simulation.policy", "expected a string");
      cfg.policy = s.at("policy").get<std::string>();
    }
  }

  return cfg;
}

NetworkConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

namespace {

json json_of(const Mat& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows; ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols; ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json json_of(const Box& b) {
  json dims = json::array();
  for (std::size_t d = 0; d < b.lo.size(); ++d)
    dims.push_back(json::array({b.lo[d], b.hi[d]}));
  return dims;
}

void put_box_union(json& j, const std::string& key, const BoxUnion& u) {
  if (u.boxes.empty()) return;
  if (u.boxes.size() == 1) {
    j[key + "_box"] = json_of(u.boxes.front());
  } else {
    json arr = json::array();
    for (const Box& b : u.boxes) arr.push_back(json_of(b));
    j[key + "_boxes"] = std::move(arr);
  }
}

json json_of(const SwitchedSubsystem& sub) {
  json j;
  put_box_union(j, "state", sub.state_set);
  put_box_union(j, "internal_input", sub.internal_input_set);
  j["C1"] = json_of(sub.C1);
  if (sub.C2.rows > 0) j["C2"] = json_of(sub.C2);
  json modes = json::array();
  for (const ModeDynamics& md : sub.modes) {
    json m;
    m["A"] = json_of(md.A);
    m["D"] = json_of(md.D);
    m["B"] = md.B;
    modes.push_back(std::move(m));
  }
  j["modes"] = std::move(modes);
  return j;
}

json json_of(const StorageCertificate& cert) {
  json j;
  json z = json::array(), q = json::array(), alpha = json::array();
  for (const SymMatrix& s : cert.Z) z.push_back(json_of(s.dense()));
  for (const SymMatrix& s : cert.Q) q.push_back(json_of(s.dense()));
  for (const PowerK& a : cert.alpha_lower)
    alpha.push_back(json::array({a.coeff, a.exp}));
  j["Z"] = std::move(z);
  j["Q"] = std::move(q);
  j["alpha"] = std::move(alpha);
  j["kappa"] = cert.kappa;
  j["mu"] = cert.mu;
  j["eps_exp"] = cert.eps_exp;
  j["common"] = cert.common;
  if (!cert.theta.empty()) j["theta"] = cert.theta;
  return j;
}

}  // namespace

std::string serialize_config(const NetworkConfig& cfg) {
  json j;
  if (!cfg.name.empty()) j["name"] = cfg.name;

  json subs = json::array();
  for (const SwitchedSubsystem& s : cfg.subs) subs.push_back(json_of(s));
  j["subsystems"] = std::move(subs);

  if (cfg.has_certs) {
    json certs = json::array();
    for (const StorageCertificate& c : cfg.certs) certs.push_back(json_of(c));
    j["certificates"] = std::move(certs);
  }

  if (cfg.has_network) {
    json triples = json::array();
    for (int r = 0; r < cfg.M.rows; ++r)
      for (int c = 0; c < cfg.M.cols; ++c)
        if (cfg.M(r, c) != 0.0)
          triples.push_back(json::array({static_cast<double>(r),
                                         static_cast<double>(c), cfg.M(r, c)}));
    j["network"]["coupling"]["triples"] = std::move(triples);
    if (!cfg.mu_weights.empty()) j["network"]["mu_weights"] = cfg.mu_weights;
  }

  if (cfg.has_abstraction) {
    j["abstraction"]["eta"] = cfg.eta;
    j["abstraction"]["varpi"] = cfg.varpi;
    j["abstraction"]["dwell"] = cfg.dwell;
  }

  if (cfg.has_spec) {
    json s;
    put_box_union(s, "safe", cfg.safe);
    s["fairness_limit"] = cfg.fairness_limit;
    s["red_mode"] = cfg.red_mode;
    s["psi"] = cfg.psi;
    put_box_union(s, "assumed_output", cfg.assumed_outputs);
    if (cfg.shrink >= 0.0) s["shrink"] = cfg.shrink;
    j["spec"] = std::move(s);
  }

  if (cfg.has_sim) {
    json x0 = json::array();
    for (const Vec& x : cfg.x0) x0.push_back(x);
    j["simulation"]["x0"] = std::move(x0);
    j["simulation"]["horizon"] = cfg.horizon;
    j["simulation"]["seed"] = cfg.seed;
    j["simulation"]["policy"] = cfg.policy;
  }

  return j.dump(2) + "\n";
}

}  // namespace symnet
