#include "nearcloak/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <type_traits>

namespace nearcloak {

namespace pt = boost::property_tree;

void SweepConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::validation, "config: " + m); };
  if (!(inner_radius > 0.0) || !(outer_radius > inner_radius)) fail("need 0 < inner_radius < outer_radius");
  if (!(omega > 0.0)) fail("omega must be positive");
  if (rho.empty()) fail("rho list is empty");
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (!(rho[i] > 0.0 && rho[i] < 1.0)) fail("rho values must lie in (0, 1)");
    if (i > 0 && !(rho[i] < rho[i - 1])) fail("rho values must be strictly decreasing");
  }
  if (core_eps.empty() || core_mu.empty() || core_sigma.empty()) fail("core grid is empty");
  for (double v : core_eps) if (!(v > 0.0)) fail("core eps must be positive");
  for (double v : core_mu) if (!(v > 0.0)) fail("core mu must be positive");
  for (double v : core_sigma) if (!(v >= 0.0)) fail("core sigma must be nonnegative");
  if (!(layer.alpha0 > 0.0) || !(layer.beta0 > 0.0) || !(layer.gamma0 >= 0.0)) fail("invalid layer parameters");
  if (n_max < 1 || n_max > 40) fail("n_max must be in [1, 40]");
  if (refinement < 0 || refinement > max_sphere_refinement) fail("refinement out of range");
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (!(tau[i] > 0.0 && tau[i] < 1.0)) fail("tau values must lie in (0, 1)");
    if (i > 0 && !(tau[i] < tau[i - 1])) fail("tau values must be strictly decreasing");
  }
  if (n_max_trace < 1) fail("n_max_trace must be positive");
  if (!(scan_eps_min > 0.0) || !(scan_eps_max > scan_eps_min) || scan_points < 2) fail("invalid scan range");
  if (threads < 1) fail("threads must be positive");
}

namespace {

std::vector<double> parse_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    std::istringstream v(item);
    double x;
    if (!(v >> x) || !(v >> std::ws).eof()) throw Error(ErrorKind::validation, "config: bad number in " + key);
    out.push_back(x);
  }
  return out;
}

std::string format_list(const std::vector<double>& v) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  return os.str();
}

template <class T>
T get(const pt::ptree& tree, const std::string& key, T fallback) {
  const auto raw = tree.get_optional<std::string>(key);
  if (!raw) return fallback;
  std::istringstream is(*raw);
  T v{};
  if constexpr (std::is_same_v<T, bool>) {
    std::string w;
    is >> w;
    if (w == "true" || w == "1") v = true;
    else if (w == "false" || w == "0") v = false;
    else is.setstate(std::ios::failbit);
  } else if constexpr (std::is_same_v<T, std::string>) {
    std::getline(is, v);
  } else {
    is >> v;
  }
  if (is.fail() || !(is >> std::ws).eof()) throw Error(ErrorKind::validation, "config: bad value for " + key);
  return v;
}

}  // namespace

SweepConfig parse_config(std::istream& is) {
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ptree_error& e) {
    throw Error(ErrorKind::validation, std::string("config: ") + e.what());
  }
  static const std::map<std::string, std::set<std::string>> known = {
      {"geometry", {"inner_radius", "outer_radius"}},
      {"physics", {"omega"}},
      {"medium", {"alpha0", "beta0", "gamma0", "scaled_layer_mu"}},
      {"sweep", {"rho", "n_max"}},
      {"core", {"eps", "mu", "sigma"}},
      {"bie", {"refinement", "tau", "n_max_trace"}},
      {"scan", {"eps_min", "eps_max", "points"}},
      {"run", {"seed", "threads", "out_dir"}},
  };
  for (const auto& [section, body] : tree) {
    const auto it = known.find(section);
    if (it == known.end()) throw Error(ErrorKind::validation, "config: unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      (void)value;
      if (!it->second.count(key)) throw Error(ErrorKind::validation, "config: unknown key " + section + "." + key);
    }
  }
  SweepConfig c;
  c.inner_radius = get(tree, "geometry.inner_radius", c.inner_radius);
  c.outer_radius = get(tree, "geometry.outer_radius", c.outer_radius);
  c.omega = get(tree, "physics.omega", c.omega);
  c.layer.alpha0 = get(tree, "medium.alpha0", c.layer.alpha0);
  c.layer.beta0 = get(tree, "medium.beta0", c.layer.beta0);
  c.layer.gamma0 = get(tree, "medium.gamma0", c.layer.gamma0);
  c.scaled_layer_mu = get(tree, "medium.scaled_layer_mu", c.scaled_layer_mu);
  if (auto v = tree.get_optional<std::string>("sweep.rho")) c.rho = parse_list("sweep.rho", *v);
  c.n_max = get(tree, "sweep.n_max", c.n_max);
  if (auto v = tree.get_optional<std::string>("core.eps")) c.core_eps = parse_list("core.eps", *v);
  if (auto v = tree.get_optional<std::string>("core.mu")) c.core_mu = parse_list("core.mu", *v);
  if (auto v = tree.get_optional<std::string>("core.sigma")) c.core_sigma = parse_list("core.sigma", *v);
  c.refinement = get(tree, "bie.refinement", c.refinement);
  if (auto v = tree.get_optional<std::string>("bie.tau")) c.tau = parse_list("bie.tau", *v);
  c.n_max_trace = get(tree, "bie.n_max_trace", c.n_max_trace);
  c.scan_eps_min = get(tree, "scan.eps_min", c.scan_eps_min);
  c.scan_eps_max = get(tree, "scan.eps_max", c.scan_eps_max);
  c.scan_points = get(tree, "scan.points", c.scan_points);
  c.seed = get(tree, "run.seed", c.seed);
  c.threads = get(tree, "run.threads", c.threads);
  c.out_dir = get(tree, "run.out_dir", c.out_dir);
  c.validate();
  return c;
}

SweepConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::validation, "config: cannot open " + path);
  return parse_config(f);
}

void write_config(std::ostream& os, const SweepConfig& c) {
  os << std::setprecision(17) << std::boolalpha;
  os << "[geometry]\ninner_radius = " << c.inner_radius << "\nouter_radius = " << c.outer_radius << "\n\n";
  os << "[physics]\nomega = " << c.omega << "\n\n";
  os << "[medium]\nalpha0 = " << c.layer.alpha0 << "\nbeta0 = " << c.layer.beta0 << "\ngamma0 = " << c.layer.gamma0
     << "\nscaled_layer_mu = " << c.scaled_layer_mu << "\n\n";
  os << "[sweep]\nrho = " << format_list(c.rho) << "\nn_max = " << c.n_max << "\n\n";
  os << "[core]\neps = " << format_list(c.core_eps) << "\nmu = " << format_list(c.core_mu)
     << "\nsigma = " << format_list(c.core_sigma) << "\n\n";
  os << "[bie]\nrefinement = " << c.refinement << "\ntau = " << format_list(c.tau) << "\nn_max_trace = " << c.n_max_trace
     << "\n\n";
  os << "[scan]\neps_min = " << c.scan_eps_min << "\neps_max = " << c.scan_eps_max << "\npoints = " << c.scan_points
     << "\n\n";
  os << "[run]\nseed = " << c.seed << "\nthreads = " << c.threads << "\nout_dir = " << c.out_dir << "\n";
}

}  // namespace nearcloak
