#include "chns/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace chns {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (...) {
    throw std::runtime_error("config line " + std::to_string(line) + ": key '" + key +
                             "' expects a number, got '" + v + "'");
  }
}

int parse_int(const std::string& key, const std::string& v, int line) {
  const double d = parse_double(key, v, line);
  const int i = static_cast<int>(d);
  if (static_cast<double>(i) != d)
    throw std::runtime_error("config line " + std::to_string(line) + ": key '" + key +
                             "' expects an integer");
  return i;
}

bool parse_bool(const std::string& key, const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw std::runtime_error("config line " + std::to_string(line) + ": key '" + key +
                           "' expects a boolean");
}

VelocityBC parse_bc(const std::string& key, const std::string& v, int line) {
  VelocityBC bc;
  if (v == "noslip") return bc;
  const std::string prefix = "tangential:";
  if (v.rfind(prefix, 0) == 0) {
    bc.type = VelocityBC::Type::tangential;
    bc.speed = parse_double(key, v.substr(prefix.size()), line);
    return bc;
  }
  throw std::runtime_error("config line " + std::to_string(line) + ": key '" + key +
                           "' expects 'noslip' or 'tangential:<speed>'");
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_bc(const VelocityBC& bc) {
  if (bc.type == VelocityBC::Type::noslip) return "noslip";
  return "tangential:" + fmt(bc.speed);
}

}  // namespace

double RunConfig::resolved_mobility() const {
  return mobility_auto ? material.epsilon / (500.0 * material.sigma) : material.mobility;
}

MaterialParams RunConfig::resolved_material() const {
  MaterialParams m = material;
  m.mobility = resolved_mobility();
  return m;
}

WindForce RunConfig::resolved_wind() const {
  WindForce w = wind;
  if (paper_literal_geometry) w.center = {1.0, 1.2};
  return w;
}

double RunConfig::initial_z(const Vec2& x) const {
  if (paper_literal_geometry)
    return (x.y - 0.02 * std::sin(2.0 * M_PI * x.x) + 0.2) / material.epsilon;
  return wave_coordinate(x, surface_height, wave_amplitude, material.epsilon);
}

void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw std::runtime_error("config: key '" + key + "' invalid: " + why);
  };
  if (!(domain_width > 0.0)) fail("domain_width", "must be positive");
  if (!(domain_height > 0.0)) fail("domain_height", "must be positive");
  if (nx < 1) fail("nx", "must be >= 1");
  if (ny < 1) fail("ny", "must be >= 1");
  if (!(tau > 0.0)) fail("tau", "must be positive");
  if (!(t_end > 0.0)) fail("t_end", "must be positive");
  if (!(material.rho1 > 0.0) || !(material.rho1 <= material.rho2))
    fail("rho1", "need 0 < rho1 <= rho2");
  if (!(material.eta1 > 0.0)) fail("eta1", "must be positive");
  if (!(material.eta2 > 0.0)) fail("eta2", "must be positive");
  if (!(material.sigma > 0.0)) fail("sigma", "must be positive");
  if (!(material.epsilon > 0.0)) fail("epsilon", "must be positive");
  if (!(material.s > 1.0)) fail("s", "must exceed 1");
  if (!mobility_auto && !(material.mobility > 0.0)) fail("mobility", "must be positive");
  if (!(wind.halfaxes.x > 0.0)) fail("force_halfwidth_x", "must be positive");
  if (!(wind.halfaxes.y > 0.0)) fail("force_halfwidth_y", "must be positive");
  if (!(adapt.mark.theta_r > 0.0) || !(adapt.mark.theta_r < 1.0))
    fail("theta_r", "must lie in (0,1)");
  if (!(adapt.mark.theta_c > 0.0) || !(adapt.mark.theta_c < 1.0))
    fail("theta_c", "must lie in (0,1)");
  if (!(adapt.mark.a_min > 0.0)) fail("a_min", "must be positive");
  if (!(adapt.mark.a_max > 0.0)) fail("a_max", "must be positive");
  if (adapt.bisections < 1 || adapt.bisections > 3) fail("adapt_bisections", "must be 1, 2 or 3");
  if (!(scheme.ssn.tol > 0.0)) fail("ssn_tol", "must be positive");
  if (scheme.ssn.max_iter < 1) fail("ssn_max_iter", "must be >= 1");
  if (output_interval < 0) fail("output_interval", "must be >= 0");
  if (checkpoint_interval < 0) fail("checkpoint_interval", "must be >= 0");
  if (threads < 1) fail("threads", "must be >= 1");
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    const std::size_t hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(line) + ": expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));

    if (key == "domain_width") c.domain_width = parse_double(key, val, line);
    else if (key == "domain_height") c.domain_height = parse_double(key, val, line);
    else if (key == "nx") c.nx = parse_int(key, val, line);
    else if (key == "ny") c.ny = parse_int(key, val, line);
    else if (key == "tau") c.tau = parse_double(key, val, line);
    else if (key == "t_end") c.t_end = parse_double(key, val, line);
    else if (key == "rho1") c.material.rho1 = parse_double(key, val, line);
    else if (key == "rho2") c.material.rho2 = parse_double(key, val, line);
    else if (key == "eta1") c.material.eta1 = parse_double(key, val, line);
    else if (key == "eta2") c.material.eta2 = parse_double(key, val, line);
    else if (key == "sigma") c.material.sigma = parse_double(key, val, line);
    else if (key == "epsilon") c.material.epsilon = parse_double(key, val, line);
    else if (key == "s") c.material.s = parse_double(key, val, line);
    else if (key == "mobility") {
      if (val == "auto") {
        c.mobility_auto = true;
      } else {
        c.mobility_auto = false;
        c.material.mobility = parse_double(key, val, line);
      }
    } else if (key == "gravity_x") c.material.gravity.x = parse_double(key, val, line);
    else if (key == "gravity_y") c.material.gravity.y = parse_double(key, val, line);
    else if (key == "force_amplitude") c.wind.amplitude = parse_double(key, val, line);
    else if (key == "force_center_x") c.wind.center.x = parse_double(key, val, line);
    else if (key == "force_center_y") c.wind.center.y = parse_double(key, val, line);
    else if (key == "force_halfwidth_x") c.wind.halfaxes.x = parse_double(key, val, line);
    else if (key == "force_halfwidth_y") c.wind.halfaxes.y = parse_double(key, val, line);
    else if (key == "force_smooth") c.wind.smooth = parse_bool(key, val, line);
    else if (key == "surface_height") c.surface_height = parse_double(key, val, line);
    else if (key == "wave_amplitude") c.wave_amplitude = parse_double(key, val, line);
    else if (key == "paper_literal_geometry") c.paper_literal_geometry = parse_bool(key, val, line);
    else if (key == "phi0_mode") {
      if (val == "wave") c.phi0_mode = RunConfig::Phi0Mode::wave;
      else if (val == "constant") c.phi0_mode = RunConfig::Phi0Mode::constant;
      else throw std::runtime_error("config line " + std::to_string(line) +
                                    ": phi0_mode expects 'wave' or 'constant'");
    } else if (key == "phi0_constant") c.phi0_constant = parse_double(key, val, line);
    else if (key == "bc_bottom") c.bc.bottom = parse_bc(key, val, line);
    else if (key == "bc_right") c.bc.right = parse_bc(key, val, line);
    else if (key == "bc_top") c.bc.top = parse_bc(key, val, line);
    else if (key == "bc_left") c.bc.left = parse_bc(key, val, line);
    else if (key == "adaptive") c.adaptive = parse_bool(key, val, line);
    else if (key == "theta_r") c.adapt.mark.theta_r = parse_double(key, val, line);
    else if (key == "theta_c") c.adapt.mark.theta_c = parse_double(key, val, line);
    else if (key == "a_min") c.adapt.mark.a_min = parse_double(key, val, line);
    else if (key == "a_max") c.adapt.mark.a_max = parse_double(key, val, line);
    else if (key == "postprocess") c.adapt.postprocess = parse_bool(key, val, line);
    else if (key == "adapt_bisections") c.adapt.bisections = parse_int(key, val, line);
    else if (key == "transport_ibp") c.scheme.transport_ibp = parse_bool(key, val, line);
    else if (key == "ssn_tol") c.scheme.ssn.tol = parse_double(key, val, line);
    else if (key == "ssn_max_iter") c.scheme.ssn.max_iter = parse_int(key, val, line);
    else if (key == "output_dir") c.output_dir = val;
    else if (key == "output_interval") c.output_interval = parse_int(key, val, line);
    else if (key == "write_vtk") c.write_vtk = parse_bool(key, val, line);
    else if (key == "refined_output") c.refined_output = parse_bool(key, val, line);
    else if (key == "checkpoint_interval") c.checkpoint_interval = parse_int(key, val, line);
    else if (key == "threads") c.threads = parse_int(key, val, line);
    else if (key == "seed") c.seed = static_cast<unsigned long>(parse_int(key, val, line));
    else
      throw std::runtime_error("config line " + std::to_string(line) + ": unknown key '" + key +
                               "'");
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream o;
  o << "domain_width = " << fmt(c.domain_width) << "\n";
  o << "domain_height = " << fmt(c.domain_height) << "\n";
  o << "nx = " << c.nx << "\n";
  o << "ny = " << c.ny << "\n";
  o << "tau = " << fmt(c.tau) << "\n";
  o << "t_end = " << fmt(c.t_end) << "\n";
  o << "rho1 = " << fmt(c.material.rho1) << "\n";
  o << "rho2 = " << fmt(c.material.rho2) << "\n";
  o << "eta1 = " << fmt(c.material.eta1) << "\n";
  o << "eta2 = " << fmt(c.material.eta2) << "\n";
  o << "sigma = " << fmt(c.material.sigma) << "\n";
  o << "epsilon = " << fmt(c.material.epsilon) << "\n";
  o << "s = " << fmt(c.material.s) << "\n";
  o << "mobility = " << (c.mobility_auto ? std::string("auto") : fmt(c.material.mobility)) << "\n";
  o << "gravity_x = " << fmt(c.material.gravity.x) << "\n";
  o << "gravity_y = " << fmt(c.material.gravity.y) << "\n";
  o << "force_amplitude = " << fmt(c.wind.amplitude) << "\n";
  o << "force_center_x = " << fmt(c.wind.center.x) << "\n";
  o << "force_center_y = " << fmt(c.wind.center.y) << "\n";
  o << "force_halfwidth_x = " << fmt(c.wind.halfaxes.x) << "\n";
  o << "force_halfwidth_y = " << fmt(c.wind.halfaxes.y) << "\n";
  o << "force_smooth = " << (c.wind.smooth ? "true" : "false") << "\n";
  o << "surface_height = " << fmt(c.surface_height) << "\n";
  o << "wave_amplitude = " << fmt(c.wave_amplitude) << "\n";
  o << "paper_literal_geometry = " << (c.paper_literal_geometry ? "true" : "false") << "\n";
  o << "phi0_mode = " << (c.phi0_mode == RunConfig::Phi0Mode::wave ? "wave" : "constant") << "\n";
  o << "phi0_constant = " << fmt(c.phi0_constant) << "\n";
  o << "bc_bottom = " << fmt_bc(c.bc.bottom) << "\n";
  o << "bc_right = " << fmt_bc(c.bc.right) << "\n";
  o << "bc_top = " << fmt_bc(c.bc.top) << "\n";
  o << "bc_left = " << fmt_bc(c.bc.left) << "\n";
  o << "adaptive = " << (c.adaptive ? "true" : "false") << "\n";
  o << "theta_r = " << fmt(c.adapt.mark.theta_r) << "\n";
  o << "theta_c = " << fmt(c.adapt.mark.theta_c) << "\n";
  o << "a_min = " << fmt(c.adapt.mark.a_min) << "\n";
  o << "a_max = " << fmt(c.adapt.mark.a_max) << "\n";
  o << "postprocess = " << (c.adapt.postprocess ? "true" : "false") << "\n";
  o << "adapt_bisections = " << c.adapt.bisections << "\n";
  o << "transport_ibp = " << (c.scheme.transport_ibp ? "true" : "false") << "\n";
  o << "ssn_tol = " << fmt(c.scheme.ssn.tol) << "\n";
  o << "ssn_max_iter = " << c.scheme.ssn.max_iter << "\n";
  o << "output_dir = " << c.output_dir << "\n";
  o << "output_interval = " << c.output_interval << "\n";
  o << "write_vtk = " << (c.write_vtk ? "true" : "false") << "\n";
  o << "refined_output = " << (c.refined_output ? "true" : "false") << "\n";
  o << "checkpoint_interval = " << c.checkpoint_interval << "\n";
  o << "threads = " << c.threads << "\n";
  o << "seed = " << c.seed << "\n";
  return o.str();
}

}  // namespace chns
