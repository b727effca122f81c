#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "elcav/common.hpp"
#include "elcav/geometry.hpp"
#include "elcav/inverse.hpp"
#include "elcav/medium.hpp"
#include "elcav/spectral.hpp"

namespace elcav {

using Json = nlohmann::json;

// Fully resolved run configuration; `resolved` carries the manifest copy
// with every defaulted field made explicit.
struct RunConfig {
  ElasticMedium medium;
  IncidenceConfig incidence;
  BoundaryKind bc = BoundaryKind::Dirichlet;
  CavityShape shape;
  double target_h = 0.15;
  int refinements = 0;
  double gamma_extent = 2.0;
  QuadratureOptions quad;

  std::vector<double> stability_k;
  StarPerturbation stability_p;

  StarPerturbation derivative_p;
  std::vector<double> derivative_t;

  CavityShape recon_target;
  CavityShape recon_init;
  int recon_max_iter = 50;
  double recon_data_h = 0.08;
  double recon_threshold = 0.05;
  int recon_n_cos = 2;
  int recon_n_sin = 1;
  int recon_forward_refinements = 1;

  std::string output_dir = "out";
  Json resolved;
};

namespace detail {

inline double get_num(const Json& j, const std::string& key, double dflt,
                      Json& out) {
  double v = dflt;
  if (j.contains(key)) {
    if (!j.at(key).is_number())
      throw ConfigError("field '" + key + "' must be a number");
    v = j.at(key).get<double>();
  }
  out[key] = v;
  return v;
}

inline std::vector<double> get_vec(const Json& j, const std::string& key,
                                   std::vector<double> dflt, Json& out) {
  std::vector<double> v = std::move(dflt);
  if (j.contains(key)) {
    if (!j.at(key).is_array())
      throw ConfigError("field '" + key + "' must be an array of numbers");
    v.clear();
    for (const auto& e : j.at(key)) {
      if (!e.is_number())
        throw ConfigError("field '" + key + "' must be an array of numbers");
      v.push_back(e.get<double>());
    }
  }
  out[key] = v;
  return v;
}

inline CavityShape parse_shape(const Json& j, Json& out, double dflt_r0 = 1.0) {
  Json sub;
  const double r0 = get_num(j, "r0", dflt_r0, sub);
  if (!(r0 > 0)) throw ConfigError("shape r0 must be positive");
  const std::vector<double> a = get_vec(j, "a", {}, sub);
  const std::vector<double> b = get_vec(j, "b", {}, sub);
  out = sub;
  if (a.empty() && b.empty()) return CavityShape::semicircle(r0);
  return CavityShape::star(r0, a, b);
}

inline StarPerturbation parse_perturbation(const Json& j, Json& out) {
  Json sub;
  StarPerturbation p;
  p.a = get_vec(j, "a", {}, sub);
  p.b = get_vec(j, "b", {}, sub);
  out = sub;
  return p;
}

}  // namespace detail

inline RunConfig parse_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("configuration root must be an object");
  RunConfig c;
  Json man;

  {
    const Json m = j.value("medium", Json::object());
    Json sub;
    const double lambda = detail::get_num(m, "lambda", 1.0, sub);
    const double mu = detail::get_num(m, "mu", 1.0, sub);
    const double omega = detail::get_num(m, "omega", 1.0, sub);
    c.medium = make_medium(lambda, mu, omega);
    man["medium"] = sub;
  }
  {
    const Json m = j.value("incidence", Json::object());
    Json sub;
    const double theta = detail::get_num(m, "theta", 0.0, sub);
    if (!(theta > -M_PI / 2 && theta < M_PI / 2))
      throw ConfigError("incidence theta must lie in (-pi/2, pi/2)");
    const double cp = detail::get_num(m, "c_p", c.medium.k_p, sub);
    const double cs = detail::get_num(m, "c_s", 0.0, sub);
    c.incidence = make_incidence(c.medium, theta, Complex(cp, 0.0),
                                 Complex(cs, 0.0));
    man["incidence"] = sub;
  }
  {
    std::string bc = j.value("bc", std::string("dirichlet"));
    if (bc == "dirichlet")
      c.bc = BoundaryKind::Dirichlet;
    else if (bc == "neumann")
      c.bc = BoundaryKind::Neumann;
    else
      throw ConfigError("bc must be 'dirichlet' or 'neumann'");
    man["bc"] = bc;
  }
  {
    Json sub;
    c.shape = detail::parse_shape(j.value("shape", Json::object()), sub);
    c.shape.validate();
    man["shape"] = sub;
  }
  {
    const Json m = j.value("mesh", Json::object());
    Json sub;
    c.target_h = detail::get_num(m, "target_h", 0.15, sub);
    if (!(c.target_h > 0)) throw ConfigError("mesh target_h must be positive");
    c.refinements =
        static_cast<int>(detail::get_num(m, "refinements", 0, sub));
    if (c.refinements < 0 || c.refinements > 6)
      throw ConfigError("mesh refinements must lie in [0, 6]");
    c.gamma_extent = detail::get_num(m, "gamma_extent", 2.0, sub);
    man["mesh"] = sub;
  }
  {
    const Json m = j.value("quadrature", Json::object());
    Json sub;
    c.quad.xi_factor = detail::get_num(m, "xi_factor", 20.0, sub);
    c.quad.points_per_panel =
        static_cast<int>(detail::get_num(m, "points_per_panel", 16, sub));
    c.quad.refine_levels =
        static_cast<int>(detail::get_num(m, "refine_levels", 6, sub));
    c.quad.delta_reg = detail::get_num(m, "delta_reg", 1e-6, sub);
    if (!(c.quad.xi_factor > 1) || c.quad.points_per_panel < 2 ||
        c.quad.refine_levels < 0 || !(c.quad.delta_reg >= 0))
      throw ConfigError("invalid quadrature block");
    man["quadrature"] = sub;
  }
  {
    const Json m = j.value("stability", Json::object());
    Json sub;
    c.stability_k =
        detail::get_vec(m, "k_values", {0.02, 0.01, 0.005}, sub);
    Json psub;
    c.stability_p = detail::parse_perturbation(m.value("p", Json::object()),
                                               psub);
    if (c.stability_p.a.empty() && c.stability_p.b.empty())
      c.stability_p.b = {1.0};  // default profile sin(phi)
    psub["a"] = c.stability_p.a;
    psub["b"] = c.stability_p.b;
    sub["p"] = psub;
    man["stability"] = sub;
  }
  {
    const Json m = j.value("derivative", Json::object());
    Json sub;
    c.derivative_t = detail::get_vec(m, "t_values", {0.02, 0.01, 0.005}, sub);
    for (double t : c.derivative_t)
      if (!(t > 0)) throw ConfigError("derivative t_values must be positive");
    Json psub;
    c.derivative_p = detail::parse_perturbation(m.value("p", Json::object()),
                                                psub);
    if (c.derivative_p.a.empty() && c.derivative_p.b.empty())
      c.derivative_p.b = {1.0};
    bool nonzero = false;
    for (double v : c.derivative_p.a) nonzero |= (v != 0);
    for (double v : c.derivative_p.b) nonzero |= (v != 0);
    if (!nonzero)
      throw ConfigError("derivative perturbation must be nonzero");
    psub["a"] = c.derivative_p.a;
    psub["b"] = c.derivative_p.b;
    sub["p"] = psub;
    man["derivative"] = sub;
  }
  {
    const Json m = j.value("reconstruction", Json::object());
    Json sub, tsub, isub;
    c.recon_target = detail::parse_shape(m.value("target", Json::object()),
                                         tsub, c.shape.r0);
    c.recon_init =
        detail::parse_shape(m.value("init", Json::object()), isub, c.shape.r0);
    sub["target"] = tsub;
    sub["init"] = isub;
    c.recon_max_iter =
        static_cast<int>(detail::get_num(m, "max_iter", 50, sub));
    if (c.recon_max_iter < 0)
      throw ConfigError("reconstruction max_iter must be nonnegative");
    c.recon_data_h = detail::get_num(m, "data_target_h", 0.08, sub);
    c.recon_threshold = detail::get_num(m, "threshold", 0.05, sub);
    c.recon_n_cos = static_cast<int>(detail::get_num(m, "n_cos", 2, sub));
    c.recon_n_sin = static_cast<int>(detail::get_num(m, "n_sin", 1, sub));
    c.recon_forward_refinements = static_cast<int>(
        detail::get_num(m, "forward_refinements", 1, sub));
    if (c.recon_forward_refinements < 0)
      throw ConfigError("reconstruction forward_refinements must be nonnegative");
    man["reconstruction"] = sub;
  }
  c.output_dir = j.value("output", std::string("out"));
  man["output"] = c.output_dir;

  c.resolved = man;
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  Json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace elcav
