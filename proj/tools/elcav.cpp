// Command-line driver: kernel reports, forward solves, derivative checks,
// shape reconstruction and the local stability experiment, all driven by a
// single JSON configuration.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "elcav/config.hpp"
#include "elcav/forward.hpp"
#include "elcav/inverse.hpp"
#include "elcav/io.hpp"

namespace fs = std::filesystem;
using namespace elcav;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitStagnation = 4;

struct CommonArgs {
  std::string config_path;
  std::string out_override;
  int jobs = 1;
};

RunConfig load_and_prepare(const CommonArgs& args) {
  RunConfig cfg = load_config(args.config_path);
  if (!args.out_override.empty()) {
    cfg.output_dir = args.out_override;
    cfg.resolved["output"] = cfg.output_dir;
  }
  fs::create_directories(cfg.output_dir);
  std::ofstream m(fs::path(cfg.output_dir) / "manifest.json");
  m << cfg.resolved.dump(2) << "\n";
  return cfg;
}

Mesh build_mesh(const RunConfig& cfg) {
  Mesh mesh = generate_mesh(cfg.shape, cfg.target_h, cfg.gamma_extent);
  for (int r = 0; r < cfg.refinements; ++r) mesh = refine(mesh);
  return mesh;
}

ForwardSolution run_forward(const RunConfig& cfg, const Mesh& mesh) {
  return cfg.bc == BoundaryKind::Dirichlet
             ? solve_dirichlet(cfg.medium, cfg.incidence, mesh, cfg.quad)
             : solve_neumann(cfg.medium, cfg.incidence, mesh, cfg.quad);
}

// ---------------------------------------------------------------------------

int cmd_kernels(const CommonArgs& args) {
  const RunConfig cfg = load_and_prepare(args);
  const ElasticMedium& med = cfg.medium;
  const QuadratureGrid grid = make_kernel_grid(med, cfg.quad);
  write_kernel_csv((fs::path(cfg.output_dir) / "kernels.csv").string(), med,
                   grid);

  const double xr = rayleigh_root(med);
  const double delta = 1e-3 * med.k_s;
  int failures = 0;
  std::ofstream rep(fs::path(cfg.output_dir) / "sign_report.csv");
  rep << std::setprecision(17)
      << "xi, regime, re_M_negdef_margin, im_Minv_class, a1, det_im_Minv, "
         "d1, d2, d3, pass\n";
  auto regime_name = [](SpectralRegime r) {
    switch (r) {
      case SpectralRegime::PropagatingBoth: return "propagating_both";
      case SpectralRegime::PropagatingSOnly: return "propagating_s_only";
      default: return "evanescent";
    }
  };
  auto class_name = [](DefinitenessClass c) {
    switch (c) {
      case DefinitenessClass::Zero: return "zero";
      case DefinitenessClass::SemidefiniteNegative:
        return "semidefinite_negative";
      default: return "definite_negative";
    }
  };
  for (int i = 0; i < 400; ++i) {
    const double xi =
        1e-3 * med.k_p *
        std::pow(50.0 * med.k_s / (1e-3 * med.k_p), i / 399.0);
    if (std::abs(xi - med.k_p) < delta || std::abs(xi - med.k_s) < delta ||
        std::abs(xi - xr) < delta)
      continue;
    const KernelSignReport r = sign_report(med, xi);
    bool ok = true;
    if (r.regime == SpectralRegime::Evanescent) {
      ok &= r.re_M_negdef_margin > 0;
      ok &= r.im_Minv_classification == DefinitenessClass::Zero;
    } else if (r.regime == SpectralRegime::PropagatingBoth) {
      ok &= r.im_Minv_classification == DefinitenessClass::DefiniteNegative;
    } else {
      ok &= r.a1 < 0;
      ok &= std::abs(r.d1) < 1e-10 && std::abs(r.d2) < 1e-10 &&
            std::abs(r.d3) < 1e-10;
    }
    if (!ok) ++failures;
    rep << r.xi << ", " << regime_name(r.regime) << ", "
        << r.re_M_negdef_margin << ", " << class_name(r.im_Minv_classification)
        << ", " << r.a1 << ", " << r.det_im_Minv << ", " << r.d1 << ", "
        << r.d2 << ", " << r.d3 << ", " << (ok ? 1 : 0) << "\n";
  }
  rep << "# rayleigh_root, " << xr << ", ratio_to_ks, " << xr / med.k_s
      << "\n";
  rep << "# failures, " << failures << "\n";
  std::cout << "sign-report failures: " << failures << "\n";
  return failures == 0 ? kExitOk : kExitSolver;
}

// ---------------------------------------------------------------------------

int cmd_solve(const CommonArgs& args) {
  const RunConfig cfg = load_and_prepare(args);
  Json diag;
  try {
    std::vector<Mesh> meshes;
    std::vector<std::vector<std::array<int, 2>>> parents;
    meshes.push_back(generate_mesh(cfg.shape, cfg.target_h, cfg.gamma_extent));
    for (int r = 0; r < cfg.refinements; ++r) {
      parents.emplace_back();
      meshes.push_back(refine(meshes.back(), &parents.back()));
    }
    std::vector<ForwardSolution> sols;
    for (const Mesh& m : meshes) sols.push_back(run_forward(cfg, m));
    const ForwardSolution& sol = sols.back();

    write_vtk_field((fs::path(cfg.output_dir) / "field.vtk").string(),
                    sol.mesh(), sol.field.values);
    write_trace_csv((fs::path(cfg.output_dir) / "trace.csv").string(), sol);

    diag["residual"] = sol.diag.residual;
    diag["flux_mismatch"] = flux_balance(sol);
    diag["nodes_per_wavelength"] = sol.diag.nodes_per_wavelength;
    diag["under_resolved"] = sol.diag.under_resolved;
    if (cfg.refinements >= 2) {
      // H1-seminorm self-convergence against the finest level
      std::vector<double> errs;
      for (size_t l = 0; l + 1 < sols.size(); ++l) {
        CVecX v = sols[l].field.values;
        for (size_t r = l; r + 1 < meshes.size(); ++r)
          v = prolong(v, parents[r]);
        errs.push_back(h1_seminorm(sol.mesh(), v - sol.field.values));
      }
      Json ratios = Json::array();
      for (size_t i = 0; i + 1 < errs.size(); ++i)
        ratios.push_back(errs[i] / std::max(errs[i + 1], 1e-300));
      diag["h1_errors"] = errs;
      diag["convergence_ratios"] = ratios;
    }
    std::ofstream d(fs::path(cfg.output_dir) / "diagnostics.json");
    d << diag.dump(2) << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    diag["error"] = e.what();
    std::ofstream d(fs::path(cfg.output_dir) / "diagnostics.json");
    d << diag.dump(2) << "\n";
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }
}

// ---------------------------------------------------------------------------

int cmd_derivative_check(const CommonArgs& args) {
  const RunConfig cfg = load_and_prepare(args);
  try {
    const Mesh mesh = build_mesh(cfg);
    const StarPerturbation& p = cfg.derivative_p;
    const FdCheck fd = frechet_fd_check(
        cfg.medium, cfg.incidence, mesh, cfg.bc,
        [&](double phi) { return p(phi); }, cfg.derivative_t, cfg.quad);
    std::ofstream f(fs::path(cfg.output_dir) / "derivative_check.csv");
    f << std::setprecision(17) << "t, fd_error\n";
    for (size_t i = 0; i < fd.t.size(); ++i)
      f << fd.t[i] << ", " << fd.error[i] << "\n";
    const double lo = cfg.bc == BoundaryKind::Dirichlet ? 1.5 : 1.4;
    const double hi = cfg.bc == BoundaryKind::Dirichlet ? 2.5 : 2.6;
    bool ok = !fd.ratios.empty();
    for (double r : fd.ratios) {
      std::cout << "fd ratio " << r << "\n";
      ok &= (r >= lo && r <= hi);
    }
    return ok ? kExitOk : kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }
}

// ---------------------------------------------------------------------------

int cmd_reconstruct(const CommonArgs& args) {
  const RunConfig cfg = load_and_prepare(args);
  if (cfg.bc != BoundaryKind::Dirichlet) {
    std::cerr << "config error: reconstruction requires bc = dirichlet\n";
    return kExitConfig;
  }
  try {
    const Mesh data_mesh =
        generate_mesh(cfg.recon_target, cfg.recon_data_h, cfg.gamma_extent);
    const ForwardSolution data_sol =
        solve_dirichlet(cfg.medium, cfg.incidence, data_mesh, cfg.quad);
    const TraceData data = make_trace_data(data_sol);

    ReconstructionOptions opts;
    opts.n_cos = cfg.recon_n_cos;
    opts.n_sin = cfg.recon_n_sin;
    opts.max_iter = cfg.recon_max_iter;
    opts.forward_refinements = cfg.recon_forward_refinements;
    opts.target_h = cfg.target_h;
    opts.gamma_extent = cfg.gamma_extent;
    opts.quad = cfg.quad;
    const ReconstructionState st =
        reconstruct(cfg.medium, cfg.incidence, data, cfg.recon_init, opts);

    std::ofstream log(fs::path(cfg.output_dir) / "iterations.csv");
    log << std::setprecision(17) << "iter, objective, grad_norm, step";
    for (int m = 0; m < opts.n_cos; ++m) log << ", a" << m + 1;
    for (int m = 0; m < opts.n_sin; ++m) log << ", b" << m + 1;
    log << "\n";
    for (const auto& row : st.log) {
      log << row.iter << ", " << row.objective << ", " << row.grad_norm
          << ", " << row.step;
      for (double v : row.params) log << ", " << v;
      log << "\n";
    }
    Json shape;
    shape["r0"] = cfg.recon_init.r0;
    shape["a"] = st.a;
    shape["b"] = st.b;
    std::ofstream sj(fs::path(cfg.output_dir) / "final_shape.json");
    sj << shape.dump(2) << "\n";

    // parameter error against the configured target, absolute
    double err2 = 0, mag2 = 0;
    auto acc = [&](const std::vector<double>& got,
                   const std::vector<double>& want) {
      const size_t n = std::max(got.size(), want.size());
      for (size_t i = 0; i < n; ++i) {
        const double g = i < got.size() ? got[i] : 0.0;
        const double w = i < want.size() ? want[i] : 0.0;
        err2 += (g - w) * (g - w);
        mag2 += w * w;
      }
    };
    acc(st.a, cfg.recon_target.a);
    acc(st.b, cfg.recon_target.b);
    const double rel = std::sqrt(err2) / std::max(std::sqrt(mag2), 1e-300);
    std::cout << "parameter error (relative to perturbation magnitude): "
              << rel << "\n";
    if (rel < cfg.recon_threshold) return kExitOk;
    return kExitStagnation;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }
}

// ---------------------------------------------------------------------------

int cmd_stability(const CommonArgs& args) {
  const RunConfig cfg = load_and_prepare(args);
  if (cfg.bc != BoundaryKind::Dirichlet) {
    std::cerr << "config error: the stability experiment requires bc = "
                 "dirichlet\n";
    return kExitConfig;
  }
  try {
    const auto rows = local_stability_experiment(
        cfg.medium, cfg.incidence, cfg.shape, cfg.stability_p, cfg.stability_k,
        cfg.target_h, cfg.gamma_extent, cfg.quad);
    std::ofstream f(fs::path(cfg.output_dir) / "stability.csv");
    f << std::setprecision(17) << "k, dist, trace_diff, ratio, skipped\n";
    double rmin = 1e300, rmax = 0;
    for (const auto& r : rows) {
      f << r.k << ", " << r.dist << ", " << r.trace_diff << ", " << r.ratio
        << ", " << (r.skipped ? 1 : 0);
      if (!r.note.empty()) f << ", " << r.note;
      f << "\n";
      if (!r.skipped) {
        rmin = std::min(rmin, r.ratio);
        rmax = std::max(rmax, r.ratio);
      }
    }
    const double spread = rmax > 0 ? rmax / rmin : 1.0;
    std::cout << "ratio spread: " << spread << "\n";
    return spread < 3.0 ? kExitOk : kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"elastic cavity scattering toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "JSON configuration file")
        ->required();
    sub->add_option("--out", args.out_override, "output directory override");
    sub->add_option("--jobs", args.jobs, "worker cap (reserved)");
  };

  int (*handler)(const CommonArgs&) = nullptr;
  for (auto [name, desc, fn] :
       {std::tuple{"kernels", "kernel dump and sign-property report",
                   &cmd_kernels},
        std::tuple{"solve", "forward solve with field and trace export",
                   &cmd_solve},
        std::tuple{"derivative-check",
                   "finite-difference validation of the shape derivative",
                   &cmd_derivative_check},
        std::tuple{"reconstruct", "gradient-descent shape reconstruction",
                   &cmd_reconstruct},
        std::tuple{"stability", "local shape-stability experiment",
                   &cmd_stability}}) {
    CLI::App* sub = app.add_subcommand(name, desc);
    add_common(sub);
    sub->callback([&handler, fn] { handler = fn; });
  }

  CLI11_PARSE(app, argc, argv);
  try {
    return handler(args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
}
