#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "elcav/common.hpp"

namespace elcav {

// Physical configuration of the homogeneous isotropic half-space.
struct ElasticMedium {
  double lambda = 0;  // first Lame constant
  double mu = 0;      // shear modulus
  double omega = 0;   // angular frequency
  double k_p = 0;     // compressional wavenumber omega/sqrt(2 mu + lambda)
  double k_s = 0;     // shear wavenumber omega/sqrt(mu)
};

inline ElasticMedium make_medium(double lambda, double mu, double omega) {
  if (!(lambda > 0)) throw ConfigError("lambda must be positive");
  if (!(mu > 0)) throw ConfigError("mu must be positive");
  if (!(omega > 0)) throw ConfigError("omega must be positive");
  ElasticMedium m;
  m.lambda = lambda;
  m.mu = mu;
  m.omega = omega;
  m.k_p = omega / std::sqrt(2.0 * mu + lambda);
  m.k_s = omega / std::sqrt(mu);
  return m;
}

// Vertical wavenumber gamma(xi; k) = sqrt(k^2 - xi^2), branch with
// nonnegative real part on the propagating band and positive imaginary
// part outside (upward radiation).
inline Complex vertical_wavenumber(double k, double xi) {
  const double t = k * k - xi * xi;
  if (t >= 0) return Complex(std::sqrt(t), 0.0);
  return Complex(0.0, std::sqrt(-t));
}

struct IncidenceConfig {
  double theta = 0;  // incidence angle in (-pi/2, pi/2)
  Complex c_p{0, 0};
  Complex c_s{0, 0};
  double alpha = 0;  // k_p sin(theta)
  double beta = 0;   // k_p cos(theta)
  double eta = 0;    // sqrt(k_s^2 - alpha^2)
};

inline IncidenceConfig make_incidence(const ElasticMedium& med, double theta,
                                      Complex c_p, Complex c_s) {
  if (!(theta > -M_PI / 2 && theta < M_PI / 2))
    throw ConfigError("theta must lie in (-pi/2, pi/2)");
  IncidenceConfig cfg;
  cfg.theta = theta;
  cfg.c_p = c_p;
  cfg.c_s = c_s;
  cfg.alpha = med.k_p * std::sin(theta);
  cfg.beta = med.k_p * std::cos(theta);
  cfg.eta = std::sqrt(med.k_s * med.k_s - cfg.alpha * cfg.alpha);
  return cfg;
}

// Default amplitudes: c_p = k_p, c_s = 0.
inline IncidenceConfig make_incidence(const ElasticMedium& med, double theta) {
  return make_incidence(med, theta, Complex(med.k_p, 0.0), Complex(0, 0));
}

struct PlaneWaveMode {
  CVec2 polarization;  // d
  CVec2 wavevector;    // may have imaginary vertical part (evanescent)
  Complex amplitude;
};

enum class BoundaryKind { Dirichlet, Neumann };

// Superposition of plane-wave Navier solutions with closed-form value,
// Jacobian, divergence, curl, traction and Helmholtz potentials.
// Construction rejects modes that fail the Navier residual check.
class PlaneWaveField {
 public:
  PlaneWaveField(const ElasticMedium& med, std::vector<PlaneWaveMode> modes)
      : med_(med), modes_(std::move(modes)) {
    check_navier_residual();
  }

  const ElasticMedium& medium() const { return med_; }
  const std::vector<PlaneWaveMode>& modes() const { return modes_; }

  CVec2 value(const Vec2& x) const {
    CVec2 u = CVec2::Zero();
    for (const auto& m : modes_) u += m.amplitude * phase(m, x) * m.polarization;
    return u;
  }

  // J(l, j) = d u_l / d x_j
  CMat2 jacobian(const Vec2& x) const {
    CMat2 J = CMat2::Zero();
    for (const auto& m : modes_) {
      const Complex f = Iu * m.amplitude * phase(m, x);
      J += f * (m.polarization * m.wavevector.transpose());
    }
    return J;
  }

  Complex divergence(const Vec2& x) const {
    Complex s = 0;
    for (const auto& m : modes_)
      s += Iu * m.amplitude * phase(m, x) * dot_u(m.wavevector, m.polarization);
    return s;
  }

  Complex curl(const Vec2& x) const {
    Complex s = 0;
    for (const auto& m : modes_) {
      const Complex f = Iu * m.amplitude * phase(m, x);
      s += f * (m.wavevector(0) * m.polarization(1) -
                m.wavevector(1) * m.polarization(0));
    }
    return s;
  }

  // T u = mu (n . grad) u + (lambda + mu) (div u) n
  CVec2 traction(const Vec2& x, const Vec2& n) const {
    const CMat2 J = jacobian(x);
    return med_.mu * (J * n.cast<Complex>()) +
           (med_.lambda + med_.mu) * divergence(x) * n.cast<Complex>();
  }

  // P and S Helmholtz potentials: phi = -(i/k_p^2) div u, psi = (i/k_s^2) curl u.
  Complex phi(const Vec2& x) const {
    return -Iu / (med_.k_p * med_.k_p) * divergence(x);
  }
  Complex psi(const Vec2& x) const {
    return Iu / (med_.k_s * med_.k_s) * curl(x);
  }

  CVec2 phi_gradient(const Vec2& x) const {
    CVec2 g = CVec2::Zero();
    for (const auto& m : modes_) {
      const Complex dv = Iu * m.amplitude * phase(m, x) * dot_u(m.wavevector, m.polarization);
      g += (-Iu / (med_.k_p * med_.k_p)) * dv * (Iu * m.wavevector);
    }
    return g;
  }

  CVec2 psi_gradient(const Vec2& x) const {
    CVec2 g = CVec2::Zero();
    for (const auto& m : modes_) {
      const Complex cu = Iu * m.amplitude * phase(m, x) *
                         (m.wavevector(0) * m.polarization(1) -
                          m.wavevector(1) * m.polarization(0));
      g += (Iu / (med_.k_s * med_.k_s)) * cu * (Iu * m.wavevector);
    }
    return g;
  }

 private:
  static Complex dot_u(const CVec2& a, const CVec2& b) {
    // unconjugated dot product
    return a(0) * b(0) + a(1) * b(1);
  }

  Complex phase(const PlaneWaveMode& m, const Vec2& x) const {
    return std::exp(Iu * (m.wavevector(0) * x(0) + m.wavevector(1) * x(1)));
  }

  void check_navier_residual() const {
    if (modes_.empty()) return;
    std::mt19937 rng(20240817u);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    double scale = 0;
    double worst = 0;
    for (int p = 0; p < 10; ++p) {
      const Vec2 x(dist(rng), dist(rng));
      CVec2 r = CVec2::Zero();
      for (const auto& m : modes_) {
        const Complex kk = dot_u(m.wavevector, m.wavevector);
        const Complex kd = dot_u(m.wavevector, m.polarization);
        const CVec2 coeff =
            (med_.omega * med_.omega - med_.mu * kk) * m.polarization -
            (med_.lambda + med_.mu) * kd * m.wavevector;
        r += m.amplitude * phase(m, x) * coeff;
      }
      worst = std::max(worst, r.norm());
      scale = std::max(scale, value(x).norm());
    }
    if (scale == 0) {
      for (const auto& m : modes_) scale = std::max(scale, std::abs(m.amplitude));
      if (scale == 0) return;
    }
    if (worst > 1e-10 * scale)
      throw NumericalError("plane-wave mode violates the Navier equation");
  }

  ElasticMedium med_;
  std::vector<PlaneWaveMode> modes_;
};

// Free traction operator for anything exposing jacobian/divergence.
template <typename Field>
CVec2 traction(const ElasticMedium& med, const Field& f, const Vec2& x,
               const Vec2& n) {
  const CMat2 J = f.jacobian(x);
  return med.mu * (J * n.template cast<Complex>()) +
         (med.lambda + med.mu) * f.divergence(x) * n.template cast<Complex>();
}

inline std::pair<Complex, Complex> helmholtz_potentials(const PlaneWaveField& f,
                                                        const Vec2& x) {
  return {f.phi(x), f.psi(x)};
}

inline PlaneWaveField incident_field(const ElasticMedium& med,
                                     const IncidenceConfig& cfg) {
  std::vector<PlaneWaveMode> modes;
  const Vec2 dir(std::sin(cfg.theta), -std::cos(cfg.theta));
  if (cfg.c_p != Complex(0, 0)) {
    PlaneWaveMode m;
    m.polarization = dir.cast<Complex>();
    m.wavevector = (med.k_p * dir).cast<Complex>();
    m.amplitude = cfg.c_p;
    modes.push_back(m);
  }
  if (cfg.c_s != Complex(0, 0)) {
    PlaneWaveMode m;
    m.polarization = CVec2(std::cos(cfg.theta), std::sin(cfg.theta));
    m.wavevector = (med.k_s * dir).cast<Complex>();
    m.amplitude = cfg.c_s;
    modes.push_back(m);
  }
  return PlaneWaveField(med, std::move(modes));
}

// Reflected field for a flat traction-free or rigid ground plane.
// For each incident mode the upgoing P and SV amplitudes are obtained from
// the 2x2 linear system enforcing the boundary condition at x_2 = 0; the
// closed-form coefficients printed elsewhere are only used as test fixtures.
inline PlaneWaveField reflected_field(const ElasticMedium& med,
                                      const IncidenceConfig& cfg,
                                      BoundaryKind bc) {
  const PlaneWaveField inc = incident_field(med, cfg);
  std::vector<PlaneWaveMode> out;
  const Vec2 n(0.0, 1.0);
  for (const auto& mi : inc.modes()) {
    const double xi0 = mi.wavevector(0).real();
    const Complex gp = vertical_wavenumber(med.k_p, xi0);
    const Complex gs = vertical_wavenumber(med.k_s, xi0);

    PlaneWaveMode mp;  // upgoing P, polarization parallel to wavevector
    mp.wavevector = CVec2(Complex(xi0, 0), gp);
    mp.polarization = mp.wavevector / med.k_p;
    mp.amplitude = Complex(1, 0);

    PlaneWaveMode ms;  // upgoing SV, polarization perpendicular
    ms.wavevector = CVec2(Complex(xi0, 0), gs);
    ms.polarization = CVec2(-gs, Complex(xi0, 0)) / med.k_s;
    ms.amplitude = Complex(1, 0);

    auto mode_traction = [&](const PlaneWaveMode& m) -> CVec2 {
      // traction of a unit-amplitude mode at x_2 = 0, common e^{i xi0 x_1} dropped
      const Complex kn = m.wavevector(1);
      const Complex kd = m.wavevector(0) * m.polarization(0) +
                         m.wavevector(1) * m.polarization(1);
      return Iu * (med.mu * kn * m.polarization +
                   (med.lambda + med.mu) * kd * n.cast<Complex>());
    };

    CMat2 A;
    CVec2 rhs;
    if (bc == BoundaryKind::Dirichlet) {
      A.col(0) = mp.polarization;
      A.col(1) = ms.polarization;
      rhs = -mi.amplitude * mi.polarization;
    } else {
      A.col(0) = mode_traction(mp);
      A.col(1) = mode_traction(ms);
      PlaneWaveMode tmp = mi;
      tmp.amplitude = Complex(1, 0);
      rhs = -mi.amplitude * mode_traction(tmp);
    }
    const double cond_floor = 1e-12 * A.cwiseAbs().maxCoeff();
    const Complex det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    if (std::abs(det) < cond_floor * cond_floor)
      throw NumericalError("degenerate reflection system");
    const CVec2 amps = A.fullPivLu().solve(rhs);
    mp.amplitude = amps(0);
    ms.amplitude = amps(1);
    if (std::abs(mp.amplitude) > 0) out.push_back(mp);
    if (std::abs(ms.amplitude) > 0) out.push_back(ms);
  }
  return PlaneWaveField(med, std::move(out));
}

// Incident + reflected sum as one field.
inline PlaneWaveField ground_field(const ElasticMedium& med,
                                   const IncidenceConfig& cfg,
                                   BoundaryKind bc) {
  const PlaneWaveField inc = incident_field(med, cfg);
  const PlaneWaveField ref = reflected_field(med, cfg, bc);
  std::vector<PlaneWaveMode> modes = inc.modes();
  modes.insert(modes.end(), ref.modes().begin(), ref.modes().end());
  return PlaneWaveField(med, std::move(modes));
}

}  // namespace elcav
