#include "elliprmt/fluctuation_kernel.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "elliprmt/error.hpp"

namespace elliprmt {

namespace {

constexpr double kDeltas[3] = {1e-3, 1e-4, 1e-5};

// Three-level Richardson in delta with ratio 10 (error terms delta and delta^2).
cplx richardson(cplx a, cplx b, cplx c) {
  const cplx r1 = (10.0 * b - a) / 9.0;
  const cplx r2 = (10.0 * c - b) / 9.0;
  return (100.0 * r2 - r1) / 99.0;
}

Eigen::VectorXd coordinates(const SigmaSpectrum& sigma, const Eigen::VectorXd& pi) {
  if (pi.size() != sigma.dimension()) throw DomainError("vector dimension differs from Sigma");
  return sigma.eigenvectors.transpose() * pi;
}

cplx resolvent_factor(cplx g2, double s) {
  const cplx den = 1.0 + g2 * s;
  if (std::abs(den) < 1e-14) {
    std::ostringstream msg;
    msg << "I + g2 Sigma is singular (g2 = " << g2 << ", eigenvalue " << s << ")";
    throw PoleError(msg.str());
  }
  return 1.0 / den;
}

// Sum_i a_i b_i f(s_i) over the eigenbasis of Sigma.
template <class F>
cplx spectral_sum(const SigmaSpectrum& sigma, const Eigen::VectorXd& a, const Eigen::VectorXd& b, F f) {
  cplx s = 0.0;
  for (int i = 0; i < sigma.dimension(); ++i) s += a(i) * b(i) * f(sigma.eigenvalues(i));
  return s;
}

}  // namespace

KernelPoint kernel_point(const LsdModel& model, cplx z, const SolverOptions& opts) {
  KernelPoint kp;
  kp.sol = evaluate_lsd(model, z, opts);
  kp.der = derivatives(model, kp.sol);
  const cplx zs = kp.sol.z, g1 = kp.sol.g1, g2 = kp.sol.g2;
  const cplx j2 = measure_integral(model.h2, [&](double y) {
    const cplx den = 1.0 + g1 * y;
    return y * y / (den * den);
  });
  const cplx k = model.c / (zs * zs) * measure_integral(model.h1, [&](double t) {
    const cplx den = 1.0 + g2 * t;
    return t * t / (den * den);
  });
  const cplx den = zs * zs * (1.0 - j2 * k);
  if (std::abs(den) < 1e-300) throw PoleError("radius response is singular");
  kp.radius_scale = 1.0 / den;
  return kp;
}

KernelValues kernels(const LsdModel& model, const KernelPoint& a, const KernelPoint& b) {
  const cplx z1 = a.sol.z, z2 = b.sol.z;
  const cplx g11 = a.sol.g1, g12 = b.sol.g1;
  const cplx g21 = a.sol.g2, g22 = b.sol.g2;
  if (std::abs(g11 - g12) < 1e-12 || std::abs(g21 - g22) < 1e-14) {
    throw DegenerateError("kernels: z1 and z2 nearly coincide; use kernels_diagonal");
  }
  const double c = model.c;
  KernelValues k;
  k.z1 = z1;
  k.z2 = z2;
  k.w = z1 * z2 * (g21 - g22);
  k.d = (z1 * g11 - z2 * g12) / (g11 - g12) * (z1 * g21 - z2 * g22) / (g21 - g22) / (z1 * z2);
  k.h1 = c * (z1 * g21 - z2 * g22) / (z1 * z1 * z2 * z2 * (g11 - g12) * (1.0 - k.d));
  k.h2 = c * a.der.g2p * b.der.g2p * (a.sol.m_under * g22 - b.sol.m_under * g21) /
         (g21 * g22 * (g11 - g12));
  const cplx cov = (z1 * g21 - z2 * g22) / (g11 - g12) - z1 * z2 * g21 * g22;
  k.h2_radius = c * cov * a.radius_scale * b.radius_scale;
  return k;
}

KernelValues kernels(const LsdModel& model, cplx z1, cplx z2, const SolverOptions& opts) {
  return kernels(model, kernel_point(model, z1, opts), kernel_point(model, z2, opts));
}

DiagonalKernels kernels_diagonal(const LsdModel& model, cplx z, const SolverOptions& opts) {
  const KernelPoint kp = kernel_point(model, z, opts);
  const LsdDerivatives& d = kp.der;
  const double c = model.c;
  DiagonalKernels out;
  out.sigma12_sq = c * z * z * d.z_g2_p * d.g2p / d.z_m_under_p;
  const cplx s = kp.radius_scale, g2 = kp.sol.g2;
  out.sigma11_sq = 2.0 * out.sigma12_sq + c * std::pow(z, 6) * g2 * g2 * s * s * d.ratio_p / d.g1p;
  return out;
}

DiagonalKernels kernels_diagonal_numeric(const LsdModel& model, cplx z, const SolverOptions& opts) {
  const KernelPoint base = kernel_point(model, z, opts);
  const cplx z4 = std::pow(z, 4);
  cplx h1s[3], h2s[3];
  for (int i = 0; i < 3; ++i) {
    const KernelValues k = kernels(model, base, kernel_point(model, z + cplx(0.0, kDeltas[i]), opts));
    h1s[i] = k.h1;
    h2s[i] = k.h2_radius;
  }
  const cplx h1 = richardson(h1s[0], h1s[1], h1s[2]);
  const cplx h2 = richardson(h2s[0], h2s[1], h2s[2]);
  return {z4 * (2.0 * h1 + h2), z4 * h1};
}

SigmaSpectrum SigmaSpectrum::from_matrix(const Eigen::MatrixXd& sigma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  if (es.info() != Eigen::Success) throw Error("eigensolver failed on Sigma");
  return {es.eigenvalues(), es.eigenvectors()};
}

cplx r_two_point(const SigmaSpectrum& sigma, cplx g2_z1, cplx g2_z2, const Eigen::VectorXd& pi_j,
                 const Eigen::VectorXd& pi_k) {
  return spectral_sum(sigma, coordinates(sigma, pi_j), coordinates(sigma, pi_k), [&](double s) {
    return resolvent_factor(g2_z1, s) * s * resolvent_factor(g2_z2, s);
  });
}

cplx r_one_point(const SigmaSpectrum& sigma, cplx g2, const Eigen::VectorXd& pi_j,
                 const Eigen::VectorXd& pi_k) {
  return spectral_sum(sigma, coordinates(sigma, pi_j), coordinates(sigma, pi_k), [&](double s) {
    const cplx f = resolvent_factor(g2, s);
    return f * f * s;
  });
}

RFunctionals r_functionals(const SigmaSpectrum& sigma, cplx g2_z1, cplx g2_z2,
                           const Eigen::VectorXd& pi_j, const Eigen::VectorXd& pi_k) {
  return {r_two_point(sigma, g2_z1, g2_z2, pi_j, pi_k), r_one_point(sigma, g2_z1, pi_j, pi_k)};
}

cplx deterministic_equivalent(const SigmaSpectrum& sigma, cplx z, cplx g2, const Eigen::VectorXd& pi1,
                              const Eigen::VectorXd& pi2) {
  return -spectral_sum(sigma, coordinates(sigma, pi1), coordinates(sigma, pi2),
                       [&](double s) { return resolvent_factor(g2, s); }) /
         z;
}

cplx cov_M(const LsdModel& model, const SigmaSpectrum& sigma, const Quadruple& pi, const KernelPoint& a,
           const KernelPoint& b) {
  const KernelValues k = kernels(model, a, b);
  const cplx ga = a.sol.g2, gb = b.sol.g2;
  const cplx r14 = r_two_point(sigma, ga, gb, pi[0], pi[3]);
  const cplx r23 = r_two_point(sigma, ga, gb, pi[1], pi[2]);
  const cplx r13 = r_two_point(sigma, ga, gb, pi[0], pi[2]);
  const cplx r24 = r_two_point(sigma, ga, gb, pi[1], pi[3]);
  const cplx r12 = r_one_point(sigma, ga, pi[0], pi[1]);
  const cplx r34 = r_one_point(sigma, gb, pi[2], pi[3]);
  return k.h1 * r14 * r23 + k.h1 * r13 * r24 + k.h2_radius * r12 * r34;
}

cplx cov_M(const LsdModel& model, const SigmaSpectrum& sigma, const Quadruple& pi, cplx z1, cplx z2,
           const SolverOptions& opts) {
  return cov_M(model, sigma, pi, kernel_point(model, z1, opts), kernel_point(model, z2, opts));
}

cplx cov_M_diagonal(const LsdModel& model, const SigmaSpectrum& sigma, const Quadruple& pi, cplx z,
                    const SolverOptions& opts) {
  const KernelPoint base = kernel_point(model, z, opts);
  cplx v[3];
  for (int i = 0; i < 3; ++i) {
    v[i] = cov_M(model, sigma, pi, base, kernel_point(model, z + cplx(0.0, kDeltas[i]), opts));
  }
  return richardson(v[0], v[1], v[2]);
}

ContourSpec default_contour(const LsdModel& model) {
  const double right = model.outer_bracket().second;
  ContourSpec c;
  c.x_right = 1.2 * right;
  c.x_left = -0.1 * right;
  return c;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw DomainError("Gauss-Legendre needs n >= 1");
  // Golub-Welsch: eigen-decomposition of the Jacobi matrix of the Legendre recurrence.
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    j(k, k - 1) = b;
    j(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  nodes.resize(static_cast<std::size_t>(n));
  weights.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    nodes[static_cast<std::size_t>(k)] = es.eigenvalues()(k);
    weights[static_cast<std::size_t>(k)] = 2.0 * std::pow(es.eigenvectors()(0, k), 2);
  }
}

namespace {

struct Node {
  cplx z;
  cplx dz;  // quadrature weight times dz/dt
};

// Counterclockwise rectangle, quad_n Gauss-Legendre nodes per side.
std::vector<Node> rectangle_nodes(double xl, double xr, double v, int quad_n) {
  std::vector<double> t, w;
  gauss_legendre(quad_n, t, w);
  const cplx corners[5] = {cplx(xl, -v), cplx(xr, -v), cplx(xr, v), cplx(xl, v), cplx(xl, -v)};
  std::vector<Node> out;
  out.reserve(4 * static_cast<std::size_t>(quad_n));
  for (int side = 0; side < 4; ++side) {
    const cplx a = corners[side], b = corners[side + 1];
    for (int k = 0; k < quad_n; ++k) {
      const double tk = t[static_cast<std::size_t>(k)];
      out.push_back({a + (b - a) * (tk + 1.0) / 2.0, (b - a) / 2.0 * w[static_cast<std::size_t>(k)]});
    }
  }
  return out;
}

}  // namespace

double eigvec_stat_cov(const LsdModel& model, const SigmaSpectrum& sigma, const Eigen::VectorXd& pi,
                       const Zeta& zeta_t, const Zeta& zeta_s, const ContourSpec& contour, int quad_n,
                       const SolverOptions& opts) {
  if (quad_n < 2) throw ConfigError("quad_n must be >= 2");
  if (!(contour.separation > 0.0)) throw ConfigError("contours overlap: separation must be > 0");
  if (!(contour.v0 > 0.0) || !(contour.x_right > contour.x_left)) {
    throw ConfigError("contour rectangle is empty");
  }
  const auto [left, right] = model.outer_bracket();
  const bool encloses_zero = model.zero_mass() > 0.0;
  if (!(contour.x_right > right) || !(contour.x_left < (encloses_zero ? 0.0 : left))) {
    throw ConfigError("contour does not enclose the support bracket");
  }
  if (std::abs(pi.norm() - 1.0) > 1e-10) throw DomainError("pi is not a unit vector");

  const std::vector<Node> c1 = rectangle_nodes(contour.x_left, contour.x_right, contour.v0, quad_n);
  const double s = contour.separation;
  const std::vector<Node> c2 =
      rectangle_nodes(contour.x_left - s, contour.x_right + s, contour.v0 + s, quad_n);

  auto prepare = [&](const std::vector<Node>& nodes) {
    std::vector<KernelPoint> pts;
    pts.reserve(nodes.size());
    for (const Node& nd : nodes) pts.push_back(kernel_point(model, nd.z, opts));
    return pts;
  };
  const std::vector<KernelPoint> p1 = prepare(c1), p2 = prepare(c2);

  const Eigen::VectorXd q = coordinates(sigma, pi);
  auto r_two = [&](cplx ga, cplx gb) {
    return spectral_sum(sigma, q, q, [&](double x) {
      return resolvent_factor(ga, x) * x * resolvent_factor(gb, x);
    });
  };
  std::vector<cplx> r1_one(c1.size()), r2_one(c2.size()), zt(c1.size()), zs(c2.size());
  for (std::size_t i = 0; i < c1.size(); ++i) {
    r1_one[i] = r_one_point(sigma, p1[i].sol.g2, pi, pi);
    zt[i] = zeta_t(c1[i].z);
  }
  for (std::size_t k = 0; k < c2.size(); ++k) {
    r2_one[k] = r_one_point(sigma, p2[k].sol.g2, pi, pi);
    zs[k] = zeta_s(c2[k].z);
  }

  cplx total = 0.0;
  for (std::size_t i = 0; i < c1.size(); ++i) {
    cplx row = 0.0;
    for (std::size_t k = 0; k < c2.size(); ++k) {
      const KernelValues kv = kernels(model, p1[i], p2[k]);
      const cplx r = r_two(p1[i].sol.g2, p2[k].sol.g2);
      const cplx varpi = 2.0 * kv.h1 * r * r + kv.h2_radius * r1_one[i] * r2_one[k];
      row += zs[k] * varpi * c2[k].dz;
    }
    total += zt[i] * row * c1[i].dz;
  }
  return (-total / (4.0 * std::numbers::pi * std::numbers::pi)).real();
}

void write_kernel_csv(std::ostream& out, const std::vector<KernelValues>& values) {
  out << "re_z1,im_z1,re_z2,im_z2,re_h1,im_h1,re_h2,im_h2,re_h2_radius,im_h2_radius,re_d,im_d\n";
  out.precision(17);
  for (const KernelValues& k : values) {
    out << k.z1.real() << ',' << k.z1.imag() << ',' << k.z2.real() << ',' << k.z2.imag() << ','
        << k.h1.real() << ',' << k.h1.imag() << ',' << k.h2.real() << ',' << k.h2.imag() << ','
        << k.h2_radius.real() << ',' << k.h2_radius.imag() << ',' << k.d.real() << ',' << k.d.imag() << '\n';
  }
}

}  // namespace elliprmt
