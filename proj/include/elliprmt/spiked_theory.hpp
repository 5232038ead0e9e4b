#pragma once

#include "elliprmt/lsd_solver.hpp"

namespace elliprmt {

// Every operation here takes the model of the non-spiked part: h1 is the ESD of
// Sigma_1p (spikes replaced by zero) and h2 the radius law.

struct Transition {
  double theta = 0.0;    // G(alpha), solving g2(theta) = -1/alpha above the bulk
  double g_prime = 0.0;  // G'(alpha) = 1 / (alpha^2 g2'(theta))
  double edge = 0.0;     // upper bulk edge used for the bracket
  double residual = 0.0; // |g2(theta) + 1/alpha|
};

/// Smallest detectable spike, -1/g2 just above the upper bulk edge.
double detectability_threshold(const LsdModel& model, const SolverOptions& opts = {});

/// Throws SubcriticalSpikeError when no root lies above the edge.
Transition transition(const LsdModel& model, double alpha, const SolverOptions& opts = {});

struct SpikePrediction {
  double alpha = 0.0;
  double theta = 0.0;
  double g_prime = 0.0;
  double sigma_delta_sq = 0.0;
  double overlap_sq = 0.0;
  bool light_tail = false;
  double edge = 0.0;
};

/// 2 (theta g2)' / ((theta m_)' g2' theta^2) + (m_/g2)' / g1', all at theta.
double sigma_delta_sq(const LsdModel& model, double alpha, const SolverOptions& opts = {});

/// G'(alpha) / (G(alpha) / alpha).
double overlap_sq(const LsdModel& model, double alpha, const SolverOptions& opts = {});

SpikePrediction predict_spike(const LsdModel& model, double alpha, const SolverOptions& opts = {});

// Closed forms valid when H2 = delta_1.

/// psi(alpha) = alpha + c alpha int t/(alpha - t) dH1.
double psi_light_tail(const LsdModel& model, double alpha);
/// (1 - c int t^2/(alpha - t)^2 dH1) / (1 + c int t/(alpha - t) dH1).
double overlap_light_tail(const LsdModel& model, double alpha);
/// 2 / (m_'(theta) theta^2).
double sigma_delta_sq_light_tail(const LsdModel& model, double theta, const SolverOptions& opts = {});

/// Limiting covariance profile of the K x K matrix O(z) at real z above the edge.
class GoeProfile {
 public:
  GoeProfile(int k, double sigma11_sq, double sigma12_sq);

  int size() const { return k_; }
  double sigma11_sq() const { return s11_; }
  double sigma12_sq() const { return s12_; }
  /// Cov(O_ij, O_kl): sigma11^2 when i=j=k=l, sigma12^2 for (i=k, j=l) or
  /// (i=l, j=k) with i != j, zero otherwise.
  double cov(int i, int j, int k, int l) const;

 private:
  int k_;
  double s11_;
  double s12_;
};

GoeProfile goe_covariance_profile(const LsdModel& model, double z, int k, const SolverOptions& opts = {});

}  // namespace elliprmt
