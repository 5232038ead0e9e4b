// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "elliprmt/error.hpp"
#include "elliprmt/experiments.hpp"
#include "elliprmt/fluctuation_kernel.hpp"
#include "elliprmt/lsd_solver.hpp"
#include "elliprmt/spiked_theory.hpp"

using namespace elliprmt;
using nlohmann::json;

namespace {

constexpr double kMpTol = 1e-10;
constexpr double kIdentityTol = 1e-10;
constexpr double kDerivativeTol = 1e-6;
constexpr double kFiniteDiffStep = 1e-5;
constexpr double kSpikeTol = 1e-8;
constexpr double kQuadformZ = 5.0;
constexpr double kQuadformSeconds = 30.0;
constexpr double kMpSeconds = 1.0;
constexpr double kAsDeviation = 0.08;
constexpr double kCltVarRel = 0.15;
constexpr double kCltMeanZ = 3.0;
constexpr double kCltMinutes = 10.0;
constexpr double kGoeLower = 0.85, kGoeUpper = 1.15, kGoeCovZ = 3.0;
constexpr double kSpikeMeanZ = 3.0, kSpikeVarLower = 0.85, kSpikeVarUpper = 1.15, kSpikeKs = 0.05;
constexpr double kOverlapTarget = 0.9238, kOverlapTol = 0.02, kWitnessZ = 3.0, kWitnessTol = 0.03;
constexpr double kVesdVarRel = 0.15, kVesdSelfConv = 1e-4;

int failures = 0;
int jobs = 1;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("C%-2d %s %-22s %s\n", id, pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

// Catches anything a criterion throws and reports it as a failure.
void criterion(int id, const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
  try {
    const auto [pass, detail] = body();
    report(id, name, pass, detail);
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double get(const json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

// Root of c z m^2 + (z - 1 + c) m + 1 = 0 with Im m > 0.
cplx mp_root(double c, cplx z) {
  const cplx b = z - 1.0 + c;
  const cplx s = std::sqrt(b * b - 4.0 * c * z);
  const cplx r1 = (-b + s) / (2.0 * c * z), r2 = (-b - s) / (2.0 * c * z);
  return r1.imag() > 0.0 ? r1 : r2;
}

LsdModel mp(double c) { return {c, DiscreteMeasure::point_mass(1.0), DiscreteMeasure::point_mass(1.0)}; }

ExperimentResult run(const char* text) { return run_experiment(ExperimentConfig::from_json(json::parse(text)), {jobs}); }

struct MpPoint {
  double c;
  cplx z;
  LsdSolution sol;
};
std::vector<MpPoint> mp_points;

}  // namespace

int main() {
  jobs = std::max(1u, std::thread::hardware_concurrency());
  std::printf("acceptance run, %d worker thread(s)\n", jobs);

  criterion(1, "mp_oracle", [] {
    std::mt19937_64 rng(20261019);
    std::uniform_real_distribution<double> re(-2.0, 6.0), im(0.1, 2.0);
    double worst = 0.0;
    const auto t0 = Clock::now();
    for (double c : {0.1, 0.5, 1.0, 2.0}) {
      const LsdModel model = mp(c);
      for (int i = 0; i < 50; ++i) {
        const cplx z(re(rng), im(rng));
        const LsdSolution sol = solve_lsd(model, z);
        worst = std::max(worst, std::abs(sol.m - mp_root(c, z)));
        mp_points.push_back({c, z, sol});
      }
    }
    const double secs = seconds_since(t0);
    return std::pair{worst < kMpTol && secs < kMpSeconds,
                     fmt("max|m - root| = %.2e", worst) + fmt(" over 200 points, %.3f s", secs)};
  });

  criterion(2, "companion_identities", [] {
    double e1 = 0.0, e2 = 0.0, e3 = 0.0;
    for (const MpPoint& p : mp_points) {
      const LsdSolution& s = p.sol;
      e1 = std::max(e1, std::abs(s.m_under - (-1.0 / p.z - s.g1 * s.g2)));
      e2 = std::max(e2, std::abs(s.m_under - (-(1.0 - p.c) / p.z + p.c * s.m)));
      e3 = std::max(e3, std::abs(s.m_under - s.g2));
    }
    // The same identities off the light tail (the third does not apply there).
    const LsdModel general{0.3, DiscreteMeasure({0.5, 1.0, 3.0}, {0.3, 0.5, 0.2}),
                           DiscreteMeasure({0.4, 1.1, 1.6}, {0.25, 0.5, 0.25})};
    for (double x = -1.0; x <= 5.0; x += 0.5) {
      for (double y : {0.1, 0.7, 1.9}) {
        const cplx z(x, y);
        const LsdSolution s = solve_lsd(general, z);
        e1 = std::max(e1, std::abs(s.m_under - (-1.0 / z - s.g1 * s.g2)));
        e2 = std::max(e2, std::abs(s.m_under - (-(1.0 - general.c) / z + general.c * s.m)));
      }
    }
    const bool ok = e1 < kIdentityTol && e2 < kIdentityTol && e3 < kIdentityTol;
    return std::pair{ok, fmt("g1g2 form %.1e", e1) + fmt(", m form %.1e", e2) + fmt(", light tail %.1e", e3)};
  });

  criterion(3, "derivative_oracle", [] {
    const LsdModel model{0.4, DiscreteMeasure({0.5, 1.0, 3.0}, {0.3, 0.5, 0.2}),
                         radius_law_to_h2(make_radius_law(RadiusKind::two_point, 100, 1e4))};
    double worst = 0.0;
    int points = 0;
    for (double x : {-0.5, 0.5, 1.5, 2.5, 3.5}) {
      for (double y : {0.1, 0.5, 1.0, 2.0}) {
        const cplx z(x, y);
        const LsdDerivatives d = derivatives(model, evaluate_lsd(model, z));
        const LsdSolution a = evaluate_lsd(model, z + kFiniteDiffStep);
        const LsdSolution b = evaluate_lsd(model, z - kFiniteDiffStep);
        const double h2 = 2.0 * kFiniteDiffStep;
        const cplx pairs[4][2] = {{d.g1p, (a.g1 - b.g1) / h2},
                                  {d.g2p, (a.g2 - b.g2) / h2},
                                  {d.m_under_p, (a.m_under - b.m_under) / h2},
                                  {d.mp, (a.m - b.m) / h2}};
        for (const auto& pr : pairs) worst = std::max(worst, std::abs(pr[0] - pr[1]) / std::abs(pr[1]));
        ++points;
      }
    }
    return std::pair{worst < kDerivativeTol, fmt("max relative error %.2e", worst) + " on " + std::to_string(points) +
                                                 " points"};
  });

  criterion(4, "spike_light_tail", [] {
    const double alpha = 8.0, c = 0.5;
    const SpikePrediction p = predict_spike(mp(c), alpha);
    // Companion m_ at real theta: the MP root that vanishes at infinity, differentiated implicitly.
    const double th = p.theta;
    const double b = th - 1.0 + c;
    const double m = (-b + std::sqrt(b * b - 4.0 * c * th)) / (2.0 * c * th);
    const double mp_prime = -(c * m * m + m) / (2.0 * c * th * m + b);
    const double mu_prime = (1.0 - c) / (th * th) + c * mp_prime;
    const double e_theta = std::abs(th - 60.0 / 7.0);
    const double e_sigma = std::abs(p.sigma_delta_sq - 2.0 / (mu_prime * th * th));
    const double overlap = (1.0 - c / 49.0) / (1.0 + c / 7.0);
    const double e_overlap = std::max(std::abs(p.overlap_sq - overlap), std::abs(p.overlap_sq - 0.9238095238095238));

    // A non-degenerate bulk: psi and the overlap from their sums, m_' by differences.
    const LsdModel bulk{c, DiscreteMeasure({0.5, 1.0, 2.0}, {0.25, 0.5, 0.25}), DiscreteMeasure::point_mass(1.0)};
    const SpikePrediction q = predict_spike(bulk, alpha);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < bulk.h1.size(); ++i) {
      const double t = bulk.h1.atoms()[i], w = bulk.h1.weights()[i];
      s1 += w * t / (alpha - t);
      s2 += w * t * t / ((alpha - t) * (alpha - t));
    }
    const double h = kFiniteDiffStep;
    const double mu_fd =
        (evaluate_lsd(bulk, q.theta + h).m_under.real() - evaluate_lsd(bulk, q.theta - h).m_under.real()) / (2.0 * h);
    const double e_theta2 = std::abs(q.theta - (alpha + c * alpha * s1));
    const double e_overlap2 = std::abs(q.overlap_sq - (1.0 - c * s2) / (1.0 + c * s1));
    const double e_sigma2 = std::abs(q.sigma_delta_sq - 2.0 / (mu_fd * q.theta * q.theta)) / q.sigma_delta_sq;

    const bool ok = std::max({e_theta, e_sigma, e_overlap, e_theta2, e_overlap2}) < kSpikeTol && e_sigma2 < 1e-6;
    std::ostringstream d;
    d.precision(3);
    d << "theta " << std::fixed << th << std::scientific << " (err " << e_theta << "), sigma err " << e_sigma
      << ", overlap " << std::fixed << std::setprecision(7) << p.overlap_sq << std::scientific << std::setprecision(2)
      << " (err " << e_overlap << "); bulk: " << e_theta2 << ", " << e_overlap2 << ", " << e_sigma2;
    return std::pair{ok, d.str()};
  });

  criterion(5, "quadform_oracle", [] {
    const auto t0 = Clock::now();
    const ExperimentResult r = run(R"J({"kind":"quadform-oracle","reps":1000,"batch":1000,"pairs":5,
                                       "quad_p":10,"seed":5005})J");
    const double secs = seconds_since(t0);
    double worst = 0.0;
    for (const json& c : r.summary["checks"]) worst = std::max(worst, std::abs(get(c["value"])));
    const bool ok = worst < kQuadformZ && secs < kQuadformSeconds && r.failures == 0;
    return std::pair{ok, fmt("max |z| = %.2f", worst) + " over 5 pairs x 1e6 draws" + fmt(", %.1f s", secs)};
  });

  criterion(6, "bilinear_as", [] {
    const ExperimentResult r = run(R"J({"kind":"bilinear-as","p":400,"n":800,"reps":50,"seed":6006,
      "radius":[{"nu":"0"},{"nu":"p"},{"nu":"p^2"}],
      "population":{"spikes":[],"bulk":{"kind":"constant","value":1}},
      "z_points":[[1,1]],"forms":[["e1","e1"]]})J");
    double worst = 0.0;
    std::string detail;
    for (const json& c : r.summary["cases"]) {
      const double v = get(c["points"][0]["mean_deviation"]);
      worst = std::max(worst, std::isfinite(v) ? v : 1e300);
      detail += c["label"].get<std::string>() + fmt(": %.4f  ", v);
    }
    return std::pair{worst < kAsDeviation && r.failures == 0, detail};
  });

  criterion(7, "bilinear_clt", [] {
    const auto t0 = Clock::now();
    const ExperimentResult r = run(R"J({"kind":"bilinear-clt","p":200,"n":400,"reps":2000,"seed":7007,
      "radius":[{"nu":"0"},{"nu":"p^2"}],
      "population":{"spikes":[],"bulk":{"kind":"constant","value":1}},
      "z_points":[[1.5,1]],"forms":[["e1","e1"]]})J");
    const double mins = seconds_since(t0) / 60.0;
    bool ok = mins < kCltMinutes && r.failures == 0;
    std::string detail;
    for (const json& c : r.summary["cases"]) {
      const json& pt = c["points"][0];
      const double rel = get(pt["var_rel_error"]), rel_pseudo = get(pt["pseudo_var_rel_error"]);
      const double mz = get(pt["mean_z"]);
      ok = ok && rel < kCltVarRel && rel_pseudo < kCltVarRel && mz < kCltMeanZ;
      detail += c["label"].get<std::string>() + fmt(": var err %.3f", rel) + fmt(", pseudo err %.3f", rel_pseudo) +
                fmt(", mean z %.2f  ", mz);
    }
    return std::pair{ok, detail + fmt("(%.1f min)", mins)};
  });

  criterion(8, "goe_entries", [] {
    const ExperimentResult r = run(R"J({"kind":"goe-entries","p":200,"n":400,"reps":2000,"seed":8008,
      "radius":[{"nu":"0"}],"population":{"spikes":[8,5],"bulk":{"kind":"uniform"}}})J");
    const json& c = r.summary["cases"][0];
    const double v11 = get(c["var11_ratio"]), v12 = get(c["var12_ratio"]), cz = get(c["cov_z"]);
    const bool ok = v11 >= kGoeLower && v11 <= kGoeUpper && v12 >= kGoeLower && v12 <= kGoeUpper &&
                    std::abs(cz) < kGoeCovZ && r.failures == 0;
    return std::pair{ok, fmt("var11 ratio %.3f", v11) + fmt(", var12 ratio %.3f", v12) + fmt(", cov z %.2f", cz)};
  });

  criterion(9, "spike_dist", [] {
    const ExperimentResult r = run(R"J({"kind":"spike-dist","p":100,"n":200,"reps":2000,"seed":9009,
      "radius":[{"nu":"0"},{"nu":"sqrt(p)"},{"nu":"p"},{"nu":"2p"},{"nu":"p^2"}],
      "population":{"spikes":[8],"bulk":{"kind":"uniform"},"toeplitz_rho":0.9}})J");
    bool ok = r.failures == 0;
    std::string detail;
    for (const json& c : r.summary["cases"]) {
      const double mz = get(c["mean_z"]), vr = get(c["var_ratio"]), ks = get(c["ks"]);
      ok = ok && std::abs(mz) < kSpikeMeanZ && vr >= kSpikeVarLower && vr <= kSpikeVarUpper && ks < kSpikeKs;
      detail += "[" + c["label"].get<std::string>().substr(10) + fmt(" z %.2f", mz) + fmt(" var %.3f", vr) +
                fmt(" ks %.3f] ", ks);
    }
    return std::pair{ok, detail};
  });

  criterion(10, "eigvec_overlap", [] {
    const ExperimentResult r = run(R"J({"kind":"eigvec-overlap","c":0.5,"grid":[256],"reps":500,"seed":10010,
      "radius":[{"nu":"0"},{"nu":"p^2"}],
      "population":{"spikes":[8],"bulk":{"kind":"constant","value":1}}})J");
    const json& light = r.summary["cases"][0];
    const json& heavy = r.summary["cases"][1];
    const double ml = get(light["mean"]);
    const double wz = get(heavy["light_tail_z"]), werr = get(heavy["abs_error"]);
    const bool ok = std::abs(ml - kOverlapTarget) < kOverlapTol && std::abs(wz) > kWitnessZ && werr < kWitnessTol &&
                    r.failures == 0;
    return std::pair{ok, fmt("nu=0 mean %.4f", ml) + fmt("; nu=p^2 mean %.4f", get(heavy["mean"])) +
                             fmt(" (own theory %.4f,", get(heavy["theory"])) + fmt(" err %.4f,", werr) +
                             fmt(" z vs light tail %.1f)", wz)};
  });

  criterion(11, "vesd", [] {
    const ExperimentResult r = run(R"J({"kind":"vesd","p":200,"n":400,"reps":2000,"seed":11011,
      "radius":[{"nu":"0"}],"population":{"spikes":[],"bulk":{"kind":"constant","value":1}},
      "pi":"e1","zeta":["x"],"quad_n":32})J");
    const json& s = r.summary["cases"][0]["statistics"][0];
    const double rel = get(s["var_rel_error"]), conv = get(s["quad_self_convergence"]);
    const bool ok = rel < kVesdVarRel && conv < kVesdSelfConv && r.failures == 0;
    return std::pair{ok, fmt("variance %.4f", get(s["variance"])) + fmt(" vs contour %.4f", get(s["theory_variance"])) +
                             fmt(" (err %.3f)", rel) + fmt(", self-convergence %.1e", conv)};
  });

  criterion(12, "determinism", [] {
    const char* configs[] = {
        R"J({"kind":"spike-dist","p":40,"n":80,"reps":200,"seed":12,"radius":[{"nu":"0"},{"nu":"p^2"}],
            "population":{"spikes":[8]}})J",
        R"J({"kind":"eigvec-overlap","c":0.5,"grid":[48,64],"reps":100,"seed":12,"population":{"spikes":[8]}})J",
        R"J({"kind":"bilinear-clt","p":40,"n":80,"reps":200,"seed":12,"radius":[{"nu":"p^2"}],
            "population":{"spikes":[],"bulk":{"kind":"constant","value":1}},"z_points":[[1.5,1]],
            "forms":[["e1","e1"],["e1","e2"]]})J",
        R"J({"kind":"goe-entries","p":40,"n":80,"reps":200,"seed":12,"population":{"spikes":[8,5]}})J",
        R"J({"kind":"vesd","p":40,"n":80,"reps":200,"seed":12,"quad_n":16,
            "population":{"spikes":[],"bulk":{"kind":"constant","value":1}}})J",
        R"J({"kind":"bilinear-as","p":40,"n":80,"reps":100,"seed":12,"radius":[{"nu":"p"}],
            "population":{"spikes":[]},"z_points":[[1,1]],"forms":[["e1","e1"],["uniform","random1"]]})J",
        R"J({"kind":"quadform-oracle","reps":50,"batch":200,"pairs":2,"quad_p":5,"seed":12})J",
    };
    int same = 0, total = 0;
    for (const char* text : configs) {
      const ExperimentConfig cfg = ExperimentConfig::from_json(json::parse(text));
      const std::string a = run_experiment(cfg, {1}).summary.dump(2);
      const std::string b = run_experiment(cfg, {8}).summary.dump(2);
      same += a == b;
      ++total;
    }
    return std::pair{same == total, std::to_string(same) + "/" + std::to_string(total) +
                                        " experiment kinds byte-identical at --jobs 1 and 8"};
  });

  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
