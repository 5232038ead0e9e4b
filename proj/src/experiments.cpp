#include "elliprmt/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include <Eigen/QR>

#include "elliprmt/covariance.hpp"
#include "elliprmt/error.hpp"
#include "elliprmt/fluctuation_kernel.hpp"
#include "elliprmt/spiked_theory.hpp"

namespace elliprmt {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Fixed substream tags of the master seed.
constexpr std::uint64_t kBulkStream = 0xB01CULL;
constexpr std::uint64_t kRandomDirStream = 0xD1ECULL;
constexpr std::uint64_t kMatrixStream = 0x51A7ULL;

// ---------------------------------------------------------------- config parsing

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

double get_number(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_number()) throw ConfigError("'" + key + "' in " + where + " must be a number");
  return j.get<double>();
}

long get_integer(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError("'" + key + "' in " + where + " must be an integer");
  return j.get<long>();
}

std::string get_string(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_string()) throw ConfigError("'" + key + "' in " + where + " must be a string");
  return j.get<std::string>();
}

std::uint64_t get_seed(const json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    const long v = j.get<long>();
    if (v < 0) throw ConfigError("'seed' must be non-negative");
    return static_cast<std::uint64_t>(v);
  }
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw ConfigError("'seed' string is not a 64-bit unsigned integer: " + s);
    }
    return v;
  }
  throw ConfigError("'seed' must be an unsigned integer");
}

RadiusSpec parse_radius(const json& j) {
  reject_unknown(j, {"kind", "nu"}, "radius");
  RadiusSpec r;
  if (j.contains("kind")) r.kind = radius_kind_from_string(get_string(j["kind"], "kind", "radius"));
  if (j.contains("nu")) {
    const json& nu = j["nu"];
    if (nu.is_number()) {
      r.nu.kind = NuRule::Kind::fixed;
      r.nu.value = nu.get<double>();
    } else {
      r.nu = NuRule::parse(get_string(nu, "nu", "radius"));
    }
  } else if (r.kind == RadiusKind::chi_square) {
    r.nu.kind = NuRule::Kind::two_p;
  }
  return r;
}

json radius_to_json(const RadiusSpec& r) {
  json j;
  j["kind"] = to_string(r.kind);
  if (r.nu.kind == NuRule::Kind::fixed) {
    j["nu"] = r.nu.value;
  } else {
    j["nu"] = r.nu.name();
  }
  return j;
}

PopulationConfig parse_population(const json& j) {
  reject_unknown(j, {"spikes", "bulk", "toeplitz_rho", "separation"}, "population");
  PopulationConfig pc;
  if (j.contains("spikes")) {
    if (!j["spikes"].is_array()) throw ConfigError("'spikes' in population must be an array");
    for (const auto& s : j["spikes"]) pc.spikes.push_back(get_number(s, "spikes", "population"));
  }
  if (j.contains("bulk")) {
    const json& b = j["bulk"];
    reject_unknown(b, {"kind", "values", "value", "seed"}, "population.bulk");
    const std::string kind = b.contains("kind") ? get_string(b["kind"], "kind", "population.bulk")
                                                : std::string("uniform");
    if (kind == "uniform") {
      pc.bulk = BulkRule::Kind::uniform;
    } else if (kind == "constant") {
      pc.bulk = BulkRule::Kind::constant;
    } else if (kind == "explicit") {
      pc.bulk = BulkRule::Kind::explicit_values;
    } else {
      throw ConfigError("unknown bulk kind '" + kind + "' (uniform, constant, explicit)");
    }
    if (b.contains("values")) {
      if (!b["values"].is_array()) throw ConfigError("'values' in population.bulk must be an array");
      for (const auto& v : b["values"]) pc.bulk_values.push_back(get_number(v, "values", "population.bulk"));
    }
    if (b.contains("value")) pc.bulk_constant = get_number(b["value"], "value", "population.bulk");
    if (b.contains("seed")) {
      pc.has_bulk_seed = true;
      pc.bulk_seed = get_seed(b["seed"]);
    }
  }
  if (j.contains("toeplitz_rho")) pc.toeplitz_rho = get_number(j["toeplitz_rho"], "toeplitz_rho", "population");
  if (j.contains("separation")) pc.separation = get_number(j["separation"], "separation", "population");
  return pc;
}

json population_to_json(const PopulationConfig& pc) {
  json j;
  j["spikes"] = pc.spikes;
  json b;
  switch (pc.bulk) {
    case BulkRule::Kind::uniform: b["kind"] = "uniform"; break;
    case BulkRule::Kind::constant:
      b["kind"] = "constant";
      b["value"] = pc.bulk_constant;
      break;
    case BulkRule::Kind::explicit_values:
      b["kind"] = "explicit";
      b["values"] = pc.bulk_values;
      break;
  }
  if (pc.has_bulk_seed) b["seed"] = pc.bulk_seed;
  j["bulk"] = b;
  j["toeplitz_rho"] = pc.toeplitz_rho;
  j["separation"] = pc.separation;
  return j;
}

cplx parse_complex(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw ConfigError("z_points entries must be numbers or [re, im] pairs");
}

const std::map<ExperimentKind, std::set<std::string>>& known_thresholds() {
  static const std::map<ExperimentKind, std::set<std::string>> table{
      {ExperimentKind::spike_dist, {"mean_z", "var_ratio", "ks"}},
      {ExperimentKind::eigvec_overlap, {"overlap_abs_error", "mean_z"}},
      {ExperimentKind::bilinear_as, {"mean_deviation"}},
      {ExperimentKind::bilinear_clt, {"var_rel_error", "pseudo_var_rel_error", "mean_z", "cross_z"}},
      {ExperimentKind::goe_entries, {"var11_ratio", "var12_ratio", "cov_z", "mean_z"}},
      {ExperimentKind::vesd, {"var_rel_error", "mean_z", "quad_self_convergence", "mass_abs"}},
      {ExperimentKind::quadform_oracle, {"z"}},
  };
  return table;
}

Threshold parse_threshold(const json& j, const std::string& key) {
  Threshold t;
  if (j.is_number()) {
    t.upper = j.get<double>();
    return t;
  }
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    t.has_lower = true;
    t.lower = j[0].get<double>();
    t.upper = j[1].get<double>();
    if (t.lower > t.upper) throw ConfigError("threshold '" + key + "' has lower > upper");
    return t;
  }
  throw ConfigError("threshold '" + key + "' must be a number or a [lower, upper] pair");
}

// ---------------------------------------------------------------- statistics

struct Moments {
  long n = 0;
  double mean = kNaN;
  double var = kNaN;  // unbiased
  double se = kNaN;   // of the mean
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  double sum = 0.0;
  for (double x : v) {
    if (std::isfinite(x)) {
      sum += x;
      ++m.n;
    }
  }
  if (m.n == 0) return m;
  m.mean = sum / m.n;
  if (m.n < 2) return m;
  double ss = 0.0;
  for (double x : v) {
    if (std::isfinite(x)) ss += (x - m.mean) * (x - m.mean);
  }
  m.var = ss / (m.n - 1);
  m.se = std::sqrt(m.var / m.n);
  return m;
}

// Sample covariance of paired finite values, with the standard error of the
// mean of centered products.
struct CoMoments {
  double cov = kNaN;
  double se = kNaN;
};

CoMoments co_moments(const std::vector<double>& a, const std::vector<double>& b) {
  const Moments ma = moments(a);
  const Moments mb = moments(b);
  std::vector<double> prod;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isfinite(a[i]) && std::isfinite(b[i])) prod.push_back((a[i] - ma.mean) * (b[i] - mb.mean));
  }
  CoMoments out;
  const Moments mp = moments(prod);
  if (mp.n < 2) return out;
  out.cov = mp.mean * mp.n / (mp.n - 1);
  out.se = mp.se;
  return out;
}

double z_score(double value, double center, double se) {
  if (!(se > 0.0)) return kNaN;
  return (value - center) / se;
}

json num(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

json cnum(cplx z) { return json::array({num(z.real()), num(z.imag())}); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// ---------------------------------------------------------------- threshold checks

class Checks {
 public:
  explicit Checks(const std::map<std::string, Threshold>& thresholds) : thresholds_(thresholds) {}

  void add(const std::string& name, const std::string& where, double value) {
    const auto it = thresholds_.find(name);
    if (it == thresholds_.end()) return;
    const Threshold& t = it->second;
    const bool ok = std::isfinite(value) && value <= t.upper && (!t.has_lower || value >= t.lower);
    json c;
    c["name"] = name;
    c["where"] = where;
    c["value"] = num(value);
    if (t.has_lower) c["lower"] = t.lower;
    c["upper"] = t.upper;
    c["pass"] = ok;
    list_.push_back(c);
    all_ &= ok;
  }

  void write(json& summary) const {
    summary["checks"] = list_;
    summary["pass"] = all_;
  }

 private:
  const std::map<std::string, Threshold>& thresholds_;
  json list_ = json::array();
  bool all_ = true;
};

// ---------------------------------------------------------------- replicate engine

struct ReplicateRow {
  bool failed = false;
  std::string error;
  std::vector<double> values;
};

// Runs body(i, values) for i = 0..count-1 over `jobs` workers. Each slot is
// written by exactly one worker, so the rows come back in index order.
template <class Body>
std::vector<ReplicateRow> run_replicates(long count, int jobs, std::size_t width, const Body& body) {
  std::vector<ReplicateRow> rows(static_cast<std::size_t>(count));
  std::atomic<long> next{0};
  auto worker = [&]() {
    for (long i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      ReplicateRow& row = rows[static_cast<std::size_t>(i)];
      row.values.assign(width, kNaN);
      try {
        body(i, row.values);
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
        std::fill(row.values.begin(), row.values.end(), kNaN);
      }
    }
  };
  const long workers = std::clamp<long>(jobs, 1, std::max<long>(1, count));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (long w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  return rows;
}

// Shared result assembly: one block of rows per case.
class ResultBuilder {
 public:
  ResultBuilder(ExperimentKind kind, std::vector<std::string> value_columns) {
    result_.kind = kind;
    result_.columns = {"case", "replicate", "failed"};
    for (auto& c : value_columns) result_.columns.push_back(std::move(c));
  }

  // Appends the rows of one case; returns the value columns (NaN for failures).
  std::vector<std::vector<double>> add_case(int case_index, const std::string& label,
                                            const std::vector<ReplicateRow>& rows) {
    const std::size_t width = result_.columns.size() - 3;
    std::vector<std::vector<double>> cols(width);
    long failed = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const ReplicateRow& r = rows[i];
      std::vector<double> rec{static_cast<double>(case_index), static_cast<double>(i), r.failed ? 1.0 : 0.0};
      rec.insert(rec.end(), r.values.begin(), r.values.end());
      result_.records.push_back(std::move(rec));
      for (std::size_t k = 0; k < width; ++k) cols[k].push_back(r.values[k]);
      if (r.failed) {
        ++failed;
        if (failed == 1) result_.warnings.push_back(label + ": replicate " + std::to_string(i) + " failed: " + r.error);
      }
    }
    if (failed > 1) {
      result_.warnings.push_back(label + ": " + std::to_string(failed) + " replicates failed in total");
    }
    result_.failures += failed;
    case_failures_ = failed;
    return cols;
  }

  long case_failures() const { return case_failures_; }
  ExperimentResult& result() { return result_; }

  ExperimentResult finish(const ExperimentConfig& cfg, json cases, json theory, const Checks& checks) {
    json& s = result_.summary;
    s["kind"] = to_string(cfg.kind);
    s["config"] = cfg.to_json();
    s["cases"] = std::move(cases);
    s["failures"] = result_.failures;
    s["records"] = static_cast<long>(result_.records.size());
    s["records_checksum"] = fnv1a_hex(records_csv(result_));
    s["warnings"] = result_.warnings;
    checks.write(s);
    result_.theory = std::move(theory);
    return std::move(result_);
  }

 private:
  ExperimentResult result_;
  long case_failures_ = 0;
};

// ---------------------------------------------------------------- shared setup

std::uint64_t case_seed(std::uint64_t master, int case_index) {
  return substream_seed(master, 0x100000000ULL + static_cast<std::uint64_t>(case_index));
}

std::shared_ptr<const Population> make_population(const ExperimentConfig& cfg, int p,
                                                  std::vector<std::string>& warnings) {
  auto pop = std::make_shared<const Population>(build_population(cfg.population.spec(p, cfg.seed)));
  for (const auto& w : pop->warnings) warnings.push_back("population (p=" + std::to_string(p) + "): " + w);
  return pop;
}

LsdModel finite_model(const Population& pop, const RadiusLaw& law, int n, bool nonspiked) {
  LsdModel m;
  m.c = static_cast<double>(pop.dimension()) / n;
  m.h1 = nonspiked ? pop.h1_nonspiked() : pop.h1();
  m.h2 = radius_law_to_h2(law);
  return m;
}

// p -> infinity with c fixed: spike atoms drop out of H1, and H2 tends to delta_1
// unless nu_p grows like p^2.
LsdModel limit_model(const Population& pop, const RadiusSpec& r, const RadiusLaw& law, int n) {
  LsdModel m;
  m.c = static_cast<double>(pop.dimension()) / n;
  const int k = pop.spike_count();
  const int p = pop.dimension();
  if (k < p) {
    std::vector<double> bulk(pop.eigenvalues.data() + k, pop.eigenvalues.data() + p);
    m.h1 = DiscreteMeasure::empirical(bulk);
  } else {
    m.h1 = DiscreteMeasure::point_mass(0.0);
  }
  const bool heavy = r.nu.kind == NuRule::Kind::p_squared || r.nu.kind == NuRule::Kind::fixed;
  m.h2 = heavy ? radius_law_to_h2(law) : DiscreteMeasure::point_mass(1.0);
  return m;
}

json model_json(const LsdModel& m) {
  json j;
  j["c"] = m.c;
  j["h1_atoms"] = static_cast<long>(m.h1.size());
  j["h1_mean"] = m.h1.mean();
  j["h2_atoms"] = static_cast<long>(m.h2.size());
  j["h2_mean"] = m.h2.mean();
  j["light_tail"] = m.light_tail();
  return j;
}

json prediction_json(const SpikePrediction& s) {
  json j;
  j["alpha"] = s.alpha;
  j["theta"] = s.theta;
  j["g_prime"] = s.g_prime;
  j["sigma_delta_sq"] = s.sigma_delta_sq;
  j["overlap_sq"] = s.overlap_sq;
  j["light_tail"] = s.light_tail;
  j["edge"] = s.edge;
  return j;
}

// z must keep at least zone_delta away from the support.
void require_in_zone(const LsdModel& model, cplx z, double delta) {
  if (std::abs(z.imag()) >= delta) return;
  const double x = z.real();
  const double edge = upper_bulk_edge(model);
  if (x > edge + delta || x < -delta) return;
  std::ostringstream msg;
  msg << "z = " << z.real() << (z.imag() < 0 ? "" : "+") << z.imag()
      << "i is within " << delta << " of the limiting support (upper edge " << edge << ")";
  throw ConfigError(msg.str());
}

std::string zlabel(cplx z) {
  std::ostringstream s;
  s << z.real() << (z.imag() < 0 ? "" : "+") << z.imag() << "i";
  return s.str();
}

Histogram make_histogram(const std::vector<double>& values, int bins, double mean, double sd,
                         const std::string& label) {
  Histogram h;
  h.label = label;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!std::isfinite(lo)) return h;
  if (hi <= lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / bins;
  h.bins.resize(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    HistogramBin& bin = h.bins[static_cast<std::size_t>(b)];
    bin.left = lo + b * width;
    bin.right = (b + 1 == bins) ? hi : lo + (b + 1) * width;
    const double mid = 0.5 * (bin.left + bin.right);
    bin.gauss_density = (sd > 0.0) ? std::exp(-0.5 * std::pow((mid - mean) / sd, 2)) /
                                         (sd * std::sqrt(2.0 * std::numbers::pi))
                                   : kNaN;
  }
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    const int b = std::clamp(static_cast<int>(std::floor((v - lo) / width)), 0, bins - 1);
    ++h.bins[static_cast<std::size_t>(b)].count;
  }
  return h;
}

Zeta parse_zeta(const std::string& s) {
  if (s == "1") return [](cplx) { return cplx(1.0, 0.0); };
  if (s == "x") return [](cplx z) { return z; };
  if (s.size() > 2 && s.compare(0, 2, "x^") == 0) {
    int k = 0;
    const auto res = std::from_chars(s.data() + 2, s.data() + s.size(), k);
    if (res.ec == std::errc() && res.ptr == s.data() + s.size() && k >= 0 && k <= 8) {
      return [k](cplx z) { return std::pow(z, k); };
    }
  }
  throw ConfigError("unknown test function '" + s + "' (1, x, x^k with k <= 8)");
}

// ---------------------------------------------------------------- experiments

ExperimentResult spike_dist(const ExperimentConfig& cfg, const RunOptions& opts) {
  ResultBuilder rb(ExperimentKind::spike_dist, {"lambda", "delta", "standardized"});
  std::vector<std::string>& warnings = rb.result().warnings;
  auto pop = make_population(cfg, cfg.p, warnings);
  const double alpha = cfg.population.spikes[static_cast<std::size_t>(cfg.spike_index)];
  Checks checks(cfg.thresholds);
  json cases = json::array();
  json theory = json::array();

  for (std::size_t ci = 0; ci < cfg.radius.size(); ++ci) {
    const RadiusSpec& rs = cfg.radius[ci];
    const RadiusLaw law = rs.law(cfg.p);
    const std::string label = rs.label();
    const LsdModel model = finite_model(*pop, law, cfg.n, true);
    const SpikePrediction pred = predict_spike(model, alpha);
    const double theta = pred.theta;
    const double sd_delta = std::sqrt(pred.sigma_delta_sq);
    const double root_n = std::sqrt(static_cast<double>(cfg.n));
    const double theory_sd = theta * sd_delta / root_n;

    json th;
    th["label"] = label;
    th["model"] = model_json(model);
    th["finite_n"] = prediction_json(pred);
    th["gauss_overlay"] = {{"mean", theta}, {"sd", theory_sd}};
    try {
      th["limit"] = prediction_json(predict_spike(limit_model(*pop, rs, law, cfg.n), alpha));
    } catch (const Error& e) {
      th["limit"] = nullptr;
      warnings.push_back(label + ": limiting prediction unavailable: " + e.what());
    }
    theory.push_back(th);

    const std::uint64_t seed = case_seed(cfg.seed, static_cast<int>(ci));
    const auto rows = run_replicates(cfg.reps, opts.jobs, 3, [&](long i, std::vector<double>& out) {
      const EllipticalSample s = draw_sample(pop, law, cfg.n, substream_seed(seed, static_cast<std::uint64_t>(i)));
      const ScmBundle b = build_scm(s, false);
      const double lambda = b.top_eigenvalue(cfg.spike_index);
      const double delta = (lambda - theta) / theta;
      out = {lambda, delta, root_n * delta / sd_delta};
    });
    const auto cols = rb.add_case(static_cast<int>(ci), label, rows);

    const Moments ml = moments(cols[0]);
    const Moments ms = moments(cols[2]);
    const double theory_se = theory_sd / std::sqrt(static_cast<double>(std::max<long>(ml.n, 1)));
    std::vector<double> standardized;
    for (double v : cols[2]) {
      if (std::isfinite(v)) standardized.push_back(v);
    }
    const double ks = ks_standard_normal(standardized);

    json c;
    c["label"] = label;
    c["nu_p"] = law.nu_p;
    c["replicates"] = ml.n;
    c["failures"] = rb.case_failures();
    c["mean"] = num(ml.mean);
    c["variance"] = num(ml.var);
    c["se"] = num(ml.se);
    c["theory_mean"] = theta;
    c["theory_variance"] = theory_sd * theory_sd;
    c["theory_se"] = theory_se;
    c["mean_z"] = num(z_score(ml.mean, theta, theory_se));
    c["mean_z_empirical_se"] = num(z_score(ml.mean, theta, ml.se));
    c["var_ratio"] = num(ms.var);
    c["var_ratio_se"] = num(ms.var * std::sqrt(2.0 / std::max<long>(ms.n - 1, 1)));
    c["standardized_mean"] = num(ms.mean);
    c["ks"] = num(ks);
    c["gauss_overlay"] = {{"mean", theta}, {"sd", theory_sd}};
    cases.push_back(c);

    checks.add("mean_z", label, std::abs(z_score(ml.mean, theta, theory_se)));
    checks.add("var_ratio", label, ms.var);
    checks.add("ks", label, ks);
    rb.result().histograms.push_back(make_histogram(cols[0], cfg.hist_bins, theta, theory_sd, label));
  }
  return rb.finish(cfg, std::move(cases), std::move(theory), checks);
}

ExperimentResult eigvec_overlap(const ExperimentConfig& cfg, const RunOptions& opts) {
  ResultBuilder rb(ExperimentKind::eigvec_overlap, {"p", "n", "inner_product", "overlap_sq"});
  std::vector<std::string>& warnings = rb.result().warnings;
  const std::size_t k = static_cast<std::size_t>(cfg.spike_index);
  const double alpha = cfg.population.spikes[k];
  Checks checks(cfg.thresholds);
  json cases = json::array();
  json theory = json::array();
  ExperimentResult& res = rb.result();
  res.table_columns = {"case", "p", "n", "mean", "se", "theory", "light_tail_theory"};

  int ci = 0;
  for (const RadiusSpec& rs : cfg.radius) {
    for (int p : cfg.grid) {
      const int n = static_cast<int>(std::lround(p / cfg.c));
      const RadiusLaw law = rs.law(p);
      const std::string label = rs.label() + " p=" + std::to_string(p);
      auto pop = make_population(cfg, p, warnings);
      const LsdModel model = finite_model(*pop, law, n, true);
      const SpikePrediction pred = predict_spike(model, alpha);
      LsdModel light = model;
      light.h2 = DiscreteMeasure::point_mass(1.0);
      const SpikePrediction pred_light = predict_spike(light, alpha);

      json th;
      th["label"] = label;
      th["p"] = p;
      th["n"] = n;
      th["model"] = model_json(model);
      th["finite_n"] = prediction_json(pred);
      th["light_tail"] = prediction_json(pred_light);
      try {
        th["limit"] = prediction_json(predict_spike(limit_model(*pop, rs, law, n), alpha));
      } catch (const Error& e) {
        th["limit"] = nullptr;
        warnings.push_back(label + ": limiting prediction unavailable: " + e.what());
      }
      theory.push_back(th);

      const Eigen::VectorXd u = pop->basis.col(static_cast<Eigen::Index>(k));
      const std::uint64_t seed = case_seed(cfg.seed, ci);
      const auto rows = run_replicates(cfg.reps, opts.jobs, 4, [&](long i, std::vector<double>& out) {
        const EllipticalSample s = draw_sample(pop, law, n, substream_seed(seed, static_cast<std::uint64_t>(i)));
        const ScmBundle b = build_scm(s, true);
        double ip = b.top_eigenvector(cfg.spike_index).dot(u);
        // Sign aligned for the diagnostic column; the square does not depend on it.
        ip = std::abs(ip);
        out = {static_cast<double>(p), static_cast<double>(n), ip, ip * ip};
      });
      const auto cols = rb.add_case(ci, label, rows);
      const Moments mo = moments(cols[3]);

      json c;
      c["label"] = label;
      c["p"] = p;
      c["n"] = n;
      c["nu_p"] = law.nu_p;
      c["replicates"] = mo.n;
      c["failures"] = rb.case_failures();
      c["mean"] = num(mo.mean);
      c["variance"] = num(mo.var);
      c["se"] = num(mo.se);
      c["theory"] = pred.overlap_sq;
      c["mean_z"] = num(z_score(mo.mean, pred.overlap_sq, mo.se));
      c["abs_error"] = num(std::abs(mo.mean - pred.overlap_sq));
      c["light_tail_theory"] = pred_light.overlap_sq;
      c["light_tail_z"] = num(z_score(mo.mean, pred_light.overlap_sq, mo.se));
      cases.push_back(c);
      res.table.push_back({static_cast<double>(ci), static_cast<double>(p), static_cast<double>(n), mo.mean,
                           mo.se, pred.overlap_sq, pred_light.overlap_sq});

      checks.add("overlap_abs_error", label, std::abs(mo.mean - pred.overlap_sq));
      checks.add("mean_z", label, std::abs(z_score(mo.mean, pred.overlap_sq, mo.se)));
      ++ci;
    }
  }
  return rb.finish(cfg, std::move(cases), std::move(theory), checks);
}

// Pieces shared by the two bilinear-form experiments.
struct BilinearSetup {
  std::shared_ptr<const Population> pop;
  SigmaSpectrum sigma;
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> forms;
  std::vector<cplx> z;
};

BilinearSetup bilinear_setup(const ExperimentConfig& cfg, std::vector<std::string>& warnings) {
  BilinearSetup s;
  s.pop = make_population(cfg, cfg.p, warnings);
  s.sigma = SigmaSpectrum::from_matrix(s.pop->sigma);
  for (const auto& [a, b] : cfg.forms) {
    s.forms.emplace_back(direction_from_spec(a, *s.pop, cfg.seed), direction_from_spec(b, *s.pop, cfg.seed));
  }
  s.z = cfg.z_points.empty() ? std::vector<cplx>{cplx(1.0, 1.0)} : cfg.z_points;
  return s;
}

std::string form_label(const ExperimentConfig& cfg, std::size_t f) {
  return cfg.forms[f].first + "," + cfg.forms[f].second;
}

ExperimentResult bilinear_as(const ExperimentConfig& cfg, const RunOptions& opts) {
  std::vector<std::string> warnings;
  const BilinearSetup bs = bilinear_setup(cfg, warnings);
  const std::size_t nf = bs.forms.size();
  const std::size_t nz = bs.z.size();
  std::vector<std::string> value_cols;
  for (std::size_t f = 0; f < nf; ++f) {
    for (std::size_t j = 0; j < nz; ++j) value_cols.push_back("deviation_f" + std::to_string(f) + "_z" + std::to_string(j));
  }
  ResultBuilder rb(ExperimentKind::bilinear_as, value_cols);
  rb.result().warnings = warnings;
  Checks checks(cfg.thresholds);
  json cases = json::array();
  json theory = json::array();

  for (std::size_t ci = 0; ci < cfg.radius.size(); ++ci) {
    const RadiusSpec& rs = cfg.radius[ci];
    const RadiusLaw law = rs.law(cfg.p);
    const std::string label = rs.label();
    const LsdModel model = finite_model(*bs.pop, law, cfg.n, false);
    std::vector<cplx> deq(nf * nz);
    json th;
    th["label"] = label;
    th["model"] = model_json(model);
    json th_points = json::array();
    for (std::size_t j = 0; j < nz; ++j) {
      require_in_zone(model, bs.z[j], cfg.zone_delta);
      const LsdSolution sol = evaluate_lsd(model, bs.z[j]);
      for (std::size_t f = 0; f < nf; ++f) {
        deq[f * nz + j] = deterministic_equivalent(bs.sigma, bs.z[j], sol.g2, bs.forms[f].first, bs.forms[f].second);
        th_points.push_back({{"form", form_label(cfg, f)}, {"z", cnum(bs.z[j])},
                             {"deterministic_equivalent", cnum(deq[f * nz + j])}});
      }
    }
    th["points"] = th_points;
    theory.push_back(th);

    const std::uint64_t seed = case_seed(cfg.seed, static_cast<int>(ci));
    const auto rows = run_replicates(cfg.reps, opts.jobs, nf * nz, [&](long i, std::vector<double>& out) {
      const EllipticalSample s = draw_sample(bs.pop, law, cfg.n, substream_seed(seed, static_cast<std::uint64_t>(i)));
      const ScmBundle b = build_scm(s, true);
      for (std::size_t f = 0; f < nf; ++f) {
        for (std::size_t j = 0; j < nz; ++j) {
          const cplx v = bilinear_resolvent(b, bs.forms[f].first, bs.forms[f].second, bs.z[j]);
          out[f * nz + j] = std::abs(v - deq[f * nz + j]);
        }
      }
    });
    const auto cols = rb.add_case(static_cast<int>(ci), label, rows);

    json c;
    c["label"] = label;
    c["nu_p"] = law.nu_p;
    c["failures"] = rb.case_failures();
    json pts = json::array();
    double worst = 0.0;
    for (std::size_t f = 0; f < nf; ++f) {
      for (std::size_t j = 0; j < nz; ++j) {
        const Moments m = moments(cols[f * nz + j]);
        worst = std::max(worst, std::isfinite(m.mean) ? m.mean : std::numeric_limits<double>::infinity());
        pts.push_back({{"form", form_label(cfg, f)}, {"z", cnum(bs.z[j])}, {"replicates", m.n},
                       {"mean_deviation", num(m.mean)}, {"se", num(m.se)}, {"theory", 0.0},
                       {"mean_z", num(z_score(m.mean, 0.0, m.se))}});
      }
    }
    c["points"] = pts;
    c["max_mean_deviation"] = num(worst);
    cases.push_back(c);
    checks.add("mean_deviation", label, worst);
  }
  return rb.finish(cfg, std::move(cases), std::move(theory), checks);
}

ExperimentResult bilinear_clt(const ExperimentConfig& cfg, const RunOptions& opts) {
  std::vector<std::string> warnings;
  const BilinearSetup bs = bilinear_setup(cfg, warnings);
  const std::size_t nf = bs.forms.size();
  const std::size_t nz = bs.z.size();
  std::vector<std::string> value_cols;
  for (std::size_t f = 0; f < nf; ++f) {
    for (std::size_t j = 0; j < nz; ++j) {
      const std::string tag = "_f" + std::to_string(f) + "_z" + std::to_string(j);
      value_cols.push_back("re_m" + tag);
      value_cols.push_back("im_m" + tag);
    }
  }
  ResultBuilder rb(ExperimentKind::bilinear_clt, value_cols);
  rb.result().warnings = warnings;
  Checks checks(cfg.thresholds);
  json cases = json::array();
  json theory = json::array();
  const double root_p = std::sqrt(static_cast<double>(cfg.p));
  auto slot = [nz](std::size_t f, std::size_t j) { return 2 * (f * nz + j); };

  for (std::size_t ci = 0; ci < cfg.radius.size(); ++ci) {
    const RadiusSpec& rs = cfg.radius[ci];
    const RadiusLaw law = rs.law(cfg.p);
    const std::string label = rs.label();
    const LsdModel model = finite_model(*bs.pop, law, cfg.n, false);

    std::vector<cplx> deq(nf * nz);
    std::vector<KernelPoint> kp;
    std::vector<KernelPoint> kp_conj;
    for (std::size_t j = 0; j < nz; ++j) {
      require_in_zone(model, bs.z[j], cfg.zone_delta);
      kp.push_back(kernel_point(model, bs.z[j]));
      kp_conj.push_back(kernel_point(model, std::conj(bs.z[j])));
      for (std::size_t f = 0; f < nf; ++f) {
        deq[f * nz + j] = deterministic_equivalent(bs.sigma, bs.z[j], kp[j].sol.g2, bs.forms[f].first,
                                                   bs.forms[f].second);
      }
    }

    const std::uint64_t seed = case_seed(cfg.seed, static_cast<int>(ci));
    const auto rows = run_replicates(cfg.reps, opts.jobs, 2 * nf * nz, [&](long i, std::vector<double>& out) {
      const EllipticalSample s = draw_sample(bs.pop, law, cfg.n, substream_seed(seed, static_cast<std::uint64_t>(i)));
      const ScmBundle b = build_scm(s, true);
      for (std::size_t f = 0; f < nf; ++f) {
        for (std::size_t j = 0; j < nz; ++j) {
          const cplx v = bilinear_resolvent(b, bs.forms[f].first, bs.forms[f].second, bs.z[j]);
          const cplx m = root_p * (v - deq[f * nz + j]);
          out[slot(f, j)] = m.real();
          out[slot(f, j) + 1] = m.imag();
        }
      }
    });
    const auto cols = rb.add_case(static_cast<int>(ci), label, rows);

    json th;
    th["label"] = label;
    th["model"] = model_json(model);
    json th_points = json::array();
    json pts = json::array();
    for (std::size_t f = 0; f < nf; ++f) {
      const Quadruple q{bs.forms[f].first, bs.forms[f].second, bs.forms[f].first, bs.forms[f].second};
      for (std::size_t j = 0; j < nz; ++j) {
        const std::vector<double>& re = cols[slot(f, j)];
        const std::vector<double>& im = cols[slot(f, j) + 1];
        const Moments mr = moments(re);
        const Moments mi = moments(im);
        // E|M - EM|^2 = Cov(M(z), M(conj z)); E(M - EM)^2 = Cov(M(z), M(z)).
        const double var_abs = mr.var + mi.var;
        const CoMoments ri = co_moments(re, im);
        const cplx pseudo(mr.var - mi.var, 2.0 * ri.cov);
        const double th_var = cov_M(model, bs.sigma, q, kp[j], kp_conj[j]).real();
        const cplx th_pseudo = cov_M_diagonal(model, bs.sigma, q, bs.z[j]);
        const double rel = std::abs(var_abs - th_var) / std::abs(th_var);
        const double rel_pseudo = std::abs(pseudo - th_pseudo) / std::abs(th_pseudo);
        const double mz = std::max(std::abs(z_score(mr.mean, 0.0, mr.se)), std::abs(z_score(mi.mean, 0.0, mi.se)));

        std::vector<double> sq;
        for (std::size_t r = 0; r < re.size(); ++r) {
          if (std::isfinite(re[r])) sq.push_back(std::norm(cplx(re[r] - mr.mean, im[r] - mi.mean)));
        }
        const Moments msq = moments(sq);

        th_points.push_back({{"form", form_label(cfg, f)}, {"z", cnum(bs.z[j])},
                             {"deterministic_equivalent", cnum(deq[f * nz + j])},
                             {"var_abs", th_var}, {"pseudo_var", cnum(th_pseudo)}});
        pts.push_back({{"form", form_label(cfg, f)}, {"z", cnum(bs.z[j])}, {"replicates", mr.n},
                       {"mean", cnum({mr.mean, mi.mean})}, {"mean_se", cnum({mr.se, mi.se})},
                       {"mean_z", num(mz)}, {"var_abs", num(var_abs)}, {"var_abs_se", num(msq.se)},
                       {"theory_var_abs", th_var}, {"var_z", num(z_score(var_abs, th_var, msq.se))},
                       {"var_rel_error", num(rel)}, {"pseudo_var", cnum(pseudo)},
                       {"theory_pseudo_var", cnum(th_pseudo)}, {"pseudo_var_rel_error", num(rel_pseudo)}});
        const std::string where = label + " " + form_label(cfg, f) + " z=" + zlabel(bs.z[j]);
        checks.add("var_rel_error", where, rel);
        checks.add("pseudo_var_rel_error", where, rel_pseudo);
        checks.add("mean_z", where, mz);
      }
    }

    // Cross covariance E (M_f - EM_f) conj(M_g - EM_g) between distinct forms.
    json cross = json::array();
    for (std::size_t f = 0; f < nf; ++f) {
      for (std::size_t g = f + 1; g < nf; ++g) {
        const Quadruple q{bs.forms[f].first, bs.forms[f].second, bs.forms[g].first, bs.forms[g].second};
        for (std::size_t j = 0; j < nz; ++j) {
          const auto& fr = cols[slot(f, j)];
          const auto& fi = cols[slot(f, j) + 1];
          const auto& gr = cols[slot(g, j)];
          const auto& gi = cols[slot(g, j) + 1];
          const CoMoments rr = co_moments(fr, gr);
          const CoMoments ii = co_moments(fi, gi);
          const CoMoments ir = co_moments(fi, gr);
          const CoMoments ri = co_moments(fr, gi);
          const cplx emp(rr.cov + ii.cov, ir.cov - ri.cov);
          const double se_re = std::hypot(rr.se, ii.se);
          const double se_im = std::hypot(ir.se, ri.se);
          const cplx thc = cov_M(model, bs.sigma, q, kp[j], kp_conj[j]);
          const double cz = std::max(std::abs(z_score(emp.real(), thc.real(), se_re)),
                                     std::abs(z_score(emp.imag(), thc.imag(), se_im)));
          cross.push_back({{"forms", {form_label(cfg, f), form_label(cfg, g)}}, {"z", cnum(bs.z[j])},
                           {"covariance", cnum(emp)}, {"se", cnum({se_re, se_im})}, {"theory", cnum(thc)},
                           {"z_score", num(cz)}});
          th_points.push_back({{"forms", {form_label(cfg, f), form_label(cfg, g)}}, {"z", cnum(bs.z[j])},
                               {"cross_covariance", cnum(thc)}});
          checks.add("cross_z", label + " " + form_label(cfg, f) + " x " + form_label(cfg, g), cz);
        }
      }
    }
    th["points"] = th_points;
    theory.push_back(th);

    json c;
    c["label"] = label;
    c["nu_p"] = law.nu_p;
    c["failures"] = rb.case_failures();
    c["points"] = pts;
    c["cross"] = cross;
    cases.push_back(c);
  }
  return rb.finish(cfg, std::move(cases), std::move(theory), checks);
}

ExperimentResult goe_entries(const ExperimentConfig& cfg, const RunOptions& opts) {
  const int k = static_cast<int>(cfg.population.spikes.size());
  std::vector<std::string> value_cols;
  for (int i = 0; i < k; ++i) {
    for (int j = i; j < k; ++j) value_cols.push_back("o_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
  }
  auto col = [k](int i, int j) { return static_cast<std::size_t>(i * k - i * (i - 1) / 2 + (j - i)); };
  ResultBuilder rb(ExperimentKind::goe_entries, value_cols);
  std::vector<std::string>& warnings = rb.result().warnings;
  auto pop = make_population(cfg, cfg.p, warnings);
  const double root_p = std::sqrt(static_cast<double>(cfg.p));
  Checks checks(cfg.thresholds);
  json cases = json::array();
  json theory = json::array();

  for (std::size_t ci = 0; ci < cfg.radius.size(); ++ci) {
    const RadiusSpec& rs = cfg.radius[ci];
    const RadiusLaw law = rs.law(cfg.p);
    const std::string label = rs.label();
    const LsdModel model = finite_model(*pop, law, cfg.n, true);
    double z = 0.0;
    if (!cfg.z_points.empty()) {
      if (cfg.z_points.front().imag() != 0.0) throw ConfigError("goe-entries needs a real z");
      z = cfg.z_points.front().real();
    } else {
      z = transition(model, cfg.population.spikes.front()).theta;
    }
    require_in_zone(model, cplx(z, 0.0), cfg.zone_delta);
    const double edge = upper_bulk_edge(model);
    if (!(z > edge)) throw ConfigError("goe-entries needs z above the upper bulk edge");
    const double g2 = solve_lsd_real(model, z).g2.real();
    const GoeProfile prof = goe_covariance_profile(model, z, k);

    json th;
    th["label"] = label;
    th["model"] = model_json(model);
    th["z"] = z;
    th["edge"] = edge;
    th["g2"] = g2;
    th["sigma11_sq"] = prof.sigma11_sq();
    th["sigma12_sq"] = prof.sigma12_sq();
    theory.push_back(th);

    const std::uint64_t seed = case_seed(cfg.seed, static_cast<int>(ci));
    const auto rows = run_replicates(cfg.reps, opts.jobs, value_cols.size(), [&](long r, std::vector<double>& out) {
      const EllipticalSample s = draw_sample(pop, law, cfg.n, substream_seed(seed, static_cast<std::uint64_t>(r)));
      Eigen::MatrixXd o = spike_resolvent_block(s, z);
      o.diagonal().array() += g2;
      o *= root_p * z;
      for (int i = 0; i < k; ++i) {
        for (int j = i; j < k; ++j) out[col(i, j)] = o(i, j);
      }
    });
    const auto cols = rb.add_case(static_cast<int>(ci), label, rows);

    json c;
    c["label"] = label;
    c["nu_p"] = law.nu_p;
    c["z"] = z;
    c["failures"] = rb.case_failures();
    json entries = json::array();
    double worst_mean_z = 0.0;
    for (int i = 0; i < k; ++i) {
      for (int j = i; j < k; ++j) {
        const Moments m = moments(cols[col(i, j)]);
        const double t = prof.cov(i, j, i, j);
        const double mz = std::abs(z_score(m.mean, 0.0, m.se));
        worst_mean_z = std::max(worst_mean_z, mz);
        entries.push_back({{"i", i + 1}, {"j", j + 1}, {"replicates", m.n}, {"mean", num(m.mean)},
                           {"mean_se", num(m.se)}, {"mean_z", num(mz)}, {"variance", num(m.var)},
                           {"theory_variance", t}, {"var_ratio", num(m.var / t)},
                           {"var_ratio_se", num(m.var / t * std::sqrt(2.0 / std::max<long>(m.n - 1, 1)))}});
      }
    }
    c["entries"] = entries;
    const Moments m11 = moments(cols[col(0, 0)]);
    const double r11 = m11.var / prof.sigma11_sq();
    c["var11_ratio"] = num(r11);
    checks.add("var11_ratio", label, r11);
    checks.add("mean_z", label, worst_mean_z);
    if (k >= 2) {
      const Moments m12 = moments(cols[col(0, 1)]);
      const double r12 = m12.var / prof.sigma12_sq();
      const CoMoments cv = co_moments(cols[col(0, 0)], cols[col(0, 1)]);
      c["var12_ratio"] = num(r12);
      c["cov11_12"] = num(cv.cov);
      c["cov11_12_se"] = num(cv.se);
      c["cov11_12_theory"] = 0.0;
      c["cov_z"] = num(z_score(cv.cov, 0.0, cv.se));
      checks.add("var12_ratio", label, r12);
      checks.add("cov_z", label, std::abs(z_score(cv.cov, 0.0, cv.se)));
    }
    cases.push_back(c);
  }
  return rb.finish(cfg, std::move(cases), std::move(theory), checks);
}

// int zeta dF for the anisotropic reference law, -1/(2 pi i) oint zeta(z) s(z) dz
// over the default rectangle (counterclockwise).
double reference_integral(const LsdModel& model, const Anisotropy& aniso, const Zeta& zeta, int quad_n) {
  const ContourSpec cs = default_contour(model);
  std::vector<double> nodes, weights;
  gauss_legendre(quad_n, nodes, weights);
  const std::array<cplx, 4> corners{cplx(cs.x_left, -cs.v0), cplx(cs.x_right, -cs.v0), cplx(cs.x_right, cs.v0),
                                    cplx(cs.x_left, cs.v0)};
  cplx acc = 0.0;
  for (int side = 0; side < 4; ++side) {
    const cplx a = corners[static_cast<std::size_t>(side)];
    const cplx b = corners[static_cast<std::size_t>((side + 1) % 4)];
    const cplx half = 0.5 * (b - a);
    const cplx mid = 0.5 * (a + b);
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      const cplx z = mid + half * nodes[q];
      const LsdSolution sol = evaluate_lsd(model, z);
      acc += weights[q] * half * zeta(z) * anisotropic_stieltjes(aniso, z, sol.g2);
    }
  }
  return (-acc / (2.0 * std::numbers::pi * cplx(0.0, 1.0))).real();
}

ExperimentResult vesd_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  const std::size_t nzeta = cfg.zeta.size();
  std::vector<Zeta> zetas;
  std::vector<std::string> value_cols;
  for (const auto& s : cfg.zeta) {
    zetas.push_back(parse_zeta(s));
    value_cols.push_back("stat_" + s);
  }
  value_cols.push_back("mass");
  ResultBuilder rb(ExperimentKind::vesd, value_cols);
  std::vector<std::string>& warnings = rb.result().warnings;
  auto pop = make_population(cfg, cfg.p, warnings);
  const SigmaSpectrum sigma = SigmaSpectrum::from_matrix(pop->sigma);
  const Eigen::VectorXd pi = direction_from_spec(cfg.pi, *pop, cfg.seed);
  const Anisotropy aniso{sigma.eigenvalues, (sigma.eigenvectors.transpose() * pi).array().square().matrix()};
  const double root_p = std::sqrt(static_cast<double>(cfg.p));
  Checks checks(cfg.thresholds);
  json cases = json::array();
  json theory = json::array();

  for (std::size_t ci = 0; ci < cfg.radius.size(); ++ci) {
    const RadiusSpec& rs = cfg.radius[ci];
    const RadiusLaw law = rs.law(cfg.p);
    const std::string label = rs.label();
    const LsdModel model = finite_model(*pop, law, cfg.n, false);
    const ContourSpec contour = default_contour(model);

    std::vector<double> ref(nzeta);
    for (std::size_t t = 0; t < nzeta; ++t) ref[t] = reference_integral(model, aniso, zetas[t], 2 * cfg.quad_n);

    json th;
    th["label"] = label;
    th["model"] = model_json(model);
    th["contour"] = {{"x_left", contour.x_left}, {"x_right", contour.x_right}, {"v0", contour.v0},
                     {"separation", contour.separation}, {"quad_n", cfg.quad_n}};
    std::vector<std::vector<double>> cov(nzeta, std::vector<double>(nzeta));
    std::vector<double> self_conv(nzeta);
    json th_cov = json::array();
    for (std::size_t a = 0; a < nzeta; ++a) {
      for (std::size_t b = a; b < nzeta; ++b) {
        const double v = eigvec_stat_cov(model, sigma, pi, zetas[a], zetas[b], contour, cfg.quad_n);
        cov[a][b] = cov[b][a] = v;
        if (a == b) {
          const double v2 = eigvec_stat_cov(model, sigma, pi, zetas[a], zetas[b], contour, 2 * cfg.quad_n);
          self_conv[a] = std::abs(v2 - v) / std::max(std::abs(v2), 1e-300);
        }
        th_cov.push_back({{"zeta", {cfg.zeta[a], cfg.zeta[b]}}, {"covariance", v}});
      }
    }
    th["covariance"] = th_cov;
    json th_ref = json::array();
    for (std::size_t t = 0; t < nzeta; ++t) th_ref.push_back({{"zeta", cfg.zeta[t]}, {"integral", ref[t]}});
    th["reference_integrals"] = th_ref;
    try {
      const auto [lo, hi] = model.outer_bracket();
      std::vector<double> grid;
      const int steps = 200;
      const double a = std::min(0.0, lo) - 0.05 * hi;
      const double b = 1.05 * hi;
      for (int i = 0; i <= steps; ++i) grid.push_back(a + (b - a) * i / steps);
      const StieltjesInversion inv = stieltjes_invert(model, grid, 1e-4, aniso);
      th["reference_cdf"] = {{"x", inv.x}, {"cdf", inv.cdf}, {"density", inv.density}};
    } catch (const Error& e) {
      th["reference_cdf"] = nullptr;
      warnings.push_back(label + ": reference CDF unavailable: " + e.what());
    }
    theory.push_back(th);

    const std::uint64_t seed = case_seed(cfg.seed, static_cast<int>(ci));
    const auto rows = run_replicates(cfg.reps, opts.jobs, nzeta + 1, [&](long i, std::vector<double>& out) {
      const EllipticalSample s = draw_sample(pop, law, cfg.n, substream_seed(seed, static_cast<std::uint64_t>(i)));
      const ScmBundle b = build_scm(s, true);
      const Eigen::VectorXd w = vesd_weights(b, pi);
      for (std::size_t t = 0; t < nzeta; ++t) {
        double acc = 0.0;
        for (int j = 0; j < b.dimension(); ++j) acc += w(j) * zetas[t](cplx(b.eigenvalues(j), 0.0)).real();
        out[t] = root_p * (acc - ref[t]);
      }
      out[nzeta] = root_p * (w.sum() - 1.0);
    });
    const auto cols = rb.add_case(static_cast<int>(ci), label, rows);

    json c;
    c["label"] = label;
    c["nu_p"] = law.nu_p;
    c["failures"] = rb.case_failures();
    json stats = json::array();
    for (std::size_t t = 0; t < nzeta; ++t) {
      const Moments m = moments(cols[t]);
      const double rel = std::abs(m.var - cov[t][t]) / std::abs(cov[t][t]);
      const double mz = std::abs(z_score(m.mean, 0.0, m.se));
      stats.push_back({{"zeta", cfg.zeta[t]}, {"replicates", m.n}, {"mean", num(m.mean)}, {"mean_se", num(m.se)},
                       {"mean_z", num(mz)}, {"variance", num(m.var)}, {"theory_variance", cov[t][t]},
                       {"var_rel_error", num(rel)},
                       {"var_ratio_se", num(m.var / cov[t][t] * std::sqrt(2.0 / std::max<long>(m.n - 1, 1)))},
                       {"quad_self_convergence", self_conv[t]}});
      const std::string where = label + " zeta=" + cfg.zeta[t];
      checks.add("var_rel_error", where, rel);
      checks.add("mean_z", where, mz);
      checks.add("quad_self_convergence", where, self_conv[t]);
    }
    double mass = 0.0;
    for (double v : cols[nzeta]) {
      if (std::isfinite(v)) mass = std::max(mass, std::abs(v));
    }
    c["statistics"] = stats;
    c["max_abs_total_mass"] = mass;
    checks.add("mass_abs", label, mass);
    cases.push_back(c);
  }
  return rb.finish(cfg, std::move(cases), std::move(theory), checks);
}

ExperimentResult quadform_oracle(const ExperimentConfig& cfg, const RunOptions& opts) {
  const int p = cfg.quad_p;
  const std::size_t pairs = static_cast<std::size_t>(cfg.pairs);
  std::vector<std::string> value_cols;
  for (std::size_t k = 0; k < pairs; ++k) {
    value_cols.push_back("mean_product_" + std::to_string(k));
    value_cols.push_back("mean_square_" + std::to_string(k));
  }
  ResultBuilder rb(ExperimentKind::quadform_oracle, value_cols);
  Checks checks(cfg.thresholds);

  std::vector<Eigen::MatrixXd> a(pairs), b(pairs);
  std::vector<double> tra(pairs), trb(pairs), exact(pairs);
  {
    Rng rng(substream_seed(cfg.seed, kMatrixStream));
    std::normal_distribution<double> normal;
    for (std::size_t k = 0; k < pairs; ++k) {
      a[k] = Eigen::MatrixXd::NullaryExpr(p, p, [&]() { return normal(rng); });
      b[k] = Eigen::MatrixXd::NullaryExpr(p, p, [&]() { return normal(rng); });
      tra[k] = a[k].trace() / p;
      trb[k] = b[k].trace() / p;
      exact[k] = quadform_moment_oracle(a[k], b[k], p);
    }
  }

  const std::uint64_t seed = case_seed(cfg.seed, 0);
  const auto rows = run_replicates(cfg.reps, opts.jobs, 2 * pairs, [&](long i, std::vector<double>& out) {
    Rng rng(substream_seed(seed, static_cast<std::uint64_t>(i)));
    std::vector<double> sum(pairs, 0.0), sum_sq(pairs, 0.0);
    for (long d = 0; d < cfg.batch; ++d) {
      const Eigen::VectorXd u = draw_direction(p, rng);
      for (std::size_t k = 0; k < pairs; ++k) {
        const double prod = (u.dot(a[k] * u) - tra[k]) * (u.dot(b[k] * u) - trb[k]);
        sum[k] += prod;
        sum_sq[k] += prod * prod;
      }
    }
    for (std::size_t k = 0; k < pairs; ++k) {
      out[2 * k] = sum[k] / cfg.batch;
      out[2 * k + 1] = sum_sq[k] / cfg.batch;
    }
  });
  const auto cols = rb.add_case(0, "sphere", rows);

  json c;
  c["label"] = "sphere";
  c["dimension"] = p;
  c["failures"] = rb.case_failures();
  json pts = json::array();
  json th_pairs = json::array();
  for (std::size_t k = 0; k < pairs; ++k) {
    // Equal batch sizes: the draw-level mean is the mean of batch means.
    const Moments m1 = moments(cols[2 * k]);
    const Moments m2 = moments(cols[2 * k + 1]);
    const double draws = static_cast<double>(m1.n) * cfg.batch;
    const double var = (m2.mean - m1.mean * m1.mean) * draws / (draws - 1.0);
    const double se = std::sqrt(var / draws);
    const double z = z_score(m1.mean, exact[k], se);
    pts.push_back({{"pair", k}, {"draws", draws}, {"covariance", num(m1.mean)}, {"se", num(se)},
                   {"theory", exact[k]}, {"z", num(z)}});
    th_pairs.push_back({{"pair", k}, {"covariance", exact[k]}});
    checks.add("z", "pair " + std::to_string(k), std::abs(z));
  }
  c["pairs"] = pts;
  json cases = json::array({c});
  json theory = json::array({{{"label", "sphere"}, {"dimension", p}, {"pairs", th_pairs}}});
  return rb.finish(cfg, std::move(cases), std::move(theory), checks);
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

std::string file_label(const std::string& label) {
  std::string out;
  for (char ch : label) {
    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.') {
      out += ch;
    } else if (ch == '^') {
      out += "pow";
    } else {
      out += '_';
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- public

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::spike_dist: return "spike-dist";
    case ExperimentKind::eigvec_overlap: return "eigvec-overlap";
    case ExperimentKind::bilinear_as: return "bilinear-as";
    case ExperimentKind::bilinear_clt: return "bilinear-clt";
    case ExperimentKind::vesd: return "vesd";
    case ExperimentKind::quadform_oracle: return "quadform-oracle";
    case ExperimentKind::goe_entries: return "goe-entries";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (auto k : {ExperimentKind::spike_dist, ExperimentKind::eigvec_overlap, ExperimentKind::bilinear_as,
                 ExperimentKind::bilinear_clt, ExperimentKind::vesd, ExperimentKind::quadform_oracle,
                 ExperimentKind::goe_entries}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown experiment kind '" + name + "'");
}

double NuRule::evaluate(int p) const {
  const double pp = p;
  switch (kind) {
    case Kind::zero: return 0.0;
    case Kind::sqrt_p: return std::sqrt(pp);
    case Kind::p: return pp;
    case Kind::p_squared: return pp * pp;
    case Kind::two_p: return 2.0 * pp;
    case Kind::fixed: return value;
  }
  return 0.0;
}

std::string NuRule::name() const {
  switch (kind) {
    case Kind::zero: return "0";
    case Kind::sqrt_p: return "sqrt(p)";
    case Kind::p: return "p";
    case Kind::p_squared: return "p^2";
    case Kind::two_p: return "2p";
    case Kind::fixed: return format_double(value);
  }
  return "?";
}

NuRule NuRule::parse(const std::string& text) {
  NuRule r;
  if (text == "0") {
    r.kind = Kind::zero;
  } else if (text == "sqrt(p)" || text == "sqrt p" || text == "p^0.5") {
    r.kind = Kind::sqrt_p;
  } else if (text == "p") {
    r.kind = Kind::p;
  } else if (text == "p^2" || text == "p2") {
    r.kind = Kind::p_squared;
  } else if (text == "2p") {
    r.kind = Kind::two_p;
  } else {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError("unknown nu_p rule '" + text + "' (0, sqrt(p), p, p^2, 2p or a number >= 0)");
    }
    r.kind = Kind::fixed;
    r.value = v;
  }
  return r;
}

RadiusLaw RadiusSpec::law(int p) const { return make_radius_law(kind, p, nu.evaluate(p)); }

std::string RadiusSpec::label() const { return to_string(kind) + " nu=" + nu.name(); }

PopulationSpec PopulationConfig::spec(int p, std::uint64_t master_seed) const {
  PopulationSpec s;
  s.p = p;
  s.spikes = spikes;
  s.bulk.kind = bulk;
  s.bulk.values = bulk_values;
  s.bulk.constant = bulk_constant;
  s.bulk.seed = has_bulk_seed ? bulk_seed : substream_seed(master_seed, kBulkStream);
  s.toeplitz_rho = toeplitz_rho;
  s.separation = separation;
  return s;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  reject_unknown(j, {"kind", "p", "n", "reps", "seed", "radius", "population", "z_points", "grid", "c",
                     "spike_index", "forms", "pi", "zeta", "zone_delta", "quad_n", "hist_bins", "batch", "pairs",
                     "quad_p", "thresholds"},
                 "experiment config");
  ExperimentConfig cfg;
  if (!j.contains("kind")) throw ConfigError("experiment config needs 'kind'");
  cfg.kind = experiment_kind_from_string(get_string(j["kind"], "kind", "experiment config"));
  const std::string where = "experiment config";
  if (j.contains("p")) cfg.p = static_cast<int>(get_integer(j["p"], "p", where));
  if (j.contains("n")) cfg.n = static_cast<int>(get_integer(j["n"], "n", where));
  if (j.contains("reps")) cfg.reps = get_integer(j["reps"], "reps", where);
  if (j.contains("seed")) cfg.seed = get_seed(j["seed"]);
  if (j.contains("radius")) {
    cfg.radius.clear();
    if (j["radius"].is_array()) {
      for (const auto& r : j["radius"]) cfg.radius.push_back(parse_radius(r));
    } else {
      cfg.radius.push_back(parse_radius(j["radius"]));
    }
  }
  if (j.contains("population")) cfg.population = parse_population(j["population"]);
  if (j.contains("z_points")) {
    if (!j["z_points"].is_array()) throw ConfigError("'z_points' must be an array");
    for (const auto& z : j["z_points"]) cfg.z_points.push_back(parse_complex(z));
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    if (g.is_array()) {
      for (const auto& v : g) cfg.grid.push_back(static_cast<int>(get_integer(v, "grid", where)));
    } else {
      reject_unknown(g, {"from", "to", "step"}, "grid");
      if (!g.contains("from") || !g.contains("to") || !g.contains("step")) {
        throw ConfigError("'grid' object needs from, to and step");
      }
      const long from = get_integer(g["from"], "from", "grid");
      const long to = get_integer(g["to"], "to", "grid");
      const long step = get_integer(g["step"], "step", "grid");
      if (step <= 0) throw ConfigError("'step' in grid must be positive");
      for (long v = from; v <= to; v += step) cfg.grid.push_back(static_cast<int>(v));
    }
  }
  if (j.contains("c")) cfg.c = get_number(j["c"], "c", where);
  if (j.contains("spike_index")) cfg.spike_index = static_cast<int>(get_integer(j["spike_index"], "spike_index", where));
  if (j.contains("forms")) {
    cfg.forms.clear();
    if (!j["forms"].is_array()) throw ConfigError("'forms' must be an array of [pi1, pi2] pairs");
    for (const auto& f : j["forms"]) {
      if (!f.is_array() || f.size() != 2 || !f[0].is_string() || !f[1].is_string()) {
        throw ConfigError("'forms' entries must be [pi1, pi2] string pairs");
      }
      cfg.forms.emplace_back(f[0].get<std::string>(), f[1].get<std::string>());
    }
  }
  if (j.contains("pi")) cfg.pi = get_string(j["pi"], "pi", where);
  if (j.contains("zeta")) {
    cfg.zeta.clear();
    if (!j["zeta"].is_array()) throw ConfigError("'zeta' must be an array of strings");
    for (const auto& z : j["zeta"]) cfg.zeta.push_back(get_string(z, "zeta", where));
  }
  if (j.contains("zone_delta")) cfg.zone_delta = get_number(j["zone_delta"], "zone_delta", where);
  if (j.contains("quad_n")) cfg.quad_n = static_cast<int>(get_integer(j["quad_n"], "quad_n", where));
  if (j.contains("hist_bins")) cfg.hist_bins = static_cast<int>(get_integer(j["hist_bins"], "hist_bins", where));
  if (j.contains("batch")) cfg.batch = get_integer(j["batch"], "batch", where);
  if (j.contains("pairs")) cfg.pairs = static_cast<int>(get_integer(j["pairs"], "pairs", where));
  if (j.contains("quad_p")) cfg.quad_p = static_cast<int>(get_integer(j["quad_p"], "quad_p", where));
  if (j.contains("thresholds")) {
    const json& t = j["thresholds"];
    reject_unknown(t, known_thresholds().at(cfg.kind), "thresholds for " + to_string(cfg.kind));
    for (const auto& item : t.items()) cfg.thresholds[item.key()] = parse_threshold(item.value(), item.key());
  }
  cfg.validate();
  return cfg;
}

json ExperimentConfig::to_json() const {
  json j;
  j["kind"] = to_string(kind);
  j["p"] = p;
  j["n"] = n;
  j["reps"] = reps;
  j["seed"] = seed;
  json r = json::array();
  for (const auto& rs : radius) r.push_back(radius_to_json(rs));
  j["radius"] = r;
  j["population"] = population_to_json(population);
  json zs = json::array();
  for (cplx z : z_points) zs.push_back({z.real(), z.imag()});
  j["z_points"] = zs;
  j["grid"] = grid;
  j["c"] = c;
  j["spike_index"] = spike_index;
  json fs = json::array();
  for (const auto& [a, b] : forms) fs.push_back({a, b});
  j["forms"] = fs;
  j["pi"] = pi;
  j["zeta"] = zeta;
  j["zone_delta"] = zone_delta;
  j["quad_n"] = quad_n;
  j["hist_bins"] = hist_bins;
  j["batch"] = batch;
  j["pairs"] = pairs;
  j["quad_p"] = quad_p;
  json th = json::object();
  for (const auto& [k, t] : thresholds) {
    if (t.has_lower) {
      th[k] = {t.lower, t.upper};
    } else {
      th[k] = t.upper;
    }
  }
  j["thresholds"] = th;
  return j;
}

void ExperimentConfig::validate() const {
  if (reps < 1) throw ConfigError("reps must be >= 1");
  if (radius.empty()) throw ConfigError("radius needs at least one law");
  if (!(zone_delta > 0.0)) throw ConfigError("zone_delta must be > 0");
  if (quad_n < 2) throw ConfigError("quad_n must be >= 2");
  if (hist_bins < 1) throw ConfigError("hist_bins must be >= 1");
  for (const auto& [name, t] : thresholds) {
    if (!known_thresholds().at(kind).count(name)) {
      throw ConfigError("unknown threshold '" + name + "' for " + to_string(kind));
    }
  }
  std::vector<int> dims;
  if (kind == ExperimentKind::quadform_oracle) {
    if (quad_p < 2) throw ConfigError("quad_p must be >= 2");
    if (pairs < 1) throw ConfigError("pairs must be >= 1");
    if (batch < 1) throw ConfigError("batch must be >= 1");
    return;
  }
  if (kind == ExperimentKind::eigvec_overlap) {
    if (grid.empty()) throw ConfigError("eigvec-overlap needs a nonempty grid");
    if (!(c > 0.0)) throw ConfigError("c must be > 0");
    for (int gp : grid) {
      if (gp < 2 || std::lround(gp / c) < 2) throw ConfigError("grid dimensions need p, n >= 2");
      dims.push_back(gp);
    }
  } else {
    if (p < 2 || n < 2) throw ConfigError("p and n must be >= 2");
    dims.push_back(p);
  }
  for (int d : dims) {
    for (const auto& rs : radius) {
      try {
        (void)rs.law(d);
      } catch (const DomainError& e) {
        throw ConfigError("radius law " + rs.label() + " at p=" + std::to_string(d) + ": " + e.what());
      }
    }
    if (static_cast<int>(population.spikes.size()) > d) throw ConfigError("more spikes than dimensions");
  }
  const bool needs_spike = kind == ExperimentKind::spike_dist || kind == ExperimentKind::eigvec_overlap ||
                           kind == ExperimentKind::goe_entries;
  if (needs_spike && population.spikes.empty()) {
    throw ConfigError(to_string(kind) + " needs at least one spike in population.spikes");
  }
  if (needs_spike && (spike_index < 0 || spike_index >= static_cast<int>(population.spikes.size()))) {
    throw ConfigError("spike_index out of range");
  }
  if ((kind == ExperimentKind::bilinear_as || kind == ExperimentKind::bilinear_clt) && forms.empty()) {
    throw ConfigError("forms must not be empty");
  }
  if (kind == ExperimentKind::vesd) {
    if (zeta.empty()) throw ConfigError("zeta must not be empty");
    for (const auto& z : zeta) (void)parse_zeta(z);
  }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

bool ExperimentResult::checks_pass() const {
  return summary.contains("pass") && summary["pass"].get<bool>();
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  switch (cfg.kind) {
    case ExperimentKind::spike_dist: return spike_dist(cfg, opts);
    case ExperimentKind::eigvec_overlap: return eigvec_overlap(cfg, opts);
    case ExperimentKind::bilinear_as: return bilinear_as(cfg, opts);
    case ExperimentKind::bilinear_clt: return bilinear_clt(cfg, opts);
    case ExperimentKind::vesd: return vesd_experiment(cfg, opts);
    case ExperimentKind::quadform_oracle: return quadform_oracle(cfg, opts);
    case ExperimentKind::goe_entries: return goe_entries(cfg, opts);
  }
  throw ConfigError("unknown experiment kind");
}

namespace {
ExperimentResult run_as(ExperimentKind kind, const ExperimentConfig& cfg, const RunOptions& opts) {
  if (cfg.kind != kind) {
    throw ConfigError("config kind '" + to_string(cfg.kind) + "' does not match " + to_string(kind));
  }
  return run_experiment(cfg, opts);
}
}  // namespace

ExperimentResult run_spike_dist(const ExperimentConfig& cfg, const RunOptions& opts) {
  return run_as(ExperimentKind::spike_dist, cfg, opts);
}
ExperimentResult run_eigvec_overlap(const ExperimentConfig& cfg, const RunOptions& opts) {
  return run_as(ExperimentKind::eigvec_overlap, cfg, opts);
}
ExperimentResult run_bilinear_as(const ExperimentConfig& cfg, const RunOptions& opts) {
  return run_as(ExperimentKind::bilinear_as, cfg, opts);
}
ExperimentResult run_bilinear_clt(const ExperimentConfig& cfg, const RunOptions& opts) {
  return run_as(ExperimentKind::bilinear_clt, cfg, opts);
}
ExperimentResult run_goe_entries(const ExperimentConfig& cfg, const RunOptions& opts) {
  return run_as(ExperimentKind::goe_entries, cfg, opts);
}
ExperimentResult run_vesd(const ExperimentConfig& cfg, const RunOptions& opts) {
  return run_as(ExperimentKind::vesd, cfg, opts);
}
ExperimentResult run_quadform_oracle(const ExperimentConfig& cfg, const RunOptions& opts) {
  return run_as(ExperimentKind::quadform_oracle, cfg, opts);
}

Eigen::VectorXd direction_from_spec(const std::string& spec, const Population& pop, std::uint64_t master_seed) {
  const int p = pop.dimension();
  auto index_after = [&](std::size_t prefix) {
    int k = 0;
    const auto res = std::from_chars(spec.data() + prefix, spec.data() + spec.size(), k);
    if (res.ec != std::errc() || res.ptr != spec.data() + spec.size() || k < 1) {
      throw ConfigError("bad direction '" + spec + "'");
    }
    return k;
  };
  if (spec == "uniform") return Eigen::VectorXd::Constant(p, 1.0 / std::sqrt(static_cast<double>(p)));
  if (spec.rfind("spike", 0) == 0) {
    const int k = index_after(5);
    if (k > pop.spike_count()) throw ConfigError("direction '" + spec + "': no such spike");
    return pop.basis.col(k - 1);
  }
  if (spec.rfind("random", 0) == 0) {
    const int k = index_after(6);
    if (k > p) throw ConfigError("direction '" + spec + "' exceeds the dimension");
    Rng rng(substream_seed(master_seed, kRandomDirStream));
    std::normal_distribution<double> normal;
    const Eigen::MatrixXd g = Eigen::MatrixXd::NullaryExpr(p, k, [&]() { return normal(rng); });
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(p, k);
    return q.col(k - 1).normalized();
  }
  if (spec.rfind("e", 0) == 0) {
    const int k = index_after(1);
    if (k > p) throw ConfigError("direction '" + spec + "' exceeds the dimension");
    return Eigen::VectorXd::Unit(p, k - 1);
  }
  throw ConfigError("unknown direction '" + spec + "' (e<k>, uniform, spike<k>, random<k>)");
}

std::string records_csv(const ExperimentResult& result) {
  std::string out;
  for (std::size_t i = 0; i < result.columns.size(); ++i) {
    if (i) out += ',';
    out += result.columns[i];
  }
  out += '\n';
  for (const auto& row : result.records) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_experiment(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "records.csv", records_csv(result));
  write_text(dir / "summary.json", result.summary.dump(2) + "\n");
  write_text(dir / "theory.json", result.theory.dump(2) + "\n");
  for (const Histogram& h : result.histograms) {
    std::string text = "bin_left,bin_right,count,gauss_density\n";
    for (const auto& b : h.bins) {
      text += format_double(b.left) + ',' + format_double(b.right) + ',' + std::to_string(b.count) + ',' +
              format_double(b.gauss_density) + '\n';
    }
    const std::string name = result.histograms.size() == 1 ? "hist.csv" : "hist_" + file_label(h.label) + ".csv";
    write_text(dir / name, text);
  }
  if (!result.table.empty()) {
    std::string text;
    for (std::size_t i = 0; i < result.table_columns.size(); ++i) {
      if (i) text += ',';
      text += result.table_columns[i];
    }
    text += '\n';
    for (const auto& row : result.table) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) text += ',';
        text += format_double(row[i]);
      }
      text += '\n';
    }
    write_text(dir / "table.csv", text);
  }
}

double ks_standard_normal(std::vector<double> sample) {
  if (sample.empty()) return kNaN;
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = normal_cdf(sample[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

}  // namespace elliprmt
