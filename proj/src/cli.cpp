#include "elliprmt/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "elliprmt/error.hpp"
#include "elliprmt/experiments.hpp"

namespace elliprmt {

using nlohmann::json;

namespace {

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw ConfigError("bad number '" + s + "' in " + what);
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

json cjson(cplx z) { return json::array({z.real(), z.imag()}); }

LsdModel model_from_args(double c, const std::string& h1, const std::string& h2) {
  if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("--c must be a positive number");
  LsdModel m;
  m.c = c;
  m.h1 = parse_measure_arg(h1);
  m.h2 = parse_measure_arg(h2);
  return m;
}

std::string fmt(double x) {
  std::ostringstream s;
  s << std::setprecision(6) << x;
  return s.str();
}

// ---------------------------------------------------------------- SVG helpers

struct Frame {
  double width = 640, height = 420;
  double left = 70, right = 20, top = 40, bottom = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

void svg_open(std::ostream& s, const Frame& f, const std::string& title) {
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
    << "\" viewBox=\"0 0 " << f.width << ' ' << f.height << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    s << "<text x=\"" << f.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"14\">";
    for (char ch : title) {
      if (ch == '<') s << "&lt;";
      else if (ch == '>') s << "&gt;";
      else if (ch == '&') s << "&amp;";
      else s << ch;
    }
    s << "</text>\n";
  }
}

void svg_axes(std::ostream& s, const Frame& f) {
  s << "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n"
    << "<line x1=\"" << f.px(f.x0) << "\" y1=\"" << f.py(f.y0) << "\" x2=\"" << f.px(f.x1) << "\" y2=\""
    << f.py(f.y0) << "\"/>\n"
    << "<line x1=\"" << f.px(f.x0) << "\" y1=\"" << f.py(f.y0) << "\" x2=\"" << f.px(f.x0) << "\" y2=\""
    << f.py(f.y1) << "\"/>\n</g>\n";
  s << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 4;
    s << "<text x=\"" << f.px(xv) << "\" y=\"" << f.py(f.y0) + 16 << "\" text-anchor=\"middle\">" << fmt(xv)
      << "</text>\n";
    s << "<text x=\"" << f.px(f.x0) - 6 << "\" y=\"" << f.py(yv) + 4 << "\" text-anchor=\"end\">" << fmt(yv)
      << "</text>\n";
  }
  s << "</g>\n";
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

// ---------------------------------------------------------------- commands

int cmd_lsd_solve(double c, const std::string& h1, const std::string& h2, const std::string& z_text,
                  std::ostream& out) {
  const LsdModel model = model_from_args(c, h1, h2);
  const cplx z = parse_complex_arg(z_text);
  if (z.imag() <= 0.0) throw ConfigError("--z needs a positive imaginary part");
  const LsdSolution sol = solve_lsd(model, z);
  out << solution_json(sol).dump(2) << '\n';
  return kExitOk;
}

int cmd_lsd_density(double c, const std::string& h1, const std::string& h2, const std::string& grid_text,
                    double eps, const std::string& out_path, std::ostream& out, std::ostream& err) {
  const LsdModel model = model_from_args(c, h1, h2);
  const GridArg grid = parse_grid_arg(grid_text);
  if (!(eps > 0.0)) throw ConfigError("--eps must be > 0");
  const std::vector<double> xs = grid.points();
  StieltjesInversion inv;
  try {
    inv = stieltjes_invert(model, xs, eps);
  } catch (const ConvergenceError&) {
    // Point by point, to list every failing x.
    json failed = json::array();
    for (double x : xs) {
      try {
        (void)stieltjes_invert(model, {x}, eps);
      } catch (const ConvergenceError& e) {
        failed.push_back(x);
        err << "solver failure at x = " << x << ": " << e.what() << '\n';
      }
    }
    out << json{{"failed_x", failed}}.dump(2) << '\n';
    return kExitNumerical;
  }
  {
    std::ofstream f(out_path);
    if (!f) throw ConfigError("cannot write " + out_path);
    write_density_csv(f, inv);
  }
  json j;
  j["output"] = out_path;
  j["zero_mass"] = inv.zero_mass;
  j["total_mass"] = inv.total_mass;
  json edges = json::array();
  for (const auto& [a, b] : detect_support(model, grid.lo, grid.hi, grid.steps, eps)) edges.push_back({a, b});
  j["support"] = edges;
  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_spike_predict(double alpha, double c, const std::string& h1, const std::string& h2, std::ostream& out,
                      std::ostream& err) {
  const LsdModel model = model_from_args(c, h1, h2);
  try {
    out << prediction_json(predict_spike(model, alpha)).dump(2) << '\n';
  } catch (const SubcriticalSpikeError& e) {
    err << e.what() << '\n';
    out << json{{"subcritical", true}, {"alpha", alpha}, {"threshold", e.threshold()}}.dump(2) << '\n';
    return kExitSubcritical;
  }
  return kExitOk;
}

int cmd_mc(const std::string& config_path, const std::string& out_dir, const std::string& seed_text, int jobs,
           const std::vector<std::string>& overrides, std::ostream& out, std::ostream& err) {
  if (jobs < 1) throw ConfigError("--jobs must be >= 1");
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open config " + config_path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + config_path + " is not valid JSON: " + e.what());
  }
  for (const auto& o : overrides) apply_override(doc, o);
  if (!seed_text.empty()) {
    apply_override(doc, "seed=\"" + seed_text + "\"");
  } else if (!doc.contains("seed")) {
    if (const char* env = std::getenv("ELLIPRMT_SEED")) apply_override(doc, std::string("seed=\"") + env + "\"");
  }
  const ExperimentConfig cfg = ExperimentConfig::from_json(doc);
  const ExperimentResult res = run_experiment(cfg, RunOptions{jobs});
  const std::string dir = out_dir.empty() ? "out/" + to_string(cfg.kind) : out_dir;
  write_experiment(res, dir);
  out << res.summary.dump(2) << '\n';
  if (res.failures > 0) err << "warning: " << res.failures << " replicate(s) failed\n";
  for (const auto& w : res.warnings) err << "warning: " << w << '\n';
  err << "wrote " << dir << '\n';
  return kExitOk;
}

int cmd_plot(const std::string& hist, const std::string& xy, const std::string& out_path, const std::string& theory,
             int case_index, const std::string& x, const std::string& y, const std::string& group,
             const std::string& line, const std::string& title, std::ostream& err) {
  if (hist.empty() == xy.empty()) throw ConfigError("plot needs exactly one of --hist and --xy");
  const std::string src = hist.empty() ? xy : hist;
  std::ifstream in(src);
  if (!in) throw ConfigError("cannot open " + src);
  const CsvTable table = read_csv_table(in);
  std::string svg;
  if (!hist.empty()) {
    GaussOverlay ov;
    if (!theory.empty()) {
      std::ifstream tf(theory);
      if (!tf) throw ConfigError("cannot open " + theory);
      const json t = json::parse(tf);
      if (!t.is_array() || case_index < 0 || case_index >= static_cast<int>(t.size()) ||
          !t[case_index].contains("gauss_overlay")) {
        throw ConfigError("theory file has no gauss_overlay for case " + std::to_string(case_index));
      }
      ov.enabled = true;
      ov.mean = t[case_index]["gauss_overlay"]["mean"].get<double>();
      ov.sd = t[case_index]["gauss_overlay"]["sd"].get<double>();
    }
    svg = histogram_svg(table, ov, title);
  } else {
    const std::string xc = x.empty() ? table.columns.at(0) : x;
    const std::string yc = y.empty() ? table.columns.at(std::min<std::size_t>(1, table.columns.size() - 1)) : y;
    svg = xy_svg(table, xc, yc, group, line, title);
  }
  std::ofstream f(out_path);
  if (!f) throw ConfigError("cannot write " + out_path);
  f << svg;
  err << "wrote " << out_path << '\n';
  return kExitOk;
}

}  // namespace

// ---------------------------------------------------------------- parsing helpers

DiscreteMeasure parse_measure_arg(const std::string& text) {
  if (text.rfind("delta:", 0) == 0) {
    return DiscreteMeasure::point_mass(parse_double(text.substr(6), "measure '" + text + "'"));
  }
  const std::string path = text.rfind("file:", 0) == 0 ? text.substr(5) : text;
  if (path.empty()) throw ConfigError("empty measure argument");
  try {
    return read_measure_csv_file(path);
  } catch (const DomainError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

cplx parse_complex_arg(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() == 1) return {parse_double(parts[0], "z"), 0.0};
  if (parts.size() == 2) return {parse_double(parts[0], "z"), parse_double(parts[1], "z")};
  throw ConfigError("complex argument must be 're,im': " + text);
}

std::vector<double> GridArg::points() const {
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) xs.push_back(lo + (hi - lo) * i / steps);
  return xs;
}

GridArg parse_grid_arg(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) throw ConfigError("grid must be lo:hi:steps, got '" + text + "'");
  GridArg g;
  g.lo = parse_double(parts[0], "grid");
  g.hi = parse_double(parts[1], "grid");
  const double steps = parse_double(parts[2], "grid");
  if (steps < 1 || steps != std::floor(steps) || steps > 1e7) throw ConfigError("grid steps must be an integer >= 1");
  if (!(g.hi > g.lo)) throw ConfigError("grid needs lo < hi");
  g.steps = static_cast<int>(steps);
  return g;
}

json solution_json(const LsdSolution& sol) {
  json j;
  j["z"] = cjson(sol.z);
  j["m"] = cjson(sol.m);
  j["g1"] = cjson(sol.g1);
  j["g2"] = cjson(sol.g2);
  j["m_under"] = cjson(sol.m_under);
  j["iterations"] = sol.iterations;
  j["residual"] = sol.residual;
  j["trivial"] = sol.trivial;
  j["in_uniqueness_set"] = sol.in_uniqueness_set();
  return j;
}

json prediction_json(const SpikePrediction& pred) {
  json j;
  j["alpha"] = pred.alpha;
  j["theta"] = pred.theta;
  j["g_prime"] = pred.g_prime;
  j["sigma_delta_sq"] = pred.sigma_delta_sq;
  j["overlap_sq"] = pred.overlap_sq;
  j["light_tail"] = pred.light_tail;
  j["edge"] = pred.edge;
  return j;
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must be key=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &config;
  const auto path = split(key, '.');
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (path[i].empty()) throw ConfigError("bad override key '" + key + "'");
    json& next = (*node)[path[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw ConfigError("override key '" + key + "' crosses a non-object");
    node = &next;
  }
  (*node)[path.back()] = value;
}

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
}

CsvTable read_csv_table(std::istream& in) {
  CsvTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (t.columns.empty()) {
      t.columns = cells;
      continue;
    }
    if (cells.size() != t.columns.size()) {
      throw ConfigError("CSV line " + std::to_string(lineno) + ": expected " + std::to_string(t.columns.size()) +
                        " fields");
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      if (c == "nan") {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
      } else {
        row.push_back(parse_double(c, "CSV line " + std::to_string(lineno)));
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (t.columns.empty() || t.rows.empty()) throw ConfigError("CSV has no data rows");
  return t;
}

std::string histogram_svg(const CsvTable& hist, const GaussOverlay& overlay, const std::string& title) {
  const int il = hist.column("bin_left");
  const int ir = hist.column("bin_right");
  const int ic = hist.column("count");
  const int ig = hist.column("gauss_density");
  if (il < 0 || ir < 0 || ic < 0) throw ConfigError("histogram CSV needs bin_left, bin_right and count");
  double total = 0.0;
  for (const auto& r : hist.rows) total += r[ic];
  if (!(total > 0.0)) throw ConfigError("histogram has no counts");

  Frame f;
  f.x0 = hist.rows.front()[il];
  f.x1 = hist.rows.back()[ir];
  if (!(f.x1 > f.x0)) f.x1 = f.x0 + 1.0;
  std::vector<double> dens;
  double ymax = 0.0;
  for (const auto& r : hist.rows) {
    const double w = r[ir] - r[il];
    dens.push_back(w > 0.0 ? r[ic] / (total * w) : 0.0);
    ymax = std::max(ymax, dens.back());
    if (ig >= 0 && std::isfinite(r[ig])) ymax = std::max(ymax, r[ig]);
  }
  auto gauss = [&](double x) {
    return std::exp(-0.5 * std::pow((x - overlay.mean) / overlay.sd, 2)) / (overlay.sd * std::sqrt(2.0 * std::numbers::pi));
  };
  if (overlay.enabled) ymax = std::max(ymax, gauss(overlay.mean));
  f.y1 = ymax > 0.0 ? 1.1 * ymax : 1.0;

  std::ostringstream s;
  s << std::setprecision(8);
  svg_open(s, f, title);
  s << "<g fill=\"#9ecae1\" stroke=\"#3182bd\" stroke-width=\"0.5\">\n";
  for (std::size_t i = 0; i < hist.rows.size(); ++i) {
    const auto& r = hist.rows[i];
    const double x = f.px(r[il]);
    const double w = std::max(f.px(r[ir]) - x, 1.0);
    const double y = f.py(dens[i]);
    s << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << f.py(0.0) - y << "\"/>\n";
  }
  s << "</g>\n";
  std::vector<std::pair<double, double>> curve;
  if (overlay.enabled) {
    for (int i = 0; i <= 200; ++i) {
      const double x = f.x0 + (f.x1 - f.x0) * i / 200;
      curve.emplace_back(x, gauss(x));
    }
  } else if (ig >= 0) {
    for (const auto& r : hist.rows) {
      if (std::isfinite(r[ig])) curve.emplace_back(0.5 * (r[il] + r[ir]), r[ig]);
    }
  }
  if (curve.size() > 1) {
    s << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : curve) s << f.px(x) << ',' << f.py(y) << ' ';
    s << "\"/>\n";
  }
  svg_axes(s, f);
  s << "</svg>\n";
  return s.str();
}

std::string xy_svg(const CsvTable& table, const std::string& x, const std::string& y, const std::string& group,
                   const std::string& line, const std::string& title) {
  const int ix = table.column(x);
  const int iy = table.column(y);
  if (ix < 0 || iy < 0) throw ConfigError("xy plot: no column '" + (ix < 0 ? x : y) + "'");
  const int ig = group.empty() ? -1 : table.column(group);
  const int il = line.empty() ? -1 : table.column(line);
  if (!group.empty() && ig < 0) throw ConfigError("xy plot: no column '" + group + "'");
  if (!line.empty() && il < 0) throw ConfigError("xy plot: no column '" + line + "'");

  Frame f;
  f.x0 = f.y0 = std::numeric_limits<double>::infinity();
  f.x1 = f.y1 = -f.x0;
  for (const auto& r : table.rows) {
    f.x0 = std::min(f.x0, r[ix]);
    f.x1 = std::max(f.x1, r[ix]);
    for (int c : {iy, il}) {
      if (c >= 0 && std::isfinite(r[c])) {
        f.y0 = std::min(f.y0, r[c]);
        f.y1 = std::max(f.y1, r[c]);
      }
    }
  }
  if (!(f.x1 > f.x0)) {
    f.x0 -= 0.5;
    f.x1 += 0.5;
  }
  if (!(f.y1 > f.y0)) {
    f.y0 -= 0.5;
    f.y1 += 0.5;
  }
  const double pad = 0.05 * (f.y1 - f.y0);
  f.y0 -= pad;
  f.y1 += pad;

  std::map<double, std::vector<const std::vector<double>*>> series;
  for (const auto& r : table.rows) series[ig >= 0 ? r[ig] : 0.0].push_back(&r);

  std::ostringstream s;
  s << std::setprecision(8);
  svg_open(s, f, title);
  int k = 0;
  for (auto& [key, rows] : series) {
    const char* color = kPalette[k++ % 6];
    std::sort(rows.begin(), rows.end(), [ix](auto* a, auto* b) { return (*a)[ix] < (*b)[ix]; });
    if (il >= 0 && rows.size() > 1) {
      s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
      for (const auto* r : rows) s << f.px((*r)[ix]) << ',' << f.py((*r)[il]) << ' ';
      s << "\"/>\n";
    }
    s << "<g fill=\"" << color << "\">\n";
    for (const auto* r : rows) {
      if (std::isfinite((*r)[iy])) {
        s << "<circle cx=\"" << f.px((*r)[ix]) << "\" cy=\"" << f.py((*r)[iy]) << "\" r=\"3\"/>\n";
      }
    }
    s << "</g>\n";
  }
  svg_axes(s, f);
  s << "</svg>\n";
  return s.str();
}

// ---------------------------------------------------------------- entry point

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral theory of sample covariance matrices under elliptical distributions"};
  app.require_subcommand(1);

  double c = 0.0, alpha = 0.0, eps = 1e-4;
  std::string h1, h2, z, grid, out_path = "density.csv";
  auto* lsd = app.add_subcommand("lsd", "Limiting spectral distribution");
  lsd->require_subcommand(1);
  auto* solve = lsd->add_subcommand("solve", "Solve for (m, g1, g2) at one z");
  solve->add_option("--c", c, "Dimension ratio p/n")->required();
  solve->add_option("--h1", h1, "Population spectrum: delta:x or file:path")->required();
  solve->add_option("--h2", h2, "Radius law: delta:x or file:path")->required();
  solve->add_option("--z", z, "Spectral argument re,im with im > 0")->required();
  auto* density = lsd->add_subcommand("density", "Density and CDF on a grid");
  density->add_option("--c", c, "Dimension ratio p/n")->required();
  density->add_option("--h1", h1, "Population spectrum")->required();
  density->add_option("--h2", h2, "Radius law")->required();
  density->add_option("--grid", grid, "lo:hi:steps")->required();
  density->add_option("--eps", eps, "Distance above the real axis");
  density->add_option("--out", out_path, "Output CSV");

  auto* spike = app.add_subcommand("spike", "Spiked eigenvalue theory");
  spike->require_subcommand(1);
  auto* predict = spike->add_subcommand("predict", "Transition, variance and overlap of one spike");
  predict->add_option("--alpha", alpha, "Population spike")->required();
  predict->add_option("--c", c, "Dimension ratio p/n")->required();
  predict->add_option("--h1", h1, "Non-spiked population spectrum")->required();
  predict->add_option("--h2", h2, "Radius law")->required();

  std::string config, out_dir, seed;
  int jobs = 1;
  std::vector<std::string> overrides;
  auto* mc = app.add_subcommand("mc", "Run a Monte Carlo experiment");
  mc->add_option("--config", config, "Experiment config (JSON)")->required();
  mc->add_option("--out", out_dir, "Output directory (default out/<kind>)");
  mc->add_option("--seed", seed, "Master seed; falls back to the config, then ELLIPRMT_SEED");
  mc->add_option("--jobs", jobs, "Worker threads");
  mc->add_option("--set", overrides, "Config override key=value (repeatable)");

  std::string hist, xy, svg_out, theory, x, y, group, line, title;
  int case_index = 0;
  auto* plot = app.add_subcommand("plot", "Write an SVG plot");
  plot->add_option("--hist", hist, "hist.csv from spike-dist");
  plot->add_option("--xy", xy, "CSV table for a scatter plot");
  plot->add_option("--out", svg_out, "Output SVG")->required();
  plot->add_option("--theory", theory, "theory.json for the Gaussian overlay");
  plot->add_option("--case", case_index, "Case index in theory.json");
  plot->add_option("--x", x, "x column");
  plot->add_option("--y", y, "y column");
  plot->add_option("--group", group, "Column splitting the series");
  plot->add_option("--line", line, "Column drawn as a line per series");
  plot->add_option("--title", title, "Plot title");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    err << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (*solve) return cmd_lsd_solve(c, h1, h2, z, out);
    if (*density) return cmd_lsd_density(c, h1, h2, grid, eps, out_path, out, err);
    if (*predict) return cmd_spike_predict(alpha, c, h1, h2, out, err);
    if (*mc) return cmd_mc(config, out_dir, seed, jobs, overrides, out, err);
    if (*plot) return cmd_plot(hist, xy, svg_out, theory, case_index, x, y, group, line, title, err);
  } catch (const SubcriticalSpikeError& e) {
    err << "error: " << e.what() << " (threshold " << e.threshold() << ")\n";
    return kExitSubcritical;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << " (last residual " << e.last_residual() << ")\n";
    return kExitNumerical;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  err << "error: no command\n";
  return kExitUsage;
}

}  // namespace elliprmt
