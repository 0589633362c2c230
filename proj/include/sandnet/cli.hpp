#pragma once

// Command implementations behind the sandnet executable. Every command
// returns a process exit code: 0 success, 1 parse or usage error,
// 2 validation error, 3 I/O error, 4 failed invariant audit.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sandnet/analysis.hpp"
#include "sandnet/audit.hpp"
#include "sandnet/netfile.hpp"
#include "sandnet/rolling.hpp"

namespace sandnet {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int parse = 1;
inline constexpr int validation = 2;
inline constexpr int io = 3;
inline constexpr int audit = 4;
}  // namespace exit_code

struct RunConfig {
  std::string command;
  std::string input;  // .net path, or generator kind for gen
  std::optional<double> h;
  std::vector<double> h_list;
  std::string out_dir = ".";
  std::string format = "csv";
  bool strict = false;
  int samples = 10000;
  bool reference = false;
  std::string grid = "nearest";
  std::string v_file;
  int level = 2;
  int arms = 3;
  std::vector<double> lengths;
  std::string source = "1";
  std::string eta_inv = "1";
  Tolerances tol;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace io {

inline std::string real(double v) { return detail::format_real(v); }

/// Writes through a temporary sibling and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

inline std::string distance_csv(const Network& net, const Solution& sol) {
  std::string out = "edge_id,t,s_arclength,d_value\n";
  for (std::size_t j = 0; j < net.edge_count(); ++j) {
    const Edge& e = net.edges()[j];
    const EdgeGrid& g = sol.distance.grid.edge(EdgeId(j));
    for (std::size_t m = 0; m < g.size(); ++m)
      out += std::to_string(e.label) + ',' + real(g.s[m] / e.length) + ',' + real(g.s[m]) + ',' +
             real(sol.distance.field.at(g, m)) + '\n';
  }
  return out;
}

inline std::string rolling_csv(const Network& net, const Solution& sol) {
  std::string out = "edge_id,t,v_value\n";
  for (std::size_t j = 0; j < net.edge_count(); ++j) {
    const Edge& e = net.edges()[j];
    const EdgeGrid& g = sol.distance.grid.edge(EdgeId(j));
    for (std::size_t m = 0; m < g.size(); ++m)
      out += std::to_string(e.label) + ',' + real(g.s[m] / e.length) + ',' + real(sol.rolling.v[j][m]) + '\n';
  }
  return out;
}

/// Reads a v.csv back into per-edge node vectors; the row layout must match
/// the solution grid.
inline std::vector<std::vector<double>> read_rolling_csv(std::istream& in, const Network& net, const Grid& grid) {
  std::vector<std::vector<double>> v(net.edge_count());
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || row == 1) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ','))
      throw UsageError("v file row " + std::to_string(row) + " is malformed");
    auto label = detail::parse_number<int>(a);
    auto value = detail::parse_number<double>(c);
    if (!label || !value) throw UsageError("v file row " + std::to_string(row) + " has a bad number");
    auto j = net.find_edge(*label);
    if (!j) throw UsageError("v file row " + std::to_string(row) + " names an unknown edge");
    v[**j].push_back(*value);
  }
  for (std::size_t j = 0; j < net.edge_count(); ++j)
    if (v[j].size() != grid.edge(EdgeId(j)).size())
      throw UsageError("v file does not match the grid of edge " + std::to_string(net.edges()[j].label));
  return v;
}

inline std::string edge_list(const Network& net, const std::vector<EdgeId>& ids) {
  std::string out = "{";
  for (std::size_t k = 0; k < ids.size(); ++k) out += (k ? "," : "") + std::to_string(net.edge(ids[k]).label);
  return out + "}";
}

inline std::string report(const Network& net, const Solution& sol, const UniquenessReport& uq) {
  const Grid& grid = sol.distance.grid;
  const Structure& st = sol.distance.structure;
  std::ostringstream r;
  r.precision(10);
  r << "network: " << net.vertex_count() << " vertices (" << net.boundary_count() << " boundary), " << net.edge_count()
    << " edges\n";
  r << "grid: " << grid.node_count() << " nodes, nominal step " << grid.nominal_step() << ", max step "
    << grid.max_step() << ", " << sol.distance.inserted << " tie midpoints\n";
  r << "max distance: " << sol.distance.field.max() << "\n\n";

  r << "singular points (" << st.singular_count() << "):\n";
  for (const auto& p : uq.singular) {
    if (p.vertex)
      r << "  vertex " << net.vertex(*p.vertex).label << " (local maximum)";
    else
      r << "  edge " << net.edge(p.edge).label << " at t = " << p.t;
    r << (p.covered ? "  source present\n" : "  no source nearby\n");
  }

  r << "\nvertex slopes:\n";
  for (std::size_t i = 0; i < net.vertex_count(); ++i) {
    const auto& vs = st.vertices[i];
    r << "  vertex " << net.vertices()[i].label << (net.vertices()[i].is_boundary() ? " [b]" : " [t]")
      << "  Inc+ " << edge_list(net, vs.inc_plus) << "  Inc- " << edge_list(net, vs.inc_minus)
      << (vs.local_max ? "  local max" : "") << '\n';
  }

  r << "\nedge partition:\n";
  for (std::size_t k = 0; k < st.partition.classes.size(); ++k)
    r << "  class " << k << ": " << edge_list(net, st.partition.classes[k]) << '\n';
  r << "processing levels:\n";
  for (std::size_t k = 0; k < sol.rolling.schedule.size(); ++k)
    r << "  level " << k << ": " << edge_list(net, sol.rolling.schedule[k]) << '\n';

  r << "\nrolling layer at vertices (one value per incident edge):\n";
  const double vtol = 1e-12 * (1.0 + sol.rolling.max());
  for (std::size_t i = 0; i < net.vertex_count(); ++i) {
    r << "  vertex " << net.vertices()[i].label << ':';
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& inc : net.incidence(VertexId(i))) {
      double v = sol.rolling.at(inc.edge, inc.end);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      r << "  e" << net.edge(inc.edge).label << '=' << v;
    }
    r << (hi - lo <= vtol ? "  continuous\n" : "  multivalued\n");
  }

  r << "\nflux balance at transition vertices:\n";
  for (const auto& fx : flux_report(net, st, sol.rolling, sol.spec))
    r << "  vertex " << net.vertex(fx.vertex).label << "  inflow " << fx.inflow << "  source " << fx.source
      << "  outflow " << fx.outflow << "  residual " << fx.residual << '\n';
  MassBalance mb = mass_balance(net, sol);
  r << "boundary outflow " << mb.outflow << ", poured mass " << mb.poured << ", difference " << mb.error << '\n';

  r << "\nedges with zero rolling layer: " << edge_list(net, uq.zero_edges) << '\n';
  r << "edges where u^f < d: " << edge_list(net, uq.gap_edges) << '\n';
  r << "uniqueness: " << (uq.unique ? "unique" : "not unique") << '\n';
  return r.str();
}

inline std::string gnuplot_script(const Network& net) {
  std::string labels;
  for (const Edge& e : net.edges()) labels += (labels.empty() ? "" : " ") + std::to_string(e.label);
  std::string s;
  s += "set datafile separator ','\n";
  s += "set terminal svg size 1000,420\n";
  s += "set output 'plot_gnuplot.svg'\n";
  s += "set multiplot layout 1,2\n";
  s += "set key outside right\n";
  s += "set xlabel 't'\n";
  s += "edges = \"" + labels + "\"\n";
  s += "set title 'distance d'\n";
  s += "plot for [e in edges] 'd.csv' using ($1 == e+0 ? $2 : NaN):4 with lines title 'e'.e\n";
  s += "set title 'rolling layer v'\n";
  s += "plot for [e in edges] 'v.csv' using ($1 == e+0 ? $2 : NaN):3 with lines title 'e'.e\n";
  s += "unset multiplot\n";
  return s;
}

inline std::string color(double x) {
  x = std::clamp(std::isfinite(x) ? x : 0.0, 0.0, 1.0);
  // blue -> green -> red
  int r = static_cast<int>(std::lround(255 * std::clamp(2.0 * x - 1.0, 0.0, 1.0)));
  int g = static_cast<int>(std::lround(255 * (1.0 - std::fabs(2.0 * x - 1.0))));
  int b = static_cast<int>(std::lround(255 * std::clamp(1.0 - 2.0 * x, 0.0, 1.0)));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

inline std::string svg(const Network& net, const Solution& sol) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const Vertex& v : net.vertices()) {
    xmin = std::min(xmin, v.position.x);
    xmax = std::max(xmax, v.position.x);
    ymin = std::min(ymin, v.position.y);
    ymax = std::max(ymax, v.position.y);
  }
  const double panel = 400.0, pad = 30.0;
  double span = std::max({xmax - xmin, ymax - ymin, 1e-9});
  auto px = [&](double x, int k) { return pad + k * (panel + 2 * pad) + (x - xmin) / span * panel; };
  auto py = [&](double y) { return pad + panel - (y - ymin) / span * panel; };

  std::ostringstream s;
  s.precision(6);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * (panel + 2 * pad) << "\" height=\""
    << panel + 2 * pad + 20 << "\">\n";
  const char* titles[] = {"distance d", "rolling layer v"};
  const double dmax = std::max(sol.distance.field.max(), 1e-300), vmax = std::max(sol.rolling.max(), 1e-300);
  for (int k = 0; k < 2; ++k) {
    s << "<text x=\"" << px(xmin, k) << "\" y=\"" << 18 << "\" font-family=\"sans-serif\" font-size=\"14\">"
      << titles[k] << "</text>\n";
    for (std::size_t j = 0; j < net.edge_count(); ++j) {
      const Edge& e = net.edges()[j];
      const EdgeGrid& g = sol.distance.grid.edge(EdgeId(j));
      Point a = net.vertex(e.start).position, b = net.vertex(e.end).position;
      std::size_t stride = std::max<std::size_t>(1, g.size() / 200);
      for (std::size_t m = 0; m + 1 < g.size(); m += stride) {
        std::size_t n = std::min(g.last(), m + stride);
        double t0 = g.s[m] / e.length, t1 = g.s[n] / e.length;
        double value = k == 0 ? 0.5 * (sol.distance.field.at(g, m) + sol.distance.field.at(g, n)) / dmax
                              : 0.5 * (sol.rolling.v[j][m] + sol.rolling.v[j][n]) / vmax;
        s << "<line x1=\"" << px(a.x + t0 * (b.x - a.x), k) << "\" y1=\"" << py(a.y + t0 * (b.y - a.y)) << "\" x2=\""
          << px(a.x + t1 * (b.x - a.x), k) << "\" y2=\"" << py(a.y + t1 * (b.y - a.y)) << "\" stroke=\""
          << color(value) << "\" stroke-width=\"4\"/>\n";
      }
    }
    for (const Vertex& v : net.vertices())
      s << "<circle cx=\"" << px(v.position.x, k) << "\" cy=\"" << py(v.position.y) << "\" r=\"4\" fill=\""
        << (v.is_boundary() ? "black" : "white") << "\" stroke=\"black\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace io

namespace detail {

inline NetFile load(const RunConfig& cfg) {
  ReadOptions opts;
  opts.strict = cfg.strict;
  return read_net_file(cfg.input, opts);
}

inline GridPolicy parse_policy(const std::string& name) {
  if (name == "nearest") return GridPolicy::Nearest;
  if (name == "odd") return GridPolicy::OddCells;
  if (name == "quarter") return GridPolicy::QuarterCells;
  throw UsageError("unknown grid policy '" + name + "' (nearest, odd, quarter)");
}

inline Network apply_step(const Network& net, const RunConfig& cfg) {
  if (!cfg.h) return net;
  if (!(*cfg.h > 0.0)) throw UsageError("--h must be positive");
  return with_step(net, *cfg.h, parse_policy(cfg.grid));
}

inline std::filesystem::path out_dir(const RunConfig& cfg) {
  std::filesystem::path dir(cfg.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  return dir;
}

}  // namespace detail

inline int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& /*err*/) {
  if (cfg.format != "csv" && cfg.format != "gnuplot" && cfg.format != "svg")
    throw UsageError("unknown format '" + cfg.format + "' (csv, gnuplot, svg)");
  NetFile file = detail::load(cfg);
  Network net = detail::apply_step(file.network, cfg);
  Solution sol = solve_pair(net, TransmissionSpec::from(file), cfg.tol);
  UniquenessReport uq =
      uniqueness_check(net, sol.distance.grid, sol.distance.field, sol.distance.structure, &sol.rolling, sol.spec);

  std::map<std::string, std::string> files;
  files["d.csv"] = io::distance_csv(net, sol);
  files["v.csv"] = io::rolling_csv(net, sol);
  files["report.txt"] = io::report(net, sol, uq);
  if (cfg.format == "gnuplot") files["plot.gp"] = io::gnuplot_script(net);
  if (cfg.format == "svg") files["plot.svg"] = io::svg(net, sol);

  auto dir = detail::out_dir(cfg);
  for (const auto& [name, content] : files) io::write_atomic(dir / name, content);
  out << files["report.txt"];
  return exit_code::ok;
}

inline int cmd_check(const RunConfig& cfg, std::ostream& out, std::ostream& /*err*/) {
  NetFile file = detail::load(cfg);
  Network net = detail::apply_step(file.network, cfg);
  Solution sol = solve_pair(net, TransmissionSpec::from(file), cfg.tol);
  if (!cfg.v_file.empty()) {
    std::ifstream in(cfg.v_file);
    if (!in) throw IoError("cannot open " + cfg.v_file);
    sol.rolling.v = io::read_rolling_csv(in, net, sol.distance.grid);
  }
  auto checks = audit(net, sol, cfg.tol);
  std::size_t width = 0;
  for (const auto& c : checks) width = std::max(width, c.name.size());
  for (const auto& c : checks)
    out << (c.passed ? "PASS  " : "FAIL  ") << c.name << std::string(width - c.name.size() + 2, ' ') << c.detail << '\n';
  UniquenessReport uq =
      uniqueness_check(net, sol.distance.grid, sol.distance.field, sol.distance.structure, &sol.rolling, sol.spec);
  out << "uniqueness: " << (uq.unique ? "unique" : "not unique") << '\n';
  return all_passed(checks) ? exit_code::ok : exit_code::audit;
}

inline int cmd_converge(const RunConfig& cfg, std::ostream& out, std::ostream& /*err*/) {
  ConvergenceOptions opts;
  if (!cfg.h_list.empty()) opts.h_list = cfg.h_list;
  if (opts.h_list.size() < 2) throw UsageError("need >= 2 steps");
  opts.policy = detail::parse_policy(cfg.grid);
  opts.samples = cfg.samples;
  opts.force_reference = cfg.reference;
  if (cfg.samples < 1) throw UsageError("--samples must be positive");
  NetFile file = detail::load(cfg);
  ErrorTable table = convergence_study(file, opts, cfg.tol);

  std::string csv = "h,Linf_d,L1_d,Linf_v,L1_v\n";
  for (const auto& r : table.rows)
    csv += io::real(r.h) + ',' + io::real(r.linf_d) + ',' + io::real(r.l1_d) + ',' + io::real(r.linf_v) + ',' +
           io::real(r.l1_v) + '\n';
  io::write_atomic(detail::out_dir(cfg) / "errors.csv", csv);

  out << (table.reference ? "errors against a reference grid\n" : "errors against the closed-form solution\n");
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %-12s %-12s %-12s %-12s\n", "h", "Linf_d", "L1_d", "Linf_v", "L1_v");
  out << line;
  for (const auto& r : table.rows) {
    std::snprintf(line, sizeof line, "%-12.4e %-12.4e %-12.4e %-12.4e %-12.4e\n", r.h, r.linf_d, r.l1_d, r.linf_v, r.l1_v);
    out << line;
  }
  std::snprintf(line, sizeof line, "slopes: Linf_d %.3f  L1_d %.3f  Linf_v %.3f  L1_v %.3f\n", table.slopes[0],
                table.slopes[1], table.slopes[2], table.slopes[3]);
  out << line;
  return exit_code::ok;
}

inline NetFile generate(const RunConfig& cfg) {
  double h = cfg.h.value_or(0.01);
  if (!(h > 0.0)) throw UsageError("--h must be positive");
  GenOptions opts{h, cfg.source, cfg.eta_inv};
  const std::string& kind = cfg.input;
  try {
    if (kind == "test1") return generate_test1(h);
    if (kind == "test2") return generate_test2(h);
    if (kind == "test3") return generate_test3(h);
    if (kind == "sierpinski") return generate_sierpinski(cfg.level, opts);
    if (kind == "star") return generate_star(cfg.arms, cfg.lengths, opts);
  } catch (const ParseError& e) {
    throw UsageError(std::string("bad expression: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  throw UsageError("unknown generator '" + kind + "' (test1, test2, test3, sierpinski, star)");
}

inline int cmd_gen(const RunConfig& cfg, std::ostream& out, std::ostream& /*err*/) {
  NetFile file = generate(cfg);
  ValidationReport report = validate(file.network);
  if (!report.ok()) throw NetFileError(NetFileErrorKind::Validation, 0, "generated network is invalid:\n" + report.summary());
  std::string text = write_net(file);
  if (cfg.out_dir.empty() || cfg.out_dir == "-") {
    out << text;
    return exit_code::ok;
  }
  std::filesystem::path target(cfg.out_dir);
  if (std::filesystem::is_directory(target)) target /= cfg.input + ".net";
  io::write_atomic(target, text);
  return exit_code::ok;
}

/// Dispatches one command and maps failures to exit codes.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (cfg.command == "solve") return cmd_solve(cfg, out, err);
    if (cfg.command == "check") return cmd_check(cfg, out, err);
    if (cfg.command == "converge") return cmd_converge(cfg, out, err);
    if (cfg.command == "gen") return cmd_gen(cfg, out, err);
    err << "error: unknown command '" << cfg.command << "'\n";
    return exit_code::parse;
  } catch (const NetFileError& e) {
    err << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case NetFileErrorKind::Validation:
        return exit_code::validation;
      case NetFileErrorKind::Io:
        return exit_code::io;
      default:
        return exit_code::parse;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::parse;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::io;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::io;
  } catch (const EvalError& e) {
    err << "error: evaluation failed at t = " << e.t() << ": " << e.what() << '\n';
    return exit_code::validation;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::validation;
  }
}

}  // namespace sandnet
