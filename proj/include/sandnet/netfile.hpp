#pragma once

// Reader, writer and generators for the line-oriented `.net` network format:
//
//   #SPNET
//   #v <id> <x> <y> <b|t>
//   #e <id> <start> <end> <n> <f(t)> <eta_inv(t)>
//   #c <vertex> <edge> <value>     transmission coefficient override
//   #g <vertex> <value>            vertex source
//   #k <vertex> <edge> <value>     vertex source split coefficient
//   // comment
//
// Edge lengths are the Euclidean distances between endpoint coordinates.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sandnet/network.hpp"

namespace sandnet {

enum class NetFileErrorKind : std::uint8_t { Header, Syntax, Reference, Validation, Io };

class NetFileError : public std::runtime_error {
 public:
  NetFileError(NetFileErrorKind kind, std::size_t line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), kind_(kind), line_(line) {}

  NetFileErrorKind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }

 private:
  NetFileErrorKind kind_;
  std::size_t line_;
};

struct Coefficient {
  VertexId vertex;
  EdgeId edge;
  double value = 0.0;
  friend bool operator==(const Coefficient&, const Coefficient&) = default;
};

struct VertexSource {
  VertexId vertex;
  double value = 0.0;
  friend bool operator==(const VertexSource&, const VertexSource&) = default;
};

struct NetFile {
  Network network;
  std::vector<Coefficient> transmission;  // #c
  std::vector<VertexSource> sources;      // #g
  std::vector<Coefficient> source_split;  // #k
  std::vector<std::string> warnings;
};

struct ReadOptions {
  bool strict = false;     // accept only the plain format; extensions and comments are skipped with a warning
  bool validate = true;
  int samples = 1000;
};

namespace detail {

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

inline std::string join(const std::vector<std::string_view>& parts, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t k = from; k < to; ++k) {
    if (k > from) out += ' ';
    out += parts[k];
  }
  return out;
}

/// Splits trailing tokens into exactly two expressions. Expressions written
/// with inner spaces are resolved by trying every split point.
inline std::pair<Expr, Expr> split_expressions(const std::vector<std::string_view>& parts, std::size_t first,
                                               std::size_t line) {
  std::size_t count = parts.size() - first;
  if (count < 2) throw NetFileError(NetFileErrorKind::Syntax, line, "edge line needs a source and an eta^-1 expression");
  std::string last_error;
  std::optional<std::pair<Expr, Expr>> found;
  for (std::size_t k = first + 1; k < parts.size(); ++k) {
    try {
      Expr f = Expr::parse(join(parts, first, k));
      Expr eta = Expr::parse(join(parts, k, parts.size()));
      if (found)
        throw NetFileError(NetFileErrorKind::Syntax, line,
                           "ambiguous expressions '" + found->first.str() + "' / '" + found->second.str() + "' and '" +
                               f.str() + "' / '" + eta.str() + "'; remove the spaces inside an expression");
      found.emplace(std::move(f), std::move(eta));
    } catch (const ParseError& err) {
      last_error = err.what();
    }
  }
  if (!found) throw NetFileError(NetFileErrorKind::Syntax, line, "bad expression: " + last_error);
  return std::move(*found);
}

struct RawVertex {
  int label;
  Point position;
  VertexKind kind;
  std::size_t line;
};

struct RawEdge {
  int label, start, end, nodes;
  Expr f, eta_inv;
  std::size_t line;
};

struct RawCoefficient {
  char tag;
  int vertex, edge;
  double value;
  std::size_t line;
};

}  // namespace detail

inline NetFile read_net(std::istream& in, const ReadOptions& opts = {}) {
  using detail::parse_number;
  NetFile out;
  std::vector<detail::RawVertex> vertices;
  std::vector<detail::RawEdge> edges;
  std::vector<detail::RawCoefficient> extras;
  auto syntax = [](std::size_t line, const std::string& msg) { return NetFileError(NetFileErrorKind::Syntax, line, msg); };

  std::string raw;
  std::size_t line = 0;
  bool header = false;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string_view text(raw);
    if (auto c = text.find("//"); c != std::string_view::npos) {
      if (opts.strict) out.warnings.push_back("line " + std::to_string(line) + ": comment ignored");
      text = text.substr(0, c);
    }
    auto parts = detail::split_ws(text);
    if (parts.empty()) continue;

    if (!header) {
      if (parts.size() != 1 || parts[0] != "#SPNET")
        throw NetFileError(NetFileErrorKind::Header, line, "missing #SPNET header");
      header = true;
      continue;
    }
    std::string_view head = parts[0];
    if (head.size() < 2 || head[0] != '#') throw syntax(line, "expected a line starting with '#'");
    char tag = head[1];
    // "#v3 ..." carries the id in the tag; "#v 3 ..." in the next token
    if (head.size() > 2) {
      std::string_view id = head.substr(2);
      parts[0] = id;
    } else {
      parts.erase(parts.begin());
    }

    switch (tag) {
      case 'v': {
        if (parts.size() != 4) throw syntax(line, "vertex line needs <id> <x> <y> <b|t>");
        auto id = parse_number<int>(parts[0]);
        auto x = parse_number<double>(parts[1]);
        auto y = parse_number<double>(parts[2]);
        if (!id || !x || !y) throw syntax(line, "bad number in vertex line");
        if (parts[3] != "b" && parts[3] != "t") throw syntax(line, "vertex type must be 'b' or 't'");
        vertices.push_back({*id, {*x, *y}, parts[3] == "b" ? VertexKind::Boundary : VertexKind::Transition, line});
        break;
      }
      case 'e': {
        if (parts.size() < 6) throw syntax(line, "edge line needs <id> <start> <end> <n> <f> <eta_inv>");
        auto id = parse_number<int>(parts[0]);
        auto a = parse_number<int>(parts[1]);
        auto b = parse_number<int>(parts[2]);
        auto n = parse_number<int>(parts[3]);
        if (!id || !a || !b || !n) throw syntax(line, "bad integer in edge line");
        auto [f, eta] = detail::split_expressions(parts, 4, line);
        edges.push_back({*id, *a, *b, *n, std::move(f), std::move(eta), line});
        break;
      }
      case 'c':
      case 'k':
      case 'g': {
        if (opts.strict) {
          out.warnings.push_back("line " + std::to_string(line) + ": extension line ignored");
          break;
        }
        std::size_t want = tag == 'g' ? 2 : 3;
        if (parts.size() != want) throw syntax(line, std::string("#") + tag + " line has the wrong number of fields");
        auto v = parse_number<int>(parts[0]);
        auto e = tag == 'g' ? std::optional<int>(0) : parse_number<int>(parts[1]);
        auto val = parse_number<double>(parts[want - 1]);
        if (!v || !e || !val) throw syntax(line, std::string("bad number in #") + tag + " line");
        extras.push_back({tag, *v, *e, *val, line});
        break;
      }
      default:
        throw syntax(line, std::string("unknown line type '#") + tag + "'");
    }
  }
  if (in.bad()) throw NetFileError(NetFileErrorKind::Io, 0, "read failure");
  if (!header) throw NetFileError(NetFileErrorKind::Header, 0, "missing #SPNET header");

  std::map<int, std::size_t> vertex_index;
  std::vector<Vertex> vs;
  for (const auto& rv : vertices) {
    if (!vertex_index.emplace(rv.label, vs.size()).second)
      throw syntax(rv.line, "duplicate vertex id " + std::to_string(rv.label));
    vs.push_back({rv.label, rv.position, rv.kind});
  }
  std::map<int, std::size_t> edge_index;
  std::vector<Edge> es;
  for (auto& re : edges) {
    if (!edge_index.emplace(re.label, es.size()).second)
      throw syntax(re.line, "duplicate edge id " + std::to_string(re.label));
    auto a = vertex_index.find(re.start), b = vertex_index.find(re.end);
    if (a == vertex_index.end() || b == vertex_index.end())
      throw NetFileError(NetFileErrorKind::Reference, re.line,
                         "edge " + std::to_string(re.label) + " references an undeclared vertex");
    Edge e;
    e.label = re.label;
    e.start = VertexId(a->second);
    e.end = VertexId(b->second);
    e.length = euclidean(vs[a->second].position, vs[b->second].position);
    e.source = std::move(re.f);
    e.eta_inv = std::move(re.eta_inv);
    e.interior_nodes = re.nodes;
    es.push_back(std::move(e));
  }
  out.network = Network(std::move(vs), std::move(es));

  for (const auto& x : extras) {
    auto v = vertex_index.find(x.vertex);
    if (v == vertex_index.end())
      throw NetFileError(NetFileErrorKind::Reference, x.line, "undeclared vertex " + std::to_string(x.vertex));
    if (x.tag == 'g') {
      out.sources.push_back({VertexId(v->second), x.value});
      continue;
    }
    auto e = edge_index.find(x.edge);
    if (e == edge_index.end())
      throw NetFileError(NetFileErrorKind::Reference, x.line, "undeclared edge " + std::to_string(x.edge));
    const Edge& edge = out.network.edges()[e->second];
    if (*edge.start != v->second && *edge.end != v->second)
      throw NetFileError(NetFileErrorKind::Reference, x.line,
                         "edge " + std::to_string(x.edge) + " is not incident to vertex " + std::to_string(x.vertex));
    (x.tag == 'c' ? out.transmission : out.source_split).push_back({VertexId(v->second), EdgeId(e->second), x.value});
  }

  if (opts.validate) {
    ValidationReport report = validate(out.network, opts.samples);
    auto check_sums = [&](const std::vector<Coefficient>& list, const char* what) {
      std::map<std::uint32_t, double> sums;
      for (const auto& c : list) {
        if (!(c.value > 0.0))
          report.violations.push_back({ViolationKind::EvaluationFailed, std::string(what) + " coefficients must be positive"});
        sums[c.vertex.value] += c.value;
      }
      for (auto [v, sum] : sums)
        if (std::fabs(sum - 1.0) > 1e-12)
          report.violations.push_back({ViolationKind::EvaluationFailed,
                                       std::string(what) + " coefficients at vertex " +
                                           std::to_string(out.network.vertices()[v].label) + " sum to " +
                                           detail::format_real(sum) + ", not 1"});
    };
    check_sums(out.transmission, "transmission");
    check_sums(out.source_split, "source split");
    for (const auto& g : out.sources)
      if (!(g.value >= 0.0) || !std::isfinite(g.value))
        report.violations.push_back({ViolationKind::SourceNegative, "vertex source must be finite and non-negative"});
    if (!report.ok()) throw NetFileError(NetFileErrorKind::Validation, 0, "invalid network:\n" + report.summary());
  }
  return out;
}

inline NetFile read_net(const std::string& text, const ReadOptions& opts = {}) {
  std::istringstream in(text);
  return read_net(in, opts);
}

inline NetFile read_net_file(const std::filesystem::path& path, const ReadOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw NetFileError(NetFileErrorKind::Io, 0, "cannot open " + path.string());
  return read_net(in, opts);
}

inline void write_net(std::ostream& out, const NetFile& file) {
  const Network& net = file.network;
  auto vlabel = [&](VertexId v) { return net.vertex(v).label; };
  out << "#SPNET\n";
  for (const Vertex& v : net.vertices())
    out << "#v " << v.label << ' ' << detail::format_real(v.position.x) << ' ' << detail::format_real(v.position.y)
        << ' ' << (v.is_boundary() ? 'b' : 't') << '\n';
  for (const Edge& e : net.edges())
    out << "#e " << e.label << ' ' << vlabel(e.start) << ' ' << vlabel(e.end) << ' ' << e.interior_nodes << ' '
        << e.source.str() << ' ' << e.eta_inv.str() << '\n';
  for (const auto& c : file.transmission)
    out << "#c " << vlabel(c.vertex) << ' ' << net.edge(c.edge).label << ' ' << detail::format_real(c.value) << '\n';
  for (const auto& g : file.sources) out << "#g " << vlabel(g.vertex) << ' ' << detail::format_real(g.value) << '\n';
  for (const auto& k : file.source_split)
    out << "#k " << vlabel(k.vertex) << ' ' << net.edge(k.edge).label << ' ' << detail::format_real(k.value) << '\n';
}

inline std::string write_net(const NetFile& file) {
  std::ostringstream out;
  write_net(out, file);
  return out.str();
}

/// Field-by-field equality of two parsed files (lengths, expressions, labels, extensions).
inline bool same_network(const NetFile& a, const NetFile& b) {
  const Network &x = a.network, &y = b.network;
  if (x.vertex_count() != y.vertex_count() || x.edge_count() != y.edge_count()) return false;
  for (std::size_t i = 0; i < x.vertex_count(); ++i) {
    const Vertex &p = x.vertices()[i], &q = y.vertices()[i];
    if (p.label != q.label || !(p.position == q.position) || p.kind != q.kind) return false;
  }
  for (std::size_t j = 0; j < x.edge_count(); ++j) {
    const Edge &p = x.edges()[j], &q = y.edges()[j];
    if (p.label != q.label || p.start != q.start || p.end != q.end || p.length != q.length ||
        p.interior_nodes != q.interior_nodes || !(p.source == q.source) || !(p.eta_inv == q.eta_inv))
      return false;
  }
  return a.transmission == b.transmission && a.sources == b.sources && a.source_split == b.source_split;
}

// ---------------------------------------------------------------------------
// Generators

/// Interior node count giving a uniform step no larger than h.
inline int nodes_for_step(double length, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("step must be positive");
  double cells = std::ceil(length / h - 1e-9);
  return std::max(1, static_cast<int>(cells) - 1);
}

namespace detail {

inline Edge make_edge(const std::vector<Vertex>& vs, int label, std::size_t a, std::size_t b, const std::string& f,
                      const std::string& eta_inv, double h) {
  Edge e;
  e.label = label;
  e.start = VertexId(a);
  e.end = VertexId(b);
  e.length = euclidean(vs[a].position, vs[b].position);
  e.source = Expr::parse(f);
  e.eta_inv = Expr::parse(eta_inv);
  e.interior_nodes = nodes_for_step(e.length, h);
  return e;
}

inline Vertex make_vertex(int label, double x, double y, VertexKind kind) { return {label, {x, y}, kind}; }

}  // namespace detail

/// Three-edge star: x0 transition, x1, x2, x3 boundary, edges x0 -> xj.
inline NetFile generate_test1(double h = 0.01) {
  using detail::make_vertex;
  std::vector<Vertex> vs = {make_vertex(0, 0.0, 0.0, VertexKind::Transition),
                            make_vertex(1, 0.0, 0.5, VertexKind::Boundary),
                            make_vertex(2, -0.5, 0.0, VertexKind::Boundary),
                            make_vertex(3, 1.0, 0.0, VertexKind::Boundary)};
  std::vector<Edge> es;
  for (int j = 1; j <= 3; ++j) es.push_back(detail::make_edge(vs, j, 0, static_cast<std::size_t>(j), "1-t", "1", h));
  return {Network(std::move(vs), std::move(es)), {}, {}, {}, {}};
}

/// Test-1 geometry plus x2 -> x1 and x1 -> x3, only x3 on the boundary.
inline NetFile generate_test2(double h = 0.01) {
  using detail::make_vertex;
  std::vector<Vertex> vs = {make_vertex(0, 0.0, 0.0, VertexKind::Transition),
                            make_vertex(1, 0.0, 0.5, VertexKind::Transition),
                            make_vertex(2, -0.5, 0.0, VertexKind::Transition),
                            make_vertex(3, 1.0, 0.0, VertexKind::Boundary)};
  std::vector<Edge> es;
  es.push_back(detail::make_edge(vs, 1, 0, 1, "0", "1", h));
  es.push_back(detail::make_edge(vs, 2, 0, 2, "0", "1", h));
  es.push_back(detail::make_edge(vs, 3, 0, 3, "0", "0.2", h));
  es.push_back(detail::make_edge(vs, 4, 2, 1, "2*chi(abs(t-0.25)<=0.125)", "1", h));
  es.push_back(detail::make_edge(vs, 5, 1, 3, "0", "1", h));
  return {Network(std::move(vs), std::move(es)), {}, {}, {}, {}};
}

/// Two-level Sierpinski gasket with sources on two inner edges.
inline NetFile generate_test3(double h = 0.01) {
  using detail::make_vertex;
  const double r = std::numbers::sqrt3 / 2.0;
  std::vector<Vertex> vs = {make_vertex(0, 0.0, 0.0, VertexKind::Boundary),
                            make_vertex(1, 2.0, 0.0, VertexKind::Boundary),
                            make_vertex(2, 1.0, 2.0 * r, VertexKind::Boundary),
                            make_vertex(3, 1.0, 0.0, VertexKind::Transition),
                            make_vertex(4, 1.5, r, VertexKind::Transition),
                            make_vertex(5, 0.5, r, VertexKind::Transition)};
  const std::string bump = "2*chi(abs(t-0.5)<=0.125)";
  const std::pair<int, int> ends[] = {{0, 3}, {3, 1}, {1, 4}, {4, 2}, {2, 5}, {5, 0}, {3, 4}, {4, 5}, {5, 3}};
  std::vector<Edge> es;
  for (int j = 0; j < 9; ++j)
    es.push_back(detail::make_edge(vs, j + 1, static_cast<std::size_t>(ends[j].first),
                                   static_cast<std::size_t>(ends[j].second), j == 6 || j == 7 ? bump : "0", "1", h));
  return {Network(std::move(vs), std::move(es)), {}, {}, {}, {}};
}

struct GenOptions {
  double h = 0.01;
  std::string source = "1";
  std::string eta_inv = "1";
};

/// Sierpinski pre-fractal of the given level (level 1 is a triangle) with unit
/// edges; the three corners are boundary vertices.
inline NetFile generate_sierpinski(int level, const GenOptions& opts = {}) {
  if (level < 1) throw std::invalid_argument("sierpinski level must be >= 1");
  if (level > 10) throw std::invalid_argument("sierpinski level must be <= 10");
  const long side = 1L << (level - 1);
  std::map<std::pair<long, long>, std::size_t> index;
  std::vector<Vertex> vs;
  auto vertex = [&](long a, long b) {
    auto [it, fresh] = index.emplace(std::make_pair(a, b), vs.size());
    if (fresh) {
      bool corner = (a == 0 && b == 0) || (a == side && b == 0) || (a == 0 && b == side);
      vs.push_back(detail::make_vertex(static_cast<int>(vs.size()), static_cast<double>(a) + 0.5 * static_cast<double>(b),
                                       static_cast<double>(b) * std::numbers::sqrt3 / 2.0,
                                       corner ? VertexKind::Boundary : VertexKind::Transition));
    }
    return it->second;
  };
  vertex(0, 0);
  vertex(side, 0);
  vertex(0, side);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::function<void(long, long, long)> recurse = [&](long a, long b, long size) {
    if (size == 1) {
      std::size_t p = vertex(a, b), q = vertex(a + 1, b), r = vertex(a, b + 1);
      pairs.emplace_back(p, q);
      pairs.emplace_back(q, r);
      pairs.emplace_back(r, p);
      return;
    }
    long half = size / 2;
    recurse(a, b, half);
    recurse(a + half, b, half);
    recurse(a, b + half, half);
  };
  recurse(0, 0, side);

  std::vector<Edge> es;
  for (auto [p, q] : pairs)
    es.push_back(detail::make_edge(vs, static_cast<int>(es.size()) + 1, p, q, opts.source, opts.eta_inv, opts.h));
  return {Network(std::move(vs), std::move(es)), {}, {}, {}, {}};
}

/// Star with a transition center and boundary arm tips. `lengths` is either
/// empty (unit arms), a single value for all arms, or one value per arm.
inline NetFile generate_star(int arms, const std::vector<double>& lengths = {}, const GenOptions& opts = {}) {
  if (arms < 3) throw std::invalid_argument("star needs at least 3 arms");
  if (!lengths.empty() && lengths.size() != 1 && lengths.size() != static_cast<std::size_t>(arms))
    throw std::invalid_argument("star needs one length or one length per arm");
  std::vector<Vertex> vs = {detail::make_vertex(0, 0.0, 0.0, VertexKind::Transition)};
  for (int k = 0; k < arms; ++k) {
    double len = lengths.empty() ? 1.0 : lengths.size() == 1 ? lengths[0] : lengths[static_cast<std::size_t>(k)];
    if (!(len > 0.0)) throw std::invalid_argument("star arm lengths must be positive");
    double angle = 2.0 * std::numbers::pi * k / arms;
    vs.push_back(detail::make_vertex(k + 1, len * std::cos(angle), len * std::sin(angle), VertexKind::Boundary));
  }
  std::vector<Edge> es;
  for (int k = 1; k <= arms; ++k)
    es.push_back(detail::make_edge(vs, k, 0, static_cast<std::size_t>(k), opts.source, opts.eta_inv, opts.h));
  return {Network(std::move(vs), std::move(es)), {}, {}, {}, {}};
}

}  // namespace sandnet
