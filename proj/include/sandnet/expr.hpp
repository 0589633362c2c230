#pragma once

// Symbolic one-variable functions f(t) used for edge sources and inverse
// slope bounds. Grammar (highest precedence first):
//
//   primary  := number | 't' | 'pi' | name '(' args ')' | '(' expr ')'
//   power    := primary ['^' unary]          (right associative)
//   unary    := '-' unary | power
//   product  := unary (('*' | '/') unary)*
//   sum      := product (('+' | '-') product)*
//
// Functions: sin cos tan exp log sqrt abs min max, plus the indicator
// chi(a <op> b [<op> c ...]) with <op> in { < <= > >= } evaluating a
// comparison chain to 1.0 or 0.0.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace sandnet {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& what)
      : std::runtime_error(what), offset_(offset), expected_(std::move(expected)) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

class EvalError : public std::runtime_error {
 public:
  EvalError(double t, const std::string& what) : std::runtime_error(what), t_(t) {}
  double t() const noexcept { return t_; }

 private:
  double t_;
};

enum class Func : std::uint8_t { Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Min, Max };
enum class Cmp : std::uint8_t { Less, LessEq, Greater, GreaterEq };

namespace detail {

enum class Kind : std::uint8_t { Number, Var, Neg, Add, Sub, Mul, Div, Pow, Call, Chi };

struct Node {
  Kind kind = Kind::Number;
  double value = 0.0;             // Number
  Func func = Func::Sin;          // Call
  std::vector<Cmp> cmps;          // Chi: cmps.size() == args.size() - 1
  std::vector<std::shared_ptr<const Node>> args;
};

using NodePtr = std::shared_ptr<const Node>;

inline constexpr struct {
  std::string_view name;
  Func func;
  std::size_t min_args;
  std::size_t max_args;
} kFunctions[] = {
    {"sin", Func::Sin, 1, 1},   {"cos", Func::Cos, 1, 1},  {"tan", Func::Tan, 1, 1},
    {"exp", Func::Exp, 1, 1},   {"log", Func::Log, 1, 1},  {"sqrt", Func::Sqrt, 1, 1},
    {"abs", Func::Abs, 1, 1},   {"min", Func::Min, 2, 64}, {"max", Func::Max, 2, 64},
};

inline std::string_view func_name(Func f) {
  for (const auto& e : kFunctions)
    if (e.func == f) return e.name;
  return "?";
}

inline std::string_view cmp_text(Cmp c) {
  switch (c) {
    case Cmp::Less: return "<";
    case Cmp::LessEq: return "<=";
    case Cmp::Greater: return ">";
    case Cmp::GreaterEq: return ">=";
  }
  return "?";
}

inline NodePtr make(Kind k, std::vector<NodePtr> args = {}) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->args = std::move(args);
  return n;
}

// Both operands must already be parsed.
inline NodePtr binary(Kind k, NodePtr lhs, NodePtr rhs) {
  std::vector<NodePtr> args;
  args.reserve(2);
  args.push_back(std::move(lhs));
  args.push_back(std::move(rhs));
  return make(k, std::move(args));
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    auto root = sum();
    skip_ws();
    if (pos_ != text_.size()) fail({"operator", "end of input"});
    return root;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    std::string msg = "syntax error at offset " + std::to_string(pos_) + ": expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) msg += i + 1 == expected.size() ? " or " : ", ";
      msg += expected[i];
    }
    if (pos_ < text_.size()) {
      msg += ", found '";
      msg += text_[pos_];
      msg += "'";
    } else {
      msg += ", found end of input";
    }
    throw ParseError(pos_, std::move(expected), msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail({std::string("'") + c + "'"});
  }

  NodePtr sum() {
    auto lhs = product();
    for (;;) {
      Kind k;
      if (accept('+'))
        k = Kind::Add;
      else if (accept('-'))
        k = Kind::Sub;
      else
        return lhs;
      auto rhs = product();
      lhs = binary(k, std::move(lhs), std::move(rhs));
    }
  }

  NodePtr product() {
    auto lhs = unary();
    for (;;) {
      Kind k;
      if (accept('*'))
        k = Kind::Mul;
      else if (accept('/'))
        k = Kind::Div;
      else
        return lhs;
      auto rhs = unary();
      lhs = binary(k, std::move(lhs), std::move(rhs));
    }
  }

  NodePtr unary() {
    if (!accept('-')) return power();
    auto operand = unary();
    return make(Kind::Neg, {std::move(operand)});
  }

  NodePtr power() {
    auto base = primary();
    if (!accept('^')) return base;
    auto exponent = unary();
    return binary(Kind::Pow, std::move(base), std::move(exponent));
  }

  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  NodePtr number() {
    std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_, ++n;
      return n;
    };
    std::size_t mantissa = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) {
      pos_ = start;
      fail({"number"});
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;  // 'e' belongs to something else
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc() || ptr != text_.data() + pos_) {
      pos_ = start;
      fail({"number"});
    }
    auto n = std::make_shared<Node>();
    n->kind = Kind::Number;
    n->value = v;
    return n;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail({"number", "'t'", "function", "'('", "'-'"});
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (c == '(') {
      ++pos_;
      auto inner = sum();
      expect(')');
      return inner;
    }
    if (!ident_start(c)) fail({"number", "'t'", "function", "'('", "'-'"});

    std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    std::string_view name = text_.substr(start, pos_ - start);

    if (name == "t") return make(Kind::Var);
    if (name == "pi") {
      auto n = std::make_shared<Node>();
      n->value = std::numbers::pi;
      return n;
    }
    if (name == "chi") return indicator();

    for (const auto& f : kFunctions) {
      if (f.name != name) continue;
      expect('(');
      std::vector<NodePtr> args;
      args.push_back(sum());
      while (accept(',')) args.push_back(sum());
      if (args.size() < f.min_args || args.size() > f.max_args) {
        pos_ = start;
        fail({std::string(name) + " with " +
              (f.min_args == f.max_args ? std::to_string(f.min_args) : "at least " + std::to_string(f.min_args)) +
              " argument(s)"});
      }
      expect(')');
      auto n = std::make_shared<Node>();
      n->kind = Kind::Call;
      n->func = f.func;
      n->args = std::move(args);
      return n;
    }
    pos_ = start;
    fail({"'t'", "'pi'", "known function name"});
  }

  bool comparison(Cmp& out) {
    skip_ws();
    if (pos_ >= text_.size()) return false;
    char c = text_[pos_];
    if (c != '<' && c != '>') return false;
    bool eq = pos_ + 1 < text_.size() && text_[pos_ + 1] == '=';
    out = c == '<' ? (eq ? Cmp::LessEq : Cmp::Less) : (eq ? Cmp::GreaterEq : Cmp::Greater);
    pos_ += eq ? 2 : 1;
    return true;
  }

  NodePtr indicator() {
    expect('(');
    auto n = std::make_shared<Node>();
    n->kind = Kind::Chi;
    n->args.push_back(sum());
    Cmp op{};
    while (comparison(op)) {
      n->cmps.push_back(op);
      n->args.push_back(sum());
    }
    if (n->cmps.empty()) fail({"'<'", "'<='", "'>'", "'>='"});
    expect(')');
    return n;
  }
};

inline double check_finite(double v, double t, const char* what) {
  if (!std::isfinite(v)) throw EvalError(t, std::string(what) + " produced a non-finite value at t=" + std::to_string(t));
  return v;
}

inline double eval(const Node& n, double t) {
  switch (n.kind) {
    case Kind::Number: return n.value;
    case Kind::Var: return t;
    case Kind::Neg: return -eval(*n.args[0], t);
    case Kind::Add: return check_finite(eval(*n.args[0], t) + eval(*n.args[1], t), t, "addition");
    case Kind::Sub: return check_finite(eval(*n.args[0], t) - eval(*n.args[1], t), t, "subtraction");
    case Kind::Mul: return check_finite(eval(*n.args[0], t) * eval(*n.args[1], t), t, "multiplication");
    case Kind::Div: {
      double num = eval(*n.args[0], t);
      double den = eval(*n.args[1], t);
      if (den == 0.0) throw EvalError(t, "division by zero at t=" + std::to_string(t));
      return check_finite(num / den, t, "division");
    }
    case Kind::Pow: {
      double b = eval(*n.args[0], t);
      double e = eval(*n.args[1], t);
      if (b == 0.0 && e < 0.0) throw EvalError(t, "zero raised to a negative power at t=" + std::to_string(t));
      return check_finite(std::pow(b, e), t, "power");
    }
    case Kind::Call: {
      double a = eval(*n.args[0], t);
      switch (n.func) {
        case Func::Sin: return std::sin(a);
        case Func::Cos: return std::cos(a);
        case Func::Tan: return check_finite(std::tan(a), t, "tan");
        case Func::Exp: return check_finite(std::exp(a), t, "exp");
        case Func::Log:
          if (a <= 0.0) throw EvalError(t, "log of a non-positive value at t=" + std::to_string(t));
          return std::log(a);
        case Func::Sqrt:
          if (a < 0.0) throw EvalError(t, "sqrt of a negative value at t=" + std::to_string(t));
          return std::sqrt(a);
        case Func::Abs: return std::fabs(a);
        case Func::Min:
        case Func::Max: {
          for (std::size_t i = 1; i < n.args.size(); ++i) {
            double b = eval(*n.args[i], t);
            a = n.func == Func::Min ? std::fmin(a, b) : std::fmax(a, b);
          }
          return a;
        }
      }
      return a;
    }
    case Kind::Chi: {
      double lhs = eval(*n.args[0], t);
      bool holds = true;
      for (std::size_t i = 0; i < n.cmps.size(); ++i) {
        double rhs = eval(*n.args[i + 1], t);
        switch (n.cmps[i]) {
          case Cmp::Less: holds = holds && lhs < rhs; break;
          case Cmp::LessEq: holds = holds && lhs <= rhs; break;
          case Cmp::Greater: holds = holds && lhs > rhs; break;
          case Cmp::GreaterEq: holds = holds && lhs >= rhs; break;
        }
        lhs = rhs;
      }
      return holds ? 1.0 : 0.0;
    }
  }
  return 0.0;
}

// Binding strength used by the printer; mirrors the parser levels.
inline int precedence(const Node& n) {
  switch (n.kind) {
    case Kind::Add:
    case Kind::Sub: return 1;
    case Kind::Mul:
    case Kind::Div: return 2;
    case Kind::Neg: return 3;
    case Kind::Pow: return 4;
    case Kind::Number: return n.value < 0.0 || std::signbit(n.value) ? 3 : 5;
    default: return 5;
  }
}

inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

inline void print(const Node& n, std::string& out);

inline void print_child(const Node& child, std::string& out, int min_prec) {
  if (precedence(child) < min_prec) {
    out += '(';
    print(child, out);
    out += ')';
  } else {
    print(child, out);
  }
}

inline void print(const Node& n, std::string& out) {
  switch (n.kind) {
    case Kind::Number:
      if (std::signbit(n.value)) {
        out += '-';
        out += format_number(-n.value);
      } else if (n.value == std::numbers::pi) {
        out += "pi";
      } else {
        out += format_number(n.value);
      }
      return;
    case Kind::Var: out += 't'; return;
    case Kind::Neg:
      out += '-';
      print_child(*n.args[0], out, 3);
      return;
    case Kind::Add:
    case Kind::Sub:
    case Kind::Mul:
    case Kind::Div: {
      int p = precedence(n);
      print_child(*n.args[0], out, p);
      out += n.kind == Kind::Add ? '+' : n.kind == Kind::Sub ? '-' : n.kind == Kind::Mul ? '*' : '/';
      print_child(*n.args[1], out, p + 1);
      return;
    }
    case Kind::Pow:
      print_child(*n.args[0], out, 5);
      out += '^';
      print_child(*n.args[1], out, 3);
      return;
    case Kind::Call:
      out += func_name(n.func);
      out += '(';
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += ',';
        print(*n.args[i], out);
      }
      out += ')';
      return;
    case Kind::Chi:
      out += "chi(";
      print(*n.args[0], out);
      for (std::size_t i = 0; i < n.cmps.size(); ++i) {
        out += cmp_text(n.cmps[i]);
        print(*n.args[i + 1], out);
      }
      out += ')';
      return;
  }
}

inline bool contains(const Node& n, Kind k) {
  if (n.kind == k) return true;
  for (const auto& a : n.args)
    if (contains(*a, k)) return true;
  return false;
}

}  // namespace detail

/// Immutable parsed expression in the variable t. Copies share the tree.
class Expr {
 public:
  /// Constant expression.
  explicit Expr(double value = 0.0) {
    auto n = std::make_shared<detail::Node>();
    n->value = value;
    root_ = n;
  }

  /// Throws ParseError with the byte offset and the expected-token set.
  static Expr parse(std::string_view text) { return Expr(detail::Parser(text).parse()); }

  /// Throws EvalError on domain errors (division by zero, log of a
  /// non-positive value, non-finite intermediate results).
  double eval(double t) const {
    if (!std::isfinite(t)) throw EvalError(t, "non-finite evaluation point");
    return detail::eval(*root_, t);
  }
  double operator()(double t) const { return eval(t); }

  /// Canonical text: minimal parentheses, no whitespace. parse(str()) rebuilds
  /// an identical tree.
  std::string str() const {
    std::string out;
    detail::print(*root_, out);
    return out;
  }

  bool has_indicator() const { return detail::contains(*root_, detail::Kind::Chi); }
  bool is_constant() const { return !detail::contains(*root_, detail::Kind::Var); }

  friend bool operator==(const Expr& a, const Expr& b) { return a.str() == b.str(); }

 private:
  explicit Expr(detail::NodePtr root) : root_(std::move(root)) {}
  detail::NodePtr root_;
};

}  // namespace sandnet
