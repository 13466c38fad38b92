#include "pfsmc/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace pfsmc {

enum class Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Call };

struct Expression::Node {
  Op op = Op::Num;
  double value = 0.0;
  int var = 0;  // 0..3 for x, y, z, t
  double (*fn1)(double) = nullptr;
  double (*fn2)(double, double) = nullptr;
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

double fn_abs(double v) { return std::fabs(v); }
double fn_sign(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }
double fn_min(double a, double b) { return std::fmin(a, b); }
double fn_max(double a, double b) { return std::fmax(a, b); }

struct Unary {
  const char* name;
  double (*fn)(double);
};
const Unary kUnary[] = {
    {"sin", [](double v) { return std::sin(v); }},   {"cos", [](double v) { return std::cos(v); }},
    {"tan", [](double v) { return std::tan(v); }},   {"exp", [](double v) { return std::exp(v); }},
    {"log", [](double v) { return std::log(v); }},   {"sqrt", [](double v) { return std::sqrt(v); }},
    {"tanh", [](double v) { return std::tanh(v); }}, {"abs", fn_abs},
    {"sign", fn_sign},
};

class Parser {
 public:
  Parser(std::string_view s, bool& uses_t) : s_(s), uses_t_(uses_t) {}

  NodePtr run() {
    auto n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw std::invalid_argument("expression '" + std::string(s_) + "': " + msg + " at column " +
                                std::to_string(pos_ + 1));
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  static NodePtr make(Op op, std::vector<NodePtr> args) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->args = std::move(args);
    return n;
  }

  NodePtr expr() {
    auto lhs = term();
    for (;;) {
      if (eat('+'))
        lhs = make(Op::Add, {lhs, term()});
      else if (eat('-'))
        lhs = make(Op::Sub, {lhs, term()});
      else
        return lhs;
    }
  }
  NodePtr term() {
    auto lhs = unary();
    for (;;) {
      if (eat('*'))
        lhs = make(Op::Mul, {lhs, unary()});
      else if (eat('/'))
        lhs = make(Op::Div, {lhs, unary()});
      else
        return lhs;
    }
  }
  NodePtr unary() {
    if (eat('-')) return make(Op::Neg, {unary()});
    if (eat('+')) return unary();
    return power();
  }
  NodePtr power() {
    auto base = atom();
    if (eat('^')) return make(Op::Pow, {base, unary()});
    return base;
  }
  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    if (eat('(')) {
      auto n = expr();
      if (!eat(')')) fail("expected ')'");
      return n;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::string rest(s_.substr(pos_));
      char* end = nullptr;
      const double v = std::strtod(rest.c_str(), &end);
      if (end == rest.c_str()) fail("bad number");
      pos_ += static_cast<std::size_t>(end - rest.c_str());
      auto n = std::make_shared<Expression::Node>();
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string name(s_.substr(start, pos_ - start));
      if (eat('(')) return call(name);
      auto n = std::make_shared<Expression::Node>();
      if (name == "pi") {
        n->value = std::numbers::pi;
      } else if (name == "e") {
        n->value = std::numbers::e;
      } else if (name.size() == 1 && std::string_view("xyzt").find(name[0]) != std::string_view::npos) {
        n->op = Op::Var;
        n->var = static_cast<int>(std::string_view("xyzt").find(name[0]));
        if (n->var == 3) uses_t_ = true;
      } else {
        pos_ = start;
        fail("unknown name '" + name + "'");
      }
      return n;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }
  NodePtr call(const std::string& name) {
    std::vector<NodePtr> args{expr()};
    while (eat(',')) args.push_back(expr());
    if (!eat(')')) fail("expected ')'");
    auto n = std::make_shared<Expression::Node>();
    n->op = Op::Call;
    n->args = std::move(args);
    for (const auto& u : kUnary)
      if (name == u.name) {
        if (n->args.size() != 1) fail(name + " takes one argument");
        n->fn1 = u.fn;
        return n;
      }
    if (name == "min" || name == "max" || name == "pow") {
      if (n->args.size() != 2) fail(name + " takes two arguments");
      n->fn2 = name == "min" ? fn_min : name == "max" ? fn_max : static_cast<double (*)(double, double)>(std::pow);
      return n;
    }
    fail("unknown function '" + name + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  bool& uses_t_;
};

double eval(const Expression::Node& n, const double* v) {
  switch (n.op) {
    case Op::Num: return n.value;
    case Op::Var: return v[n.var];
    case Op::Neg: return -eval(*n.args[0], v);
    case Op::Add: return eval(*n.args[0], v) + eval(*n.args[1], v);
    case Op::Sub: return eval(*n.args[0], v) - eval(*n.args[1], v);
    case Op::Mul: return eval(*n.args[0], v) * eval(*n.args[1], v);
    case Op::Div: return eval(*n.args[0], v) / eval(*n.args[1], v);
    case Op::Pow: return std::pow(eval(*n.args[0], v), eval(*n.args[1], v));
    case Op::Call:
      if (n.fn1) return n.fn1(eval(*n.args[0], v));
      return n.fn2(eval(*n.args[0], v), eval(*n.args[1], v));
  }
  return 0.0;
}

}  // namespace

Expression Expression::parse(std::string_view text) {
  Expression e;
  e.text_ = std::string(text);
  Parser p(text, e.uses_t_);
  e.root_ = p.run();
  return e;
}

double Expression::operator()(double x, double y, double z, double t) const {
  const double v[4] = {x, y, z, t};
  return eval(*root_, v);
}

}  // namespace pfsmc
