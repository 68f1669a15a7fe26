#include "nue/expr.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

#include "nue/errors.hpp"

namespace nue {

struct Expr::Node {
  enum class Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Mod, Call };
  Op op = Op::Num;
  double value = 0.0;
  std::string fn;
  std::shared_ptr<const Node> a, b;

  double eval(double x) const {
    switch (op) {
      case Op::Num: return value;
      case Op::Var: return x;
      case Op::Neg: return -a->eval(x);
      case Op::Add: return a->eval(x) + b->eval(x);
      case Op::Sub: return a->eval(x) - b->eval(x);
      case Op::Mul: return a->eval(x) * b->eval(x);
      case Op::Div: return a->eval(x) / b->eval(x);
      case Op::Pow: return std::pow(a->eval(x), b->eval(x));
      case Op::Mod: {
        double m = b->eval(x);
        double r = std::fmod(a->eval(x), m);
        return r < 0 ? r + m : r;
      }
      case Op::Call: {
        double u = a->eval(x);
        if (fn == "sin") return std::sin(u);
        if (fn == "cos") return std::cos(u);
        if (fn == "exp") return std::exp(u);
        if (fn == "log") return std::log(u);
        if (fn == "sqrt") return std::sqrt(u);
        return std::fabs(u);
      }
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

class Parser {
 public:
  Parser(const std::string& s, const std::map<std::string, double>& c) : s_(s), consts_(c) {}

  NodePtr parse_all() {
    NodePtr n = sum();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return n;
  }

 private:
  const std::string& s_;
  const std::map<std::string, double>& consts_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::ConfigError,
                "expression '" + s_ + "': " + msg + " at column " + std::to_string(pos_ + 1));
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

  bool eat_word(const std::string& w) {
    skip();
    if (s_.compare(pos_, w.size(), w) != 0) return false;
    std::size_t end = pos_ + w.size();
    if (end < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_'))
      return false;
    pos_ = end;
    return true;
  }

  static NodePtr make(Expr::Node::Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Expr::Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  NodePtr sum() {
    NodePtr lhs = product();
    for (;;) {
      if (eat('+')) lhs = make(Expr::Node::Op::Add, lhs, product());
      else if (eat('-')) lhs = make(Expr::Node::Op::Sub, lhs, product());
      else return lhs;
    }
  }

  NodePtr product() {
    NodePtr lhs = unary();
    for (;;) {
      if (eat('*')) lhs = make(Expr::Node::Op::Mul, lhs, unary());
      else if (eat('/')) lhs = make(Expr::Node::Op::Div, lhs, unary());
      else if (eat_word("mod")) lhs = make(Expr::Node::Op::Mod, lhs, unary());
      else return lhs;
    }
  }

  NodePtr unary() {
    if (eat('-')) return make(Expr::Node::Op::Neg, unary());
    if (eat('+')) return unary();
    return power();
  }

  // right associative; binds tighter than unary minus on its left operand only
  NodePtr power() {
    NodePtr base = atom();
    if (eat('^')) return make(Expr::Node::Op::Pow, base, unary());
    return base;
  }

  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr n = sum();
      if (!eat(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      auto n = std::make_shared<Expr::Node>();
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      std::string id = s_.substr(start, pos_ - start);
      static const std::vector<std::string> fns{"sin", "cos", "exp", "log", "sqrt", "abs"};
      for (const auto& f : fns) {
        if (id == f) {
          if (!eat('(')) fail("expected '(' after " + id);
          NodePtr arg = sum();
          if (!eat(')')) fail("expected ')'");
          auto n = std::make_shared<Expr::Node>();
          n->op = Expr::Node::Op::Call;
          n->fn = id;
          n->a = arg;
          return n;
        }
      }
      if (id == "x") return make(Expr::Node::Op::Var);
      auto n = std::make_shared<Expr::Node>();
      if (id == "pi") {
        n->value = std::numbers::pi;
        return n;
      }
      auto it = consts_.find(id);
      if (it == consts_.end()) {
        pos_ = start;
        fail("unknown identifier '" + id + "'");
      }
      n->value = it->second;
      return n;
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

}  // namespace

Expr Expr::parse(const std::string& text, const std::map<std::string, double>& constants) {
  Parser p(text, constants);
  Expr e;
  e.root_ = p.parse_all();
  e.text_ = text;
  return e;
}

double Expr::operator()(double x) const { return root_->eval(x); }

}  // namespace nue
