#pragma once

#include <map>
#include <memory>
#include <string>

namespace nue {

// Compiled real-valued expression in one free variable `x`.
// Grammar: numbers, x, named constants, + - * / ^, unary minus, parentheses,
// functions sin cos exp log sqrt abs, and the infix `mod` operator.
class Expr {
 public:
  struct Node;

  Expr() = default;
  static Expr parse(const std::string& text, const std::map<std::string, double>& constants = {});

  double operator()(double x) const;
  bool valid() const { return root_ != nullptr; }
  const std::string& text() const { return text_; }

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace nue
