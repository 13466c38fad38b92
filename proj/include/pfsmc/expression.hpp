#pragma once

// Scalar expressions over x, y, z, t used for initial data, sources and
// targets in run configurations.
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := ('-' | '+') unary | power
//   power  := atom ('^' unary)?
//   atom   := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'

#include <memory>
#include <string>
#include <string_view>

namespace pfsmc {

class Expression {
 public:
  /// Throws std::invalid_argument with the offending column on a syntax error
  /// or an unknown name.
  static Expression parse(std::string_view text);

  double operator()(double x, double y, double z, double t) const;
  bool depends_on_time() const noexcept { return uses_t_; }
  const std::string& text() const noexcept { return text_; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
  bool uses_t_ = false;
};

}  // namespace pfsmc
