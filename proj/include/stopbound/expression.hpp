#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stopbound {

class ExpressionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Compiles an arithmetic expression in the single variable `y`.
///
/// Grammar: numbers, `y`, `+ - * / ^`, parentheses, unary minus, and the
/// functions exp, log, sqrt, abs (one argument), pow, max, min (two
/// arguments). `^` is right associative and binds tighter than unary minus,
/// so `-y^2` is `-(y^2)`.
std::function<double(double)> compile_expression(std::string_view text);

}  // namespace stopbound
