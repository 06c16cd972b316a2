#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace apsde
{

class ExpressionError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

//! Closed interval; either end may be infinite.
struct Interval
{
    double lo = 0;
    double hi = 0;

    bool bounded() const;
    bool contains(double v) const { return lo <= v && v <= hi; }
};

//---------------------------------------------------------------------------//
/*!
 * Arithmetic expression in t, y0.., x0.. (grammar in docs/expressions.md).
 *
 * Stored as a postfix program so evaluation needs no recursion or
 * allocation beyond a small value stack.
 */
class Expr
{
  public:
    enum class Op : std::uint8_t
    {
        constant,
        time,
        state,
        mark,
        neg,
        add,
        sub,
        mul,
        div,
        pow,
        sin,
        cos,
        tanh,
        atan,
        sqrt,
        exp,
        abs,
    };

    struct Node
    {
        Op op = Op::constant;
        double value = 0;
        std::uint32_t index = 0;
    };

    Expr() = default;

    static Expr parse(std::string_view text);
    static Expr constant(double v);

    double eval(double t,
                std::span<double const> y = {},
                std::span<double const> x = {}) const;

    //! Enclosure of the value for t, y_i, x_j ranging over the given boxes.
    //! Missing y/x entries default to the whole real line.
    Interval eval_interval(Interval t,
                           std::span<Interval const> y = {},
                           std::span<Interval const> x = {}) const;

    //! Highest y index used plus one (0 if none), likewise for x.
    std::uint32_t state_arity() const;
    std::uint32_t mark_arity() const;
    bool uses_time() const;
    bool is_constant() const;

    //! Every t sits inside sin/cos whose argument is a*t + b; returns the
    //! distinct |a| > 0 in ascending order. Throws ExpressionError otherwise.
    std::vector<double> trig_frequencies() const;

    std::string const& source() const { return source_; }
    std::vector<Node> const& program() const { return program_; }

  private:
    std::vector<Node> program_;
    std::string source_;
    std::size_t max_depth_ = 0;
};

}  // namespace apsde
