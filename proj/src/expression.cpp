#include "apsde/expression.hpp"
#include "apsde/types.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

namespace apsde
{
namespace
{
constexpr std::size_t kMaxDepth = 64;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct FunctionName
{
    std::string_view name;
    Expr::Op op;
};

constexpr std::array<FunctionName, 7> kFunctions{{
    {"sin", Expr::Op::sin},
    {"cos", Expr::Op::cos},
    {"tanh", Expr::Op::tanh},
    {"atan", Expr::Op::atan},
    {"sqrt", Expr::Op::sqrt},
    {"exp", Expr::Op::exp},
    {"abs", Expr::Op::abs},
}};

//---------------------------------------------------------------------------//
// Recursive-descent parser emitting postfix code.
class Parser
{
  public:
    explicit Parser(std::string_view text) : text_(text) {}

    std::vector<Expr::Node> run()
    {
        expression();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return std::move(out_);
    }

  private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::vector<Expr::Node> out_;

    [[noreturn]] void fail(std::string const& what) const
    {
        throw ExpressionError("expression '" + std::string(text_) + "': " + what
                              + " at column " + std::to_string(pos_ + 1));
    }

    void skip_space()
    {
        while (pos_ < text_.size()
               && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c)
        {
            ++pos_;
            return true;
        }
        return false;
    }

    void emit(Expr::Op op, double value = 0, std::uint32_t index = 0)
    {
        out_.push_back({op, value, index});
    }

    void expression()
    {
        term();
        while (true)
        {
            if (accept('+'))
            {
                term();
                emit(Expr::Op::add);
            }
            else if (accept('-'))
            {
                term();
                emit(Expr::Op::sub);
            }
            else
                return;
        }
    }

    void term()
    {
        unary();
        while (true)
        {
            if (accept('*'))
            {
                unary();
                emit(Expr::Op::mul);
            }
            else if (accept('/'))
            {
                unary();
                emit(Expr::Op::div);
            }
            else
                return;
        }
    }

    void unary()
    {
        if (accept('-'))
        {
            unary();
            emit(Expr::Op::neg);
            return;
        }
        if (accept('+'))
        {
            unary();
            return;
        }
        power();
    }

    // Right-associative; -x^2 parses as -(x^2).
    void power()
    {
        primary();
        if (accept('^'))
        {
            unary();
            emit(Expr::Op::pow);
        }
    }

    void primary()
    {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        char const c = text_[pos_];
        if (c == '(')
        {
            ++pos_;
            expression();
            if (!accept(')')) fail("expected ')'");
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
        {
            number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)))
        {
            identifier();
            return;
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    void number()
    {
        std::size_t const start = pos_;
        auto digits = [&] {
            while (pos_ < text_.size()
                   && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
        };
        digits();
        if (pos_ < text_.size() && text_[pos_] == '.')
        {
            ++pos_;
            digits();
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E'))
        {
            std::size_t const save = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-'))
                ++pos_;
            if (pos_ < text_.size()
                && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                digits();
            else
                pos_ = save;
        }
        double v = 0;
        auto const res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (res.ec != std::errc{} || res.ptr != text_.data() + pos_)
        {
            pos_ = start;
            fail("malformed number");
        }
        emit(Expr::Op::constant, v);
    }

    void identifier()
    {
        std::size_t const start = pos_;
        while (pos_ < text_.size()
               && (std::isalnum(static_cast<unsigned char>(text_[pos_]))
                   || text_[pos_] == '_'))
            ++pos_;
        std::string_view const id = text_.substr(start, pos_ - start);

        for (auto const& fn : kFunctions)
        {
            if (id == fn.name)
            {
                if (!accept('(')) fail("expected '(' after " + std::string(id));
                expression();
                if (!accept(')')) fail("expected ')'");
                emit(fn.op);
                return;
            }
        }
        if (id == "t")
            emit(Expr::Op::time);
        else if (id == "pi")
            emit(Expr::Op::constant, std::numbers::pi);
        else if (id == "e")
            emit(Expr::Op::constant, std::numbers::e);
        else if ((id[0] == 'y' || id[0] == 'x') && id.size() > 1
                 && std::all_of(id.begin() + 1, id.end(), [](char ch) {
                        return std::isdigit(static_cast<unsigned char>(ch));
                    }))
        {
            std::uint32_t index = 0;
            auto const res = std::from_chars(id.data() + 1, id.data() + id.size(), index);
            if (res.ec != std::errc{} || index > 4096) fail("index out of range");
            emit(id[0] == 'y' ? Expr::Op::state : Expr::Op::mark, 0, index);
        }
        else
        {
            pos_ = start;
            fail("unknown identifier '" + std::string(id) + "'");
        }
    }
};

bool is_unary(Expr::Op op)
{
    return op == Expr::Op::neg || op >= Expr::Op::sin;
}

bool is_leaf(Expr::Op op)
{
    return op <= Expr::Op::mark;
}

double apply_unary(Expr::Op op, double a)
{
    switch (op)
    {
        case Expr::Op::neg: return -a;
        case Expr::Op::sin: return std::sin(a);
        case Expr::Op::cos: return std::cos(a);
        case Expr::Op::tanh: return std::tanh(a);
        case Expr::Op::atan: return std::atan(a);
        case Expr::Op::sqrt: return std::sqrt(a);
        case Expr::Op::exp: return std::exp(a);
        case Expr::Op::abs: return std::abs(a);
        default: return NAN;
    }
}

double apply_binary(Expr::Op op, double a, double b)
{
    switch (op)
    {
        case Expr::Op::add: return a + b;
        case Expr::Op::sub: return a - b;
        case Expr::Op::mul: return a * b;
        case Expr::Op::div: return a / b;
        case Expr::Op::pow: return std::pow(a, b);
        default: return NAN;
    }
}

//---------------------------------------------------------------------------//
// Interval arithmetic (outward rounding is not attempted; enclosures are used
// to certify boundedness, not to prove tight bounds).

Interval whole() { return {-kInf, kInf}; }

Interval sanitize(Interval r)
{
    if (std::isnan(r.lo) || std::isnan(r.hi)) return whole();
    return r;
}

double mul0(double a, double b)
{
    return (a == 0 || b == 0) ? 0.0 : a * b;
}

Interval imul(Interval a, Interval b)
{
    std::array<double, 4> const p{mul0(a.lo, b.lo), mul0(a.lo, b.hi),
                                  mul0(a.hi, b.lo), mul0(a.hi, b.hi)};
    return {*std::min_element(p.begin(), p.end()),
            *std::max_element(p.begin(), p.end())};
}

Interval idiv(Interval a, Interval b)
{
    if (b.contains(0)) return whole();
    return imul(a, {1 / b.hi, 1 / b.lo});
}

Interval ipow_int(Interval a, long n)
{
    if (n == 0) return {1, 1};
    if (n < 0) return idiv({1, 1}, ipow_int(a, -n));
    auto p = [n](double v) { return std::pow(v, static_cast<double>(n)); };
    if (n % 2 == 1) return {p(a.lo), p(a.hi)};
    if (a.contains(0)) return {0, std::max(p(a.lo), p(a.hi))};
    return {std::min(p(a.lo), p(a.hi)), std::max(p(a.lo), p(a.hi))};
}

Interval ipow(Interval a, Interval b)
{
    if (b.lo == b.hi && std::isfinite(b.lo))
    {
        double const e = b.lo;
        if (e == std::round(e) && std::abs(e) < 1e6)
            return ipow_int(a, static_cast<long>(e));
        if (a.lo >= 0)
        {
            if (e > 0) return {std::pow(a.lo, e), std::pow(a.hi, e)};
            if (a.lo > 0) return {std::pow(a.hi, e), std::pow(a.lo, e)};
        }
    }
    return whole();
}

// Range of sin over [lo, hi]; cos is handled by a phase shift.
Interval isin(Interval a)
{
    if (!std::isfinite(a.lo) || !std::isfinite(a.hi)
        || a.hi - a.lo >= 2 * std::numbers::pi)
        return {-1, 1};
    double lo = std::min(std::sin(a.lo), std::sin(a.hi));
    double hi = std::max(std::sin(a.lo), std::sin(a.hi));
    double const half_pi = 0.5 * std::numbers::pi;
    double const two_pi = 2 * std::numbers::pi;
    // Maxima at pi/2 + 2k pi, minima at -pi/2 + 2k pi.
    double const kmax = std::ceil((a.lo - half_pi) / two_pi);
    if (half_pi + kmax * two_pi <= a.hi) hi = 1;
    double const kmin = std::ceil((a.lo + half_pi) / two_pi);
    if (-half_pi + kmin * two_pi <= a.hi) lo = -1;
    return {lo, hi};
}

Interval interval_unary(Expr::Op op, Interval a)
{
    switch (op)
    {
        case Expr::Op::neg: return {-a.hi, -a.lo};
        case Expr::Op::sin: return isin(a);
        case Expr::Op::cos:
            return isin({a.lo + 0.5 * std::numbers::pi,
                         a.hi + 0.5 * std::numbers::pi});
        case Expr::Op::tanh: return {std::tanh(a.lo), std::tanh(a.hi)};
        case Expr::Op::atan: return {std::atan(a.lo), std::atan(a.hi)};
        case Expr::Op::sqrt:
            if (a.hi < 0) return whole();
            return {std::sqrt(std::max(a.lo, 0.0)), std::sqrt(a.hi)};
        case Expr::Op::exp: return {std::exp(a.lo), std::exp(a.hi)};
        case Expr::Op::abs:
            if (a.contains(0)) return {0, std::max(-a.lo, a.hi)};
            return {std::min(std::abs(a.lo), std::abs(a.hi)),
                    std::max(std::abs(a.lo), std::abs(a.hi))};
        default: return whole();
    }
}

Interval interval_binary(Expr::Op op, Interval a, Interval b)
{
    switch (op)
    {
        case Expr::Op::add: return {a.lo + b.lo, a.hi + b.hi};
        case Expr::Op::sub: return {a.lo - b.hi, a.hi - b.lo};
        case Expr::Op::mul: return imul(a, b);
        case Expr::Op::div: return idiv(a, b);
        case Expr::Op::pow: return ipow(a, b);
        default: return whole();
    }
}

//---------------------------------------------------------------------------//
// Dependence on t, for the affine-argument rule.
struct TimeForm
{
    enum Kind
    {
        constant,  // no t, no state, value known
        affine,    // a t + b, not yet wrapped in sin/cos
        free,      // no bare t (t only inside admissible sin/cos)
        raw,       // t appears outside an admissible trig argument
    };
    Kind kind = constant;
    double a = 0;
    double b = 0;
};
}  // namespace

bool Interval::bounded() const
{
    return std::isfinite(lo) && std::isfinite(hi);
}

Expr Expr::parse(std::string_view text)
{
    Expr e;
    e.source_ = std::string(text);
    e.program_ = Parser(text).run();
    std::size_t depth = 0;
    for (auto const& node : e.program_)
    {
        if (is_leaf(node.op))
            ++depth;
        else if (!is_unary(node.op))
            --depth;
        e.max_depth_ = std::max(e.max_depth_, depth);
    }
    if (e.max_depth_ > kMaxDepth)
    {
        throw ExpressionError("expression '" + e.source_
                              + "' is nested too deeply");
    }
    return e;
}

Expr Expr::constant(double v)
{
    Expr e;
    e.program_.push_back({Op::constant, v, 0});
    e.source_ = format_double(v);
    e.max_depth_ = 1;
    return e;
}

double Expr::eval(double t, std::span<double const> y, std::span<double const> x) const
{
    std::array<double, kMaxDepth> stack;
    std::size_t top = 0;
    for (auto const& node : program_)
    {
        switch (node.op)
        {
            case Op::constant: stack[top++] = node.value; break;
            case Op::time: stack[top++] = t; break;
            case Op::state:
                if (node.index >= y.size())
                    throw ExpressionError("expression '" + source_
                                          + "' needs y" + std::to_string(node.index));
                stack[top++] = y[node.index];
                break;
            case Op::mark:
                if (node.index >= x.size())
                    throw ExpressionError("expression '" + source_
                                          + "' needs x" + std::to_string(node.index));
                stack[top++] = x[node.index];
                break;
            default:
                if (is_unary(node.op))
                {
                    stack[top - 1] = apply_unary(node.op, stack[top - 1]);
                }
                else
                {
                    --top;
                    stack[top - 1] = apply_binary(node.op, stack[top - 1], stack[top]);
                }
        }
    }
    return program_.empty() ? 0.0 : stack[0];
}

Interval Expr::eval_interval(Interval t,
                             std::span<Interval const> y,
                             std::span<Interval const> x) const
{
    std::vector<Interval> stack;
    stack.reserve(max_depth_);
    for (auto const& node : program_)
    {
        switch (node.op)
        {
            case Op::constant: stack.push_back({node.value, node.value}); break;
            case Op::time: stack.push_back(t); break;
            case Op::state:
                stack.push_back(node.index < y.size() ? y[node.index] : whole());
                break;
            case Op::mark:
                stack.push_back(node.index < x.size() ? x[node.index] : whole());
                break;
            default:
                if (is_unary(node.op))
                {
                    stack.back() = sanitize(interval_unary(node.op, stack.back()));
                }
                else
                {
                    Interval const b = stack.back();
                    stack.pop_back();
                    stack.back() = sanitize(interval_binary(node.op, stack.back(), b));
                }
        }
    }
    return stack.empty() ? Interval{0, 0} : stack.back();
}

std::uint32_t Expr::state_arity() const
{
    std::uint32_t n = 0;
    for (auto const& node : program_)
        if (node.op == Op::state) n = std::max(n, node.index + 1);
    return n;
}

std::uint32_t Expr::mark_arity() const
{
    std::uint32_t n = 0;
    for (auto const& node : program_)
        if (node.op == Op::mark) n = std::max(n, node.index + 1);
    return n;
}

bool Expr::uses_time() const
{
    return std::any_of(program_.begin(), program_.end(), [](Node const& n) {
        return n.op == Op::time;
    });
}

bool Expr::is_constant() const
{
    return std::all_of(program_.begin(), program_.end(), [](Node const& n) {
        return n.op != Op::time && n.op != Op::state && n.op != Op::mark;
    });
}

std::vector<double> Expr::trig_frequencies() const
{
    using K = TimeForm::Kind;
    std::vector<TimeForm> stack;
    std::vector<double> freqs;
    for (auto const& node : program_)
    {
        switch (node.op)
        {
            case Op::constant: stack.push_back({K::constant, 0, node.value}); break;
            case Op::time: stack.push_back({K::affine, 1, 0}); break;
            case Op::state:
            case Op::mark: stack.push_back({K::free, 0, 0}); break;
            default:
                if (is_unary(node.op))
                {
                    TimeForm& a = stack.back();
                    if (a.kind == K::constant)
                    {
                        a.b = apply_unary(node.op, a.b);
                    }
                    else if (node.op == Op::neg && a.kind == K::affine)
                    {
                        a.a = -a.a;
                        a.b = -a.b;
                    }
                    else if ((node.op == Op::sin || node.op == Op::cos)
                             && a.kind == K::affine)
                    {
                        if (a.a != 0) freqs.push_back(std::abs(a.a));
                        a = {K::free, 0, 0};
                    }
                    else if (a.kind == K::affine)
                    {
                        a.kind = K::raw;
                    }
                }
                else
                {
                    TimeForm const b = stack.back();
                    stack.pop_back();
                    TimeForm& a = stack.back();
                    if (a.kind == K::raw || b.kind == K::raw)
                    {
                        a.kind = K::raw;
                    }
                    else if (a.kind == K::constant && b.kind == K::constant)
                    {
                        a.b = apply_binary(node.op, a.b, b.b);
                    }
                    else if (a.kind == K::affine || b.kind == K::affine)
                    {
                        bool const ca = a.kind == K::constant;
                        bool const cb = b.kind == K::constant;
                        bool const both = a.kind == K::affine && b.kind == K::affine;
                        if ((node.op == Op::add || node.op == Op::sub)
                            && (both || ca || cb))
                        {
                            double const sign = node.op == Op::add ? 1 : -1;
                            a = {K::affine, a.a + sign * b.a, a.b + sign * b.b};
                        }
                        else if (node.op == Op::mul && (ca || cb))
                        {
                            double const c = ca ? a.b : b.b;
                            TimeForm const& f = ca ? b : a;
                            a = {K::affine, c * f.a, c * f.b};
                        }
                        else if (node.op == Op::div && cb && b.b != 0)
                        {
                            a = {K::affine, a.a / b.b, a.b / b.b};
                        }
                        else
                        {
                            a.kind = K::raw;
                        }
                    }
                    else
                    {
                        a = {K::free, 0, 0};
                    }
                }
        }
    }
    if (!stack.empty()
        && (stack.back().kind == K::raw || stack.back().kind == K::affine))
    {
        throw ExpressionError("expression '" + source_
                              + "': t may only appear inside sin/cos with an "
                                "argument affine in t");
    }
    std::sort(freqs.begin(), freqs.end());
    freqs.erase(std::unique(freqs.begin(),
                            freqs.end(),
                            [](double p, double q) {
                                return std::abs(p - q) <= 1e-12 * std::max(p, q);
                            }),
                freqs.end());
    return freqs;
}

}  // namespace apsde
