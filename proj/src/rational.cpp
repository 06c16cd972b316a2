#include "apsde/rational.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <numeric>

namespace apsde
{
namespace
{
using i128 = __int128;

std::int64_t narrow(i128 v)
{
    if (v > INT64_MAX || v < INT64_MIN)
    {
        throw RationalOverflow("rational arithmetic overflowed 64 bits");
    }
    return static_cast<std::int64_t>(v);
}

i128 gcd128(i128 a, i128 b)
{
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0)
    {
        i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

Rational make(i128 num, i128 den)
{
    if (den == 0)
    {
        throw std::domain_error("rational division by zero");
    }
    if (den < 0)
    {
        num = -num;
        den = -den;
    }
    i128 g = gcd128(num, den);
    if (g > 1)
    {
        num /= g;
        den /= g;
    }
    return Rational(narrow(num), narrow(den));
}

std::int64_t parse_int(std::string_view s)
{
    std::int64_t v = 0;
    auto const* first = s.data();
    auto const* last = s.data() + s.size();
    if (!s.empty() && s.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || first == last)
    {
        throw std::invalid_argument("not an integer: '" + std::string(s)
                                    + "'");
    }
    return v;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

//! Decimal with optional exponent, e.g. "-0.015625", "2.5e-3".
Rational parse_decimal(std::string_view s)
{
    std::int64_t exponent = 0;
    if (auto e = s.find_first_of("eE"); e != std::string_view::npos)
    {
        exponent = parse_int(s.substr(e + 1));
        s = s.substr(0, e);
    }
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+'))
    {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    std::string digits;
    bool seen_point = false;
    bool seen_digit = false;
    for (char c : s)
    {
        if (c == '.' && !seen_point)
        {
            seen_point = true;
        }
        else if (c >= '0' && c <= '9')
        {
            digits.push_back(c);
            seen_digit = true;
            if (seen_point) --exponent;
        }
        else
        {
            throw std::invalid_argument("not a number: '" + std::string(s)
                                        + "'");
        }
    }
    if (!seen_digit)
    {
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    }
    i128 num = 0;
    for (char c : digits)
    {
        num = num * 10 + (c - '0');
        narrow(num);
    }
    i128 den = 1;
    for (; exponent > 0; --exponent)
    {
        num *= 10;
        narrow(num);
    }
    for (; exponent < 0; ++exponent)
    {
        den *= 10;
        narrow(den);
    }
    return make(negative ? -num : num, den);
}
}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den)
{
    if (den == 0)
    {
        throw std::domain_error("rational with zero denominator");
    }
    i128 n = num;
    i128 d = den;
    if (d < 0)
    {
        n = -n;
        d = -d;
    }
    i128 g = gcd128(n, d);
    if (g > 1)
    {
        n /= g;
        d /= g;
    }
    num_ = narrow(n);
    den_ = narrow(d);
}

Rational Rational::parse(std::string_view text)
{
    auto s = trim(text);
    if (auto slash = s.find('/'); slash != std::string_view::npos)
    {
        Rational p = parse_decimal(trim(s.substr(0, slash)));
        Rational q = parse_decimal(trim(s.substr(slash + 1)));
        return p / q;
    }
    return parse_decimal(s);
}

std::string Rational::str() const
{
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::operator-() const
{
    return make(-i128{num_}, den_);
}

Rational operator+(Rational const& a, Rational const& b)
{
    return make(i128{a.num_} * b.den_ + i128{b.num_} * a.den_,
                i128{a.den_} * b.den_);
}

Rational operator-(Rational const& a, Rational const& b)
{
    return a + (-b);
}

Rational operator*(Rational const& a, Rational const& b)
{
    return make(i128{a.num_} * b.num_, i128{a.den_} * b.den_);
}

Rational operator/(Rational const& a, Rational const& b)
{
    return make(i128{a.num_} * b.den_, i128{a.den_} * b.num_);
}

std::strong_ordering operator<=>(Rational const& a, Rational const& b)
{
    return i128{a.num_} * b.den_ <=> i128{b.num_} * a.den_;
}

//---------------------------------------------------------------------------//

Real Real::parse(std::string_view text)
{
    auto s = trim(text);
    try
    {
        return Real(Rational::parse(s));
    }
    catch (RationalOverflow const&)
    {
    }
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
    {
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    }
    return Real(v);
}

std::string Real::str() const
{
    if (exact_) return exact_->str();
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value_);
    return std::string(buf, ptr);
}

namespace
{
template<class ExactOp, class FloatOp>
Real combine(Real const& a, Real const& b, ExactOp exact_op, FloatOp float_op)
{
    if (a.is_exact() && b.is_exact())
    {
        try
        {
            return Real(exact_op(*a.exact(), *b.exact()));
        }
        catch (RationalOverflow const&)
        {
        }
    }
    return Real(float_op(a.value(), b.value()));
}
}  // namespace

Real operator+(Real const& a, Real const& b)
{
    return combine(a, b, std::plus<>{}, std::plus<>{});
}
Real operator-(Real const& a, Real const& b)
{
    return combine(a, b, std::minus<>{}, std::minus<>{});
}
Real operator*(Real const& a, Real const& b)
{
    return combine(a, b, std::multiplies<>{}, std::multiplies<>{});
}
Real operator/(Real const& a, Real const& b)
{
    return combine(a, b, std::divides<>{}, std::divides<>{});
}

bool operator<(Real const& a, Real const& b)
{
    if (a.is_exact() && b.is_exact()) return *a.exact() < *b.exact();
    return a.value() < b.value();
}

bool operator==(Real const& a, Real const& b)
{
    if (a.is_exact() && b.is_exact()) return *a.exact() == *b.exact();
    return a.value() == b.value();
}

}  // namespace apsde
