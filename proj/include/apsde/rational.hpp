#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace apsde
{

//! Thrown when an exact computation leaves the 64-bit range.
class RationalOverflow : public std::overflow_error
{
  public:
    using std::overflow_error::overflow_error;
};

//---------------------------------------------------------------------------//
/*!
 * Exact rational number with 64-bit numerator and positive denominator,
 * always stored in lowest terms.
 */
class Rational
{
  public:
    constexpr Rational() = default;
    Rational(std::int64_t num, std::int64_t den = 1);

    //! Parse "p/q", an integer, or a finite decimal ("0.015625", "1e-3").
    static Rational parse(std::string_view text);

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    double to_double() const
    {
        return static_cast<double>(num_) / static_cast<double>(den_);
    }
    std::string str() const;

    Rational operator-() const;
    friend Rational operator+(Rational const& a, Rational const& b);
    friend Rational operator-(Rational const& a, Rational const& b);
    friend Rational operator*(Rational const& a, Rational const& b);
    friend Rational operator/(Rational const& a, Rational const& b);

    friend bool operator==(Rational const&, Rational const&) = default;
    friend std::strong_ordering
    operator<=>(Rational const& a, Rational const& b);

  private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

//---------------------------------------------------------------------------//
/*!
 * A real parameter that remembers its exact rational value when one is known.
 *
 * Arithmetic stays exact while both operands are exact and falls back to
 * floating point otherwise (including on 64-bit overflow).
 */
class Real
{
  public:
    Real() = default;
    Real(double value) : value_(value) {}
    Real(Rational exact) : value_(exact.to_double()), exact_(exact) {}

    //! Integers and finite decimals are kept exact.
    static Real parse(std::string_view text);

    double value() const { return value_; }
    std::optional<Rational> const& exact() const { return exact_; }
    bool is_exact() const { return exact_.has_value(); }

    //! "p/q" when exact, shortest round-trip decimal otherwise.
    std::string str() const;

    friend Real operator+(Real const& a, Real const& b);
    friend Real operator-(Real const& a, Real const& b);
    friend Real operator*(Real const& a, Real const& b);
    friend Real operator/(Real const& a, Real const& b);

    //! Exact comparison when both sides are exact.
    friend bool operator<(Real const& a, Real const& b);
    friend bool operator==(Real const& a, Real const& b);

  private:
    double value_ = 0;
    std::optional<Rational> exact_;
};

}  // namespace apsde
