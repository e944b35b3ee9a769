#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <string_view>

namespace entangled {

/// A point exp(2*pi*i*t) of the unit circle, stored as t in turns.
///
/// Exact phases are reduced fractions p/q with 0 <= p < q; arithmetic between
/// two exact phases stays exact. Float phases carry t in [0, 1).
class Phase {
 public:
  Phase() = default;

  static Phase rational(std::int64_t numerator, std::int64_t denominator);
  static Phase turns(double t);
  /// arg(z) / 2pi for a nonzero complex number.
  static Phase of(std::complex<double> z);
  /// "p/q" gives an exact phase, anything else is read as a decimal turn.
  static Phase parse(std::string_view text);

  bool exact() const noexcept { return exact_; }
  std::int64_t numerator() const noexcept { return num_; }
  std::int64_t denominator() const noexcept { return den_; }
  /// Turn value in [0, 1).
  double value_turns() const noexcept;
  /// Representative in (-1/2, 1/2].
  double signed_turns() const noexcept;

  std::complex<double> value() const;

  /// Complex conjugate of the eigenvalue.
  Phase conj() const;
  /// Phase of the product of the two eigenvalues.
  Phase operator+(const Phase& other) const;
  /// Phase of z^n.
  Phase scaled(std::int64_t n) const;

  /// True when the eigenvalue is exactly 1 (exact phases) or |z - 1| <= tol.
  bool is_one(double tol) const;
  /// |z - 1|.
  double distance_to_one() const;
  /// Angular distance in radians on the circle.
  double angular_distance(const Phase& other) const;

  std::string to_string() const;

  friend bool operator==(const Phase& a, const Phase& b) {
    if (a.exact_ != b.exact_) return false;
    return a.exact_ ? (a.num_ == b.num_ && a.den_ == b.den_) : a.t_ == b.t_;
  }

 private:
  bool exact_ = true;
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
  double t_ = 0.0;
};

/// exp(2*pi*i*t); multiples of a quarter turn come out exact.
std::complex<double> unit_from_turns(double t);

}  // namespace entangled
