#include "entangled/phase.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace entangled {

namespace {

std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
  const std::int64_t r = a % b;
  return r < 0 ? r + b : r;
}

double wrap_turns(double t) {
  double f = t - std::floor(t);
  if (f >= 1.0) f = 0.0;
  return f;
}

std::int64_t parse_int(std::string_view s) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument("phase: bad integer '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::complex<double> unit_from_turns(double t) {
  t = wrap_turns(t);
  const double q = 4.0 * t;
  if (q == std::floor(q)) {
    switch (static_cast<int>(q)) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, 1.0};
      case 2: return {-1.0, 0.0};
      case 3: return {0.0, -1.0};
      default: break;
    }
  }
  const double s = t > 0.5 ? t - 1.0 : t;
  const double angle = 2.0 * std::numbers::pi * s;
  return {std::cos(angle), std::sin(angle)};
}

Phase Phase::rational(std::int64_t numerator, std::int64_t denominator) {
  if (denominator <= 0) throw std::invalid_argument("phase: denominator must be positive");
  Phase p;
  p.exact_ = true;
  const std::int64_t r = floor_mod(numerator, denominator);
  const std::int64_t g = std::gcd(r, denominator);
  p.num_ = r / g;
  p.den_ = denominator / g;
  p.t_ = double(p.num_) / double(p.den_);
  return p;
}

Phase Phase::turns(double t) {
  if (!std::isfinite(t)) throw std::invalid_argument("phase: non-finite turn value");
  Phase p;
  p.exact_ = false;
  p.num_ = 0;
  p.den_ = 0;
  p.t_ = wrap_turns(t);
  return p;
}

Phase Phase::of(std::complex<double> z) {
  if (z == 0.0) throw std::invalid_argument("phase: zero has no argument");
  return turns(std::arg(z) / (2.0 * std::numbers::pi));
}

Phase Phase::parse(std::string_view text) {
  const auto slash = text.find('/');
  if (slash != std::string_view::npos) {
    return rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
  }
  double t = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), t);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::invalid_argument("phase: cannot parse '" + std::string(text) + "'");
  }
  return turns(t);
}

double Phase::value_turns() const noexcept { return t_; }

double Phase::signed_turns() const noexcept {
  if (exact_) {
    const std::int64_t n = 2 * num_ > den_ ? num_ - den_ : num_;
    return double(n) / double(den_);
  }
  return t_ > 0.5 ? t_ - 1.0 : t_;
}

std::complex<double> Phase::value() const { return unit_from_turns(t_); }

Phase Phase::conj() const {
  if (exact_) return rational(-num_, den_);
  return turns(t_ == 0.0 ? 0.0 : 1.0 - t_);
}

Phase Phase::operator+(const Phase& other) const {
  if (exact_ && other.exact_) {
    const std::int64_t l = std::lcm(den_, other.den_);
    return rational(num_ * (l / den_) + other.num_ * (l / other.den_), l);
  }
  return turns(signed_turns() + other.signed_turns());
}

Phase Phase::scaled(std::int64_t n) const {
  if (exact_) {
    // (num * n) mod den without overflow for |n| up to 2^62.
    const auto r = static_cast<std::int64_t>(
        (static_cast<__int128>(num_) * n) % den_);
    return rational(r, den_);
  }
  const double x = signed_turns() * double(n);
  return turns(x - std::round(x));
}

bool Phase::is_one(double tol) const {
  if (exact_) return num_ == 0;
  return distance_to_one() <= tol;
}

double Phase::distance_to_one() const {
  return 2.0 * std::abs(std::sin(std::numbers::pi * signed_turns()));
}

double Phase::angular_distance(const Phase& other) const {
  double d = std::abs(t_ - other.t_);
  d = std::min(d, 1.0 - d);
  return 2.0 * std::numbers::pi * d;
}

std::string Phase::to_string() const {
  if (exact_) return fmt::format("{}/{}", num_, den_);
  return fmt::format("{}", t_);
}

}  // namespace entangled
