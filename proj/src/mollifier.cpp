#include "rte/mollifier.hpp"

#include <algorithm>
#include <cmath>

#include "rte/quadrature.hpp"

namespace rte {

double base_bump(double r) {
  double q = 1.0 - r * r;
  if (q <= 0) return 0.0;
  return std::exp(1.0 - 1.0 / q);
}

double base_bump_integral() {
  static const double value = 2.0 * integrate_adaptive([](double r) { return base_bump(r); }, 0.0, 1.0, 1e-15);
  return value;
}

Mollifier::Mollifier(ProfileKind kind, ProfileVariant variant) : kind_(kind), variant_(variant) {
  double ib = base_bump_integral();
  radius_ = variant == ProfileVariant::Even ? 1.0 / ib : 2.0 / ib;
}

double Mollifier::operator()(double r) const { return base_bump(std::abs(r) / radius_); }

double Mollifier::integral() const {
  double half = integrate_adaptive([this](double r) { return (*this)(r); }, 0.0, radius_, 1e-15);
  return variant_ == ProfileVariant::Even ? 2.0 * half : half;
}

double Mollifier::pairing(const Mollifier& other) const {
  double r = std::min(radius_, other.radius_);
  double half = integrate_adaptive([&](double t) { return (*this)(t) * other(t); }, 0.0, r, 1e-15);
  return variant_ == ProfileVariant::Even ? 2.0 * half : half;
}

double mollifier_profile(ProfileKind kind, ProfileVariant variant, double r) { return Mollifier(kind, variant)(r); }

}  // namespace rte
