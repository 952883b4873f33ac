#pragma once

namespace rte {

/// Base bump exp(1 - 1/(1 - r^2)) on (-1, 1); equals 1 at the origin.
double base_bump(double r);
/// Integral of base_bump over [-1, 1].
double base_bump_integral();

enum class ProfileKind { Phi0, Psi0 };
/// OneSided: unit integral over [0, inf). Even: unit integral over the real line.
enum class ProfileVariant { OneSided, Even };

/// Smooth compactly supported profile with value 1 at the origin and unit
/// integral. The support radius is whatever the two constraints force.
class Mollifier {
 public:
  Mollifier(ProfileKind kind, ProfileVariant variant);

  double operator()(double r) const;
  double radius() const { return radius_; }
  ProfileKind kind() const { return kind_; }
  ProfileVariant variant() const { return variant_; }
  /// Integral over [0, inf) for OneSided, over the real line for Even.
  double integral() const;
  /// Integral of r -> profile(|r|) over the real line.
  double line_integral() const { return variant_ == ProfileVariant::Even ? integral() : 2.0 * integral(); }
  /// Integral of the product with another profile over the same range.
  double pairing(const Mollifier& other) const;

 private:
  ProfileKind kind_;
  ProfileVariant variant_;
  double radius_;
};

double mollifier_profile(ProfileKind kind, ProfileVariant variant, double r);

}  // namespace rte
