// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dbm {

inline constexpr std::size_t kMaxFieldAtoms = 64;

struct ZeroField {};
struct PointMassField {
  double h0 = 0.0;
};
struct GaussianField {
  double variance = 0.0;
};
struct FieldAtom {
  double value = 0.0;
  double weight = 0.0;
};
struct DiscreteField {
  std::vector<FieldAtom> atoms;
};

// Law of the external field acting on every spin of one layer.
class FieldSpec {
 public:
  enum class Kind { zero, point_mass, gaussian_centered, discrete };

  FieldSpec() = default;

  static FieldSpec zero() { return FieldSpec(ZeroField{}); }
  static FieldSpec point_mass(double h0);
  static FieldSpec gaussian(double variance);
  // Weights must be positive and sum to 1 within 1e-12; at most 64 atoms.
  static FieldSpec discrete(std::vector<FieldAtom> atoms);

  Kind kind() const noexcept;
  const std::variant<ZeroField, PointMassField, GaussianField, DiscreteField>& law() const noexcept {
    return law_;
  }

  // True when h = 0 almost surely.
  bool is_identically_zero() const noexcept;
  // Variance v of a gaussian_centered field, nullopt for the other kinds.
  std::optional<double> gaussian_variance() const noexcept;

  // The field as "centred Gaussian of variance extra_variance, plus an
  // independent discrete shift". Every supported kind has this form.
  struct Mixture {
    double extra_variance = 0.0;
    std::vector<FieldAtom> atoms;
  };
  Mixture mixture() const;

 private:
  explicit FieldSpec(std::variant<ZeroField, PointMassField, GaussianField, DiscreteField> law)
      : law_(std::move(law)) {}

  std::variant<ZeroField, PointMassField, GaussianField, DiscreteField> law_{ZeroField{}};
};

const char* to_string(FieldSpec::Kind kind) noexcept;

}  // namespace dbm
