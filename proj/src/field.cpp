// SPDX-License-Identifier: Apache-2.0
#include "dbm/field.hpp"

#include <cmath>

#include "dbm/errors.hpp"

namespace dbm {

FieldSpec FieldSpec::point_mass(double h0) {
  if (!std::isfinite(h0)) throw DomainError("field: point mass must be finite");
  return FieldSpec(PointMassField{h0});
}

FieldSpec FieldSpec::gaussian(double variance) {
  if (!(variance >= 0.0) || !std::isfinite(variance)) {
    throw DomainError("field: gaussian variance must be finite and non-negative");
  }
  return FieldSpec(GaussianField{variance});
}

FieldSpec FieldSpec::discrete(std::vector<FieldAtom> atoms) {
  if (atoms.empty() || atoms.size() > kMaxFieldAtoms) {
    throw DomainError("field: discrete law needs between 1 and 64 atoms");
  }
  double total = 0.0;
  for (const FieldAtom& a : atoms) {
    if (!std::isfinite(a.value) || !(a.weight > 0.0)) {
      throw DomainError("field: discrete atoms need finite values and positive weights");
    }
    total += a.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("field: discrete weights must sum to 1");
  return FieldSpec(DiscreteField{std::move(atoms)});
}

FieldSpec::Kind FieldSpec::kind() const noexcept {
  return static_cast<Kind>(law_.index());
}

bool FieldSpec::is_identically_zero() const noexcept {
  switch (kind()) {
    case Kind::zero:
      return true;
    case Kind::point_mass:
      return std::get<PointMassField>(law_).h0 == 0.0;
    case Kind::gaussian_centered:
      return std::get<GaussianField>(law_).variance == 0.0;
    case Kind::discrete:
      for (const FieldAtom& a : std::get<DiscreteField>(law_).atoms) {
        if (a.value != 0.0) return false;
      }
      return true;
  }
  return false;
}

std::optional<double> FieldSpec::gaussian_variance() const noexcept {
  if (const auto* g = std::get_if<GaussianField>(&law_)) return g->variance;
  return std::nullopt;
}

FieldSpec::Mixture FieldSpec::mixture() const {
  Mixture m;
  switch (kind()) {
    case Kind::zero:
      m.atoms = {{0.0, 1.0}};
      break;
    case Kind::point_mass:
      m.atoms = {{std::get<PointMassField>(law_).h0, 1.0}};
      break;
    case Kind::gaussian_centered:
      m.extra_variance = std::get<GaussianField>(law_).variance;
      m.atoms = {{0.0, 1.0}};
      break;
    case Kind::discrete:
      m.atoms = std::get<DiscreteField>(law_).atoms;
      break;
  }
  return m;
}

const char* to_string(FieldSpec::Kind kind) noexcept {
  switch (kind) {
    case FieldSpec::Kind::zero:
      return "zero";
    case FieldSpec::Kind::point_mass:
      return "point_mass";
    case FieldSpec::Kind::gaussian_centered:
      return "gaussian_centered";
    case FieldSpec::Kind::discrete:
      return "discrete";
  }
  return "?";
}

}  // namespace dbm
