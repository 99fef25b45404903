#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stiffnet/types.hpp"

namespace stiffnet {

// A chemical mechanism in constant-volume form: species carry a molar mass
// [kg/mol] and a constant formation enthalpy [J/kg]; reactions are
// irreversible with modified-Arrhenius rate coefficients in SI units
// (mol, m^3, s, J, K). Reversible chemistry is expressed as two entries.

struct SpeciesSpec {
  std::string name;
  double molar_mass = 0.0;           // kg/mol
  double formation_enthalpy = 0.0;   // J/kg
};

struct ReactionSpec {
  // species index -> stoichiometric coefficient (>= 1)
  std::map<int, int> reactant_stoich;
  std::map<int, int> product_stoich;
  double pre_exponential = 0.0;   // SI, consistent with reaction order
  double temp_exponent = 0.0;
  double activation_energy = 0.0; // J/mol
};

struct Mechanism {
  std::vector<SpeciesSpec> species;
  std::vector<ReactionSpec> reactions;
  double mixture_cp = 0.0;        // J/(kg K)
  // Role indices for equivalence-ratio initial conditions; -1 when absent.
  int fuel = -1;
  int oxidizer = -1;
  int inert = -1;

  Index speciesCount() const { return static_cast<Index>(species.size()); }
  int speciesIndex(const std::string& name) const;  // -1 if unknown

  // Content hash of the canonical serialization; used as trajectory metadata.
  std::string id() const;
};

// Temperature [K] plus species mass densities [kg/m^3] at one instant.
struct State {
  double temperature = 0.0;
  Vector densities;
  double time = 0.0;

  // Packs (T, rho_1..rho_M) into R^{M+1}.
  Vector toVector() const;
  static State fromVector(const Vector& u, double time);
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// k = A T^beta exp(-Ea / (R T)). Throws std::domain_error for T <= 0.
double arrheniusRate(double pre_exponential, double temp_exponent,
                     double activation_energy, double temperature);

// Right-hand side of du/dt = S(u) in R^{M+1}, ordered (dT/dt, drho_k/dt).
// Negative densities are clipped to zero before rate evaluation.
Vector rhs(const Mechanism& mech, const State& state);

// Analytic (M+1)x(M+1) Jacobian of rhs with respect to (T, rho_1..rho_M).
Matrix jacobian(const Mechanism& mech, const State& state);

Mechanism parseMechanism(const std::string& text);
Mechanism loadMechanism(const std::string& path);
std::string serializeMechanism(const Mechanism& mech);

// Validates the structural invariants; throws std::invalid_argument with a
// description of the first violation.
void validateMechanism(const Mechanism& mech);

// Premixed fuel/air initial condition: mole fractions
// X_fuel : X_ox : X_inert = 2 phi 0.21 : 0.21 : 0.79 (normalized), converted
// to mass densities summing to total_density.
State initialStateFromPhi(const Mechanism& mech, double phi, double t0,
                          double total_density);

}  // namespace stiffnet
