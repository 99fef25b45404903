#include "stiffnet/mechanism.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "stiffnet/hash.hpp"

namespace stiffnet {

namespace {

// Integer power with ipow(0, 0) = 1.
double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

std::string fmtDouble(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> splitWs(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double parseNumber(const std::string& tok, int line_no) {
  try {
    std::size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": malformed number '" + tok + "'");
  }
}

// "2 OH" or "OH" -> (coefficient, name)
std::pair<int, std::string> parseStoichTerm(const std::string& term, int line_no) {
  auto toks = splitWs(term);
  if (toks.size() == 1) return {1, toks[0]};
  if (toks.size() == 2) {
    int coeff = 0;
    auto [ptr, ec] = std::from_chars(toks[0].data(), toks[0].data() + toks[0].size(), coeff);
    if (ec != std::errc() || ptr != toks[0].data() + toks[0].size() || coeff < 1)
      throw ParseError("line " + std::to_string(line_no) +
                       ": stoichiometric coefficient must be a positive integer, got '" + toks[0] + "'");
    return {coeff, toks[1]};
  }
  throw ParseError("line " + std::to_string(line_no) + ": malformed stoichiometric term '" + term + "'");
}

std::map<int, int> parseSide(const std::string& side, const Mechanism& mech, int line_no) {
  std::map<int, int> stoich;
  std::size_t start = 0;
  while (start <= side.size()) {
    auto plus = side.find('+', start);
    std::string term = trim(side.substr(start, plus == std::string::npos ? std::string::npos : plus - start));
    if (term.empty())
      throw ParseError("line " + std::to_string(line_no) + ": empty stoichiometric term");
    auto [coeff, name] = parseStoichTerm(term, line_no);
    int idx = mech.speciesIndex(name);
    if (idx < 0)
      throw ParseError("line " + std::to_string(line_no) + ": unknown species '" + name + "'");
    stoich[idx] += coeff;
    if (plus == std::string::npos) break;
    start = plus + 1;
  }
  return stoich;
}

}  // namespace

int Mechanism::speciesIndex(const std::string& name) const {
  for (std::size_t i = 0; i < species.size(); ++i)
    if (species[i].name == name) return static_cast<int>(i);
  return -1;
}

std::string Mechanism::id() const {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(serializeMechanism(*this))));
  return buf;
}

Vector State::toVector() const {
  Vector u(densities.size() + 1);
  u[0] = temperature;
  u.tail(densities.size()) = densities;
  return u;
}

State State::fromVector(const Vector& u, double time) {
  State s;
  s.temperature = u[0];
  s.densities = u.tail(u.size() - 1);
  s.time = time;
  return s;
}

double arrheniusRate(double pre_exponential, double temp_exponent,
                     double activation_energy, double temperature) {
  if (temperature <= 0.0)
    throw std::domain_error("arrheniusRate: temperature must be positive");
  return pre_exponential * std::pow(temperature, temp_exponent) *
         std::exp(-activation_energy / (kGasConstant * temperature));
}

Vector rhs(const Mechanism& mech, const State& state) {
  const Index m = mech.speciesCount();
  if (state.densities.size() != m)
    throw std::invalid_argument("rhs: state has wrong species count");
  if (state.temperature <= 0.0)
    throw std::domain_error("rhs: temperature must be positive");

  const Vector rho = state.densities.cwiseMax(0.0);
  const double rho_total = rho.sum();
  if (rho_total <= 0.0) throw std::domain_error("rhs: zero total density");

  Vector conc(m);
  for (Index k = 0; k < m; ++k) conc[k] = rho[k] / mech.species[k].molar_mass;

  Vector omega = Vector::Zero(m);  // net molar production, mol/(m^3 s)
  for (const auto& rx : mech.reactions) {
    double q = arrheniusRate(rx.pre_exponential, rx.temp_exponent,
                             rx.activation_energy, state.temperature);
    for (const auto& [k, nu] : rx.reactant_stoich) q *= ipow(conc[k], nu);
    for (const auto& [k, nu] : rx.reactant_stoich) omega[k] -= nu * q;
    for (const auto& [k, nu] : rx.product_stoich) omega[k] += nu * q;
  }

  Vector du(m + 1);
  double heat = 0.0;
  for (Index k = 0; k < m; ++k) {
    du[k + 1] = mech.species[k].molar_mass * omega[k];
    heat += mech.species[k].formation_enthalpy * du[k + 1];
  }
  du[0] = -heat / (rho_total * mech.mixture_cp);
  return du;
}

Matrix jacobian(const Mechanism& mech, const State& state) {
  const Index m = mech.speciesCount();
  if (state.densities.size() != m)
    throw std::invalid_argument("jacobian: state has wrong species count");
  if (state.temperature <= 0.0)
    throw std::domain_error("jacobian: temperature must be positive");

  const double temp = state.temperature;
  const Vector rho = state.densities.cwiseMax(0.0);
  const double rho_total = rho.sum();
  if (rho_total <= 0.0) throw std::domain_error("jacobian: zero total density");

  Vector conc(m);
  for (Index k = 0; k < m; ++k) conc[k] = rho[k] / mech.species[k].molar_mass;

  // Molar production omega and its partials w.r.t. (T, rho_1..rho_M).
  Vector omega = Vector::Zero(m);
  Matrix domega = Matrix::Zero(m, m + 1);
  for (const auto& rx : mech.reactions) {
    const double k_rate = arrheniusRate(rx.pre_exponential, rx.temp_exponent,
                                        rx.activation_energy, temp);
    double prod = 1.0;
    for (const auto& [k, nu] : rx.reactant_stoich) prod *= ipow(conc[k], nu);
    const double q = k_rate * prod;
    // dk/dT = k (beta/T + Ea/(R T^2))
    const double dq_dT =
        q * (rx.temp_exponent / temp +
             rx.activation_energy / (kGasConstant * temp * temp));

    auto accumulate = [&](int col, double dq) {
      for (const auto& [k, nu] : rx.reactant_stoich) domega(k, col) -= nu * dq;
      for (const auto& [k, nu] : rx.product_stoich) domega(k, col) += nu * dq;
    };
    accumulate(0, dq_dT);
    for (const auto& [i, nu_i] : rx.reactant_stoich) {
      // d(prod)/dc_i = nu_i c_i^(nu_i-1) * prod over the other reactants
      double dprod = nu_i * ipow(conc[i], nu_i - 1);
      for (const auto& [j, nu_j] : rx.reactant_stoich)
        if (j != i) dprod *= ipow(conc[j], nu_j);
      // Clipped channels do not respond to the raw density.
      const bool clipped = state.densities[i] < 0.0;
      const double dq_drho = clipped ? 0.0 : k_rate * dprod / mech.species[i].molar_mass;
      accumulate(1 + i, dq_drho);
    }
    for (const auto& [k, nu] : rx.reactant_stoich) omega[k] -= nu * q;
    for (const auto& [k, nu] : rx.product_stoich) omega[k] += nu * q;
  }

  Matrix jac(m + 1, m + 1);
  double heat = 0.0;
  for (Index k = 0; k < m; ++k) {
    const double w = mech.species[k].molar_mass;
    jac.row(k + 1) = w * domega.row(k);
    heat += mech.species[k].formation_enthalpy * w * omega[k];
  }
  const double f_temp = -heat / (rho_total * mech.mixture_cp);
  for (Index col = 0; col <= m; ++col) {
    double dheat = 0.0;
    for (Index k = 0; k < m; ++k)
      dheat += mech.species[k].formation_enthalpy * jac(k + 1, col);
    double v = -dheat / (rho_total * mech.mixture_cp);
    if (col > 0 && state.densities[col - 1] >= 0.0) v -= f_temp / rho_total;
    jac(0, col) = v;
  }
  return jac;
}

void validateMechanism(const Mechanism& mech) {
  std::set<std::string> names;
  for (const auto& sp : mech.species) {
    if (sp.name.empty()) throw std::invalid_argument("species with empty name");
    if (!names.insert(sp.name).second)
      throw std::invalid_argument("duplicate species '" + sp.name + "'");
    if (sp.molar_mass <= 0.0)
      throw std::invalid_argument("species '" + sp.name + "' has non-positive molar mass");
  }
  if (mech.mixture_cp <= 0.0)
    throw std::invalid_argument("mixture_cp must be positive");
  const int m = static_cast<int>(mech.species.size());
  for (std::size_t r = 0; r < mech.reactions.size(); ++r) {
    const auto& rx = mech.reactions[r];
    const std::string where = "reaction " + std::to_string(r + 1);
    if (rx.reactant_stoich.empty())
      throw std::invalid_argument(where + " has no reactants");
    if (rx.pre_exponential <= 0.0)
      throw std::invalid_argument(where + " has non-positive pre-exponential");
    for (const auto* side : {&rx.reactant_stoich, &rx.product_stoich})
      for (const auto& [k, nu] : *side) {
        if (k < 0 || k >= m)
          throw std::invalid_argument(where + " references species index out of range");
        if (nu < 1)
          throw std::invalid_argument(where + " has stoichiometric coefficient < 1");
      }
  }
  for (int role : {mech.fuel, mech.oxidizer, mech.inert})
    if (role < -1 || role >= m)
      throw std::invalid_argument("role index out of range");
}

Mechanism parseMechanism(const std::string& text) {
  Mechanism mech;
  enum class Section { None, Species, Reactions, Thermo, Roles };
  Section section = Section::None;

  // Species must be declared before use, so gather reaction lines first.
  std::vector<std::pair<int, std::string>> reaction_lines;
  std::vector<std::pair<int, std::string>> role_tokens;

  std::istringstream is(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line == "[species]") section = Section::Species;
      else if (line == "[reactions]") section = Section::Reactions;
      else if (line == "[thermo]") section = Section::Thermo;
      else if (line == "[roles]") section = Section::Roles;
      else throw ParseError("line " + std::to_string(line_no) + ": unknown section '" + line + "'");
      continue;
    }
    switch (section) {
      case Section::None:
        throw ParseError("line " + std::to_string(line_no) + ": content before any section");
      case Section::Species: {
        auto toks = splitWs(line);
        if (toks.size() != 3)
          throw ParseError("line " + std::to_string(line_no) +
                           ": species line must be 'name molar_mass formation_enthalpy'");
        SpeciesSpec sp;
        sp.name = toks[0];
        sp.molar_mass = parseNumber(toks[1], line_no);
        sp.formation_enthalpy = parseNumber(toks[2], line_no);
        if (sp.molar_mass <= 0.0)
          throw ParseError("line " + std::to_string(line_no) + ": molar mass must be positive");
        if (mech.speciesIndex(sp.name) >= 0)
          throw ParseError("line " + std::to_string(line_no) + ": duplicate species '" + sp.name + "'");
        mech.species.push_back(sp);
        break;
      }
      case Section::Reactions:
        reaction_lines.emplace_back(line_no, line);
        break;
      case Section::Thermo: {
        for (const auto& tok : splitWs(line)) {
          auto eq = tok.find('=');
          if (eq == std::string::npos || tok.substr(0, eq) != "cp")
            throw ParseError("line " + std::to_string(line_no) + ": expected 'cp=<value>'");
          mech.mixture_cp = parseNumber(tok.substr(eq + 1), line_no);
        }
        break;
      }
      case Section::Roles:
        for (const auto& tok : splitWs(line)) role_tokens.emplace_back(line_no, tok);
        break;
    }
  }

  for (const auto& [ln, line] : reaction_lines) {
    auto arrow = line.find("->");
    if (arrow == std::string::npos)
      throw ParseError("line " + std::to_string(ln) + ": reaction lacks '->'");
    ReactionSpec rx;
    rx.reactant_stoich = parseSide(trim(line.substr(0, arrow)), mech, ln);

    // Products run until the first key=value token.
    auto rest = splitWs(line.substr(arrow + 2));
    std::string product_part;
    bool a_set = false, beta_set = false, ea_set = false;
    for (const auto& tok : rest) {
      auto eq = tok.find('=');
      if (eq != std::string::npos) {
        std::string key = tok.substr(0, eq);
        double val = parseNumber(tok.substr(eq + 1), ln);
        if (key == "A") { rx.pre_exponential = val; a_set = true; }
        else if (key == "beta") { rx.temp_exponent = val; beta_set = true; }
        else if (key == "Ea") { rx.activation_energy = val; ea_set = true; }
        else throw ParseError("line " + std::to_string(ln) + ": unknown parameter '" + key + "'");
      } else {
        if (a_set || beta_set || ea_set)
          throw ParseError("line " + std::to_string(ln) + ": species after rate parameters");
        product_part += product_part.empty() ? tok : " " + tok;
      }
    }
    if (!a_set || !beta_set || !ea_set)
      throw ParseError("line " + std::to_string(ln) + ": reaction needs A=, beta=, Ea=");
    if (rx.pre_exponential <= 0.0)
      throw ParseError("line " + std::to_string(ln) + ": pre-exponential must be positive");
    if (product_part.empty())
      throw ParseError("line " + std::to_string(ln) + ": reaction has no products");
    rx.product_stoich = parseSide(product_part, mech, ln);
    mech.reactions.push_back(rx);
  }

  for (const auto& [ln, tok] : role_tokens) {
    auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(ln) + ": roles entries are 'role=Species'");
    std::string key = tok.substr(0, eq);
    std::string name = tok.substr(eq + 1);
    int idx = mech.speciesIndex(name);
    if (idx < 0)
      throw ParseError("line " + std::to_string(ln) + ": unknown species '" + name + "'");
    if (key == "fuel") mech.fuel = idx;
    else if (key == "oxidizer") mech.oxidizer = idx;
    else if (key == "inert") mech.inert = idx;
    else throw ParseError("line " + std::to_string(ln) + ": unknown role '" + key + "'");
  }

  validateMechanism(mech);
  return mech;
}

Mechanism loadMechanism(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mechanism file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parseMechanism(ss.str());
}

std::string serializeMechanism(const Mechanism& mech) {
  std::ostringstream out;
  out << "[species]\n";
  for (const auto& sp : mech.species)
    out << sp.name << " " << fmtDouble(sp.molar_mass) << " "
        << fmtDouble(sp.formation_enthalpy) << "\n";
  out << "[reactions]\n";
  for (const auto& rx : mech.reactions) {
    auto side = [&](const std::map<int, int>& stoich) {
      std::string s;
      for (const auto& [k, nu] : stoich) {
        if (!s.empty()) s += " + ";
        s += std::to_string(nu) + " " + mech.species[k].name;
      }
      return s;
    };
    out << side(rx.reactant_stoich) << " -> " << side(rx.product_stoich)
        << " A=" << fmtDouble(rx.pre_exponential)
        << " beta=" << fmtDouble(rx.temp_exponent)
        << " Ea=" << fmtDouble(rx.activation_energy) << "\n";
  }
  out << "[thermo]\ncp=" << fmtDouble(mech.mixture_cp) << "\n";
  if (mech.fuel >= 0 || mech.oxidizer >= 0 || mech.inert >= 0) {
    out << "[roles]\n";
    std::string line;
    if (mech.fuel >= 0) line += "fuel=" + mech.species[mech.fuel].name;
    if (mech.oxidizer >= 0)
      line += (line.empty() ? "" : " ") + std::string("oxidizer=") + mech.species[mech.oxidizer].name;
    if (mech.inert >= 0)
      line += (line.empty() ? "" : " ") + std::string("inert=") + mech.species[mech.inert].name;
    out << line << "\n";
  }
  return out.str();
}

State initialStateFromPhi(const Mechanism& mech, double phi, double t0,
                          double total_density) {
  if (phi <= 0.0) throw std::domain_error("initialStateFromPhi: phi must be positive");
  if (t0 <= 0.0) throw std::domain_error("initialStateFromPhi: T0 must be positive");
  if (total_density <= 0.0)
    throw std::domain_error("initialStateFromPhi: total density must be positive");
  if (mech.fuel < 0 || mech.oxidizer < 0 || mech.inert < 0)
    throw std::invalid_argument(
        "initialStateFromPhi: mechanism does not designate fuel, oxidizer and inert species");

  // 2:1 fuel:oxidizer stoichiometry, 21/79 air convention.
  const double x_fuel_raw = 2.0 * phi * 0.21;
  const double norm = x_fuel_raw + 0.21 + 0.79;
  const double x_fuel = x_fuel_raw / norm;
  const double x_ox = 0.21 / norm;
  const double x_inert = 0.79 / norm;

  const double w_fuel = mech.species[mech.fuel].molar_mass;
  const double w_ox = mech.species[mech.oxidizer].molar_mass;
  const double w_inert = mech.species[mech.inert].molar_mass;
  const double w_mix = x_fuel * w_fuel + x_ox * w_ox + x_inert * w_inert;

  State s;
  s.temperature = t0;
  s.time = 0.0;
  s.densities = Vector::Zero(mech.speciesCount());
  s.densities[mech.fuel] = total_density * x_fuel * w_fuel / w_mix;
  s.densities[mech.oxidizer] = total_density * x_ox * w_ox / w_mix;
  s.densities[mech.inert] = total_density * x_inert * w_inert / w_mix;
  return s;
}

}  // namespace stiffnet
