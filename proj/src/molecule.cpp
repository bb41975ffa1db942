#include "nvsense/molecule.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "nvsense/diagnostics.hpp"
#include "nvsense/units.hpp"

namespace nvsense {
namespace {

constexpr std::array<std::string_view, MassTable::kMaxAtomicNumber + 1> kSymbols = {
    "X",  "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si",
    "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni", "Cu",
    "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru",
    "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
    "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",
    "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac",
    "Th", "Pa", "U"};

// Standard atomic weights rounded to the nearest integer.
constexpr std::array<int, MassTable::kMaxAtomicNumber + 1> kRoundedWeights = {
    0,   1,   4,   7,   9,   11,  12,  14,  16,  19,  20,  23,  24,  27,  28,  31,  32,  35,  40,
    39,  40,  45,  48,  51,  52,  55,  56,  59,  59,  64,  65,  70,  73,  75,  79,  80,  84,  85,
    88,  89,  91,  93,  96,  98,  101, 103, 106, 108, 112, 115, 119, 122, 128, 127, 131, 133, 137,
    139, 140, 141, 144, 145, 150, 152, 157, 159, 163, 165, 167, 169, 173, 175, 178, 181, 184, 186,
    190, 192, 195, 197, 201, 204, 207, 209, 209, 210, 222, 223, 226, 227, 232, 231, 238};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<int> to_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

}  // namespace

MassTable::MassTable() {
  for (int z = 0; z <= kMaxAtomicNumber; ++z) masses_[z] = kRoundedWeights[z];
}

double MassTable::mass(int atomic_number) const {
  if (atomic_number < 1 || atomic_number > kMaxAtomicNumber)
    throw InputError("no mass for atomic number " + std::to_string(atomic_number));
  return masses_[atomic_number];
}

void MassTable::set(int atomic_number, double mass) {
  if (atomic_number < 1 || atomic_number > kMaxAtomicNumber)
    throw InputError("atomic number out of range: " + std::to_string(atomic_number));
  if (!(mass > 0.0)) throw InputError("mass must be positive");
  masses_[atomic_number] = mass;
}

std::string_view element_symbol(int atomic_number) {
  if (atomic_number < 1 || atomic_number > MassTable::kMaxAtomicNumber) return kSymbols[0];
  return kSymbols[atomic_number];
}

std::optional<int> atomic_number_from_symbol(std::string_view symbol) {
  for (int z = 1; z <= MassTable::kMaxAtomicNumber; ++z)
    if (kSymbols[z] == symbol) return z;
  return std::nullopt;
}

std::optional<std::size_t> Molecule::find_first(int atomic_number) const {
  for (std::size_t i = 0; i < atoms.size(); ++i)
    if (atoms[i].atomic_number == atomic_number) return i;
  return std::nullopt;
}

Molecule parse_xyz(std::istream& in, const MassTable& masses) {
  std::string line;
  std::size_t lineno = 0;

  // Header: first non-blank line holds the atom count.
  std::optional<int> declared;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    auto tokens = split_ws(line);
    declared = to_int(tokens.front());
    if (!declared || tokens.size() != 1 || *declared < 0) throw ParseError("expected atom count, got '" + line + "'", lineno);
    break;
  }
  if (!declared) throw ParseError("empty input", lineno);
  if (*declared == 0) throw ParseError("molecule has no atoms", lineno);

  // Comment line (may be blank or missing at EOF).
  if (!std::getline(in, line)) throw ParseError("count mismatch: header declares " + std::to_string(*declared) + " atoms, found 0", lineno);
  ++lineno;

  Molecule mol;
  mol.atoms.reserve(static_cast<std::size_t>(*declared));
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) {
      // Trailing blank lines are tolerated; blank lines inside the block are not.
      std::string rest;
      while (std::getline(in, rest)) {
        ++lineno;
        if (!is_blank(rest)) throw ParseError("unexpected content after blank line", lineno);
      }
      break;
    }
    auto tokens = split_ws(line);
    if (tokens.size() < 4) throw ParseError("expected 'element x y z', got '" + line + "'", lineno);
    Atom atom;
    if (auto z = to_int(tokens[0])) {
      atom.atomic_number = *z;
    } else if (auto zs = atomic_number_from_symbol(tokens[0])) {
      atom.atomic_number = *zs;
    } else {
      throw ParseError("unknown element token '" + std::string(tokens[0]) + "'", lineno);
    }
    if (atom.atomic_number < 1 || atom.atomic_number > MassTable::kMaxAtomicNumber)
      throw ParseError("atomic number out of range", lineno);
    for (int k = 0; k < 3; ++k) {
      auto v = to_double(tokens[k + 1]);
      if (!v) throw ParseError("unparsable coordinate '" + std::string(tokens[k + 1]) + "'", lineno);
      atom.position[k] = *v;
    }
    if (atom.atomic_number == kAnchorAtomicNumber) {
      if (mol.anchor_index) throw ParseError("more than one anchor atom", lineno);
      mol.anchor_index = mol.atoms.size();
      atom.mass = masses.mass(6);
    } else {
      atom.mass = masses.mass(atom.atomic_number);
    }
    mol.atoms.push_back(atom);
  }

  if (mol.atoms.size() != static_cast<std::size_t>(*declared))
    throw ParseError("count mismatch: header declares " + std::to_string(*declared) + " atoms, found " +
                         std::to_string(mol.atoms.size()),
                     lineno);
  return mol;
}

Molecule parse_xyz(std::string_view text, const MassTable& masses) {
  std::istringstream in{std::string(text)};
  return parse_xyz(in, masses);
}

Molecule read_xyz_file(const std::string& path, const MassTable& masses) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return parse_xyz(in, masses);
}

void write_xyz(std::ostream& out, const Molecule& m, std::string_view comment, int precision) {
  out << m.atoms.size() << '\n' << comment << '\n';
  const int width = precision + 6;
  for (const auto& a : m.atoms) {
    out << std::setw(4) << a.atomic_number << std::fixed << std::setprecision(precision);
    for (int k = 0; k < 3; ++k) out << ' ' << std::setw(width) << a.position[k];
    out << '\n';
  }
  out.unsetf(std::ios::floatfield);
}

SpringNetwork build_spring_network(const Molecule& m, double cutoff, double kappa) {
  if (!(cutoff > 0.0)) throw InputError("cutoff must be positive");
  if (!(kappa > 0.0)) throw InputError("spring constant must be positive");

  SpringNetwork net;
  net.kappa = kappa;
  net.cutoff = cutoff;
  if (m.atoms.empty()) {
    warn("spring network: molecule is empty");
    return net;
  }

  // Cell list with cell edge = cutoff; only neighbouring cells are scanned.
  Vec3 lo = m.atoms.front().position;
  for (const auto& a : m.atoms) lo = lo.cwiseMin(a.position);
  using Key = std::tuple<long, long, long>;
  auto key_of = [&](const Vec3& p) {
    return Key{static_cast<long>(std::floor((p.x() - lo.x()) / cutoff)),
               static_cast<long>(std::floor((p.y() - lo.y()) / cutoff)),
               static_cast<long>(std::floor((p.z() - lo.z()) / cutoff))};
  };
  std::map<Key, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < m.atoms.size(); ++i) cells[key_of(m.atoms[i].position)].push_back(i);

  const double cutoff2 = cutoff * cutoff;
  for (const auto& [key, members] : cells) {
    const auto [cx, cy, cz] = key;
    for (long dx = -1; dx <= 1; ++dx)
      for (long dy = -1; dy <= 1; ++dy)
        for (long dz = -1; dz <= 1; ++dz) {
          auto it = cells.find(Key{cx + dx, cy + dy, cz + dz});
          if (it == cells.end()) continue;
          for (std::size_t i : members)
            for (std::size_t j : it->second) {
              if (j <= i) continue;
              const double d2 = (m.atoms[i].position - m.atoms[j].position).squaredNorm();
              if (d2 <= cutoff2) net.pairs.push_back({i, j, std::sqrt(d2)});
            }
        }
  }
  std::sort(net.pairs.begin(), net.pairs.end(),
            [](const Spring& a, const Spring& b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); });
  if (net.pairs.empty()) warn("spring network: no atom pairs within cutoff " + std::to_string(cutoff) + " A");
  return net;
}

double rod_diffusion_coefficient(const RodGeometry& g) {
  if (!(g.length > 0.0) || !(g.diameter > 0.0) || !(g.temperature > 0.0) || !(g.viscosity > 0.0))
    throw InputError("rod geometry: length, diameter, temperature and viscosity must be positive");
  const double p = g.length / g.diameter;
  if (p < 1.0) warn("rod diffusion: aspect ratio p = " + std::to_string(p) + " < 1, outside the fitted range");
  const double end_correction = -0.05 / (p * p) + 0.917 / p - 0.662;
  const double prefactor =
      3.0 * units::boltzmann * g.temperature / (units::pi * g.viscosity * g.length * g.length * g.length);
  return prefactor * (std::log(p) + end_correction);
}

}  // namespace nvsense
