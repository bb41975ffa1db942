#pragma once

// Molecular geometry: XYZ I/O, the elastic spring network and the
// semi-empirical rod rotational-diffusion estimate.
//
// Units: positions in Angstrom, masses in amu, spring constants in
// kcal mol^-1 A^-2.

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace nvsense {

using Vec3 = Eigen::Vector3d;

/// Atomic number used by the XYZ convention to mark the surface anchor.
inline constexpr int kAnchorAtomicNumber = 2;

/// Integer-rounded standard atomic weights for Z = 1..92. Entries can be
/// overridden before parsing.
class MassTable {
 public:
  MassTable();

  double mass(int atomic_number) const;
  void set(int atomic_number, double mass);

  static constexpr int kMaxAtomicNumber = 92;

 private:
  std::array<double, kMaxAtomicNumber + 1> masses_{};
};

/// Element symbol for 1 <= Z <= 92 ("X" otherwise).
std::string_view element_symbol(int atomic_number);
/// Atomic number for a symbol (case-sensitive, e.g. "Ru"), or nullopt.
std::optional<int> atomic_number_from_symbol(std::string_view symbol);

struct Atom {
  int atomic_number = 0;
  Vec3 position = Vec3::Zero();
  double mass = 0.0;
};

struct Molecule {
  std::vector<Atom> atoms;
  std::optional<std::size_t> anchor_index;

  std::size_t size() const { return atoms.size(); }
  /// Index of the first atom with the given atomic number.
  std::optional<std::size_t> find_first(int atomic_number) const;
};

/// Parses XYZ text: atom count, comment line, then `token x y z` per atom.
/// The token is a numeric atomic number or an element symbol. An atom with
/// Z = 2 is the anchor; it is assigned the mass of carbon.
/// Throws ParseError on malformed input, count mismatch, empty molecules or
/// more than one anchor.
Molecule parse_xyz(std::istream& in, const MassTable& masses = MassTable{});
Molecule parse_xyz(std::string_view text, const MassTable& masses = MassTable{});
Molecule read_xyz_file(const std::string& path, const MassTable& masses = MassTable{});

/// Writes numeric-token XYZ with `precision` decimals.
void write_xyz(std::ostream& out, const Molecule& m, std::string_view comment = "", int precision = 6);

struct Spring {
  std::size_t i = 0;
  std::size_t j = 0;
  double rest_length = 0.0;  // A
};

struct SpringNetwork {
  std::vector<Spring> pairs;  // sorted by (i, j), i < j
  double kappa = 0.0;         // kcal mol^-1 A^-2
  double cutoff = 0.0;        // A
};

/// Connects every pair with equilibrium separation <= cutoff by a spring of
/// stiffness kappa. Uses a cell list; an empty network is legal but warned.
SpringNetwork build_spring_network(const Molecule& m, double cutoff, double kappa);

struct RodGeometry {
  double length = 0.0;       // m
  double diameter = 0.0;     // m
  double temperature = 0.0;  // K
  double viscosity = 0.0;    // Pa s
};

/// Rotational diffusion coefficient (1/s) of a rigid cylinder,
/// 3 kT / (pi eta L^3) [ln p + c(p)], c(p) = -0.05/p^2 + 0.917/p - 0.662.
double rod_diffusion_coefficient(const RodGeometry& g);

}  // namespace nvsense
