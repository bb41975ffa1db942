// One microsecond of Langevin dynamics on the NHC-Ru fixture. Takes hours; opt in
// with -DNVSENSE_LONG_TESTS=ON.
#include <cmath>
#include <cstdio>
#include <exception>

#include "nvsense/anm.hpp"
#include "nvsense/molecule.hpp"

using namespace nvsense;

int main(int argc, char** argv) {
  const double total_ps = argc > 1 ? std::atof(argv[1]) : 1e6;
  try {
    const Molecule m = read_xyz_file(std::string(NVSENSE_DATA_DIR) + "/nhc_ru.xyz");
    const auto net = build_spring_network(m, 10.0, 1.0);
    LangevinParams p;
    p.damping = 5.0;
    p.temperature = 300.0;
    p.dt = 0.002;
    p.steps = static_cast<std::size_t>(total_ps / p.dt);
    p.sample_every = 5000;  // 10 ps
    p.seed = 2024;
    p.wall = default_surface_wall(m, surface_frame(m));

    bool finite = true;
    double next_report = 0.0;
    const auto info = simulate_langevin(net, m, p, [&](double t, std::span<const Vec3> x) {
      for (const auto& v : x) finite = finite && v.allFinite();
      if (t >= next_report) {
        std::printf("t = %.0f ns  E_pot = %.3f kcal/mol\n", t * 1e-3, network_energy(net, x, m, p.wall));
        std::fflush(stdout);
        next_report += 1e4;
      }
    });
    const double ratio = info.mean_kinetic_per_dof / (0.5 * info.thermal_energy);
    std::printf("frames %zu, kinetic / (kT/2) = %.4f, final energy %.3f kcal/mol\n", info.frames, ratio,
                info.final_energy);
    if (!finite || !std::isfinite(info.final_energy) || std::abs(ratio - 1.0) > 0.05) {
      std::puts("FAIL long_anm_stability");
      return 1;
    }
    std::puts("PASS long_anm_stability");
    return 0;
  } catch (const std::exception& e) {
    std::printf("FAIL long_anm_stability: %s\n", e.what());
    return 1;
  }
}
