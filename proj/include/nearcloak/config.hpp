#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nearcloak/media.hpp"

namespace nearcloak {

/// Run parameters read from an INI file. Every key is optional; see
/// write_config for the full schema with defaults.
struct SweepConfig {
  // [geometry]
  double inner_radius = 1.0;  ///< R_D
  double outer_radius = 2.0;  ///< R_Omega
  // [physics]
  double omega = 1.0;
  // [medium]
  LayerParameters layer{};
  bool scaled_layer_mu = false;
  // [sweep]
  std::vector<double> rho{0.4, 0.2, 0.1, 0.05};
  int n_max = 12;
  // [core] isotropic grid
  std::vector<double> core_eps{0.1, 1.0, 10.0, 100.0};
  std::vector<double> core_mu{1.0};
  std::vector<double> core_sigma{0.0, 1.0, 100.0};
  // [bie]
  int refinement = 3;
  std::vector<double> tau{0.2, 0.1, 0.05};
  int n_max_trace = 6;  ///< degree of the outer-trace analysis in props
  // [scan] cloak-busting search
  double scan_eps_min = 1.0;
  double scan_eps_max = 1e5;
  int scan_points = 2000;
  // [run]
  unsigned long long seed = 1;
  int threads = 1;
  std::string out_dir = "out";

  void validate() const;
};

/// Throws ErrorKind::validation on unreadable files, unknown keys or bad values.
SweepConfig load_config(const std::string& path);
SweepConfig parse_config(std::istream& is);
/// Resolved configuration in the same INI schema.
void write_config(std::ostream& os, const SweepConfig& c);

}  // namespace nearcloak
