#pragma once

#include <atomic>
#include <exception>
#include <iosfwd>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "nearcloak/admittance.hpp"
#include "nearcloak/config.hpp"
#include "nearcloak/scattering.hpp"

namespace nearcloak {

/// Evaluates f(0), ..., f(count - 1) on up to `threads` workers. Results are
/// returned in index order; the first exception is rethrown.
template <class F>
auto parallel_map(std::size_t count, int threads, F&& f) -> std::vector<decltype(f(std::size_t{}))> {
  using T = decltype(f(std::size_t{}));
  std::vector<std::optional<T>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        slots[i].emplace(f(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
  if (n <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<T> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

/// Header line of every CSV the harness writes.
inline constexpr const char* csv_version = "# nearcloak-csv v1";

struct CoreParams {
  double eps = 1.0;
  double mu = 1.0;
  double sigma = 0.0;
};
std::vector<CoreParams> core_grid(const SweepConfig& c);

/// Admittance of the virtual medium of the configuration with the given core.
AdmittanceMatrix virtual_admittance(const SweepConfig& c, double rho, const CoreParams& core, int n_max);
AdmittanceMatrix free_admittance(const SweepConfig& c, int n_max);

// --------------------------------------------------------------------------
// rho sweep

struct CoreSweep {
  CoreParams core;
  std::vector<double> diff;     ///< weighted operator norm per rho
  std::vector<double> diff_l2;  ///< unweighted operator norm per rho
  std::optional<SlopeFit> fit;  ///< absent when every difference is negligible
  std::optional<SlopeFit> fit_l2;
  double c_hat = 0.0;  ///< max over rho of diff / rho^3
};

struct RhoSweep {
  std::vector<double> rho;
  std::vector<CoreSweep> cores;
  double c_hat_min = 0.0;  ///< over cores with a fit
  double c_hat_max = 0.0;
  double c_hat_spread() const { return c_hat_min > 0.0 ? c_hat_max / c_hat_min : 0.0; }
};

/// Differences below this (relative to |Lambda0|) count as zero and skip the fit.
inline constexpr double negligible_difference = 1e-12;

RhoSweep run_sweep_rho(const SweepConfig& c, const std::vector<CoreParams>& cores);
RhoSweep run_sweep_rho(const SweepConfig& c);
void write_sweep_csv(std::ostream& os, const RhoSweep& s);
/// One line per core: slope, R^2, flag, C-hat, per-point residuals.
void write_slope_report(std::ostream& os, const RhoSweep& s);

// --------------------------------------------------------------------------
// cloak-busting search

/// Core permittivities (sigma = 0, mu = 1) maximizing ||Lambda_rho - Lambda_0|| / rho^3
/// with the layer removed, one per rho of the configuration.
std::vector<double> scan_resonant_eps(const SweepConfig& c, int n_max_scan = 3);

struct CloakBusting {
  double baseline_c_hat = 0.0;  ///< max C-hat over the base grid with the layer
  std::vector<CoreParams> grid;  ///< base grid plus scanned resonant cores
  RhoSweep without_layer;        ///< gamma0 = 0
  RhoSweep with_layer;           ///< gamma0 as configured (default 1)
  std::vector<std::size_t> busted_without;
  std::vector<std::size_t> busted_with;
};
/// A core is busted when its slope is below 2.5 or its C-hat reaches 100 times the baseline.
CloakBusting run_cloak_busting(const SweepConfig& c);

// --------------------------------------------------------------------------
// tau sweeps of the decomposition solver

/// psi used by the psi-driven sweep: a_{1,0} = 1, b_{2,1} = 1/2.
VshExpansion default_psi();
/// phi(tau x') for the phi-driven sweep: the tangential part of a constant
/// vector, scaled to unit L2 norm on the reference inner sphere.
std::function<CVec3(const Vec3&)> default_phi(double inner_radius);

struct PropsRow {
  std::string driver;  ///< "psi" or "phi"
  double tau = 0.0;
  double norm = 0.0;         ///< weighted trace norm of nu ^ (H_tau - H0)
  double norm_l2 = 0.0;      ///< unweighted coefficient norm
  double oracle_norm = 0.0;  ///< weighted norm from the spectral oracle
  double relative_error = 0.0;
  double data_norm = 0.0;  ///< |psi| or |phi(tau .)|
  double condition = 0.0;
  double residual = 0.0;
  double decomposition = 0.0;
};
struct PropsSweep {
  std::vector<PropsRow> rows;
  SlopeFit psi_fit, phi_fit;
  SlopeFit psi_oracle_fit, phi_oracle_fit;
};
PropsSweep run_props(const SweepConfig& c, bool check_decomposition = true);
void write_props_csv(std::ostream& os, const PropsSweep& s);

// --------------------------------------------------------------------------
// single diagnostics shared by the check report, the CLI and the acceptance suite

/// Relative L2 far-field error of the boundary-integral PEC sphere against the
/// spectral solution, plane wave along z polarized along x.
struct PecComparison {
  double error = 0.0;
  double condition = 0.0;
  double residual = 0.0;
  double trace_residual = 0.0;
  std::vector<Vec3> directions;
  std::vector<CVec3> bie, mie;
};
PecComparison run_pec_mie(double radius, double omega, int refinement);

/// Smallest singular value of I + M0 on the sphere, in the lumped-mass
/// weighted norm, by inverse iteration.
double sigma_min_static(double radius, int refinement, unsigned long long seed = 1);

struct SplitRemainder {
  std::vector<double> tau;
  std::vector<double> kernel_ratio;    ///< max |remainder| / (tau^2 |x' - y'|)
  std::vector<double> operator_ratio;  ///< |R a| / |a|
  SlopeFit fit;
};
SplitRemainder run_split_remainder(double radius, double omega, int refinement, const std::vector<double>& tau);

struct PullbackResidual {
  std::vector<double> steps;
  std::vector<double> residuals;
  SlopeFit fit;
};
/// Forward-difference residual of the transformed Maxwell system for a vacuum
/// mode pulled back through the blow-up map, at a point of the cloak shell.
PullbackResidual run_pullback_residual(const SweepConfig& c, double rho, const std::vector<double>& steps);

struct EnergyCheck {
  double rho = 0.0;
  std::string data;  ///< "single-mode" or "random"
  CoreParams core;
  EnergyIdentity identity;
};
std::vector<EnergyCheck> run_energy_checks(const SweepConfig& c, const std::vector<double>& rho);

struct TraceControl {
  double rho = 0.0;
  double trace_norm_sq = 0.0;  ///< |nu ^ E(rho .)|^2 on the reference inner sphere
  double factor = 0.0;         ///< |1 + omega^2 rho^2 (1 + i rho^-2 / omega)|^2
  double bound = 0.0;          ///< rho^-1 factor |psi| |nu ^ (H - H0)|
  double ratio = 0.0;          ///< trace_norm_sq / bound
};
std::vector<TraceControl> run_trace_control(const SweepConfig& c, const std::vector<double>& rho);

// --------------------------------------------------------------------------
// invariant suite

struct CheckEntry {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  ///< how value compares to threshold when passing
  bool pass = false;
  std::string detail;
};
struct CheckReport {
  std::vector<CheckEntry> entries;
  bool all_pass() const;
  const CheckEntry* find(const std::string& name) const;
  void write_json(std::ostream& os) const;
};
struct CheckOptions {
  bool corrupt_quadrature_weight = false;  ///< negative control for the pairing checks
  bool include_bie = true;                 ///< boundary-integral checks (slower)
};
CheckReport run_check(const SweepConfig& c, const CheckOptions& o = {});

}  // namespace nearcloak
