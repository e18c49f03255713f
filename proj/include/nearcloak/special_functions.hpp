#pragma once

#include <vector>

#include "nearcloak/types.hpp"

namespace nearcloak {

/// Spherical Bessel j_n, y_n and Hankel h_n = j_n + i y_n for n = 0..n_max at
/// one complex argument. j_n comes from normalized Miller recurrence, h_n from
/// upward recurrence (so y_n = -i(h_n - j_n) keeps full relative accuracy in h).
class BesselTable {
 public:
  BesselTable(int n_max, cplx z);

  int n_max() const { return n_max_; }
  cplx z() const { return z_; }
  cplx j(int n) const { return j_[n + 1]; }
  cplx y(int n) const { return -imag_unit * (h_[n + 1] - j_[n + 1]); }
  cplx h(int n) const { return h_[n + 1]; }
  cplx dj(int n) const;
  cplx dy(int n) const;
  cplx dh(int n) const;
  /// Riccati functions psi = z j_n, xi = z h_n and their z-derivatives.
  cplx psi(int n) const { return z_ * j(n); }
  cplx xi(int n) const { return z_ * h(n); }
  cplx dpsi(int n) const;
  cplx dxi(int n) const;

 private:
  int n_max_;
  cplx z_;
  std::vector<cplx> j_;  // index n+1, n = -1..n_max
  std::vector<cplx> h_;
};

cplx spherical_bessel(int n, cplx z);
cplx spherical_bessel_y(int n, cplx z);
cplx spherical_hankel1(int n, cplx z);
cplx spherical_bessel_derivative(int n, cplx z);
cplx riccati_bessel_derivative(int n, cplx z);    ///< [z j_n(z)]'
cplx riccati_hankel1_derivative(int n, cplx z);   ///< [z h_n(z)]'

/// Index of (n, m), |m| <= n, in the flat harmonic arrays: n^2 + n + m.
inline int sh_index(int n, int m) { return n * n + n + m; }
inline int sh_count(int n_max) { return (n_max + 1) * (n_max + 1); }

/// Real orthonormal spherical harmonics without Condon-Shortley phase:
/// Y_n0 = Pbar_n^0/sqrt(4pi), Y_nm = sqrt(2) Pbar_n^m cos(m phi)/sqrt(4pi) (m>0),
/// Y_n,-m = sqrt(2) Pbar_n^m sin(m phi)/sqrt(4pi). grad holds the angular
/// gradient on the unit sphere as a Cartesian tangent vector.
struct HarmonicSample {
  std::vector<double> value;
  std::vector<Vec3> grad;
};

HarmonicSample real_harmonics(int n_max, const Vec3& direction);

}  // namespace nearcloak
