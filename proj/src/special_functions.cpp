#include "nearcloak/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nearcloak {

namespace {

constexpr double overflow_guard = 700.0;

// j_0 and j_1 with a short series near the origin to avoid cancellation.
void low_order_j(cplx z, cplx& j0, cplx& j1) {
  if (std::abs(z) < 0.5) {
    const cplx z2 = z * z;
    cplx t0 = 1.0, t1 = z / 3.0;
    j0 = 0.0;
    j1 = 0.0;
    for (int k = 0; k < 12; ++k) {
      j0 += t0;
      j1 += t1;
      t0 *= -z2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
      t1 *= -z2 / ((2.0 * k + 2.0) * (2.0 * k + 5.0));
    }
    return;
  }
  const cplx s = std::sin(z), c = std::cos(z);
  j0 = s / z;
  j1 = s / (z * z) - c / z;
}

}  // namespace

BesselTable::BesselTable(int n_max, cplx z) : n_max_(n_max), z_(z), j_(n_max + 2), h_(n_max + 2) {
  if (n_max < 0) throw Error(ErrorKind::validation, "BesselTable: n_max must be >= 0");
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) || std::abs(z.imag()) > overflow_guard) {
    throw Error(ErrorKind::numeric, "spherical Bessel: |Im z| too large (overflow)");
  }
  if (z == cplx(0.0)) {
    std::fill(j_.begin(), j_.end(), cplx(0.0));
    j_[1] = 1.0;
    const cplx inf(std::numeric_limits<double>::infinity(), 0.0);
    std::fill(h_.begin(), h_.end(), inf);
    j_[0] = inf;  // j_{-1} = cos z / z
    return;
  }

  cplx j0, j1;
  low_order_j(z, j0, j1);

  // Miller: start far above max(n_max, |z|), recur downward, normalize.
  const double az = std::abs(z);
  const int start = std::max(n_max, static_cast<int>(az)) + 20 + static_cast<int>(4.0 * std::sqrt(az + 1.0));
  std::vector<cplx> f(start + 2, 0.0);
  f[start + 1] = 0.0;
  f[start] = 1e-300;
  for (int n = start; n >= 1; --n) {
    f[n - 1] = (2.0 * n + 1.0) / z * f[n] - f[n + 1];
    if (std::abs(f[n - 1]) > 1e250) {
      for (int k = n - 1; k <= start; ++k) f[k] *= 1e-250;
    }
  }
  const cplx scale = std::abs(j0) >= std::abs(j1) ? j0 / f[0] : j1 / f[1];
  for (int n = 0; n <= n_max; ++n) j_[n + 1] = f[n] * scale;
  j_[1] = j0;
  if (n_max >= 1) j_[2] = j1;
  j_[0] = std::cos(z) / z;

  // Outgoing Hankel, upward recurrence is stable.
  const cplx e = std::exp(imag_unit * z);
  h_[0] = e / z;
  h_[1] = -imag_unit * e / z;
  for (int n = 1; n <= n_max; ++n) h_[n + 1] = (2.0 * n - 1.0) / z * h_[n] - h_[n - 1];
}

cplx BesselTable::dj(int n) const { return j_[n] - (n + 1.0) / z_ * j_[n + 1]; }
cplx BesselTable::dh(int n) const { return h_[n] - (n + 1.0) / z_ * h_[n + 1]; }
cplx BesselTable::dy(int n) const { return -imag_unit * (dh(n) - dj(n)); }
cplx BesselTable::dpsi(int n) const { return z_ * j_[n] - static_cast<double>(n) * j_[n + 1]; }
cplx BesselTable::dxi(int n) const { return z_ * h_[n] - static_cast<double>(n) * h_[n + 1]; }

cplx spherical_bessel(int n, cplx z) { return BesselTable(n, z).j(n); }
cplx spherical_bessel_y(int n, cplx z) { return BesselTable(n, z).y(n); }
cplx spherical_hankel1(int n, cplx z) { return BesselTable(n, z).h(n); }
cplx spherical_bessel_derivative(int n, cplx z) {
  if (z == cplx(0.0)) return n == 1 ? cplx(1.0 / 3.0) : cplx(0.0);
  return BesselTable(n, z).dj(n);
}
cplx riccati_bessel_derivative(int n, cplx z) {
  if (z == cplx(0.0)) return n == 0 ? cplx(1.0) : cplx(0.0);
  return BesselTable(n, z).dpsi(n);
}
cplx riccati_hankel1_derivative(int n, cplx z) { return BesselTable(n, z).dxi(n); }

HarmonicSample real_harmonics(int n_max, const Vec3& direction) {
  const Vec3 u = direction.normalized();
  const double ct = std::clamp(u.z(), -1.0, 1.0);
  const double st = std::sqrt(std::max(0.0, u.x() * u.x() + u.y() * u.y()));
  const double phi = st > 0.0 ? std::atan2(u.y(), u.x()) : 0.0;
  const Vec3 e_theta(ct * std::cos(phi), ct * std::sin(phi), -st);
  const Vec3 e_phi(-std::sin(phi), std::cos(phi), 0.0);

  const int count = sh_count(n_max);
  HarmonicSample out;
  out.value.assign(count, 0.0);
  out.grad.assign(count, Vec3::Zero());
  const double k0 = 1.0 / std::sqrt(4.0 * pi);
  const double k1 = std::sqrt(2.0) * k0;

  // P holds Pbar_n^m, Q holds Pbar_n^m / sin(theta) (m >= 1), for fixed m.
  std::vector<double> P(n_max + 1), Q(n_max + 1);
  double cmm = 1.0;  // Pbar_m^m = cmm sin^m
  for (int m = 0; m <= n_max; ++m) {
    if (m > 0) cmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m));
    const double sm1 = m > 0 ? std::pow(st, m - 1) : 0.0;
    std::fill(P.begin(), P.end(), 0.0);
    std::fill(Q.begin(), Q.end(), 0.0);
    P[m] = cmm * (m > 0 ? sm1 * st : 1.0);
    Q[m] = cmm * sm1;
    for (int n = m + 1; n <= n_max; ++n) {
      const double a = std::sqrt((4.0 * n * n - 1.0) / (static_cast<double>(n) * n - static_cast<double>(m) * m));
      const double b = n - 1 > m ? std::sqrt(((n - 1.0) * (n - 1.0) - m * m) / (4.0 * (n - 1.0) * (n - 1.0) - 1.0)) : 0.0;
      P[n] = a * (ct * P[n - 1] - b * (n - 2 >= m ? P[n - 2] : 0.0));
      Q[n] = a * (ct * Q[n - 1] - b * (n - 2 >= m ? Q[n - 2] : 0.0));
    }
    for (int n = std::max(m, 0); n <= n_max; ++n) {
      if (m == 0) {
        out.value[sh_index(n, 0)] = k0 * P[n];
        continue;
      }
      const double dP = n * ct * Q[n] -
                        (n > m ? std::sqrt((2.0 * n + 1.0) * (static_cast<double>(n) * n - static_cast<double>(m) * m) / (2.0 * n - 1.0)) * Q[n - 1] : 0.0);
      const double c = std::cos(m * phi), s = std::sin(m * phi);
      out.value[sh_index(n, m)] = k1 * P[n] * c;
      out.value[sh_index(n, -m)] = k1 * P[n] * s;
      out.grad[sh_index(n, m)] = k1 * (dP * c * e_theta - m * Q[n] * s * e_phi);
      out.grad[sh_index(n, -m)] = k1 * (dP * s * e_theta + m * Q[n] * c * e_phi);
      if (m == 1) {
        // dPbar_n^0/dtheta = -sqrt(n(n+1)) Pbar_n^1
        out.grad[sh_index(n, 0)] = -k0 * std::sqrt(n * (n + 1.0)) * P[n] * e_theta;
      }
    }
  }
  return out;
}

}  // namespace nearcloak
