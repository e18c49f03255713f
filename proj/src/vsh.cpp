#include "nearcloak/vsh.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nearcloak/special_functions.hpp"

namespace nearcloak {

VshExpansion VshExpansion::zero(int n_max) {
  if (n_max < 1) throw Error(ErrorKind::validation, "VshExpansion: n_max must be >= 1");
  VshExpansion e;
  e.n_max = n_max;
  e.a = Eigen::VectorXcd::Zero(vsh_mode_count(n_max));
  e.b = Eigen::VectorXcd::Zero(vsh_mode_count(n_max));
  return e;
}

Eigen::VectorXcd VshExpansion::flat() const {
  Eigen::VectorXcd v(a.size() + b.size());
  v << a, b;
  return v;
}

VshExpansion VshExpansion::from_flat(int n_max, const Eigen::VectorXcd& v) {
  const int k = vsh_mode_count(n_max);
  if (v.size() != 2 * k) throw Error(ErrorKind::validation, "VshExpansion::from_flat: length mismatch");
  VshExpansion e = zero(n_max);
  e.a = v.head(k);
  e.b = v.tail(k);
  return e;
}

VshExpansion VshExpansion::resized(int n) const {
  VshExpansion e = zero(n);
  const int k = vsh_mode_count(std::min(n, n_max));
  e.a.head(k) = a.head(k);
  e.b.head(k) = b.head(k);
  return e;
}

Vec3 vsh_gradient_basis(int n, int m, const Vec3& x) {
  const HarmonicSample h = real_harmonics(n, x);
  return h.grad[sh_index(n, m)] / x.norm();
}

Vec3 vsh_rotated_basis(int n, int m, const Vec3& x) {
  return vsh_gradient_basis(n, m, x).cross(x.normalized());
}

std::vector<CVec3> vsh_synthesize(const VshExpansion& e, const std::vector<Vec3>& points) {
  std::vector<CVec3> out(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double r = points[k].norm();
    const Vec3 nu = points[k] / r;
    const HarmonicSample h = real_harmonics(e.n_max, nu);
    CVec3 v = CVec3::Zero();
    for (int n = 1; n <= e.n_max; ++n) {
      for (int m = -n; m <= n; ++m) {
        const Vec3 g = h.grad[sh_index(n, m)] / r;
        const Vec3 c = g.cross(nu);
        const int i = vsh_index(n, m);
        v += e.a[i] * g.cast<cplx>() + e.b[i] * c.cast<cplx>();
      }
    }
    out[k] = v;
  }
  return out;
}

TangentialTrace vsh_synthesize_trace(const VshExpansion& e, const SurfaceQuadrature& quad) {
  TangentialTrace t;
  t.values = vsh_synthesize(e, quad.nodes);
  t.divergence = vsh_divergence(e, quad.nodes);
  return t;
}

VshExpansion vsh_analyze(const SurfaceQuadrature& quad, const TangentialTrace& trace, int n_max) {
  if (trace.values.size() != quad.size()) {
    throw Error(ErrorKind::validation, "vsh_analyze: trace and quadrature sizes differ");
  }
  double scale = 1.0;
  for (const auto& v : trace.values) scale = std::max(scale, v.norm());
  for (std::size_t k = 0; k < quad.size(); ++k) {
    const double normal_part = std::abs(dotu(quad.normals[k], trace.values[k]));
    if (normal_part > 1e-10 * scale) {
      throw Error(ErrorKind::validation, "vsh_analyze: trace is not tangential at node " + std::to_string(k));
    }
  }
  VshExpansion e = VshExpansion::zero(n_max);
  for (std::size_t k = 0; k < quad.size(); ++k) {
    const double r = quad.nodes[k].norm();
    const Vec3 nu = quad.nodes[k] / r;
    const HarmonicSample h = real_harmonics(n_max, nu);
    const CVec3& t = trace.values[k];
    for (int n = 1; n <= n_max; ++n) {
      for (int m = -n; m <= n; ++m) {
        const Vec3 g = h.grad[sh_index(n, m)] / r;
        const Vec3 c = g.cross(nu);
        const int i = vsh_index(n, m);
        e.a[i] += quad.weights[k] * dotu(g, t);
        e.b[i] += quad.weights[k] * dotu(c, t);
      }
    }
  }
  for (int n = 1; n <= n_max; ++n) {
    for (int m = -n; m <= n; ++m) {
      const int i = vsh_index(n, m);
      e.a[i] /= n * (n + 1.0);
      e.b[i] /= n * (n + 1.0);
    }
  }
  return e;
}

std::vector<cplx> vsh_divergence(const VshExpansion& e, const std::vector<Vec3>& points) {
  std::vector<cplx> out(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double r = points[k].norm();
    const HarmonicSample h = real_harmonics(e.n_max, points[k]);
    cplx s = 0.0;
    for (int n = 1; n <= e.n_max; ++n) {
      for (int m = -n; m <= n; ++m) s -= n * (n + 1.0) * e.a[vsh_index(n, m)] * h.value[sh_index(n, m)];
    }
    out[k] = s / (r * r);
  }
  return out;
}

VshExpansion random_vsh(int n_max, unsigned long long seed, int band) {
  if (band < 0 || band > n_max) band = n_max;
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VshExpansion e = VshExpansion::zero(n_max);
  for (int n = 1; n <= band; ++n) {
    for (int m = -n; m <= n; ++m) {
      const int i = vsh_index(n, m);
      e.a[i] = cplx(u(gen), u(gen));
      e.b[i] = cplx(u(gen), u(gen));
    }
  }
  return e;
}

}  // namespace nearcloak
