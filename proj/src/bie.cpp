#include "nearcloak/bie.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "nearcloak/quadrature.hpp"
#include "nearcloak/special_functions.hpp"

namespace nearcloak {

KernelEval helmholtz_kernel(const Vec3& x, const Vec3& y, double omega) {
  const Vec3 d = x - y;
  const double r = d.norm();
  if (r < 1e-14) {
    std::ostringstream msg;
    msg << "kernel evaluated at coincident points, |x-y| = " << r;
    throw Error(ErrorKind::singularity, msg.str());
  }
  const cplx e = std::exp(imag_unit * (omega * r));
  KernelEval k{x, y, omega, e / (4.0 * pi * r), CVec3::Zero()};
  const cplx gp = (imag_unit * (omega * r) - 1.0) * e / (4.0 * pi * r * r * r);
  k.gradient_x = gp * d.cast<cplx>();
  return k;
}

KernelHessian helmholtz_hessian(double r, double omega) {
  const cplx ikr = imag_unit * (omega * r);
  const cplx e = std::exp(ikr);
  const double r2 = r * r;
  return {(ikr - 1.0) * e / (4.0 * pi * r2 * r), e * (3.0 - 3.0 * ikr - omega * omega * r2) / (4.0 * pi * r2 * r2 * r)};
}

KernelSplit kernel_split(const Vec3& xp, const Vec3& yp, double tau, double omega) {
  const double r = (xp - yp).norm();
  if (r < 1e-14) throw Error(ErrorKind::singularity, "kernel split at coincident points");
  const double t = tau * omega * r;
  KernelSplit s;
  s.static_part = 1.0 / (4.0 * pi * r);
  s.constant = imag_unit * (tau * omega) / (4.0 * pi);
  // e^{it} - 1 - it without cancellation for small t
  cplx rem;
  if (t < 1e-3) {
    const cplx it = imag_unit * t;
    rem = it * it / 2.0 + it * it * it / 6.0 + it * it * it * it / 24.0;
  } else {
    rem = std::exp(imag_unit * t) - 1.0 - imag_unit * t;
  }
  s.remainder = rem / (4.0 * pi * r);
  return s;
}

// ---------------------------------------------------------------------------

namespace {

TangentSpace::Frame make_frame(const Vec3& n) {
  Vec3 e = Vec3::UnitX();
  if (std::abs(n.x()) > 0.6) e = Vec3::UnitY();
  const Vec3 t1 = e.cross(n).normalized();
  const Vec3 t2 = n.cross(t1);
  TangentSpace::Frame f;
  f.col(0) = t1;
  f.col(1) = t2;
  return f;
}

inline Mat3 tangent_projector(const Vec3& n) { return Mat3::Identity() - n * n.transpose(); }

inline Eigen::Matrix3cd skew(const Vec3& n) {
  Mat3 s;
  s << 0, -n.z(), n.y(), n.z(), 0, -n.x(), -n.y(), n.x(), 0;
  return s.cast<cplx>();
}

}  // namespace

TangentSpace::TangentSpace(SurfaceMesh mesh, const BieOptions& options) : mesh_(std::move(mesh)), options_(options) {
  validate_mesh(mesh_);
  const std::size_t nv = mesh_.vertices.size();
  const std::size_t nt = mesh_.triangles.size();
  h_ = mesh_.max_edge_length();

  face_normals_.resize(nt);
  flat_areas_.resize(nt);
  centroids_.resize(nt);
  diameters_.resize(nt);
  std::vector<Vec3> acc(nv, Vec3::Zero());
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tri = mesh_.triangles[t];
    const Vec3& a = mesh_.vertices[tri[0]];
    const Vec3& b = mesh_.vertices[tri[1]];
    const Vec3& c = mesh_.vertices[tri[2]];
    const Vec3 cr = (b - a).cross(c - a);
    flat_areas_[t] = 0.5 * cr.norm();
    face_normals_[t] = cr.normalized();
    diameters_[t] = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
    for (int k = 0; k < 3; ++k) {
      const Vec3 e1 = (mesh_.vertices[tri[(k + 1) % 3]] - mesh_.vertices[tri[k]]).normalized();
      const Vec3 e2 = (mesh_.vertices[tri[(k + 2) % 3]] - mesh_.vertices[tri[k]]).normalized();
      acc[tri[k]] += std::acos(std::clamp(e1.dot(e2), -1.0, 1.0)) * face_normals_[t];
    }
  }
  normals_.resize(nv);
  frames_.resize(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    normals_[i] = mesh_.is_sphere() ? Vec3(mesh_.vertices[i].normalized()) : Vec3(acc[i].normalized());
    frames_[i] = make_frame(normals_[i]);
  }

  const TriangleRule& rule = triangle_rule(options_.far_degree);
  far_count_ = rule.weights.size();
  far_points_.reserve(nt * far_count_);
  areas_.assign(nv, 0.0);
  for (std::size_t t = 0; t < nt; ++t) {
    double area = 0.0;
    Vec3 cen = Vec3::Zero();
    for (std::size_t q = 0; q < far_count_; ++q) {
      far_points_.push_back(map_point(t, rule.bary[q], rule.weights[q]));
      area += far_points_.back().weight;
      cen += far_points_.back().weight * far_points_.back().y;
    }
    centroids_[t] = cen / area;
    for (int k = 0; k < 3; ++k) areas_[mesh_.triangles[t][k]] += area / 3.0;
  }
  build_reconstruction();
}

TangentSpace::Shape TangentSpace::shape(const std::array<double, 3>& l) {
  return {l[0], l[1], l[2], l[0] * l[1], l[1] * l[2], l[2] * l[0]};
}

void TangentSpace::build_reconstruction() {
  const std::size_t nt = mesh_.triangles.size();
  stencils_.assign(nt, {});
  recon_.assign(nt, Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, 3));
  std::vector<std::vector<int>> ring(mesh_.vertices.size());
  for (std::size_t t = 0; t < nt; ++t) {
    for (int k = 0; k < 3; ++k) ring[mesh_.triangles[t][k]].push_back(static_cast<int>(t));
  }
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tri = mesh_.triangles[t];
    auto& st = stencils_[t];
    st.assign(tri.begin(), tri.end());
    if (!options_.quadratic) continue;
    std::vector<int> nb;
    for (int k = 0; k < 3; ++k) {
      for (int t2 : ring[tri[k]]) {
        for (int v : mesh_.triangles[t2]) {
          if (v != tri[0] && v != tri[1] && v != tri[2]) nb.push_back(v);
        }
      }
    }
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    if (nb.size() < 3) continue;
    st.insert(st.end(), nb.begin(), nb.end());
    const Vec3& a = mesh_.vertices[tri[0]];
    const Vec3 e1 = mesh_.vertices[tri[1]] - a;
    const Vec3 e2 = mesh_.vertices[tri[2]] - a;
    const Vec3& n = face_normals_[t];
    Eigen::Matrix2d G;
    G << e1.dot(e1), e1.dot(e2), e1.dot(e2), e2.dot(e2);
    const Eigen::Matrix2d Gi = G.inverse();
    const Eigen::Index m = static_cast<Eigen::Index>(nb.size());
    Eigen::MatrixXd L(m, 3), B(m, 3);
    for (Eigen::Index j = 0; j < m; ++j) {
      const Vec3& v = mesh_.vertices[nb[j]];
      // chart of the panel: radial projection on spheres, orthogonal otherwise
      const Vec3 p = mesh_.is_sphere() ? Vec3(v * (n.dot(a) / n.dot(v))) : Vec3(v - n * n.dot(v - a));
      const Eigen::Vector2d l12 = Gi * Eigen::Vector2d((p - a).dot(e1), (p - a).dot(e2));
      const std::array<double, 3> l{1.0 - l12[0] - l12[1], l12[0], l12[1]};
      const Shape sh = shape(l);
      for (int k = 0; k < 3; ++k) {
        L(j, k) = l[k];
        B(j, k) = sh[3 + k];
      }
    }
    const Eigen::MatrixXd C = B.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(m, m));
    auto& Q = recon_[t];
    Q.resize(3, 3 + m);
    Q.leftCols(3) = -C * L;
    Q.rightCols(m) = C;
  }
}

TangentSpace::PanelPoint TangentSpace::map_point(std::size_t t, const std::array<double, 3>& l, double w) const {
  const auto& tri = mesh_.triangles[t];
  const Vec3 p = l[0] * mesh_.vertices[tri[0]] + l[1] * mesh_.vertices[tri[1]] + l[2] * mesh_.vertices[tri[2]];
  const double R = mesh_.nominal_radius;
  if (R > 0.0) {
    const double pn = p.norm();
    const Vec3 n = p / pn;
    return {R * n, n, w * flat_areas_[t] * R * R * std::abs(face_normals_[t].dot(p)) / (pn * pn * pn), l};
  }
  return {p, face_normals_[t], w * flat_areas_[t], l};
}

void TangentSpace::visit_panel(std::size_t t, const Vec3& x, int singular_vertex,
                               const std::function<void(const PanelPoint&)>& visit) const {
  if (singular_vertex >= 0) {
    static thread_local int cached_order = -1;
    static thread_local TriangleRule duffy;
    if (cached_order != options_.duffy_order) {
      duffy = duffy_rule(options_.duffy_order);
      cached_order = options_.duffy_order;
    }
    const int v = singular_vertex;
    for (std::size_t q = 0; q < duffy.weights.size(); ++q) {
      std::array<double, 3> l{};
      l[v] = duffy.bary[q][0];
      l[(v + 1) % 3] = duffy.bary[q][1];
      l[(v + 2) % 3] = duffy.bary[q][2];
      visit(map_point(t, l, duffy.weights[q]));
    }
    return;
  }
  if ((x - centroids_[t]).norm() >= options_.near_factor * diameters_[t]) {
    const PanelPoint* p = panel_begin(t);
    for (std::size_t q = 0; q < far_count_; ++q) visit(p[q]);
    return;
  }
  const TriangleRule& rule = triangle_rule(options_.far_degree);
  using Corners = std::array<std::array<double, 3>, 3>;
  const auto& tri = mesh_.triangles[t];
  const std::function<void(const Corners&, int, double)> recurse = [&](const Corners& c, int depth, double frac) {
    std::array<double, 3> mid{};
    for (int k = 0; k < 3; ++k) mid[k] = (c[0][k] + c[1][k] + c[2][k]) / 3.0;
    const Vec3 pc = mid[0] * mesh_.vertices[tri[0]] + mid[1] * mesh_.vertices[tri[1]] + mid[2] * mesh_.vertices[tri[2]];
    const Vec3 centre = mesh_.is_sphere() ? Vec3(mesh_.nominal_radius * pc.normalized()) : pc;
    const double diam = diameters_[t] * std::sqrt(frac);
    if (depth >= options_.max_subdivision || (x - centre).norm() >= options_.near_factor * diam) {
      for (std::size_t q = 0; q < rule.weights.size(); ++q) {
        std::array<double, 3> l{};
        for (int k = 0; k < 3; ++k) {
          l[k] = rule.bary[q][0] * c[0][k] + rule.bary[q][1] * c[1][k] + rule.bary[q][2] * c[2][k];
        }
        visit(map_point(t, l, rule.weights[q] * frac));
      }
      return;
    }
    std::array<std::array<double, 3>, 3> m;
    for (int k = 0; k < 3; ++k) {
      for (int d = 0; d < 3; ++d) m[k][d] = 0.5 * (c[k][d] + c[(k + 1) % 3][d]);
    }
    recurse({c[0], m[0], m[2]}, depth + 1, frac / 4);
    recurse({m[0], c[1], m[1]}, depth + 1, frac / 4);
    recurse({m[2], m[1], c[2]}, depth + 1, frac / 4);
    recurse({m[0], m[1], m[2]}, depth + 1, frac / 4);
  };
  recurse({{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}, 0, 1.0);
}

Eigen::VectorXcd TangentSpace::to_dofs(const std::vector<CVec3>& values) const {
  if (values.size() != vertex_count()) throw Error(ErrorKind::validation, "vertex value count mismatch");
  Eigen::VectorXcd d(dof_count());
  for (std::size_t i = 0; i < vertex_count(); ++i) {
    d.segment<2>(2 * i) = frames_[i].transpose().cast<cplx>() * values[i];
  }
  return d;
}

std::vector<CVec3> TangentSpace::from_dofs(const Eigen::VectorXcd& d) const {
  if (d.size() != dof_count()) throw Error(ErrorKind::validation, "dof count mismatch");
  std::vector<CVec3> v(vertex_count());
  for (std::size_t i = 0; i < vertex_count(); ++i) v[i] = frames_[i].cast<cplx>() * d.segment<2>(2 * i);
  return v;
}

Eigen::VectorXcd TangentSpace::sample(const std::function<CVec3(const Vec3&, const Vec3&)>& f) const {
  std::vector<CVec3> v(vertex_count());
  for (std::size_t i = 0; i < vertex_count(); ++i) v[i] = f(mesh_.vertices[i], normals_[i]);
  return to_dofs(v);
}

TangentialTrace TangentSpace::trace_at_quadrature(const Eigen::VectorXcd& dofs) const {
  const auto coef = panel_coefficients(from_dofs(dofs));
  const TriangleRule& rule = triangle_rule(mesh_.rule_degree);
  TangentialTrace tr;
  tr.values.reserve(mesh_.quad.size());
  for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const Shape sh = shape(rule.bary[q]);
      const Vec3& n = mesh_.quad.normals[t * rule.weights.size() + q];
      CVec3 s = CVec3::Zero();
      for (int m = 0; m < 6; ++m) s += sh[m] * coef[t][m];
      tr.values.push_back(s - n.cast<cplx>() * dotu(n, s));
    }
  }
  return tr;
}

double TangentSpace::l2_norm(const Eigen::VectorXcd& dofs) const {
  double s = 0.0;
  for (std::size_t i = 0; i < vertex_count(); ++i) s += areas_[i] * dofs.segment<2>(2 * i).squaredNorm();
  return std::sqrt(s);
}

Eigen::VectorXd TangentSpace::dof_weights() const {
  Eigen::VectorXd w(dof_count());
  for (std::size_t i = 0; i < vertex_count(); ++i) w[2 * i] = w[2 * i + 1] = areas_[i];
  return w;
}

SpacePtr make_space(SurfaceMesh mesh, const BieOptions& options) {
  return std::make_shared<const TangentSpace>(std::move(mesh), options);
}

const char* to_string(OperatorTag tag) {
  switch (tag) {
    case OperatorTag::magnetic_dipole: return "M";
    case OperatorTag::magnetic_dipole_static: return "M0";
    case OperatorTag::split_remainder: return "split-remainder";
    case OperatorTag::single_layer: return "single-layer";
    case OperatorTag::electric_dipole: return "electric-dipole";
  }
  return "?";
}

// ---------------------------------------------------------------------------

namespace {

using Block23 = Eigen::Matrix<cplx, 2, 3>;

/// Generic assembly: for each target vertex and source panel point, kernel(...)
/// returns the 2x3 map from the (projected) density at y to target frame
/// coordinates; it is distributed onto the three panel vertices.
template <class Kernel>
Eigen::MatrixXcd assemble(const TangentSpace& target, const TangentSpace& source, bool self, Kernel kernel) {
  const std::size_t nt = target.vertex_count();
  const auto& tris = source.mesh().triangles;
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(target.dof_count(), source.dof_count());
  std::vector<std::vector<std::pair<int, int>>> incident;
  if (self) {
    incident.resize(nt);
    for (std::size_t t = 0; t < tris.size(); ++t) {
      for (int k = 0; k < 3; ++k) incident[tris[t][k]].push_back({static_cast<int>(t), k});
    }
  }
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(nt); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    const Vec3& x = target.vertex(i);
    const Vec3& nx = target.normal(i);
    const Eigen::Matrix<cplx, 2, 3> Tx = target.frame(i).transpose().cast<cplx>();
    std::vector<int> sing(tris.size(), -1);
    if (self) {
      for (auto [t, k] : incident[i]) sing[t] = k;
    }
    for (std::size_t t = 0; t < tris.size(); ++t) {
      std::array<Block23, 6> J;
      for (auto& b : J) b.setZero();
      source.visit_panel(t, x, sing[t], [&](const TangentSpace::PanelPoint& p) {
        const Block23 B = p.weight * (Tx * kernel(x, nx, p) * tangent_projector(p.normal).cast<cplx>());
        const TangentSpace::Shape sh = TangentSpace::shape(p.bary);
        for (int m = 0; m < 6; ++m) J[m] += sh[m] * B;
      });
      source.distribute(t, J, [&](int j, const Block23& m) {
        A.block<2, 2>(2 * i, 2 * j) += m * source.frame(j).cast<cplx>();
      });
    }
  }
  return A;
}

Eigen::Matrix3cd magnetic_kernel(const Vec3& x, const Vec3& nx, const Vec3& y, double omega) {
  const KernelEval k = helmholtz_kernel(x, y, omega);
  const CVec3& g = k.gradient_x;
  return 2.0 * (g * nx.cast<cplx>().transpose() - dotu(nx, g) * Eigen::Matrix3cd::Identity());
}

}  // namespace

BoundaryOperatorMatrix assemble_magnetic_dipole(const SpacePtr& space, double omega) {
  return assemble_magnetic_dipole(space, space, omega);
}

BoundaryOperatorMatrix assemble_magnetic_dipole(const SpacePtr& target, const SpacePtr& source, double omega) {
  BoundaryOperatorMatrix op;
  op.tag = omega == 0.0 ? OperatorTag::magnetic_dipole_static : OperatorTag::magnetic_dipole;
  op.omega = omega;
  op.source = source;
  op.target = target;
  op.matrix = assemble(*target, *source, target == source,
                       [omega](const Vec3& x, const Vec3& nx, const TangentSpace::PanelPoint& p) {
                         return magnetic_kernel(x, nx, p.y, omega);
                       });
  return op;
}

BoundaryOperatorMatrix assemble_split_remainder(const SpacePtr& space, double tau, double omega) {
  const double k = tau * omega;
  BoundaryOperatorMatrix op;
  op.tag = OperatorTag::split_remainder;
  op.omega = omega;
  op.source = op.target = space;
  op.matrix = assemble(*space, *space, true, [k](const Vec3& x, const Vec3& nx, const TangentSpace::PanelPoint& p) {
    const Vec3 d = x - p.y;
    const double r = d.norm();
    // d/dr of (e^{ikr} - 1 - ikr) / (4 pi r)
    cplx fp;
    const double t = k * r;
    if (t < 0.1) {
      // sum_{m>=2} (ik)^2 (ikr)^{m-2} (m-1) / m!
      fp = -0.5 * k * k;
      cplx pw = 1.0;
      double fact = 2.0;
      for (int m = 3; m <= 14; ++m) {
        pw *= imag_unit * t;
        fact *= m;
        fp -= k * k * pw * (m - 1.0) / fact;
      }
      fp /= 4.0 * pi;
    } else {
      const cplx e = std::exp(imag_unit * t);
      fp = ((imag_unit * t - 1.0) * (e - 1.0) + imag_unit * t) / (4.0 * pi * r * r);
    }
    const CVec3 g = (fp / r) * d.cast<cplx>();
    return Eigen::Matrix3cd(2.0 * (g * nx.cast<cplx>().transpose() - dotu(nx, g) * Eigen::Matrix3cd::Identity()));
  });
  return op;
}

BoundaryOperatorMatrix assemble_single_layer(const SpacePtr& space, double omega) {
  BoundaryOperatorMatrix op;
  op.tag = OperatorTag::single_layer;
  op.omega = omega;
  op.source = op.target = space;
  op.matrix = assemble(*space, *space, true, [omega](const Vec3& x, const Vec3&, const TangentSpace::PanelPoint& p) {
    return Eigen::Matrix3cd(helmholtz_kernel(x, p.y, omega).value * Eigen::Matrix3cd::Identity());
  });
  return op;
}

Eigen::MatrixXcd assemble_scalar_single_layer(const TangentSpace& space, double omega) {
  const auto& tris = space.mesh().triangles;
  const std::size_t n = space.vertex_count();
  Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(n, n);
  std::vector<std::vector<std::pair<int, int>>> incident(n);
  for (std::size_t t = 0; t < tris.size(); ++t) {
    for (int k = 0; k < 3; ++k) incident[tris[t][k]].push_back({static_cast<int>(t), k});
  }
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    std::vector<int> sing(tris.size(), -1);
    for (auto [t, k] : incident[i]) sing[t] = k;
    for (std::size_t t = 0; t < tris.size(); ++t) {
      std::array<cplx, 6> J{};
      space.visit_panel(t, space.vertex(i), sing[t], [&](const TangentSpace::PanelPoint& p) {
        const cplx g = helmholtz_kernel(space.vertex(i), p.y, omega).value * p.weight;
        const TangentSpace::Shape sh = TangentSpace::shape(p.bary);
        for (int m = 0; m < 6; ++m) J[m] += sh[m] * g;
      });
      space.distribute(t, J, [&](int j, cplx m) { S(i, j) += m; });
    }
  }
  return S;
}

BoundaryOperatorMatrix assemble_electric_dipole(const SpacePtr& target, const SpacePtr& source, double omega) {
  if (!(omega > 0.0)) throw Error(ErrorKind::domain, "electric dipole operator needs omega > 0");
  BoundaryOperatorMatrix op;
  op.tag = OperatorTag::electric_dipole;
  op.omega = omega;
  op.source = source;
  op.target = target;
  const cplx pre = -1.0 / (imag_unit * omega);
  if (target != source) {
    op.matrix = assemble(*target, *source, false, [&](const Vec3& x, const Vec3& nx, const TangentSpace::PanelPoint& p) {
      const Vec3 d = x - p.y;
      const double r = d.norm();
      const KernelHessian h = helmholtz_hessian(r, omega);
      const cplx g = std::exp(imag_unit * (omega * r)) / (4.0 * pi * r);
      const Eigen::Matrix3cd T =
          (h.g1 + omega * omega * g) * Eigen::Matrix3cd::Identity() + h.g2 * (d * d.transpose()).cast<cplx>();
      return Eigen::Matrix3cd(pre * skew(nx) * T);
    });
    return op;
  }
  // curl curl S[b] = grad S[Div b] + omega^2 S[b]
  const TangentSpace& sp = *source;
  const std::size_t n = sp.vertex_count();
  const Eigen::MatrixXcd weak = assemble(sp, sp, true, [&](const Vec3& x, const Vec3& nx, const TangentSpace::PanelPoint& p) {
    const cplx g = helmholtz_kernel(x, p.y, omega).value;
    return Eigen::Matrix3cd(pre * omega * omega * g * skew(nx));
  });
  Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(2 * n, n);
  const auto& tris = sp.mesh().triangles;
  std::vector<std::vector<std::pair<int, int>>> incident(n);
  for (std::size_t t = 0; t < tris.size(); ++t) {
    for (int k = 0; k < 3; ++k) incident[tris[t][k]].push_back({static_cast<int>(t), k});
  }
  // tangential gradient of the single layer of a constant; zero on exact spheres
  std::vector<CVec3> constant_term(n, CVec3::Zero());
  if (!sp.mesh().is_sphere()) {
    const Eigen::MatrixXcd S1 = assemble_scalar_single_layer(sp, omega);
    const Eigen::VectorXcd s = S1.rowwise().sum();
    std::vector<double> wsum(n, 0.0);
    for (std::size_t t = 0; t < tris.size(); ++t) {
      const auto& tri = tris[t];
      const Vec3 a = sp.vertex(tri[0]), b = sp.vertex(tri[1]), c = sp.vertex(tri[2]);
      const Vec3 nt = (b - a).cross(c - a);
      const double A2 = nt.squaredNorm();
      CVec3 grad = CVec3::Zero();
      for (int k = 0; k < 3; ++k) {
        const Vec3 e = sp.vertex(tri[(k + 2) % 3]) - sp.vertex(tri[(k + 1) % 3]);
        grad += s[tri[k]] * nt.cross(e).cast<cplx>() / A2;
      }
      const double area = 0.5 * std::sqrt(A2);
      for (int k = 0; k < 3; ++k) {
        constant_term[tri[k]] += area * grad;
        wsum[tri[k]] += area;
      }
    }
    for (std::size_t i = 0; i < n; ++i) constant_term[i] /= wsum[i];
  }
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    const Vec3& x = sp.vertex(i);
    const Eigen::Matrix<cplx, 2, 3> TN = pre * sp.frame(i).transpose().cast<cplx>() * skew(sp.normal(i));
    std::vector<int> sing(tris.size(), -1);
    for (auto [t, k] : incident[i]) sing[t] = k;
    for (std::size_t t = 0; t < tris.size(); ++t) {
      std::array<Eigen::Vector2cd, 6> J;
      for (auto& b : J) b.setZero();
      sp.visit_panel(t, x, sing[t], [&](const TangentSpace::PanelPoint& p) {
        const Eigen::Vector2cd v = TN * helmholtz_kernel(x, p.y, omega).gradient_x * p.weight;
        const TangentSpace::Shape sh = TangentSpace::shape(p.bary);
        for (int m = 0; m < 6; ++m) J[m] += sh[m] * v;
        D.block<2, 1>(2 * i, i) -= v;
      });
      sp.distribute(t, J, [&](int j, const Eigen::Vector2cd& m) { D.block<2, 1>(2 * i, j) += m; });
    }
    D.block<2, 1>(2 * i, i) += TN * constant_term[i];
  }
  op.matrix.resize(2 * n, 3 * n);
  op.matrix << weak, D;
  return op;
}

Eigen::VectorXcd apply_electric_dipole(const BoundaryOperatorMatrix& op, const Eigen::VectorXcd& density,
                                       const std::optional<Eigen::VectorXcd>& divergence) {
  if (op.tag != OperatorTag::electric_dipole) throw Error(ErrorKind::validation, "not an electric dipole operator");
  const Eigen::Index nd = op.source->dof_count();
  if (density.size() != nd) throw Error(ErrorKind::validation, "density size mismatch");
  if (!op.self()) return op.matrix * density;
  if (!divergence) {
    throw Error(ErrorKind::validation, "electric dipole on its own surface needs surface divergence data");
  }
  if (divergence->size() != nd / 2) throw Error(ErrorKind::validation, "divergence size mismatch");
  return op.matrix.leftCols(nd) * density + op.matrix.rightCols(nd / 2) * (*divergence);
}

// ---------------------------------------------------------------------------

FieldSample eval_fields(const TangentSpace& space, const Eigen::VectorXcd& density, const Vec3& x, double omega) {
  const auto coef = space.panel_coefficients(space.from_dofs(density));
  const auto& tris = space.mesh().triangles;
  FieldSample out{CVec3::Zero(), CVec3::Zero(), false};
  CVec3 T = CVec3::Zero();
  double dmin = 1e300;
  for (std::size_t t = 0; t < tris.size(); ++t) {
    dmin = std::min(dmin, (x - space.panel_centroid(t)).norm());
    space.visit_panel(t, x, -1, [&](const TangentSpace::PanelPoint& p) {
      const TangentSpace::Shape sh = TangentSpace::shape(p.bary);
      CVec3 ay = CVec3::Zero();
      for (int m = 0; m < 6; ++m) ay += sh[m] * coef[t][m];
      ay -= p.normal.cast<cplx>() * dotu(p.normal, ay);
      ay *= p.weight;
      const Vec3 d = x - p.y;
      const double r = d.norm();
      const KernelEval k = helmholtz_kernel(x, p.y, omega);
      out.U += cross(k.gradient_x, ay);
      const KernelHessian h = helmholtz_hessian(r, omega);
      T += (h.g1 + omega * omega * k.value) * ay + h.g2 * d.cast<cplx>() * dotu(d, ay);
    });
  }
  out.V = T / (imag_unit * omega);
  out.near_surface = dmin < 2.0 * space.mesh_size();
  return out;
}

CVec3 eval_field_U(const TangentSpace& space, const Eigen::VectorXcd& density, const Vec3& x, double omega) {
  return eval_fields(space, density, x, omega).U;
}

CVec3 eval_field_V(const TangentSpace& space, const Eigen::VectorXcd& density, const Vec3& x, double omega) {
  return eval_fields(space, density, x, omega).V;
}

CVec3 bie_far_field(const TangentSpace& space, const Eigen::VectorXcd& density, const Vec3& direction,
                    double omega) {
  const Vec3 u = direction.normalized();
  const auto coef = space.panel_coefficients(space.from_dofs(density));
  CVec3 s = CVec3::Zero();
  for (std::size_t t = 0; t < coef.size(); ++t) {
    const TangentSpace::PanelPoint* p = space.panel_begin(t);
    for (std::size_t q = 0; q < space.far_count(); ++q) {
      const TangentSpace::Shape sh = TangentSpace::shape(p[q].bary);
      CVec3 ay = CVec3::Zero();
      for (int m = 0; m < 6; ++m) ay += sh[m] * coef[t][m];
      ay -= p[q].normal.cast<cplx>() * dotu(p[q].normal, ay);
      s += (p[q].weight * std::exp(-imag_unit * (omega * u.dot(p[q].y)))) * ay;
    }
  }
  return (imag_unit * omega / (4.0 * pi)) * cross(u, s);
}

cplx sphere_magnetic_dipole_eigenvalue(int n, bool gradient_type, double omega, double radius) {
  const double x = omega * radius;
  cplx lam;
  if (x < 1e-8) {
    lam = 1.0 / (2.0 * n + 1.0);
  } else {
    const BesselTable b(n, cplx(x, 0.0));
    lam = imag_unit * (b.dpsi(n) * b.xi(n) + b.psi(n) * b.dxi(n));
  }
  return gradient_type ? lam : -lam;
}

// ---------------------------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");

}  // namespace

void write_matrix_binary(const std::string& path, const Eigen::MatrixXcd& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::validation, "cannot open " + path);
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  os.write(reinterpret_cast<const char*>(dims), sizeof dims);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v[2] = {m(i, j).real(), m(i, j).imag()};
      os.write(reinterpret_cast<const char*>(v), sizeof v);
    }
  }
}

Eigen::MatrixXcd read_matrix_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::validation, "cannot open " + path);
  std::uint64_t dims[2];
  is.read(reinterpret_cast<char*>(dims), sizeof dims);
  if (!is) throw Error(ErrorKind::validation, "truncated matrix header in " + path);
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(dims[0]), static_cast<Eigen::Index>(dims[1]));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      double v[2];
      is.read(reinterpret_cast<char*>(v), sizeof v);
      if (!is) throw Error(ErrorKind::validation, "truncated matrix data in " + path);
      m(i, j) = cplx(v[0], v[1]);
    }
  }
  return m;
}

}  // namespace nearcloak
