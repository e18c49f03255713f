#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nearcloak/geometry.hpp"

namespace nearcloak {

/// G(x, y) = e^{i omega |x-y|} / (4 pi |x-y|) and its x-gradient.
struct KernelEval {
  Vec3 x;
  Vec3 y;
  double omega = 0.0;
  cplx value;
  CVec3 gradient_x;
};

/// Throws ErrorKind::singularity for |x - y| < 1e-14.
KernelEval helmholtz_kernel(const Vec3& x, const Vec3& y, double omega);

/// Coefficients of the Hessian grad_x grad_x G = g1 I + g2 (x-y)(x-y)^T.
struct KernelHessian {
  cplx g1;
  cplx g2;
};
KernelHessian helmholtz_hessian(double r, double omega);

/// Splitting of the scaled kernel tau G(tau x', tau y') into
/// G0(x', y') + i tau omega / (4 pi) + tau^2 R(x', y').
struct KernelSplit {
  cplx static_part;
  cplx constant;
  cplx remainder;  ///< tau^2 R
  cplx total() const { return static_part + constant + remainder; }
};
KernelSplit kernel_split(const Vec3& xp, const Vec3& yp, double tau, double omega);

/// Quadrature controls for weakly singular and near-singular panels.
struct BieOptions {
  int far_degree = 5;          ///< triangle rule for well-separated panels
  int duffy_order = 8;         ///< Gauss points per direction on incident panels
  double near_factor = 2.5;    ///< subdivide while distance < near_factor * diameter
  int max_subdivision = 4;
  /// Enrich the linear interpolant with edge bubbles fitted to the vertex
  /// one-rings (locally quadratic densities); false gives plain P1.
  bool quadratic = true;
};

/// Tangential densities determined by their vertex values on a closed mesh.
/// Each vertex carries two complex coordinates in a local tangent frame. On a
/// panel the density is the linear interpolant plus three edge bubbles whose
/// amplitudes are least-squares fitted to the surrounding vertices, projected
/// onto the tangent plane at every quadrature point.
class TangentSpace {
 public:
  using Frame = Eigen::Matrix<double, 3, 2>;

  explicit TangentSpace(SurfaceMesh mesh, const BieOptions& options = {});

  const SurfaceMesh& mesh() const { return mesh_; }
  const BieOptions& options() const { return options_; }
  std::size_t vertex_count() const { return mesh_.vertices.size(); }
  Eigen::Index dof_count() const { return 2 * static_cast<Eigen::Index>(vertex_count()); }
  const Vec3& vertex(std::size_t i) const { return mesh_.vertices[i]; }
  const Vec3& normal(std::size_t i) const { return normals_[i]; }
  const Frame& frame(std::size_t i) const { return frames_[i]; }
  /// Lumped (one third of adjacent panel areas) vertex weight.
  double vertex_area(std::size_t i) const { return areas_[i]; }
  double mesh_size() const { return h_; }

  Eigen::VectorXcd to_dofs(const std::vector<CVec3>& vertex_values) const;
  std::vector<CVec3> from_dofs(const Eigen::VectorXcd& dofs) const;
  /// Samples f(vertex, normal) and projects onto the tangent frames.
  Eigen::VectorXcd sample(const std::function<CVec3(const Vec3&, const Vec3&)>& f) const;
  /// Interpolated tangential density on mesh().quad nodes (for spectral analysis).
  TangentialTrace trace_at_quadrature(const Eigen::VectorXcd& dofs) const;

  /// Discrete L2 norm with lumped vertex weights.
  double l2_norm(const Eigen::VectorXcd& dofs) const;
  /// Diagonal of the lumped mass matrix per dof.
  Eigen::VectorXd dof_weights() const;

  /// Shape functions on a panel: barycentrics then bubbles l0 l1, l1 l2, l2 l0.
  using Shape = std::array<double, 6>;
  static Shape shape(const std::array<double, 3>& bary);
  /// Vertices whose values determine the density on panel t (own corners first).
  const std::vector<int>& stencil(std::size_t t) const { return stencils_[t]; }
  /// Bubble amplitudes on panel t are recon(t) times the stencil values.
  const Eigen::Matrix<double, 3, Eigen::Dynamic>& recon(std::size_t t) const { return recon_[t]; }
  /// Per-panel shape coefficients of a vertex field (for repeated evaluation).
  template <class T>
  std::vector<std::array<T, 6>> panel_coefficients(const std::vector<T>& vertex_values) const;
  /// Distributes per-shape moments J[0..5] of panel t onto stencil vertices.
  template <class Mat, class F>
  void distribute(std::size_t t, const std::array<Mat, 6>& J, F&& add) const;

  /// Quadrature point on a panel, with barycentric coordinates in triangle order.
  struct PanelPoint {
    Vec3 y;
    Vec3 normal;
    double weight;
    std::array<double, 3> bary;
  };
  /// Cached far-field rule points of triangle t.
  const PanelPoint* panel_begin(std::size_t t) const { return far_points_.data() + t * far_count_; }
  std::size_t far_count() const { return far_count_; }
  const Vec3& panel_centroid(std::size_t t) const { return centroids_[t]; }
  double panel_diameter(std::size_t t) const { return diameters_[t]; }

  /// Maps barycentric coordinates of triangle t to a surface point; weight is
  /// the area element times w.
  PanelPoint map_point(std::size_t t, const std::array<double, 3>& bary, double w) const;

  /// Visits quadrature points of triangle t suitable for a target at x
  /// (adaptive subdivision near x). If singular_vertex >= 0 the local vertex
  /// with that index coincides with x and a Duffy rule is used.
  void visit_panel(std::size_t t, const Vec3& x, int singular_vertex,
                   const std::function<void(const PanelPoint&)>& visit) const;

 private:
  SurfaceMesh mesh_;
  BieOptions options_;
  std::vector<Vec3> normals_;
  std::vector<Frame> frames_;
  std::vector<double> areas_;
  std::vector<PanelPoint> far_points_;
  std::size_t far_count_ = 0;
  std::vector<Vec3> centroids_;
  std::vector<double> diameters_;
  std::vector<Vec3> face_normals_;
  std::vector<double> flat_areas_;
  std::vector<std::vector<int>> stencils_;
  std::vector<Eigen::Matrix<double, 3, Eigen::Dynamic>> recon_;
  double h_ = 0.0;

  void build_reconstruction();
};

template <class T>
std::vector<std::array<T, 6>> TangentSpace::panel_coefficients(const std::vector<T>& v) const {
  std::vector<std::array<T, 6>> c(mesh_.triangles.size());
  for (std::size_t t = 0; t < c.size(); ++t) {
    const auto& s = stencils_[t];
    for (int k = 0; k < 3; ++k) c[t][k] = v[s[k]];
    for (int e = 0; e < 3; ++e) {
      T acc = v[s[0]] * recon_[t](e, 0);
      for (std::size_t j = 1; j < s.size(); ++j) acc += v[s[j]] * recon_[t](e, j);
      c[t][3 + e] = acc;
    }
  }
  return c;
}

template <class Mat, class F>
void TangentSpace::distribute(std::size_t t, const std::array<Mat, 6>& J, F&& add) const {
  const auto& s = stencils_[t];
  for (std::size_t j = 0; j < s.size(); ++j) {
    Mat m = J[3] * recon_[t](0, j) + J[4] * recon_[t](1, j) + J[5] * recon_[t](2, j);
    if (j < 3) m += J[j];
    add(s[j], m);
  }
}

using SpacePtr = std::shared_ptr<const TangentSpace>;
SpacePtr make_space(SurfaceMesh mesh, const BieOptions& options = {});

enum class OperatorTag { magnetic_dipole, magnetic_dipole_static, split_remainder, single_layer, electric_dipole };
const char* to_string(OperatorTag tag);

/// Dense matrix acting on vertex tangent-frame coordinates (2 per vertex).
/// For a self electric-dipole operator the columns are [density dofs | vertex
/// surface-divergence values].
struct BoundaryOperatorMatrix {
  OperatorTag tag = OperatorTag::magnetic_dipole;
  double omega = 0.0;
  SpacePtr source;
  SpacePtr target;
  Eigen::MatrixXcd matrix;

  bool self() const { return source == target; }
};

/// (M a)(x) = 2 int nu(x) ^ [curl_x (a(y) G(x, y))] ds_y on source, evaluated at
/// the target vertices. omega = 0 gives the static operator.
BoundaryOperatorMatrix assemble_magnetic_dipole(const SpacePtr& space, double omega);
BoundaryOperatorMatrix assemble_magnetic_dipole(const SpacePtr& target, const SpacePtr& source, double omega);

/// Remainder of the scaled operator: M on the surface scaled by tau, acting on
/// a(tau .), equals M0 + R on the reference surface. R has the smooth kernel
/// grad (G_tau - G0) with G_tau(x', y') = tau G(tau x', tau y').
BoundaryOperatorMatrix assemble_split_remainder(const SpacePtr& space, double tau, double omega);

/// Tangential part of the vector single layer int G a ds.
BoundaryOperatorMatrix assemble_single_layer(const SpacePtr& space, double omega);
/// Scalar single layer on vertex values (P1).
Eigen::MatrixXcd assemble_scalar_single_layer(const TangentSpace& space, double omega);

/// (E b)(x) = -(1/(i omega)) nu(x) ^ curl curl int b(y) G(x, y) ds_y. On the
/// source surface itself the hypersingular part is integrated by parts and
/// the operator acts on (b, Div b).
BoundaryOperatorMatrix assemble_electric_dipole(const SpacePtr& target, const SpacePtr& source, double omega);
/// Applies an electric-dipole matrix. The self case requires divergence data.
Eigen::VectorXcd apply_electric_dipole(const BoundaryOperatorMatrix& op, const Eigen::VectorXcd& density,
                                       const std::optional<Eigen::VectorXcd>& divergence = std::nullopt);

/// U = curl int a G ds and V = (1/(i omega)) curl U at an off-surface point.
struct FieldSample {
  CVec3 U;
  CVec3 V;
  bool near_surface = false;  ///< closer than two mesh sizes: reduced accuracy
};
FieldSample eval_fields(const TangentSpace& space, const Eigen::VectorXcd& density, const Vec3& x, double omega);
CVec3 eval_field_U(const TangentSpace& space, const Eigen::VectorXcd& density, const Vec3& x, double omega);
CVec3 eval_field_V(const TangentSpace& space, const Eigen::VectorXcd& density, const Vec3& x, double omega);

/// U ~ e^{i omega r}/r * far_field(direction).
CVec3 bie_far_field(const TangentSpace& space, const Eigen::VectorXcd& density, const Vec3& direction,
                    double omega);

/// Exact eigenvalue of M on the sphere of radius R for tangential harmonics of
/// degree n: gradient-type densities get i(psi' xi + psi xi')(omega R), rotated
/// ones the negative.
cplx sphere_magnetic_dipole_eigenvalue(int n, bool gradient_type, double omega, double radius);

/// Little-endian dump: uint64 rows, uint64 cols, row-major (re, im) doubles.
void write_matrix_binary(const std::string& path, const Eigen::MatrixXcd& m);
Eigen::MatrixXcd read_matrix_binary(const std::string& path);

}  // namespace nearcloak
