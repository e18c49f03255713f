#include "nearcloak/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "nearcloak/quadrature.hpp"

namespace nearcloak {

double SurfaceQuadrature::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

double SurfaceMesh::max_edge_length() const {
  double h = 0.0;
  for (const auto& t : triangles) {
    for (int k = 0; k < 3; ++k) {
      h = std::max(h, (vertices[t[k]] - vertices[t[(k + 1) % 3]]).norm());
    }
  }
  return h;
}

namespace {

void build_quadrature(SurfaceMesh& mesh) {
  const TriangleRule& rule = triangle_rule(mesh.rule_degree);
  const double R = mesh.nominal_radius;
  auto& q = mesh.quad;
  q = SurfaceQuadrature{};
  q.radius = R;
  q.nodes.reserve(mesh.triangles.size() * rule.weights.size());
  q.weights.reserve(q.nodes.capacity());
  q.normals.reserve(q.nodes.capacity());
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    const Vec3 cr = (b - a).cross(c - a);
    const double area = 0.5 * cr.norm();
    if (!(area > 1e-14)) {
      std::ostringstream msg;
      msg << "degenerate triangle (" << t[0] << "," << t[1] << "," << t[2] << ") area " << area;
      throw Error(ErrorKind::mesh, msg.str());
    }
    const Vec3 nt = cr / (2.0 * area);
    for (std::size_t k = 0; k < rule.weights.size(); ++k) {
      const auto& l = rule.bary[k];
      const Vec3 p = l[0] * a + l[1] * b + l[2] * c;
      if (R > 0.0) {
        const double pn = p.norm();
        q.nodes.push_back(p * (R / pn));
        q.normals.push_back(p / pn);
        q.weights.push_back(rule.weights[k] * area * R * R * std::abs(nt.dot(p)) / (pn * pn * pn));
      } else {
        q.nodes.push_back(p);
        q.normals.push_back(nt);
        q.weights.push_back(rule.weights[k] * area);
      }
    }
  }
}

void orient_outward_about_origin(SurfaceMesh& mesh) {
  for (auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    if ((b - a).cross(c - a).dot(a + b + c) < 0.0) std::swap(t[1], t[2]);
  }
}

}  // namespace

SurfaceMesh make_sphere_mesh(double radius, int refinement, int rule_degree) {
  if (!(radius > 0.0)) throw Error(ErrorKind::validation, "make_sphere_mesh: radius must be positive");
  if (refinement < 0) throw Error(ErrorKind::validation, "make_sphere_mesh: refinement must be >= 0");
  if (refinement > max_sphere_refinement) {
    throw Error(ErrorKind::resource, "make_sphere_mesh: refinement " + std::to_string(refinement) +
                                         " exceeds the memory budget (max " +
                                         std::to_string(max_sphere_refinement) + ")");
  }
  const double g = 0.5 * (1.0 + std::sqrt(5.0));
  std::vector<Vec3> v = {{-1, g, 0}, {1, g, 0},  {-1, -g, 0}, {1, -g, 0}, {0, -1, g},  {0, 1, g},
                         {0, -1, -g}, {0, 1, -g}, {g, 0, -1},  {g, 0, 1},  {-g, 0, -1}, {-g, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> tri = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int level = 0; level < refinement; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int i, int j) {
      const auto key = std::minmax(i, j);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int idx = static_cast<int>(v.size());
      v.push_back((v[i] + v[j]).normalized());
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(tri.size() * 4);
    for (const auto& t : tri) {
      const int a = mid(t[0], t[1]), b = mid(t[1], t[2]), c = mid(t[2], t[0]);
      next.push_back({t[0], a, c});
      next.push_back({t[1], b, a});
      next.push_back({t[2], c, b});
      next.push_back({a, b, c});
    }
    tri = std::move(next);
  }
  SurfaceMesh mesh;
  mesh.vertices.reserve(v.size());
  for (const auto& p : v) mesh.vertices.push_back(radius * p);
  mesh.triangles = std::move(tri);
  mesh.nominal_radius = radius;
  mesh.rule_degree = rule_degree;
  orient_outward_about_origin(mesh);
  build_quadrature(mesh);
  return mesh;
}

SurfaceMesh make_polyhedral_mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> triangles,
                                 int rule_degree) {
  SurfaceMesh mesh;
  mesh.vertices = std::move(vertices);
  mesh.triangles = std::move(triangles);
  mesh.rule_degree = rule_degree;
  validate_mesh(mesh);
  build_quadrature(mesh);
  return mesh;
}

void validate_mesh(const SurfaceMesh& mesh) {
  const int nv = static_cast<int>(mesh.vertices.size());
  std::map<std::pair<int, int>, int> edge_count;
  for (std::size_t k = 0; k < mesh.triangles.size(); ++k) {
    const auto& t = mesh.triangles[k];
    for (int i = 0; i < 3; ++i) {
      if (t[i] < 0 || t[i] >= nv) {
        throw Error(ErrorKind::mesh, "triangle " + std::to_string(k) + " has vertex index out of range");
      }
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw Error(ErrorKind::mesh, "triangle " + std::to_string(k) + " repeats a vertex");
    }
    for (int i = 0; i < 3; ++i) ++edge_count[std::minmax(t[i], t[(i + 1) % 3])];
  }
  for (const auto& [edge, count] : edge_count) {
    if (count != 2) {
      throw Error(ErrorKind::mesh, "mesh is not closed: edge (" + std::to_string(edge.first) + "," +
                                       std::to_string(edge.second) + ") is shared by " +
                                       std::to_string(count) + " triangles");
    }
  }
}

SurfaceMesh scale_mesh(const SurfaceMesh& mesh, double rho) {
  if (!(rho > 0.0)) throw Error(ErrorKind::validation, "scale_mesh: rho must be positive");
  SurfaceMesh out = mesh;
  for (auto& p : out.vertices) p *= rho;
  for (auto& p : out.quad.nodes) p *= rho;
  for (auto& w : out.quad.weights) w *= rho * rho;
  out.quad.radius *= rho;
  out.nominal_radius *= rho;
  return out;
}

cplx integrate_scalar(const SurfaceQuadrature& quad, const std::function<cplx(const Vec3&)>& f) {
  cplx s = 0.0;
  for (std::size_t k = 0; k < quad.size(); ++k) s += quad.weights[k] * f(quad.nodes[k]);
  return s;
}

cplx integrate_scalar(const SurfaceMesh& mesh, const std::function<cplx(const Vec3&)>& f) {
  return integrate_scalar(mesh.quad, f);
}

SurfaceQuadrature make_sphere_grid(double radius, int n_theta, int n_phi) {
  if (!(radius > 0.0) || n_theta < 1 || n_phi < 1) {
    throw Error(ErrorKind::validation, "make_sphere_grid: invalid arguments");
  }
  const Rule1D gl = gauss_legendre(n_theta);
  SurfaceQuadrature q;
  q.radius = radius;
  const double dphi = 2.0 * pi / n_phi;
  for (int i = 0; i < n_theta; ++i) {
    const double ct = gl.nodes[i];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int j = 0; j < n_phi; ++j) {
      const double phi = (j + 0.5) * dphi;
      const Vec3 n(st * std::cos(phi), st * std::sin(phi), ct);
      q.normals.push_back(n);
      q.nodes.push_back(radius * n);
      q.weights.push_back(radius * radius * gl.weights[i] * dphi);
    }
  }
  return q;
}

SurfaceQuadrature make_sphere_grid_for_degree(double radius, int n_max) {
  return make_sphere_grid(radius, n_max + 2, 2 * n_max + 4);
}

void write_off(std::ostream& os, const SurfaceMesh& mesh) {
  os << "OFF\n" << mesh.vertices.size() << ' ' << mesh.triangles.size() << " 0\n";
  os.precision(17);
  for (const auto& p : mesh.vertices) os << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  for (const auto& t : mesh.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

void write_off(const std::string& path, const SurfaceMesh& mesh) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::validation, "cannot open " + path + " for writing");
  write_off(os, mesh);
}

SurfaceMesh read_off(std::istream& is) {
  // Comments start with '#'; they are stripped before tokenizing.
  std::stringstream clean;
  for (std::string line; std::getline(is, line);) {
    const auto hash = line.find('#');
    clean << line.substr(0, hash) << '\n';
  }
  std::string magic;
  clean >> magic;
  if (magic != "OFF") throw Error(ErrorKind::validation, "OFF: missing header");
  long nv = -1, nf = -1, ne = 0;
  if (!(clean >> nv >> nf >> ne) || nv < 3 || nf < 1) throw Error(ErrorKind::validation, "OFF: bad counts");
  std::vector<Vec3> v(nv);
  for (auto& p : v) {
    if (!(clean >> p.x() >> p.y() >> p.z())) throw Error(ErrorKind::validation, "OFF: truncated vertices");
  }
  std::vector<std::array<int, 3>> t(nf);
  for (auto& f : t) {
    int k = 0;
    if (!(clean >> k >> f[0] >> f[1] >> f[2])) throw Error(ErrorKind::validation, "OFF: truncated faces");
    if (k != 3) throw Error(ErrorKind::validation, "OFF: only triangular faces are supported");
  }
  return make_polyhedral_mesh(std::move(v), std::move(t));
}

SurfaceMesh read_off(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::validation, "cannot open " + path);
  return read_off(is);
}

}  // namespace nearcloak
