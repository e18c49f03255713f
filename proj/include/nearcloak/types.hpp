#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace nearcloak {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using Mat3 = Eigen::Matrix3d;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx imag_unit{0.0, 1.0};

enum class ErrorKind {
  validation,
  domain,
  interface,
  mesh,
  singularity,
  numeric,
  resource,
  conditioning,
  resonance,
};

/// Library-wide exception; the kind selects the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind);

/// 0 success, 1 validation, 2 numeric failure, 3 resonance.
int exit_code(ErrorKind kind);

inline CVec3 to_complex(const Vec3& v) { return v.cast<cplx>(); }

/// Plain (bilinear) cross products; Eigen's cross() conjugates complex results.
inline CVec3 cross(const CVec3& a, const CVec3& b) {
  return CVec3(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]);
}
inline CVec3 cross(const Vec3& a, const CVec3& b) { return cross(to_complex(a), b); }
inline CVec3 cross(const CVec3& a, const Vec3& b) { return cross(a, to_complex(b)); }

/// Bilinear dot product (no conjugation).
inline cplx dotu(const CVec3& a, const CVec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline cplx dotu(const Vec3& a, const CVec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

}  // namespace nearcloak
