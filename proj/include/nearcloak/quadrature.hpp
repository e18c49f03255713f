#pragma once

#include <array>
#include <vector>

namespace nearcloak {

/// Nodes and weights on [a, b].
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

Rule1D gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Rule on the reference triangle in barycentric form; weights sum to 1.
struct TriangleRule {
  std::vector<std::array<double, 3>> bary;
  std::vector<double> weights;
  int degree = 0;
};

/// Symmetric rules of polynomial degree 1, 2, 4 or 5 (1, 3, 6, 7 points).
const TriangleRule& triangle_rule(int degree);

/// Duffy-collapsed tensor Gauss rule with the singular point at barycentric vertex 0.
/// Weights include the collapse Jacobian and sum to 1.
TriangleRule duffy_rule(int order);

}  // namespace nearcloak
