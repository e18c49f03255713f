#include "nearcloak/quadrature.hpp"

#include <cmath>
#include <utility>

#include "nearcloak/types.hpp"

namespace nearcloak {

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre_with_derivative(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  if (n == 0) return {1.0, 0.0};
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace

Rule1D gauss_legendre(int n, double a, double b) {
  if (n < 1) throw Error(ErrorKind::validation, "gauss_legendre: n must be >= 1");
  Rule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre_with_derivative(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre_with_derivative(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = mid - half * x;
    rule.nodes[n - 1 - i] = mid + half * x;
    rule.weights[i] = half * w;
    rule.weights[n - 1 - i] = half * w;
  }
  return rule;
}

namespace {

TriangleRule make_symmetric_rules(int degree) {
  TriangleRule r;
  r.degree = degree;
  auto add_s3 = [&](double w) {
    r.bary.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3});
    r.weights.push_back(w);
  };
  auto add_s21 = [&](double a, double w) {
    const double b = 1.0 - 2.0 * a;
    r.bary.push_back({b, a, a});
    r.bary.push_back({a, b, a});
    r.bary.push_back({a, a, b});
    for (int k = 0; k < 3; ++k) r.weights.push_back(w);
  };
  switch (degree) {
    case 1:
      add_s3(1.0);
      break;
    case 2:
      add_s21(1.0 / 6, 1.0 / 3);
      break;
    case 4:
      add_s21(0.445948490915965, 0.223381589678011);
      add_s21(0.091576213509771, 0.109951743655322);
      break;
    case 5: {
      const double s = std::sqrt(15.0);
      add_s3(9.0 / 40);
      add_s21((6.0 - s) / 21, (155.0 - s) / 1200);
      add_s21((6.0 + s) / 21, (155.0 + s) / 1200);
      break;
    }
    default:
      throw Error(ErrorKind::validation, "triangle_rule: supported degrees are 1, 2, 4, 5");
  }
  return r;
}

}  // namespace

const TriangleRule& triangle_rule(int degree) {
  static const TriangleRule r1 = make_symmetric_rules(1);
  static const TriangleRule r2 = make_symmetric_rules(2);
  static const TriangleRule r4 = make_symmetric_rules(4);
  static const TriangleRule r5 = make_symmetric_rules(5);
  switch (degree) {
    case 1: return r1;
    case 2: return r2;
    case 4: return r4;
    case 5: return r5;
    default: throw Error(ErrorKind::validation, "triangle_rule: supported degrees are 1, 2, 4, 5");
  }
}

TriangleRule duffy_rule(int order) {
  const Rule1D g = gauss_legendre(order, 0.0, 1.0);
  TriangleRule r;
  r.degree = 2 * order - 1;
  // p = v0 + s[(1-t)(v1-v0) + t(v2-v0)], area element 2|T| s ds dt.
  for (int i = 0; i < order; ++i) {
    for (int j = 0; j < order; ++j) {
      const double s = g.nodes[i], t = g.nodes[j];
      r.bary.push_back({1.0 - s, s * (1.0 - t), s * t});
      r.weights.push_back(2.0 * s * g.weights[i] * g.weights[j]);
    }
  }
  return r;
}

}  // namespace nearcloak
