#pragma once

// Independent reference implementations used by the unit tests and the
// acceptance binary. Nothing here is used by the library itself.

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <vector>

#include "diffplan/autograd.hpp"
#include "diffplan/params.hpp"

namespace oracle {

using diffplan::grad::Graph;
using diffplan::grad::Parameter;
using diffplan::grad::Var;

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// Compares backward() against central differences for every entry of every
// parameter. `build` records the scalar loss on a fresh graph.
inline GradCheck check_gradients(const std::vector<Parameter*>& params, const std::function<Var(Graph&)>& build,
                                 double h = 1e-4, double floor = 1e-6) {
  for (Parameter* p : params) p->grad.fill(0.0);
  {
    Graph g;
    g.backward(build(g));
  }
  GradCheck r;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + h;
      double up, down;
      {
        Graph g;
        up = build(g).value().item();
      }
      p->value[i] = orig - h;
      {
        Graph g;
        down = build(g).value().item();
      }
      p->value[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = p->grad[i];
      const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
      r.max_rel_error = std::max(r.max_rel_error, rel);
      ++r.checked;
    }
  }
  return r;
}

// The decorrelation loss executed line by line with plain loops.
inline double decorr_scalar(const std::vector<std::vector<double>>& m, double eps = 1e-8) {
  const std::size_t B = m.size();
  const std::size_t d = m[0].size();
  std::vector<std::vector<double>> n(B, std::vector<double>(d));
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t b = 0; b < B; ++b) mean += m[b][j];
    mean /= static_cast<double>(B);
    double var = 0.0;
    for (std::size_t b = 0; b < B; ++b) var += (m[b][j] - mean) * (m[b][j] - mean);
    var /= static_cast<double>(B);
    for (std::size_t b = 0; b < B; ++b) n[b][j] = (m[b][j] - mean) / std::sqrt(eps + var);
  }
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (i == j) continue;
      double c = 0.0;
      for (std::size_t b = 0; b < B; ++b) c += n[b][i] * n[b][j];
      sum_sq += c * c;
    }
  }
  return sum_sq / static_cast<double>(d * (d - 1)) / static_cast<double>(B);
}

// Cyclic Jacobi eigenvalue iteration for a symmetric matrix (row-major n x n).
inline std::vector<double> jacobi_eigenvalues(std::vector<double> a, std::size_t n, int sweeps = 100) {
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  for (int s = 0; s < sweeps; ++s) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    }
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(at(p, q)) < 1e-300) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - sn * akq;
          at(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - sn * aqk;
          at(q, k) = sn * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = at(i, i);
  return ev;
}

// Diversity by explicit std::set intersection and union.
inline double diversity_bruteforce(const std::vector<std::set<unsigned>>& sets) {
  std::set<unsigned> uni;
  for (const auto& s : sets) uni.insert(s.begin(), s.end());
  double sum = 0.0;
  for (const auto& s : sets) {
    std::set<unsigned> inter, join;
    std::set_intersection(s.begin(), s.end(), uni.begin(), uni.end(), std::inserter(inter, inter.begin()));
    std::set_union(s.begin(), s.end(), uni.begin(), uni.end(), std::inserter(join, join.begin()));
    sum += join.empty() ? 1.0 : static_cast<double>(inter.size()) / static_cast<double>(join.size());
  }
  return 1.0 - sum / static_cast<double>(sets.size());
}

// Scalar Adam with bias correction.
struct ScalarAdam {
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double x, double g, double lr, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return x - lr * mh / (std::sqrt(vh) + eps);
  }
};

}  // namespace oracle
