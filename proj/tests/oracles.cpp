#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "phonerec/rng.hpp"

namespace oracles {

using phonerec::Matrix;
using phonerec::Rng;

std::vector<double> naive_dft_magnitude(std::span<const double> samples, int fft_size) {
  const std::size_t n = static_cast<std::size_t>(fft_size);
  std::vector<double> mags(n / 2, 0.0);
  for (std::size_t k = 0; k < n / 2; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < samples.size(); ++t) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) *
                           static_cast<double>(t) / static_cast<double>(n);
      re += samples[t] * std::cos(angle);
      im += samples[t] * std::sin(angle);
    }
    mags[k] = std::sqrt(re * re + im * im);
  }
  return mags;
}

namespace {

long long edit_recurse(const std::vector<std::string>& ref, const std::vector<std::string>& hyp,
                       std::size_t i, std::size_t j) {
  if (i == ref.size()) return static_cast<long long>(hyp.size() - j);
  if (j == hyp.size()) return static_cast<long long>(ref.size() - i);
  long long best = edit_recurse(ref, hyp, i + 1, j + 1) + (ref[i] == hyp[j] ? 0 : 1);
  best = std::min(best, edit_recurse(ref, hyp, i, j + 1) + 1);
  best = std::min(best, edit_recurse(ref, hyp, i + 1, j) + 1);
  return best;
}

}  // namespace

long long exhaustive_edit_distance(const std::vector<std::string>& ref,
                                   const std::vector<std::string>& hyp) {
  return edit_recurse(ref, hyp, 0, 0);
}

std::vector<double> jacobi_eigenvalues(Matrix m) {
  const std::size_t n = m.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
    }
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(m(p, q)) < 1e-300) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = m(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

namespace {

Matrix gram(const SmoInstance& inst) {
  const std::size_t n = inst.X.rows();
  Matrix q(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      q(i, j) = static_cast<double>(inst.y[i]) * static_cast<double>(inst.y[j]) *
                phonerec::svm::poly_kernel({inst.X.row(i), inst.X.cols()},
                                           {inst.X.row(j), inst.X.cols()}, inst.kernel);
    }
  }
  return q;
}

// Solves A x = b by Gaussian elimination; false when near-singular.
bool solve_linear(Matrix a, std::vector<double> b, std::vector<double>& x) {
  const std::size_t n = a.rows();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    }
    if (std::abs(a(pivot, col)) < 1e-10) return false;
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(pivot, c));
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      b[r] -= f * b[col];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t r = n; r-- > 0;) {
    double v = b[r];
    for (std::size_t c = r + 1; c < n; ++c) v -= a(r, c) * x[c];
    x[r] = v / a(r, r);
  }
  return true;
}

// Projection onto {0 <= a <= C, y.a = 0} by bisection on the multiplier.
std::vector<double> project_feasible(const std::vector<double>& v, const std::vector<int>& y,
                                     double C) {
  const auto point = [&](double lambda) {
    std::vector<double> a(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      a[i] = std::clamp(v[i] - lambda * static_cast<double>(y[i]), 0.0, C);
    }
    return a;
  };
  const auto residual = [&](double lambda) {
    const auto a = point(lambda);
    double r = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) r += static_cast<double>(y[i]) * a[i];
    return r;
  };
  double bound = C + 1.0;
  for (double x : v) bound = std::max(bound, std::abs(x) + C + 1.0);
  double lo = -bound, hi = bound;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (residual(mid) > 0.0) lo = mid;
    else hi = mid;
  }
  return point(0.5 * (lo + hi));
}

}  // namespace

double dual_objective_at(const SmoInstance& inst, const std::vector<double>& alpha) {
  const Matrix q = gram(inst);
  const std::size_t n = alpha.size();
  double linear = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    linear += alpha[i];
    for (std::size_t j = 0; j < n; ++j) quad += alpha[i] * alpha[j] * q(i, j);
  }
  return linear - 0.5 * quad;
}

double dual_oracle_objective(const SmoInstance& inst) {
  const std::size_t n = inst.X.rows();
  const Matrix q = gram(inst);
  const double C = inst.C;

  double best = 0.0;  // alpha = 0 is always feasible with objective 0
  std::vector<double> best_alpha(n, 0.0);

  const auto consider = [&](std::vector<double> a) {
    // clamp tiny bound violations, then re-check the equality constraint
    double balance = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (a[i] < -1e-8 || a[i] > C + 1e-8) return;
      a[i] = std::clamp(a[i], 0.0, C);
      balance += static_cast<double>(inst.y[i]) * a[i];
    }
    if (std::abs(balance) > 1e-6 * std::max(1.0, C)) return;
    const double w = dual_objective_at(inst, a);
    if (w > best) {
      best = w;
      best_alpha = std::move(a);
    }
  };

  // every pattern of {at-zero, at-C, free} over the points
  std::size_t patterns = 1;
  for (std::size_t i = 0; i < n; ++i) patterns *= 3;
  for (std::size_t code = 0; code < patterns; ++code) {
    std::vector<int> state(n);  // 0 zero, 1 at C, 2 free
    std::size_t rem = code;
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < n; ++i) {
      state[i] = static_cast<int>(rem % 3);
      rem /= 3;
      if (state[i] == 2) free.push_back(i);
    }
    std::vector<double> alpha(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (state[i] == 1) alpha[i] = C;
    }
    if (free.empty()) {
      consider(alpha);
      continue;
    }
    // KKT stationarity on the free block plus the equality constraint
    const std::size_t f = free.size();
    Matrix a(f + 1, f + 1);
    std::vector<double> b(f + 1, 0.0);
    for (std::size_t r = 0; r < f; ++r) {
      double rhs = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (state[i] == 1) rhs -= q(free[r], i) * C;
      }
      for (std::size_t c = 0; c < f; ++c) a(r, c) = q(free[r], free[c]);
      a(r, f) = static_cast<double>(inst.y[free[r]]);
      b[r] = rhs;
    }
    double rhs_eq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (state[i] == 1) rhs_eq -= static_cast<double>(inst.y[i]) * C;
    }
    for (std::size_t c = 0; c < f; ++c) a(f, c) = static_cast<double>(inst.y[free[c]]);
    a(f, f) = 0.0;
    b[f] = rhs_eq;
    std::vector<double> solved;
    if (!solve_linear(a, b, solved)) continue;
    for (std::size_t r = 0; r < f; ++r) alpha[free[r]] = solved[r];
    consider(alpha);
  }

  // projected gradient ascent polish, from zero and from the enumeration best
  double trace = 1.0;
  for (std::size_t i = 0; i < n; ++i) trace += q(i, i);
  const double step = 1.0 / trace;
  for (std::vector<double> a : {std::vector<double>(n, 0.0), best_alpha}) {
    for (int it = 0; it < 150000; ++it) {
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) {
        double g = 1.0;
        for (std::size_t j = 0; j < n; ++j) g -= q(i, j) * a[j];
        v[i] = a[i] + step * g;
      }
      a = project_feasible(v, inst.y, C);
    }
    consider(a);
  }
  return best;
}

std::vector<SmoInstance> smo_oracle_instances() {
  std::vector<SmoInstance> instances;

  {
    SmoInstance inst;
    inst.name = "two_point_linear";
    inst.X = Matrix(2, 2);
    inst.X(0, 0) = 0.0;
    inst.X(0, 1) = 1.0;
    inst.X(1, 0) = 0.0;
    inst.X(1, 1) = -1.0;
    inst.y = {1, -1};
    inst.C = 10000.0;
    inst.kernel = {1, 0.0, 1.0};
    instances.push_back(std::move(inst));
  }
  {
    SmoInstance inst;
    inst.name = "xor_degree2";
    inst.X = Matrix(4, 2);
    const double pts[4][2] = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
    for (std::size_t r = 0; r < 4; ++r) {
      inst.X(r, 0) = pts[r][0];
      inst.X(r, 1) = pts[r][1];
    }
    inst.y = {1, 1, -1, -1};
    inst.C = 10000.0;
    inst.kernel = {2, 1.0, 1.0};
    instances.push_back(std::move(inst));
  }

  // randomized instances, deterministic by construction
  struct Shape {
    const char* name;
    std::size_t n, dim;
    double C;
    phonerec::svm::KernelParams kernel;
    std::uint64_t seed;
  };
  const Shape shapes[] = {
      {"poly4_n4", 4, 2, 10.0, {4, 1.0, 0.25}, 11},
      {"poly4_n5", 5, 3, 10.0, {4, 1.0, 0.25}, 12},
      {"poly4_n6", 6, 2, 10.0, {4, 1.0, 0.25}, 13},
      {"linear_n4", 4, 4, 1.0, {1, 0.0, 1.0}, 14},
      {"linear_n5", 5, 5, 100.0, {1, 0.0, 1.0}, 15},
      {"linear_n6", 6, 6, 1.0, {1, 1.0, 1.0}, 16},
      {"poly2_n6_a", 6, 3, 100.0, {2, 1.0, 0.5}, 17},
      {"poly2_n6_b", 6, 2, 100.0, {2, 1.0, 0.5}, 18},
      {"poly3_n5", 5, 2, 10.0, {3, 1.0, 0.5}, 19},
      {"poly4_n6_tight", 6, 3, 1.0, {4, 1.0, 0.25}, 20},
  };
  for (const auto& shape : shapes) {
    SmoInstance inst;
    inst.name = shape.name;
    inst.X = Matrix(shape.n, shape.dim);
    inst.C = shape.C;
    inst.kernel = shape.kernel;
    Rng rng(shape.seed);
    for (std::size_t r = 0; r < shape.n; ++r) {
      for (std::size_t c = 0; c < shape.dim; ++c) inst.X(r, c) = rng.uniform(-2.0, 2.0);
      inst.y.push_back(r % 2 == 0 ? 1 : -1);
    }
    instances.push_back(std::move(inst));
  }
  return instances;
}

}  // namespace oracles
