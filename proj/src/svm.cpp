#include "phonerec/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <unordered_map>

#include "phonerec/error.hpp"
#include "phonerec/parallel.hpp"

namespace phonerec::svm {

namespace {

// LRU cache of kernel matrix rows. Values are a pure function of the data, so
// caching never changes results, only the amount of recomputation.
class KernelCache {
 public:
  KernelCache(const Matrix& X, const KernelParams& p, std::size_t budget_bytes)
      : X_(X), p_(p) {
    const std::size_t row_bytes = X.rows() * sizeof(double);
    max_rows_ = row_bytes > 0 ? std::max<std::size_t>(2, budget_bytes / row_bytes) : 2;
  }

  const std::vector<double>& row(std::size_t i) {
    auto it = index_.find(i);
    if (it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->second;
    }
    std::vector<double> values(X_.rows());
    const std::span<const double> xi{X_.row(i), X_.cols()};
    for (std::size_t t = 0; t < X_.rows(); ++t) {
      values[t] = poly_kernel(xi, {X_.row(t), X_.cols()}, p_);
    }
    lru_.emplace_front(i, std::move(values));
    index_[i] = lru_.begin();
    while (lru_.size() > max_rows_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
    }
    return lru_.begin()->second;
  }

 private:
  const Matrix& X_;
  KernelParams p_;
  std::size_t max_rows_;
  std::list<std::pair<std::size_t, std::vector<double>>> lru_;
  std::unordered_map<std::size_t, decltype(lru_)::iterator> index_;
};

constexpr double kTau = 1e-12;  // floor for non-positive curvature

}  // namespace

double poly_kernel(std::span<const double> x, std::span<const double> y, const KernelParams& p) {
  if (x.size() != y.size()) {
    throw DataError("kernel dimension mismatch: " + std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()));
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
  const double base = p.scale * dot + p.coef0;
  double r = 1.0;
  for (int d = 0; d < p.degree; ++d) r *= base;
  return r;
}

BinarySvmModel smo_train(const Matrix& X, const std::vector<int>& y, double C,
                         const KernelParams& p, const SmoSettings& settings) {
  const std::size_t n = X.rows();
  if (n < 2) throw DataError("smo_train needs at least two points");
  if (y.size() != n) throw DataError("label count does not match row count");
  bool has_pos = false, has_neg = false;
  for (int label : y) {
    if (label == 1) has_pos = true;
    else if (label == -1) has_neg = true;
    else throw DataError("labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) throw DataError("smo_train requires both classes");
  if (!(C > 0.0)) throw DataError("C must be positive");
  if (p.degree < 1) throw DataError("kernel degree must be >= 1");

  KernelCache cache(X, p, settings.cache_bytes);
  std::vector<double> diag(n);
  for (std::size_t t = 0; t < n; ++t) {
    diag[t] = poly_kernel({X.row(t), X.cols()}, {X.row(t), X.cols()}, p);
  }

  // Minimize f(a) = 1/2 a'Qa - e'a with Q_ij = y_i y_j K_ij,
  // subject to y'a = 0, 0 <= a <= C. G is the gradient of f.
  std::vector<double> alpha(n, 0.0);
  std::vector<double> G(n, -1.0);
  const auto yd = [&](std::size_t t) { return static_cast<double>(y[t]); };

  bool converged = false;
  long long iter = 0;
  while (iter < settings.max_iter) {
    // maximal violating pair
    std::ptrdiff_t i = -1, j = -1;
    double up_max = -std::numeric_limits<double>::infinity();
    double low_min = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -yd(t) * G[t];
      const bool in_up = (y[t] == 1 && alpha[t] < C) || (y[t] == -1 && alpha[t] > 0.0);
      const bool in_low = (y[t] == 1 && alpha[t] > 0.0) || (y[t] == -1 && alpha[t] < C);
      if (in_up && v > up_max) {
        up_max = v;
        i = static_cast<std::ptrdiff_t>(t);
      }
      if (in_low && v < low_min) {
        low_min = v;
        j = static_cast<std::ptrdiff_t>(t);
      }
    }
    if (i < 0 || j < 0 || up_max - low_min <= settings.tol) {
      converged = true;
      break;
    }
    ++iter;

    const std::size_t ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
    const std::vector<double>& Ki = cache.row(ui);
    const double Kij = Ki[uj];
    double quad = diag[ui] + diag[uj] - 2.0 * Kij;
    if (quad <= 0.0) quad = kTau;

    const double old_ai = alpha[ui], old_aj = alpha[uj];
    if (y[ui] != y[uj]) {
      const double delta = (-G[ui] - G[uj]) / quad;
      const double diff = alpha[ui] - alpha[uj];
      alpha[ui] += delta;
      alpha[uj] += delta;
      if (diff > 0.0) {
        if (alpha[uj] < 0.0) {
          alpha[uj] = 0.0;
          alpha[ui] = diff;
        }
      } else {
        if (alpha[ui] < 0.0) {
          alpha[ui] = 0.0;
          alpha[uj] = -diff;
        }
      }
      if (diff > 0.0) {
        if (alpha[ui] > C) {
          alpha[ui] = C;
          alpha[uj] = C - diff;
        }
      } else {
        if (alpha[uj] > C) {
          alpha[uj] = C;
          alpha[ui] = C + diff;
        }
      }
    } else {
      const double delta = (G[ui] - G[uj]) / quad;
      const double sum = alpha[ui] + alpha[uj];
      alpha[ui] -= delta;
      alpha[uj] += delta;
      if (sum > C) {
        if (alpha[ui] > C) {
          alpha[ui] = C;
          alpha[uj] = sum - C;
        }
      } else {
        if (alpha[uj] < 0.0) {
          alpha[uj] = 0.0;
          alpha[ui] = sum;
        }
      }
      if (sum > C) {
        if (alpha[uj] > C) {
          alpha[uj] = C;
          alpha[ui] = sum - C;
        }
      } else {
        if (alpha[ui] < 0.0) {
          alpha[ui] = 0.0;
          alpha[uj] = sum;
        }
      }
    }

    const double dai = alpha[ui] - old_ai;
    const double daj = alpha[uj] - old_aj;
    if (dai == 0.0 && daj == 0.0) {
      converged = true;  // box corner: no feasible progress on this pair
      break;
    }
    const std::vector<double>& Ki2 = cache.row(ui);
    const std::vector<double>& Kj = cache.row(uj);
    for (std::size_t t = 0; t < n; ++t) {
      G[t] += yd(t) * (yd(ui) * Ki2[t] * dai + yd(uj) * Kj[t] * daj);
    }
  }
  if (!converged) {
    warn("smo_train stopped after " + std::to_string(settings.max_iter) +
         " iterations without reaching tol");
  }

  // bias: mean of -yG over free vectors, else the midpoint of the KKT bounds
  double upper = std::numeric_limits<double>::infinity();
  double lower = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = yd(t) * G[t];
    if (alpha[t] >= C) {
      if (y[t] == -1) upper = std::min(upper, yg);
      else lower = std::max(lower, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] == 1) upper = std::min(upper, yg);
      else lower = std::max(lower, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count)
                                    : (upper + lower) / 2.0;

  BinarySvmModel model;
  model.kernel = p;
  model.C = C;
  model.bias = -rho;
  model.converged = converged;
  double objective = 0.0;
  for (std::size_t t = 0; t < n; ++t) objective += alpha[t] * (1.0 - G[t]);
  model.dual_objective = 0.5 * objective;

  std::size_t n_sv = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) ++n_sv;
  }
  model.support_vectors = Matrix(n_sv, X.cols());
  model.dual_coefs.reserve(n_sv);
  std::size_t row = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] <= 0.0) continue;
    std::copy(X.row(t), X.row(t) + X.cols(), model.support_vectors.row(row));
    model.dual_coefs.push_back(alpha[t] * yd(t));
    ++row;
  }
  return model;
}

double decision(const BinarySvmModel& model, std::span<const double> x) {
  double f = model.bias;
  for (std::size_t k = 0; k < model.support_vectors.rows(); ++k) {
    f += model.dual_coefs[k] *
         poly_kernel({model.support_vectors.row(k), model.support_vectors.cols()}, x,
                     model.kernel);
  }
  return f;
}

namespace {

template <bool Parallel>
std::vector<double> decision_batch_impl(const BinarySvmModel& model, const Matrix& X) {
  std::vector<double> out(X.rows());
  auto eval = [&](std::size_t r) { out[r] = decision(model, {X.row(r), X.cols()}); };
  if constexpr (Parallel) {
    parallel_for(X.rows(), eval);
  } else {
    for (std::size_t r = 0; r < X.rows(); ++r) eval(r);
  }
  return out;
}

}  // namespace

std::vector<double> decision_batch(const BinarySvmModel& model, const Matrix& X) {
  return decision_batch_impl<true>(model, X);
}

std::vector<double> decision_batch_serial(const BinarySvmModel& model, const Matrix& X) {
  return decision_batch_impl<false>(model, X);
}

NodeModel node_train(const Matrix& X, const std::vector<int>& labels,
                     std::vector<std::string> classes, double C, const KernelParams& p,
                     const SmoSettings& settings) {
  const int k = static_cast<int>(classes.size());
  if (k < 2 || k > 4) {
    throw DataError("node classifier supports 2-4 classes, got " + std::to_string(k));
  }
  if (labels.size() != X.rows()) throw DataError("label count does not match row count");
  std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
  for (int label : labels) {
    if (label < 0 || label >= k) throw DataError("class index out of range");
    count[static_cast<std::size_t>(label)]++;
  }
  for (int c = 0; c < k; ++c) {
    if (count[static_cast<std::size_t>(c)] == 0) {
      throw DataError("class '" + classes[static_cast<std::size_t>(c)] + "' has no samples");
    }
  }

  NodeModel model;
  model.classes = std::move(classes);
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      Matrix pair_x(0, X.cols());
      std::vector<int> pair_y;
      for (std::size_t r = 0; r < X.rows(); ++r) {
        if (labels[r] == a) {
          pair_x.append_row(X.row(r));
          pair_y.push_back(1);
        } else if (labels[r] == b) {
          pair_x.append_row(X.row(r));
          pair_y.push_back(-1);
        }
      }
      model.pairwise.push_back(smo_train(pair_x, pair_y, C, p, settings));
    }
  }
  return model;
}

int node_predict_index(const NodeModel& model, std::span<const double> x) {
  const int k = static_cast<int>(model.classes.size());
  std::vector<int> votes(static_cast<std::size_t>(k), 0);
  std::size_t pair = 0;
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b, ++pair) {
      // the first class of the pair sits on the positive side
      if (decision(model.pairwise[pair], x) >= 0.0) votes[static_cast<std::size_t>(a)]++;
      else votes[static_cast<std::size_t>(b)]++;
    }
  }
  int best = 0;
  for (int c = 1; c < k; ++c) {
    if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) best = c;
  }
  return best;
}

const std::string& node_predict(const NodeModel& model, std::span<const double> x) {
  return model.classes[static_cast<std::size_t>(node_predict_index(model, x))];
}

}  // namespace phonerec::svm
