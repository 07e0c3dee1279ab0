#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "phonerec/matrix.hpp"

namespace phonerec::svm {

// K(x, y) = (scale * <x, y> + coef0) ^ degree
struct KernelParams {
  int degree = 4;
  double coef0 = 1.0;
  double scale = 1.0;
};

double poly_kernel(std::span<const double> x, std::span<const double> y, const KernelParams& p);

struct SmoSettings {
  double tol = 1e-3;
  long long max_iter = 10'000'000;  // working-set optimization steps
  std::size_t cache_bytes = 256ull << 20;
};

struct BinarySvmModel {
  Matrix support_vectors;          // one row per retained training point
  std::vector<double> dual_coefs;  // alpha_i * y_i
  double bias = 0.0;
  KernelParams kernel;
  double C = 10000.0;
  bool converged = true;       // false when max_iter was hit
  double dual_objective = 0.0; // value of the dual at the returned iterate
};

// Soft-margin dual solved by sequential minimal optimization. The working
// pair is the maximal KKT violator (ties to the lowest index), so runs are
// deterministic. Stops when the violation gap drops below tol; hitting
// max_iter returns the current iterate with converged = false.
BinarySvmModel smo_train(const Matrix& X, const std::vector<int>& y, double C,
                         const KernelParams& p, const SmoSettings& settings = {});

// f(x) = sum_i dual_coefs[i] * K(sv_i, x) + bias
double decision(const BinarySvmModel& model, std::span<const double> x);
std::vector<double> decision_batch(const BinarySvmModel& model, const Matrix& X);
std::vector<double> decision_batch_serial(const BinarySvmModel& model, const Matrix& X);

// Small multi-class classifier for one taxonomy node: one-vs-one voting over
// 2..4 classes. The listed class order doubles as the tie order.
struct NodeModel {
  std::vector<std::string> classes;
  std::vector<BinarySvmModel> pairwise;  // pairs (i, j), i < j, in index order
};

// labels[i] indexes into `classes`. Every class must have at least one row.
NodeModel node_train(const Matrix& X, const std::vector<int>& labels,
                     std::vector<std::string> classes, double C, const KernelParams& p,
                     const SmoSettings& settings = {});

int node_predict_index(const NodeModel& model, std::span<const double> x);
const std::string& node_predict(const NodeModel& model, std::span<const double> x);

}  // namespace phonerec::svm
