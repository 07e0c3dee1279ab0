#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "phonerec/error.hpp"
#include "phonerec/rng.hpp"
#include "phonerec/svm.hpp"

using namespace phonerec;
using namespace phonerec::svm;

namespace {

// Walks the training rows against the model's retained support vectors (which
// preserve row order) to recover every alpha, then checks the KKT system.
void check_kkt(const Matrix& x, const std::vector<int>& y, const BinarySvmModel& model,
               double tol) {
  const double slack = tol * 1.01 + 1e-9;
  double balance = 0.0;
  std::size_t sv = 0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double alpha = 0.0;
    if (sv < model.support_vectors.rows()) {
      bool same = true;
      for (std::size_t c = 0; c < x.cols(); ++c) {
        if (x(r, c) != model.support_vectors(sv, c)) same = false;
      }
      if (same) {
        alpha = std::abs(model.dual_coefs[sv]);
        balance += model.dual_coefs[sv];
        ++sv;
      }
    }
    CHECK(alpha >= 0.0);
    CHECK(alpha <= model.C + 1e-9);
    const double yf = static_cast<double>(y[r]) * decision(model, {x.row(r), x.cols()});
    if (alpha <= 0.0) {
      CHECK(yf >= 1.0 - slack);
    } else if (alpha >= model.C) {
      CHECK(yf <= 1.0 + slack);
    } else {
      CHECK(std::abs(yf - 1.0) <= slack);
    }
  }
  CHECK(sv == model.support_vectors.rows());
  CHECK(std::abs(balance) <= 1e-6);
}

}  // namespace

TEST_SUITE("svm") {

TEST_CASE("poly_kernel closed forms") {
  const KernelParams quartic{4, 1.0, 1.0};
  const std::vector<double> zero2 = {0.0, 0.0};
  CHECK(poly_kernel(zero2, zero2, quartic) == doctest::Approx(1.0));
  const std::vector<double> e1 = {1.0, 0.0}, e2 = {0.0, 1.0};
  CHECK(poly_kernel(e1, e2, quartic) == doctest::Approx(1.0));
  const std::vector<double> ones = {1.0, 1.0};
  CHECK(poly_kernel(ones, ones, quartic) == doctest::Approx(81.0));  // (2+1)^4
  CHECK_THROWS_AS(poly_kernel(e1, std::vector<double>{1.0, 2.0, 3.0}, quartic), DataError);
}

TEST_CASE("kernel symmetry and PSD Gram matrices") {
  Rng rng(201);
  for (const KernelParams params : {KernelParams{1, 0.0, 1.0}, KernelParams{2, 1.0, 0.5},
                                    KernelParams{4, 1.0, 0.25}}) {
    const std::size_t n = 4 + rng.below(7);  // up to 10 vectors
    Matrix x(n, 3);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.5, 1.5);
    Matrix gram(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        gram(i, j) = poly_kernel({x.row(i), 3}, {x.row(j), 3}, params);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) CHECK(gram(i, j) == doctest::Approx(gram(j, i)));
    }
    const auto eig = oracles::jacobi_eigenvalues(gram);
    CHECK(eig.front() >= -1e-8 * std::max(1.0, std::abs(eig.back())));
  }
}

TEST_CASE("two-point toy has the analytic solution") {
  Matrix x(2, 2);
  x(0, 0) = 0.0;
  x(0, 1) = 1.0;
  x(1, 0) = 0.0;
  x(1, 1) = -1.0;
  const std::vector<int> y = {1, -1};
  const KernelParams linear{1, 0.0, 1.0};
  const auto model = smo_train(x, y, 10000.0, linear);
  CHECK(model.converged);
  REQUIRE(model.dual_coefs.size() == 2);
  CHECK(model.dual_coefs[0] == doctest::Approx(0.5).epsilon(1e-6));   // alpha * y
  CHECK(model.dual_coefs[1] == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(model.bias == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(model.dual_objective == doctest::Approx(0.5).epsilon(1e-9));
  // the decision function is f(x) = x2
  const std::vector<double> probe = {0.0, 0.3};
  CHECK(decision(model, probe) == doctest::Approx(0.3).epsilon(1e-6));
  check_kkt(x, y, model, 1e-3);
}

TEST_CASE("XOR separates with a degree-2 kernel") {
  Matrix x(4, 2);
  const double pts[4][2] = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  for (std::size_t r = 0; r < 4; ++r) {
    x(r, 0) = pts[r][0];
    x(r, 1) = pts[r][1];
  }
  const std::vector<int> y = {1, 1, -1, -1};
  const auto model = smo_train(x, y, 10000.0, KernelParams{2, 1.0, 1.0});
  CHECK(model.converged);
  for (std::size_t r = 0; r < 4; ++r) {
    const double yf = static_cast<double>(y[r]) * decision(model, {x.row(r), 2});
    CHECK(yf >= 1.0 - 1e-3);
  }
  check_kkt(x, y, model, 1e-3);
}

TEST_CASE("dual objective matches the brute-force oracle on all shipped instances") {
  SmoSettings settings;
  settings.tol = 1e-5;
  for (const auto& inst : oracles::smo_oracle_instances()) {
    CAPTURE(inst.name);
    const auto model = smo_train(inst.X, inst.y, inst.C, inst.kernel, settings);
    const double oracle = oracles::dual_oracle_objective(inst);
    CHECK(std::abs(model.dual_objective - oracle) <= 1e-3);
    check_kkt(inst.X, inst.y, model, settings.tol);
  }
}

TEST_CASE("input errors") {
  Matrix x(2, 1);
  x(0, 0) = 1.0;
  x(1, 0) = 2.0;
  CHECK_THROWS_AS(smo_train(x, {1, 1}, 1.0, KernelParams{}), DataError);   // one class
  CHECK_THROWS_AS(smo_train(x, {1, 0}, 1.0, KernelParams{}), DataError);   // bad label
  CHECK_THROWS_AS(smo_train(Matrix(1, 1), {1}, 1.0, KernelParams{}), DataError);
}

TEST_CASE("hitting max_iter returns the current iterate with a warning flag") {
  Rng rng(202);
  Matrix x(20, 2);
  std::vector<int> y;
  for (std::size_t r = 0; r < 20; ++r) {
    x(r, 0) = rng.uniform(-1, 1);
    x(r, 1) = rng.uniform(-1, 1);
    y.push_back(r % 2 == 0 ? 1 : -1);
  }
  SmoSettings settings;
  settings.max_iter = 1;
  const auto model = smo_train(x, y, 10.0, KernelParams{2, 1.0, 1.0}, settings);
  CHECK_FALSE(model.converged);
  CHECK(std::isfinite(decision(model, {x.row(0), 2})));
}

TEST_CASE("empty support set degenerates to the bias") {
  BinarySvmModel model;
  model.bias = 0.75;
  const std::vector<double> probe = {1.0, 2.0};
  CHECK(decision(model, probe) == doctest::Approx(0.75));
}

TEST_CASE("rescaling inputs with an inverse kernel scale is prediction-stable") {
  Rng rng(203);
  Matrix x(12, 3);
  std::vector<int> y;
  for (std::size_t r = 0; r < 12; ++r) {
    for (std::size_t c = 0; c < 3; ++c) x(r, c) = rng.uniform(-1.0, 1.0);
    y.push_back(r % 2 == 0 ? 1 : -1);
  }
  // a power-of-two factor scales exactly in binary floating point, so the
  // adjusted Gram matrix is bit-identical and the solver path cannot diverge
  const double factor = 4.0;
  Matrix scaled(12, 3);
  for (std::size_t i = 0; i < x.size(); ++i) scaled.data()[i] = x.data()[i] * factor;

  const KernelParams base{2, 1.0, 0.5};
  KernelParams adjusted = base;
  adjusted.scale = base.scale / (factor * factor);

  for (std::size_t i = 0; i < 12; ++i) {
    for (std::size_t j = 0; j < 12; ++j) {
      CHECK(poly_kernel({x.row(i), 3}, {x.row(j), 3}, base) ==
            poly_kernel({scaled.row(i), 3}, {scaled.row(j), 3}, adjusted));
    }
  }

  const auto model_a = smo_train(x, y, 10.0, base);
  const auto model_b = smo_train(scaled, y, 10.0, adjusted);
  Rng probe_rng(204);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> probe(3), probe_scaled(3);
    for (std::size_t c = 0; c < 3; ++c) {
      probe[c] = probe_rng.uniform(-1.0, 1.0);
      probe_scaled[c] = probe[c] * factor;
    }
    const double fa = decision(model_a, probe);
    const double fb = decision(model_b, probe_scaled);
    CHECK(std::abs(fa - fb) <= 1e-9 * std::max(1.0, std::abs(fa)));
  }
}

TEST_CASE("node_train pair counts") {
  Rng rng(205);
  const auto make_data = [&](int k, std::size_t per_class, Matrix& x, std::vector<int>& labels) {
    x = Matrix(0, 2);
    labels.clear();
    for (int c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < per_class; ++i) {
        const double row[2] = {static_cast<double>(c) * 2.0 + rng.uniform(-0.3, 0.3),
                               rng.uniform(-0.3, 0.3)};
        x.append_row(row);
        labels.push_back(c);
      }
    }
  };
  Matrix x;
  std::vector<int> labels;
  make_data(2, 5, x, labels);
  CHECK(node_train(x, labels, {"a", "b"}, 10.0, KernelParams{2, 1.0, 1.0}).pairwise.size() == 1);
  make_data(3, 5, x, labels);
  const auto three = node_train(x, labels, {"a", "b", "c"}, 10.0, KernelParams{2, 1.0, 1.0});
  CHECK(three.pairwise.size() == 3);
  make_data(4, 5, x, labels);
  const auto four = node_train(x, labels, {"a", "b", "c", "d"}, 10.0, KernelParams{2, 1.0, 1.0});
  CHECK(four.pairwise.size() == 6);

  // a trained node classifies its own training data
  std::size_t correct = 0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (node_predict_index(four, {x.row(r), 2}) == labels[r]) ++correct;
  }
  CHECK(correct == x.rows());

  SUBCASE("missing class and out-of-range class counts") {
    make_data(2, 5, x, labels);
    CHECK_THROWS_WITH_AS(node_train(x, labels, {"a", "b", "c"}, 10.0, KernelParams{}),
                         doctest::Contains("'c'"), DataError);
    CHECK_THROWS_AS(node_train(x, labels, {"a"}, 10.0, KernelParams{}), DataError);
    CHECK_THROWS_AS(node_train(x, labels, {"a", "b", "c", "d", "e"}, 10.0, KernelParams{}),
                    DataError);
  }
}

TEST_CASE("node_predict voting and ties") {
  // stub pairwise models: no support vectors, so decision == bias
  const auto stub = [](double bias) {
    BinarySvmModel m;
    m.bias = bias;
    return m;
  };
  SUBCASE("two classes follow the decision sign") {
    NodeModel node;
    node.classes = {"x", "y"};
    node.pairwise = {stub(1.0)};
    const std::vector<double> probe = {0.0};
    CHECK(node_predict(node, probe) == "x");
    node.pairwise = {stub(-1.0)};
    CHECK(node_predict(node, probe) == "y");
  }
  SUBCASE("clear majority wins") {
    NodeModel node;
    node.classes = {"x", "y", "z"};
    // pairs (x,y), (x,z), (y,z): x beats y, x beats z, y beats z -> wins (2,1,0)
    node.pairwise = {stub(1.0), stub(1.0), stub(1.0)};
    const std::vector<double> probe = {0.0};
    CHECK(node_predict(node, probe) == "x");
  }
  SUBCASE("a full tie goes to the first listed class") {
    NodeModel node;
    node.classes = {"x", "y", "z"};
    // x beats y, z beats x, y beats z -> one win each
    node.pairwise = {stub(1.0), stub(-1.0), stub(1.0)};
    const std::vector<double> probe = {0.0};
    CHECK(node_predict(node, probe) == "x");
  }
}

TEST_CASE("batch decision parallel/serial equivalence") {
  Rng rng(206);
  Matrix x(30, 2);
  std::vector<int> y;
  for (std::size_t r = 0; r < 30; ++r) {
    x(r, 0) = rng.uniform(-1, 1);
    x(r, 1) = rng.uniform(-1, 1);
    y.push_back(x(r, 0) > 0 ? 1 : -1);
  }
  const auto model = smo_train(x, y, 100.0, KernelParams{2, 1.0, 1.0});
  CHECK(decision_batch(model, x) == decision_batch_serial(model, x));
}

}  // TEST_SUITE
