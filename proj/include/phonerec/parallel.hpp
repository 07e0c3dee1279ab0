#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace phonerec {

// Global worker budget for the OpenMP kernels. 0 selects the hardware default.
// Every parallel loop in the project writes to per-index slots only, so any
// worker count yields byte-identical results.
void set_workers(int n);
int workers();

namespace detail {

// Exceptions must not unwind out of an OpenMP region; capture the first one
// and rethrow after the join.
class ExceptionCollector {
 public:
  template <class F>
  void run(F&& f) noexcept {
    try {
      f();
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu_);
      if (!first_) first_ = std::current_exception();
    }
  }
  void rethrow() {
    if (first_) std::rethrow_exception(first_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr first_;
};

}  // namespace detail

// Calls f(i) for every i in [0, n).
template <class F>
void parallel_for(std::size_t n, F&& f) {
#ifdef _OPENMP
  detail::ExceptionCollector errors;
#pragma omp parallel for schedule(static) num_threads(workers())
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    errors.run([&] { f(static_cast<std::size_t>(i)); });
  }
  errors.rethrow();
#else
  for (std::size_t i = 0; i < n; ++i) f(i);
#endif
}

// Dynamic schedule for jobs of very uneven size (tree nodes, SMOTE classes).
template <class F>
void parallel_for_dynamic(std::size_t n, F&& f) {
#ifdef _OPENMP
  detail::ExceptionCollector errors;
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers())
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    errors.run([&] { f(static_cast<std::size_t>(i)); });
  }
  errors.rethrow();
#else
  for (std::size_t i = 0; i < n; ++i) f(i);
#endif
}

}  // namespace phonerec
