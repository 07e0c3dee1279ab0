#include "phonerec/parallel.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>
#include <thread>

#include "phonerec/error.hpp"

namespace phonerec {

namespace {
std::atomic<int> g_workers{0};
}

void set_workers(int n) { g_workers.store(n < 0 ? 0 : n); }

int workers() {
  int n = g_workers.load();
  if (n > 0) return n;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
#endif
}

void warn(const std::string& message) {
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::fprintf(stderr, "[warn] %s\n", message.c_str());
}

}  // namespace phonerec
