#include "compolattice/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace compolattice {

int recommended_threads() {
  if (const char* env = std::getenv("COMPOLATTICE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(int n_jobs, const std::function<void(int)>& fn, int n_threads) {
  if (n_jobs <= 0) return;
  if (n_threads <= 0) n_threads = recommended_threads();
  n_threads = std::min(n_threads, n_jobs);

  if (n_threads == 1) {
    for (int i = 0; i < n_jobs; ++i) fn(i);
    return;
  }

  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n_jobs) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace compolattice
