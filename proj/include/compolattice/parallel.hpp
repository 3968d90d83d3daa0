#pragma once

#include <functional>

namespace compolattice {

/// Worker-thread count: COMPOLATTICE_THREADS when set and positive, otherwise the
/// hardware concurrency (at least 1).
int recommended_threads();

/// Runs fn(0) ... fn(n_jobs - 1) across worker threads; jobs must write only to
/// their own output slots. Rethrows the first job exception after all threads join.
void parallel_for(int n_jobs, const std::function<void(int)>& fn, int n_threads = 0);

}  // namespace compolattice
