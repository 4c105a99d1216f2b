#pragma once

#include <functional>

namespace bbcv {

// Worker count for embarrassingly parallel loops. BBCV_WORKERS overrides the
// hardware default; results never depend on it because every work item owns
// a preassigned output slot and its own seed streams.
int worker_count();

// Runs fn(0..n-1) on up to `workers` threads (0 = worker_count()). Rethrows
// the first exception after all threads join.
void parallel_for(int n, const std::function<void(int)>& fn, int workers = 0);

}  // namespace bbcv
