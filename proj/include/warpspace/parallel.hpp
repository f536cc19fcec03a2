// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
// Thread budget and a deterministic parallel loop. Work is split by a static
// stride and results must be written to per-index slots; callers reduce those
// slots in index order afterward, so outputs are bit-identical regardless of
// the thread count.
#pragma once

#include <functional>

namespace warpspace {

/// Value of WARPSPACE_THREADS clamped to [1, hardware_concurrency];
/// unset/invalid -> 1.
int thread_budget();

/// Runs fn(0..n-1), strided across min(thread_budget(), n) threads.
/// The first exception thrown by any worker is rethrown on the caller.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace warpspace
