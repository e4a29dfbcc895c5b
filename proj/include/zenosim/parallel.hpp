#pragma once

// Worker-pool control for the OpenMP kernels. Every parallel loop writes its
// results by index, so outputs do not depend on the worker count.

#include <cstddef>
#include <exception>
#include <functional>
#include <optional>

namespace zenosim {

enum class Execution { Serial, Parallel };

// Worker count used by Execution::Parallel loops.
int workers();
void set_workers(int n);

// Flag value if given, else ZENOSIM_WORKERS, else hardware parallelism.
// Throws DomainError on a non-positive or malformed value.
int resolve_workers(std::optional<int> flag);

// Runs body(i) for i in [0, n). The first exception thrown by any iteration is
// rethrown on the calling thread after the loop finishes.
void parallel_for(std::size_t n, Execution exec, const std::function<void(std::size_t)>& body);

}  // namespace zenosim
