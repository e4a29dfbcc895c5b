#include "zenosim/parallel.hpp"

#include "zenosim/error.hpp"

#include <omp.h>

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <string>

namespace zenosim {

namespace {

std::atomic<int> g_workers{0};

int hardware_workers() { return std::max(1, omp_get_num_procs()); }

}  // namespace

int workers() {
  const int n = g_workers.load();
  return n > 0 ? n : hardware_workers();
}

void set_workers(int n) {
  if (n < 1) throw DomainError("set_workers: worker count must be >= 1");
  g_workers.store(n);
}

int resolve_workers(std::optional<int> flag) {
  if (flag) {
    if (*flag < 1) throw DomainError("--workers must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("ZENOSIM_WORKERS"); env && *env) {
    std::size_t used = 0;
    int n = 0;
    try {
      n = std::stoi(env, &used);
    } catch (const std::exception&) {
      throw DomainError(std::string("ZENOSIM_WORKERS is not an integer: ") + env);
    }
    if (env[used] != '\0' || n < 1) throw DomainError(std::string("ZENOSIM_WORKERS must be a positive integer: ") + env);
    return n;
  }
  return hardware_workers();
}

void parallel_for(std::size_t n, Execution exec, const std::function<void(std::size_t)>& body) {
  std::exception_ptr first;
  std::mutex guard;
  auto run = [&](std::size_t i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard lock(guard);
      if (!first) first = std::current_exception();
    }
  };
  if (exec == Execution::Serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers())
  for (long i = 0; i < count; ++i) run(static_cast<std::size_t>(i));
  if (first) std::rethrow_exception(first);
}

}  // namespace zenosim
