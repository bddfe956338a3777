#pragma once

#include <cstddef>
#include <exception>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace compoc::par {

bool openmp_available();
int thread_count();

// Forces the OpenMP entry points onto the plain loop. Used by the equality
// tests and the benchmark; not thread safe itself.
void force_serial(bool on);
bool serial_forced();

// f(i) for i in [0, n). Exceptions thrown by f are captured on the worker and
// rethrown on the caller once the region ends, first one wins.
template <class F>
void for_each_index(std::size_t n, F&& f) {
#ifdef _OPENMP
  if (!serial_forced() && n > 1) {
    std::exception_ptr err = nullptr;
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      try {
        f(static_cast<std::size_t>(i));
      } catch (...) {
#pragma omp critical(compoc_par_err)
        if (!err) err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) f(i);
}

}  // namespace compoc::par
