#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace tickwarp::numeric {

/// Adaptive Gauss-Kronrod integral of f over [lo, hi] to the given relative
/// tolerance. Throws Error if the tolerance is not reached.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 double rel_tol = 1e-12);

/// Root of a continuous f on [lo, hi] where f(lo) and f(hi) bracket zero.
/// Terminates when the bracket is narrower than x_tol.
double find_root(const std::function<double(double)>& f, double lo, double hi, double x_tol);

/// n points logarithmically spaced in [lo, hi], endpoints included.
std::vector<double> log_grid(double lo, double hi, std::size_t n);

/// n points linearly spaced in [lo, hi], endpoints included.
std::vector<double> linear_grid(double lo, double hi, std::size_t n);

/// Shortest decimal text that parses back to exactly the same double.
std::string exact_decimal(double x);

/// Decimal text with 17 significant digits (table output).
std::string sig17(double x);

/// Parses a double from the full string, throwing ParseError otherwise.
double parse_double(const std::string& text, std::size_t line = 0);

/// SplitMix64 step; used to derive independent sub-seeds from a master seed.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Number of worker threads used by parallel loops. 0 selects the hardware
/// concurrency. Results never depend on this value.
void set_thread_count(unsigned n) noexcept;
unsigned thread_count() noexcept;

/// Runs body(i) for i in [0, n) on up to thread_count() threads. The body
/// must write only to slot i of its outputs.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace tickwarp::numeric
