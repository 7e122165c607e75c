#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

namespace mvf {

// splitmix64 finalizer; used to derive per-scenario seeds
std::uint64_t mix64(std::uint64_t x);

// Runs fn(begin, end) over contiguous chunks of [0, n). Chunking depends only on
// n and the thread count, callers write into disjoint slots and reduce in order.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

// process wide worker count, 1 means run inline
void set_threads(int n);
int threads();

// round-trip formatting for CSV/JSON, locale independent
std::string fmt_num(double x);

}  // namespace mvf
