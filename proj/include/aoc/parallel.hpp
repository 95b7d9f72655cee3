#ifndef AOC_PARALLEL_HPP
#define AOC_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace aoc {

inline unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Work is claimed
/// dynamically but every result lands in its own slot, so callers that reduce
/// in index order get output independent of the thread count. Returns one
/// exception_ptr per index (null on success).
template <typename Fn>
std::vector<std::exception_ptr> parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned t = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (t == 1) {
    worker();
    return errors;
  }
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (unsigned k = 0; k < t; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return errors;
}

/// parallel_for collecting fn(i) into an index-ordered vector; rethrows the
/// lowest-index failure.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n, unsigned threads, Fn&& fn) {
  std::vector<T> out(n);
  auto errors = parallel_for(n, threads, [&](std::size_t i) { out[i] = fn(i); });
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace aoc

#endif  // AOC_PARALLEL_HPP
