#pragma once

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace vulnboost {

// Error taxonomy; the CLI maps these onto exit codes (config=2, data=3,
// internal=4).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InternalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Deterministic random streams
// ---------------------------------------------------------------------------

// splitmix64 finalizer. Fully specified arithmetic, so streams are identical
// across platforms and compilers.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based uniform stream keyed by a seed plus up to three indices.
/// Every draw is a pure function of (seed, key, draw counter), so concurrent
/// schedules that consume distinct streams produce identical numbers.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t k0 = 0,
                     std::uint64_t k1 = 0, std::uint64_t k2 = 0) {
    key_ = mix64(seed ^ mix64(k0 ^ mix64(k1 ^ mix64(k2))));
  }

  std::uint64_t next_u64() { return mix64(key_ + ++counter_); }

  // Uniform in [0,1), 53-bit resolution.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Uniform index in [0,n). Multiplicative reduction; bias is 2^-64.
  std::size_t next_index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

// Partial Fisher-Yates: deterministic choice of `take` distinct indices out
// of [0,n), returned sorted ascending.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t take,
                                               RngStream& rng) {
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  if (take > n) take = n;
  for (std::size_t i = 0; i < take; ++i) {
    std::size_t j = i + rng.next_index(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  std::sort(pool.begin(), pool.end());
  return pool;
}

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

inline unsigned max_workers() {
  static const unsigned cached = [] {
    if (const char* env = std::getenv("VULNBOOST_THREADS")) {
      long v = std::strtol(env, nullptr, 10);
      if (v >= 1) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
  }();
  return cached;
}

namespace detail {
inline bool& in_parallel_worker() {
  thread_local bool flag = false;
  return flag;
}
}  // namespace detail

/// Runs fn(0..n_tasks-1). Tasks must be independent and write only to their
/// own output slots; results are then identical for any schedule. Nested
/// calls from inside a worker run serially.
inline void parallel_for(std::size_t n_tasks,
                         const std::function<void(std::size_t)>& fn) {
  unsigned workers = max_workers();
  if (n_tasks == 0) return;
  if (workers <= 1 || n_tasks == 1 || detail::in_parallel_worker()) {
    for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  if (workers > n_tasks) workers = static_cast<unsigned>(n_tasks);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      detail::in_parallel_worker() = true;
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n_tasks || failed.load()) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Text helpers
// ---------------------------------------------------------------------------

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r'))
    --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == delim) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    char ca = a[i], cb = b[i];
    if (ca >= 'a' && ca <= 'z') ca = static_cast<char>(ca - 'a' + 'A');
    if (cb >= 'a' && cb <= 'z') cb = static_cast<char>(cb - 'a' + 'A');
    if (ca != cb) return false;
  }
  return true;
}

// 17 significant digits round-trips any double exactly.
inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_real(const std::string& s, const std::string& what) {
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    throw DataError("cannot parse number '" + s + "' in " + what);
  return v;
}

inline long long parse_int(const std::string& s, const std::string& what) {
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    throw DataError("cannot parse integer '" + s + "' in " + what);
  return v;
}

// FNV-1a, used for schema fingerprints in model manifests.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace vulnboost
