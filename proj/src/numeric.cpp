#include "arcobci/numeric.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "arcobci/error.hpp"

namespace arcobci {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateIndex: return "DuplicateIndex";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyRemaining: return "EmptyRemaining";
    case ErrorCode::WeightMismatch: return "WeightMismatch";
    case ErrorCode::FactorizationFailure: return "FactorizationFailure";
    case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::AllNegInfinite: return "AllNegInfinite";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::UnknownQuery: return "UnknownQuery";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

double logsumexp(std::span<const double> values) {
  double hi = kNegInf;
  for (double v : values) hi = std::max(hi, v);
  if (hi == kNegInf) return kNegInf;
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double v : values) {
    if (v != kNegInf) acc += std::exp(v - hi);
  }
  return hi + std::log(acc);
}

std::size_t sample_log_categorical(std::span<const double> log_weights, Rng& rng) {
  const double norm = logsumexp(log_weights);
  if (norm == kNegInf) throw Error(ErrorCode::AllNegInfinite, "categorical with no support");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double cum = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    if (log_weights[i] == kNegInf) continue;
    cum += std::exp(log_weights[i] - norm);
    last = i;
    if (u < cum) return i;
  }
  return last;
}

Rng derive_rng(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng rng_from_state(const std::string& state) {
  Rng rng;
  std::istringstream is(state);
  is >> rng;
  if (is.fail()) throw Error(ErrorCode::ParseError, "malformed RNG state");
  return rng;
}

int resolve_threads(int requested) {
  if (const char* env = std::getenv("ARCO_BCI_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1, requested);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1, threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace arcobci
