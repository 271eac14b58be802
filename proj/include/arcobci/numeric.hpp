#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace arcobci {

using Rng = std::mt19937_64;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Max-shifted log(sum(exp(x))). Returns -inf for empty input or all -inf.
double logsumexp(std::span<const double> values);

/// Draws an index from a categorical given unnormalised log-weights.
/// Entries equal to -inf are never drawn.
std::size_t sample_log_categorical(std::span<const double> log_weights, Rng& rng);

/// Child stream derived from a base seed; distinct tags give unrelated streams.
Rng derive_rng(std::uint64_t seed, std::uint64_t tag);

std::string rng_state(const Rng& rng);
Rng rng_from_state(const std::string& state);

/// Worker count from `requested`, overridden by ARCO_BCI_THREADS when set.
int resolve_threads(int requested);

/// Runs fn(i) for i in [0, n) across up to `threads` workers. Each index is
/// visited exactly once; results must be written to per-index slots.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace arcobci
