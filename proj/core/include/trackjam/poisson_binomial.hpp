#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace trackjam {

/// Distribution of the number of successes among independent Bernoulli trials
/// with probabilities `p`, by the O(N^2) recurrence
///   f_k <- f_k (1 - p_i) + f_{k-1} p_i.
/// Entry m is the probability of exactly m successes. Valid for p_i = 1.
std::vector<double> poisson_binomial_pmf(std::span<const double> p);

/// Probability that exactly m of the N detections fire. Requires m <= N.
double xi_exactly_m(std::span<const double> p, std::size_t m);

/// Probability that at least n of the N detections fire; exactly 1 for n = 0.
double objective_at_least_n(std::span<const double> p, std::size_t n);

}  // namespace trackjam
