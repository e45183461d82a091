#pragma once

#include <cstdint>
#include <string>

#include "hopgen/embed.hpp"
#include "hopgen/msa.hpp"
#include "hopgen/sampler.hpp"

namespace hopgen::baselines {

// All baselines emit a SampleSet with the sampler's schema and budget.
// Having no chains, samples are grouped into n_chains contiguous chunks for
// the per-chain error bars.

// Uniform resample of stored columns; states bitwise equal to patterns.
sampler::SampleSet bootstrap_replay(const embed::FamilyModel& model, int n_samples,
                                    std::uint64_t seed, int n_chains = 30);

// Stored pattern plus isotropic noise sigma = sqrt(2 alpha / beta_gen),
// matching one Langevin step's noise scale.
sampler::SampleSet gaussian_perturbation(const embed::FamilyModel& model,
                                         int n_samples, double beta_gen,
                                         double alpha, std::uint64_t seed,
                                         int n_chains = 30);

// Convex mixture of all patterns, weights Dirichlet(1,...,1); not normalized.
sampler::SampleSet convex_combination(const embed::FamilyModel& model, int n_samples,
                                      std::uint64_t seed, int n_chains = 30);

// Consensus sequence projected without normalization, plus isotropic noise
// with sigma = mean distance of the stored (un-normalized) projections from
// their centroid.
sampler::SampleSet consensus_with_noise(const msa::CleanAlignment& aln,
                                        const embed::FamilyModel& model,
                                        int n_samples, std::uint64_t seed,
                                        int n_chains = 30);

} // namespace hopgen::baselines
