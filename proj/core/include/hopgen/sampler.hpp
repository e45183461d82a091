#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hopgen/embed.hpp"
#include "hopgen/rng.hpp"

namespace hopgen::sampler {

enum class Kernel { ula, mala };
enum class InitKind { near_pattern, random_sphere };
enum class TemperatureRule { round_nearest, ceiling };

// Generation temperature: round(max(2 beta*, 5)) by default; the ceiling
// variant is max(ceil(2 beta*), 5).
double generation_temperature(double beta_star,
                              TemperatureRule rule = TemperatureRule::round_nearest);

// Retrieval temperature: round(20 beta*).
double retrieval_temperature(double beta_star);

struct ChainConfig {
    double beta = 5.0;
    double alpha = 0.01;
    int steps = 5000;            // T
    int burn_in = 2000;          // T_b
    int n_samples = 5;           // s, per chain
    int min_spacing = 100;       // validation floor for sample spacing
    Kernel kernel = Kernel::ula;
    InitKind init = InitKind::near_pattern;
    double init_jitter = 0.01;
    int n_chains = 30;
    std::uint64_t master_seed = 42;
    int nonfinite_check_interval = 100;

    // Throws std::invalid_argument on violated constraints.
    void validate() const;
    // Sample iterations: burn_in + j * floor((steps - burn_in) / n_samples),
    // j = 1..n_samples.
    std::vector<int> sample_iterations() const;
};

struct ChainResult {
    int chain_index = 0;
    std::optional<int> init_pattern_index;
    std::vector<int> sample_iterations;
    std::vector<Eigen::VectorXd> samples;
    Eigen::VectorXd energy_trace; // E(xi_t), t = 1..steps
    double acceptance_rate = 1.0; // ULA is 1.0 by convention
    int nonfinite_proposals = 0;  // MALA proposals rejected as non-finite
};

struct SampleSet {
    std::string family;
    std::string method; // "ula", "mala", or a baseline tag
    double beta = 0.0;
    std::vector<Eigen::VectorXd> states;
    std::vector<std::string> sequences;
    std::vector<int> chain_of; // provenance, per sample
    std::vector<int> iter_of;
    int n_chains = 0;
    std::size_t size() const { return states.size(); }
};

// One step of the unadjusted Langevin update with the noise supplied:
// xi' = (1 - alpha) xi + alpha M softmax(beta M^T xi) + sqrt(2 alpha / beta) noise.
Eigen::VectorXd ula_step(const Eigen::MatrixXd& M, double beta, double alpha,
                         const Eigen::VectorXd& xi, const Eigen::VectorXd& noise);

// Metropolis-adjusted step: ULA proposal, accepted with probability
// min{1, exp(-beta dE) q(xi|xi') / q(xi'|xi)} where q is the isotropic
// normal with mean (1-alpha)x + alpha T(x) and per-coordinate variance
// 2 alpha / beta. Draw order: d proposal normals, then one uniform.
struct MalaStep {
    Eigen::VectorXd next;
    bool accepted;
    bool proposal_finite;
};
MalaStep mala_step(const Eigen::MatrixXd& M, double beta, double alpha,
                   const Eigen::VectorXd& xi, RandomStream& rng);

Eigen::VectorXd init_near_pattern(const Eigen::MatrixXd& M, int pattern_index,
                                  double jitter, RandomStream& rng);
Eigen::VectorXd init_random_sphere(Eigen::Index d, RandomStream& rng);

// Runs one chain on its own stream derive_seed(master_seed, chain_index);
// the chain's output does not depend on scheduling. init_pattern overrides
// the pattern index for near_pattern init (drawn from the chain stream if
// absent). Aborts with a numeric error if the state goes non-finite.
ChainResult run_chain(const Eigen::MatrixXd& M, const ChainConfig& cfg,
                      int chain_index, std::optional<int> init_pattern = {});

// n_chains chains (init pattern indices drawn up front from the master
// seed), run on n_threads, results ordered by chain index. Samples are
// decoded through the PCA model.
struct EnsembleResult {
    SampleSet samples;
    std::vector<ChainResult> chains;
};
EnsembleResult run_ensemble(const embed::FamilyModel& model, const ChainConfig& cfg,
                            int n_threads = 1);

} // namespace hopgen::sampler
