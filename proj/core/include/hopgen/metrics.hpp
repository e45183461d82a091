#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hopgen/sampler.hpp"

namespace hopgen::metrics {

// Pooled 20-symbol residue frequencies; gaps excluded; pseudocount added
// per symbol before normalizing.
Eigen::VectorXd aa_composition(const std::vector<std::string>& seqs,
                               double pseudocount = 0.5);

// KL(generated || stored) over pooled compositions.
double aa_kl(const std::vector<std::string>& generated,
             const std::vector<std::string>& stored, double pseudocount = 0.5);

// SE of aa_kl under resampling of the generated sequences (stored fixed).
double aa_kl_bootstrap_se(const std::vector<std::string>& generated,
                          const std::vector<std::string>& stored,
                          int n_boot = 1000, std::uint64_t seed = 0,
                          double pseudocount = 0.5);

// 1 - max_k cos(state, m_k). The state need not be unit norm.
double novelty(const Eigen::VectorXd& state, const Eigen::MatrixXd& M);

// Mean pairwise cosine distance; undefined for fewer than 2 states.
std::optional<double> diversity(const std::vector<Eigen::VectorXd>& states);

double max_seq_identity(const std::string& seq,
                        const std::vector<std::string>& stored);

inline constexpr std::array<double, 3> kDuplicateIdentityThresholds = {0.95, 0.90,
                                                                       0.80};
inline constexpr std::array<int, 3> kDuplicateSubstitutionCounts = {1, 2, 5};

struct NearDuplicateStats {
    std::array<double, 3> frac_identity_above;  // per threshold
    std::array<double, 3> frac_within_subs;     // per substitution count
};
NearDuplicateStats near_duplicate_stats(const std::vector<std::string>& generated,
                                        const std::vector<std::string>& stored);

// Pairwise mutual information over 21 symbols (gap included), pseudocount
// 1.0 per joint cell, marginals from the smoothed joint, diagonal zeroed.
Eigen::MatrixXd mi_matrix(const std::vector<std::string>& rows,
                          double pseudocount = 1.0);

// Compares the upper triangles of two MI matrices.
struct MICorrelation {
    double pearson;
    double spearman;
    double top50_overlap; // fraction of shared top-50 pairs
};
MICorrelation mi_correlation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             int top_n = 50);

// Sequence must be gap-free canonical residues. Charge counts K/R as +1,
// D/E as -1, H as +0.5 (set include_his = false to drop the His term).
struct BiophysProfile {
    double net_charge;
    double hydrophobic_fraction; // over {A,V,I,L,M,F,W,P}
    double kd_mean;              // Kyte-Doolittle mean
    int cys_count;
    bool amp_pass; // charge >= +2 and hydrophobic in [0.3, 0.7] and cys >= 4
};
BiophysProfile biophysics(const std::string& seq, bool include_his = true);

struct GenerationMetrics {
    double kl = 0.0;
    double kl_se = 0.0;
    double novelty_mean = 0.0;
    double novelty_se = 0.0; // SD of per-chain means / sqrt(n_chains)
    std::optional<double> diversity;
    double seq_identity_mean = 0.0;
    double seq_identity_se = 0.0;
    double valid_fraction = 1.0; // canonical residues / positions
    std::vector<double> novelty_per_chain;
    std::vector<double> seq_identity_per_chain;
};

// Ensemble metrics of a sample set against the stored alignment rows and
// memory. Per-chain SEs group samples by their chain provenance.
GenerationMetrics evaluate(const sampler::SampleSet& samples,
                           const std::vector<std::string>& stored_rows,
                           const Eigen::MatrixXd& M, int n_boot = 1000,
                           std::uint64_t boot_seed = 0);

} // namespace hopgen::metrics
