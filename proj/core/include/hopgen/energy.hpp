#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

namespace hopgen::energy {

// log sum_i exp(v_i), max-subtracted.
double logsumexp(const Eigen::VectorXd& v);

// softmax(v), max-subtracted, sums to exactly the computed normalizer.
Eigen::VectorXd softmax(const Eigen::VectorXd& v);

// E(xi) = 0.5 |xi|^2 - (1/beta) log sum_k exp(beta m_k . xi)
double energy_value(const Eigen::MatrixXd& M, double beta, const Eigen::VectorXd& xi);

struct AttentionResult {
    Eigen::VectorXd weights;    // softmax(beta M^T xi), K
    Eigen::VectorXd retrieved;  // M * weights, d
    double entropy;             // Shannon entropy of weights, nats
    double similarity_mean;     // E_p[m_k . xi]
    double similarity_variance; // Var_p[m_k . xi]
};

AttentionResult attention(const Eigen::MatrixXd& M, double beta,
                          const Eigen::VectorXd& xi);

// Score of the Boltzmann density: beta (T(xi) - xi) = -beta grad E.
Eigen::VectorXd score(const Eigen::MatrixXd& M, double beta, const Eigen::VectorXd& xi);

// dH/dbeta = -beta Var_p(m_k . xi); checks the analytic value against a
// central difference in beta.
struct EntropyDerivativeCheck {
    double analytic;
    double numeric;
    double abs_err;
};
EntropyDerivativeCheck entropy_derivative_check(const Eigen::MatrixXd& M, double beta,
                                                const Eigen::VectorXd& xi,
                                                double h = 1e-4);

enum class ProbeKind { stored_patterns, random_sphere };

struct BetaStarGrid {
    double beta_min = 0.1;
    double beta_max = 50.0;
    int n_points = 200; // log-spaced
};

struct BetaStarResult {
    double beta_star = 0.0;
    int grid_index = 0;
    Eigen::VectorXd grid;         // n_points, log-spaced
    Eigen::VectorXd mean_entropy; // averaged attention entropy per grid point
    ProbeKind probe_kind = ProbeKind::stored_patterns;
};

// Mean attention entropy H(beta) probed at every stored pattern (or at
// n_probes random unit vectors); beta* is the grid point with the largest
// |second central difference| of H vs ln(beta), endpoints excluded.
// A flat curve (max - min < 1e-9) has no transition and is an error.
BetaStarResult find_beta_star(const Eigen::MatrixXd& M,
                              const BetaStarGrid& grid = {},
                              ProbeKind probe = ProbeKind::stored_patterns,
                              int n_probes = 64, std::uint64_t seed = 0);

// Smoothness bound for the score map: 1 + beta sigma_max(M)^2 / 2.
double lipschitz_bound(const Eigen::MatrixXd& M, double beta);

// Per-pattern separation 1 - max_{j != k} m_j . m_k.
struct SelfSimilarityGap {
    Eigen::VectorXd gaps;
    double min_gap;
    bool duplicate_warning; // some gap <= 1e-12
};
SelfSimilarityGap self_similarity_gap(const Eigen::MatrixXd& M);

// Pools similarities m_k . xi over uniform random unit probes. For unit
// patterns d * Var concentrates at 1; excess kurtosis of the sphere
// marginal is -6/(d+2).
struct SimilarityProbe {
    double mean;
    double variance;
    double d_times_variance;
    double excess_kurtosis;
};
SimilarityProbe similarity_variance_probe(const Eigen::MatrixXd& M, int n_probes,
                                          std::uint64_t seed);

} // namespace hopgen::energy
