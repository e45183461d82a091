#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "hopgen/msa.hpp"

namespace hopgen::embed {

// PCA of the centered one-hot encoding. basis holds the leading d left
// singular vectors (20L x d, orthonormal, sign-fixed so each column's
// largest-magnitude entry is positive); singular_values holds the full
// computed spectrum, not just the retained part.
struct PcaModel {
    Eigen::VectorXd mean;             // 20L
    Eigen::MatrixXd basis;            // 20L x d
    Eigen::VectorXd singular_values;  // min(20L, K), descending
    double rho_min = 0.0;
    std::size_t L = 0;                // alignment columns

    Eigen::Index d() const { return basis.cols(); }
    double total_variance() const { return singular_values.squaredNorm(); }
    double retained_variance() const {
        return singular_values.head(d()).squaredNorm();
    }
    double spectral_concentration() const {
        double tot = total_variance();
        return tot > 0 ? singular_values[0] * singular_values[0] / tot : 0.0;
    }
};

// Stored patterns: unit-norm PCA projections of the cleaned rows, one column
// per sequence.
struct MemoryMatrix {
    std::string family;
    Eigen::MatrixXd patterns; // d x K, unit columns
    std::vector<std::string> source_ids;

    Eigen::Index d() const { return patterns.rows(); }
    Eigen::Index K() const { return patterns.cols(); }
};

struct FamilyModel {
    PcaModel pca;
    MemoryMatrix memory;
};

// One-hot: 20 slots per column in canonical residue order; a gap is an
// all-zero block.
Eigen::VectorXd one_hot_encode(const std::string& row);
Eigen::MatrixXd one_hot_encode(const std::vector<std::string>& rows);

// Economy SVD of the centered matrix. d = smallest p with cumulative
// variance fraction >= rho_min; if rounding keeps the fraction below
// rho_min at full rank, d = numerical rank.
PcaModel fit_pca(const Eigen::MatrixXd& onehot, double rho_min, std::size_t L);

Eigen::VectorXd project(const PcaModel& model, const Eigen::VectorXd& x);

// Unit-normalized projection; near-zero projections are an error.
Eigen::VectorXd project_normalize(const PcaModel& model, const Eigen::VectorXd& x);

// x_hat = mean + basis * xi, then per-position argmax over the 20 residue
// slots (canonical order breaks ties; gaps are never emitted).
std::string decode(const PcaModel& model, const Eigen::VectorXd& xi);

// Full pipeline on a cleaned alignment: one-hot, PCA, project + normalize
// every row. Requires K >= 2. Duplicate patterns are allowed (callers can
// check self_similarity_gap).
FamilyModel build_memory(const msa::CleanAlignment& aln, double rho_min,
                         const std::string& family);

} // namespace hopgen::embed
