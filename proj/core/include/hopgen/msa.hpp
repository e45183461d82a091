#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hopgen::msa {

// Alignment as parsed: rows all same length, residues uppercase canonical
// or '-'. Ambiguity codes were already replaced ('.' -> '-', lowercase
// uppercased, B/J/O/U/X/Z -> '-' with a count).
struct RawAlignment {
    std::vector<std::string> ids;
    std::vector<std::string> rows;
    std::size_t non_canonical_replaced = 0;

    std::size_t K() const { return rows.size(); }
    std::size_t L() const { return rows.empty() ? 0 : rows.front().size(); }
};

// Alignment after gap filtering. kept_column_indices maps cleaned columns
// back to columns of the raw alignment.
struct CleanAlignment {
    std::vector<std::string> ids;
    std::vector<std::string> rows;
    std::vector<std::size_t> kept_column_indices;

    std::size_t K() const { return rows.size(); }
    std::size_t L() const { return rows.empty() ? 0 : rows.front().size(); }
};

struct AlignmentStats {
    std::string family;
    std::size_t K = 0;
    std::size_t L = 0;
    double mean_column_entropy = 0.0;
    double k_eff = 0.0;
    double spectral_concentration = 0.0; // filled once a PCA spectrum exists
};

// Stockholm (Pfam seed dialect): '#' lines are markup, '//' terminates,
// blocks of "id  alignedseq" lines; repeated ids across blocks concatenate.
RawAlignment parse_stockholm(std::istream& in);
RawAlignment parse_stockholm_file(const std::string& path);

// Aligned FASTA: every record must have the same length after normalization.
RawAlignment parse_fasta(std::istream& in);
RawAlignment parse_fasta_file(const std::string& path);

void write_fasta(std::ostream& out, const std::vector<std::string>& ids,
                 const std::vector<std::string>& rows, int wrap = 0);
void write_fasta_file(const std::string& path, const std::vector<std::string>& ids,
                      const std::vector<std::string>& rows, int wrap = 0);

// Drops columns with gap fraction > col_gap_max first, then rows whose gap
// fraction on the retained columns is > row_gap_max. Both strict.
CleanAlignment clean(const RawAlignment& raw, double col_gap_max = 0.5,
                     double row_gap_max = 0.3);

// Per-column Shannon entropy in nats; gap counts as a 21st symbol.
Eigen::VectorXd column_entropy(const std::vector<std::string>& rows);
double mean_column_entropy(const std::vector<std::string>& rows);

// Fraction of matching positions; gap-gap is a match, gap-residue is not.
double pairwise_identity(const std::string& a, const std::string& b);

// K_eff = sum_k 1/|{j : identity(j,k) >= threshold}| (self included).
double effective_sequences(const std::vector<std::string>& rows,
                           double identity_threshold = 0.8);

// Most frequent non-gap symbol per column, ties broken by canonical order.
std::string consensus(const std::vector<std::string>& rows);

// Shuffles each column independently (seeded Fisher-Yates per column).
// Preserves per-column symbol counts exactly; destroys row covariation.
std::vector<std::string> permute_columns(const std::vector<std::string>& rows,
                                         std::uint64_t seed);
CleanAlignment permute_columns(const CleanAlignment& aln, std::uint64_t seed);

// Entropy and K_eff; spectral_concentration is left 0 for the caller to fill
// from the fitted PCA spectrum.
AlignmentStats alignment_stats(const CleanAlignment& aln, const std::string& family);

} // namespace hopgen::msa
