#include "hopgen/msa.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "hopgen/alphabet.hpp"
#include "hopgen/errors.hpp"
#include "hopgen/rng.hpp"

namespace hopgen::msa {

namespace {

// Uppercases, maps '.' to '-', replaces ambiguity codes, rejects anything
// that is not a residue or gap.
void normalize_residues(std::string& seq, std::size_t line_no,
                        std::size_t& replaced) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
        char c = static_cast<char>(std::toupper(static_cast<unsigned char>(seq[i])));
        if (c == '.') c = kGap;
        if (c != kGap && !is_canonical(c)) {
            if (is_non_canonical_code(c)) {
                c = kGap;
                ++replaced;
            } else {
                throw data_error("illegal character '" + std::string(1, seq[i]) +
                                 "' at line " + std::to_string(line_no) +
                                 ", position " + std::to_string(i + 1));
            }
        }
        seq[i] = c;
    }
}

void check_rectangular(const RawAlignment& aln) {
    if (aln.rows.empty()) throw data_error("alignment has no sequences");
    const std::size_t L = aln.rows.front().size();
    if (L == 0) throw data_error("alignment has zero columns");
    for (std::size_t k = 0; k < aln.rows.size(); ++k) {
        if (aln.rows[k].size() != L)
            throw data_error("sequence '" + aln.ids[k] + "' has length " +
                             std::to_string(aln.rows[k].size()) + ", expected " +
                             std::to_string(L));
    }
}

double row_gap_fraction(const std::string& row) {
    if (row.empty()) return 0.0;
    const auto gaps = std::count(row.begin(), row.end(), kGap);
    return static_cast<double>(gaps) / static_cast<double>(row.size());
}

} // namespace

RawAlignment parse_stockholm(std::istream& in) {
    RawAlignment aln;
    std::unordered_map<std::string, std::size_t> index_of;
    std::string line;
    std::size_t line_no = 0;
    bool terminated = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.rfind("//", 0) == 0) {
            terminated = true;
            break;
        }
        if (line[0] == '#') continue; // markup
        std::istringstream fields(line);
        std::string id, seq, extra;
        fields >> id >> seq;
        if (seq.empty())
            throw data_error("malformed sequence line " + std::to_string(line_no) +
                             ": expected 'id sequence'");
        if (fields >> extra)
            throw data_error("malformed sequence line " + std::to_string(line_no) +
                             ": trailing field '" + extra + "'");
        normalize_residues(seq, line_no, aln.non_canonical_replaced);
        auto [it, inserted] = index_of.try_emplace(id, aln.rows.size());
        if (inserted) {
            aln.ids.push_back(id);
            aln.rows.push_back(std::move(seq));
        } else {
            aln.rows[it->second] += seq; // interleaved block continuation
        }
    }
    (void)terminated; // the '//' terminator is optional here
    check_rectangular(aln);
    return aln;
}

RawAlignment parse_fasta(std::istream& in) {
    RawAlignment aln;
    std::string line;
    std::size_t line_no = 0;
    bool in_record = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '>') {
            std::istringstream header(line.substr(1));
            std::string id;
            header >> id;
            if (id.empty())
                throw data_error("empty FASTA header at line " +
                                 std::to_string(line_no));
            aln.ids.push_back(id);
            aln.rows.emplace_back();
            in_record = true;
        } else {
            if (!in_record)
                throw data_error("sequence data before first FASTA header at line " +
                                 std::to_string(line_no));
            normalize_residues(line, line_no, aln.non_canonical_replaced);
            aln.rows.back() += line;
        }
    }
    check_rectangular(aln);
    return aln;
}

namespace {
RawAlignment parse_file(const std::string& path,
                        RawAlignment (*parser)(std::istream&)) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open: " + path);
    try {
        return parser(in);
    } catch (const data_error& e) {
        throw data_error(path + ": " + e.what());
    }
}
} // namespace

RawAlignment parse_stockholm_file(const std::string& path) {
    return parse_file(path, &parse_stockholm);
}

RawAlignment parse_fasta_file(const std::string& path) {
    return parse_file(path, &parse_fasta);
}

void write_fasta(std::ostream& out, const std::vector<std::string>& ids,
                 const std::vector<std::string>& rows, int wrap) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
        out << '>' << ids[k] << '\n';
        if (wrap <= 0) {
            out << rows[k] << '\n';
        } else {
            for (std::size_t i = 0; i < rows[k].size(); i += wrap)
                out << rows[k].substr(i, wrap) << '\n';
        }
    }
}

void write_fasta_file(const std::string& path, const std::vector<std::string>& ids,
                      const std::vector<std::string>& rows, int wrap) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot open for writing: " + path);
    write_fasta(out, ids, rows, wrap);
}

CleanAlignment clean(const RawAlignment& raw, double col_gap_max,
                     double row_gap_max) {
    const std::size_t K = raw.K(), L = raw.L();
    CleanAlignment out;

    // columns first
    for (std::size_t j = 0; j < L; ++j) {
        std::size_t gaps = 0;
        for (std::size_t k = 0; k < K; ++k)
            if (raw.rows[k][j] == kGap) ++gaps;
        if (static_cast<double>(gaps) / static_cast<double>(K) <= col_gap_max)
            out.kept_column_indices.push_back(j);
    }
    if (out.kept_column_indices.empty())
        throw data_error("cleaning removed every column (col_gap_max=" +
                         std::to_string(col_gap_max) + ")");

    // then rows, on the retained columns
    for (std::size_t k = 0; k < K; ++k) {
        std::string row;
        row.reserve(out.kept_column_indices.size());
        for (std::size_t j : out.kept_column_indices) row += raw.rows[k][j];
        if (row_gap_fraction(row) <= row_gap_max) {
            out.ids.push_back(raw.ids[k]);
            out.rows.push_back(std::move(row));
        }
    }
    if (out.rows.empty())
        throw data_error("cleaning removed every sequence (row_gap_max=" +
                         std::to_string(row_gap_max) + ")");
    return out;
}

Eigen::VectorXd column_entropy(const std::vector<std::string>& rows) {
    if (rows.empty()) throw data_error("column_entropy: empty alignment");
    const std::size_t K = rows.size(), L = rows.front().size();
    Eigen::VectorXd H(static_cast<Eigen::Index>(L));
    for (std::size_t j = 0; j < L; ++j) {
        std::array<std::size_t, kNumResidues + 1> counts{}; // gap is slot 20
        for (std::size_t k = 0; k < K; ++k) {
            const char c = rows[k][j];
            const int idx = (c == kGap) ? kNumResidues : residue_index(c);
            ++counts[static_cast<std::size_t>(idx)];
        }
        double h = 0.0;
        for (std::size_t n : counts) {
            if (n == 0) continue;
            const double f = static_cast<double>(n) / static_cast<double>(K);
            h -= f * std::log(f);
        }
        H[static_cast<Eigen::Index>(j)] = h;
    }
    return H;
}

double mean_column_entropy(const std::vector<std::string>& rows) {
    return column_entropy(rows).mean();
}

double pairwise_identity(const std::string& a, const std::string& b) {
    if (a.size() != b.size())
        throw data_error("pairwise_identity: length mismatch " +
                         std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    if (a.empty()) throw data_error("pairwise_identity: empty sequences");
    std::size_t matches = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] == b[i]) ++matches; // gap-gap counts as a match
    return static_cast<double>(matches) / static_cast<double>(a.size());
}

double effective_sequences(const std::vector<std::string>& rows,
                           double identity_threshold) {
    const std::size_t K = rows.size();
    if (K == 0) throw data_error("effective_sequences: empty alignment");
    std::vector<std::size_t> neighbors(K, 0); // includes self
    for (std::size_t k = 0; k < K; ++k) {
        ++neighbors[k];
        for (std::size_t j = k + 1; j < K; ++j) {
            if (pairwise_identity(rows[k], rows[j]) >= identity_threshold) {
                ++neighbors[k];
                ++neighbors[j];
            }
        }
    }
    double k_eff = 0.0;
    for (std::size_t n : neighbors) k_eff += 1.0 / static_cast<double>(n);
    return k_eff;
}

std::string consensus(const std::vector<std::string>& rows) {
    if (rows.empty()) throw data_error("consensus: empty alignment");
    const std::size_t K = rows.size(), L = rows.front().size();
    std::string cons(L, '?');
    for (std::size_t j = 0; j < L; ++j) {
        std::array<std::size_t, kNumResidues> counts{};
        for (std::size_t k = 0; k < K; ++k) {
            const int idx = residue_index(rows[k][j]);
            if (idx >= 0) ++counts[static_cast<std::size_t>(idx)];
        }
        // first index in canonical order wins ties
        std::size_t best = 0;
        for (std::size_t a = 1; a < counts.size(); ++a)
            if (counts[a] > counts[best]) best = a;
        if (counts[best] == 0)
            throw data_error("consensus: column " + std::to_string(j) +
                             " has no residues");
        cons[j] = kAlphabet[best];
    }
    return cons;
}

std::vector<std::string> permute_columns(const std::vector<std::string>& rows,
                                         std::uint64_t seed) {
    std::vector<std::string> out = rows;
    if (rows.empty()) return out;
    const std::size_t K = rows.size(), L = rows.front().size();
    for (std::size_t j = 0; j < L; ++j) {
        // independent stream per column so the result does not depend on
        // traversal order
        RandomStream rng(seed, j);
        for (std::size_t i = K - 1; i > 0; --i) {
            const std::size_t r = rng.uniform_int(i + 1);
            std::swap(out[i][j], out[r][j]);
        }
    }
    return out;
}

CleanAlignment permute_columns(const CleanAlignment& aln, std::uint64_t seed) {
    CleanAlignment out = aln; // ids become labels only; rows are chimeric
    out.rows = permute_columns(aln.rows, seed);
    return out;
}

AlignmentStats alignment_stats(const CleanAlignment& aln, const std::string& family) {
    AlignmentStats s;
    s.family = family;
    s.K = aln.K();
    s.L = aln.L();
    s.mean_column_entropy = mean_column_entropy(aln.rows);
    s.k_eff = effective_sequences(aln.rows);
    return s;
}

} // namespace hopgen::msa
