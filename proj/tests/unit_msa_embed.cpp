#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "hopgen/embed.hpp"
#include "hopgen/errors.hpp"
#include "hopgen/msa.hpp"
#include "support/synthetic.hpp"

using namespace hopgen;
using doctest::Approx;

namespace {

msa::RawAlignment sto(const std::string& text) {
    std::istringstream in(text);
    return msa::parse_stockholm(in);
}

msa::RawAlignment fasta(const std::string& text) {
    std::istringstream in(text);
    return msa::parse_fasta(in);
}

} // namespace

TEST_CASE("stockholm parser reads multi-block alignments") {
    const std::string text =
        "# STOCKHOLM 1.0\n"
        "#=GF ID test\n"
        "seq1 ARND\n"
        "seq2 AR-D\n"
        "\n"
        "seq1 CQEG\n"
        "seq2 CQ.G\n"
        "//\n";
    const auto aln = sto(text);
    REQUIRE(aln.K() == 2);
    CHECK(aln.L() == 8);
    CHECK(aln.ids[0] == "seq1");
    CHECK(aln.rows[0] == "ARNDCQEG");
    CHECK(aln.rows[1] == "AR-DCQ-G"); // '.' normalized to '-'
}

TEST_CASE("stockholm parser accepts a missing terminator") {
    const auto aln = sto("seqA AAAA\nseqB RRRR\n");
    CHECK(aln.K() == 2);
}

TEST_CASE("stockholm parser rejects trailing fields") {
    CHECK_THROWS_AS(sto("seq1 ARND extra\n"), data_error);
}

TEST_CASE("fasta parser round-trips through the writer") {
    msa::RawAlignment aln;
    aln.ids = {"a", "b"};
    aln.rows = {"ARNDCQEGHILKMFPSTWYV", "AAAAAAAAAAAAAAAAAAAA"};
    std::ostringstream out;
    msa::write_fasta(out, aln.ids, aln.rows, 7);
    const auto back = fasta(out.str());
    CHECK(back.ids == aln.ids);
    CHECK(back.rows == aln.rows);
}

TEST_CASE("fasta parser takes the first header token as the id") {
    const auto aln = fasta(">sp|P1|X desc here\nAR-D\n");
    REQUIRE(aln.K() == 1);
    CHECK(aln.ids[0] == "sp|P1|X");
}

TEST_CASE("ambiguity codes are replaced with gaps and counted") {
    const auto aln = fasta(">a\nAJXB\n>b\nARND\n");
    CHECK(aln.rows[0] == "A---");
    CHECK(aln.non_canonical_replaced == 3);
}

TEST_CASE("lowercase residues and dots are normalized") {
    const auto aln = fasta(">a\nar.d\n");
    CHECK(aln.rows[0] == "AR-D");
}

TEST_CASE("illegal characters raise a data error naming the position") {
    try {
        fasta(">a\nAR*D\n");
        FAIL("expected a data error");
    } catch (const data_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("*") != std::string::npos);
    }
}

TEST_CASE("ragged alignments are rejected") {
    CHECK_THROWS_AS(fasta(">a\nARND\n>b\nAR\n"), data_error);
}

TEST_CASE("cleaning drops gappy columns then gappy rows, strictly") {
    msa::RawAlignment raw;
    raw.ids = {"a", "b", "c", "d"};
    // column 1 is 75% gaps (> 0.5, dropped); columns 0 and 2 stay.
    raw.rows = {"A-A", "R-R", "N-N", "DDD"};
    const auto aln = msa::clean(raw, 0.5, 0.3);
    CHECK(aln.rows[0] == "AA");
    CHECK(aln.kept_column_indices == std::vector<std::size_t>{0, 2});
    CHECK(aln.K() == 4);
}

TEST_CASE("cleaning keeps a column at exactly the gap threshold") {
    msa::RawAlignment raw;
    raw.ids = {"a", "b"};
    raw.rows = {"A-", "AA"}; // column 1 gap fraction exactly 0.5
    const auto aln = msa::clean(raw, 0.5, 0.9);
    CHECK(aln.L() == 2);
}

TEST_CASE("cleaning drops rows that stay gappy on retained columns") {
    msa::RawAlignment raw;
    raw.ids = {"a", "b", "c"};
    raw.rows = {"AAAA", "RRRR", "N---"}; // row c: 75% gaps > 0.3
    const auto aln = msa::clean(raw, 0.5, 0.3);
    CHECK(aln.K() == 2);
    CHECK(aln.ids == std::vector<std::string>{"a", "b"});
}

TEST_CASE("cleaning a clean alignment changes nothing") {
    const auto raw = testsup::make_raw(12, 9, 5);
    const auto once = msa::clean(raw, 0.5, 0.3);
    msa::RawAlignment again;
    again.ids = once.ids;
    again.rows = once.rows;
    const auto twice = msa::clean(again, 0.5, 0.3);
    CHECK(twice.rows == once.rows);
    CHECK(twice.ids == once.ids);
}

TEST_CASE("column entropy of a uniform 20-residue column is ln 20") {
    std::vector<std::string> rows;
    for (int i = 0; i < kNumResidues; ++i)
        rows.push_back(std::string(1, kAlphabet[i]));
    CHECK(msa::column_entropy(rows)(0) == Approx(std::log(20.0)).epsilon(1e-12));
}

TEST_CASE("column entropy counts gaps as a 21st symbol") {
    const std::vector<std::string> rows = {"A", "-"};
    CHECK(msa::column_entropy(rows)(0) == Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("a conserved column has zero entropy") {
    const std::vector<std::string> rows = {"A", "A", "A"};
    CHECK(msa::column_entropy(rows)(0) == Approx(0.0));
}

TEST_CASE("pairwise identity is symmetric and matches gap pairs") {
    CHECK(msa::pairwise_identity("AR-D", "AN-D") == Approx(0.75));
    CHECK(msa::pairwise_identity("AR-D", "AN-D") ==
          msa::pairwise_identity("AN-D", "AR-D"));
    CHECK(msa::pairwise_identity("----", "----") == Approx(1.0));
}

TEST_CASE("random sequence pairs have identity near one twentieth") {
    const auto rows = testsup::make_rows(60, 200, 17, 1.0); // fully random
    double acc = 0.0;
    int n = 0;
    for (int i = 0; i < 20; ++i)
        for (int j = i + 1; j < 20; ++j) {
            acc += msa::pairwise_identity(rows[static_cast<std::size_t>(i)],
                                          rows[static_cast<std::size_t>(j)]);
            ++n;
        }
    CHECK(acc / n == Approx(0.05).epsilon(0.35));
}

TEST_CASE("effective sequence count is bounded by 1 and K") {
    const auto rows = testsup::make_rows(25, 40, 3);
    const double keff = msa::effective_sequences(rows, 0.8);
    CHECK(keff >= 1.0);
    CHECK(keff <= 25.0);
}

TEST_CASE("duplicated rows halve their effective weight") {
    // two identical rows and one distant row: K_eff = 1/2 + 1/2 + 1 = 2
    const std::vector<std::string> rows = {"AAAAAAAAAA", "AAAAAAAAAA",
                                           "RNDCQEGHIL"};
    CHECK(msa::effective_sequences(rows, 0.8) == Approx(2.0).epsilon(1e-12));
}

TEST_CASE("consensus picks the most frequent residue with canonical ties") {
    const std::vector<std::string> rows = {"AR", "AN", "RN", "-N"};
    // col 0: A=2, R=1; col 1: N=3
    CHECK(msa::consensus(rows) == "AN");
    // tie A vs R resolves to A (earlier in canonical order)
    const std::vector<std::string> tie = {"A", "R"};
    CHECK(msa::consensus(tie) == "A");
}

TEST_CASE("column permutation preserves per-column residue counts") {
    const auto rows = testsup::make_rows(15, 12, 21);
    const auto shuffled = msa::permute_columns(rows, 99);
    REQUIRE(shuffled.size() == rows.size());
    for (std::size_t j = 0; j < rows[0].size(); ++j) {
        std::multiset<char> before, after;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            before.insert(rows[k][j]);
            after.insert(shuffled[k][j]);
        }
        CHECK(before == after);
    }
    // entropy is a column statistic, so it survives the shuffle
    const Eigen::VectorXd h_before = msa::column_entropy(rows);
    const Eigen::VectorXd h_after = msa::column_entropy(shuffled);
    for (Eigen::Index j = 0; j < h_before.size(); ++j)
        CHECK(h_after(j) == Approx(h_before(j)).epsilon(1e-12));
}

TEST_CASE("column permutation replays the seeded shuffle exactly") {
    const std::vector<std::string> rows = {"A", "R", "N", "D", "C"};
    const std::uint64_t seed = 4242;
    const auto out = msa::permute_columns(rows, seed);

    // reference Fisher-Yates on the column, same stream (seed, column 0)
    RandomStream rng(seed, 0);
    std::vector<char> col = {'A', 'R', 'N', 'D', 'C'};
    for (std::size_t i = col.size() - 1; i > 0; --i) {
        const auto r = rng.uniform_int(static_cast<std::uint64_t>(i + 1));
        std::swap(col[i], col[r]);
    }
    for (std::size_t k = 0; k < col.size(); ++k) CHECK(out[k][0] == col[k]);
}

TEST_CASE("alignment stats report the family dimensions") {
    auto aln = testsup::make_clean(10, 8, 2);
    const auto stats = msa::alignment_stats(aln, "fam");
    CHECK(stats.family == "fam");
    CHECK(stats.K == 10);
    CHECK(stats.L == 8);
    CHECK(stats.mean_column_entropy >= 0.0);
    CHECK(stats.mean_column_entropy <= std::log(21.0));
}

// ---------------------------------------------------------------- embedding

TEST_CASE("one-hot encoding puts a single 1 per residue and zeros for gaps") {
    const Eigen::VectorXd v = embed::one_hot_encode(std::string("A-C"));
    REQUIRE(v.size() == 60);
    CHECK(v.sum() == Approx(2.0));
    CHECK(v[0] == 1.0);               // A at position 0, slot 0
    CHECK(v.segment(20, 20).sum() == 0.0); // gap block
    CHECK(v[40 + 4] == 1.0);          // C = canonical index 4
}

TEST_CASE("two opposite sequences give a one-dimensional model") {
    // "A" vs "R": centered one-hots are +-(0.5, -0.5, 0...), sigma_1 = 1
    const auto X = embed::one_hot_encode(std::vector<std::string>{"A", "R"});
    const auto pca = embed::fit_pca(X, 0.95, 1);
    REQUIRE(pca.d() == 1);
    CHECK(pca.singular_values[0] == Approx(1.0).epsilon(1e-12));
    // sign convention: the largest-magnitude entry of the basis is positive
    CHECK(pca.basis(0, 0) == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(pca.basis(1, 0) == Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-12));

    const Eigen::VectorXd zA =
        embed::project(pca, embed::one_hot_encode(std::string("A")));
    CHECK(zA[0] == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(embed::decode(pca, zA) == "A");
    const Eigen::VectorXd zR =
        embed::project(pca, embed::one_hot_encode(std::string("R")));
    CHECK(embed::decode(pca, zR) == "R");
}

TEST_CASE("retained variance matches an independent eigenvalue computation") {
    const auto rows = testsup::make_rows(9, 4, 31);
    const auto X = embed::one_hot_encode(rows);
    const auto pca = embed::fit_pca(X, 1.0, 4);

    // Gram matrix of the centered data; its nonzero eigenvalues are the
    // squared singular values. Jacobi rotations, no shared code with the fit.
    Eigen::MatrixXd C = X;
    const Eigen::VectorXd mean = X.rowwise().mean();
    C.colwise() -= mean;
    const Eigen::MatrixXd G = C.transpose() * C;
    std::vector<std::vector<double>> g(9, std::vector<double>(9));
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = G(i, j);
    const auto ev = testsup::jacobi_eigenvalues(g);

    REQUIRE(pca.singular_values.size() <= 9);
    for (Eigen::Index i = 0; i < pca.singular_values.size(); ++i) {
        const double expect = std::max(0.0, ev[static_cast<std::size_t>(i)]);
        CHECK(pca.singular_values[i] * pca.singular_values[i] ==
              Approx(expect).epsilon(1e-8).scale(1.0));
    }
}

TEST_CASE("the basis is orthonormal") {
    const auto rows = testsup::make_rows(20, 10, 7);
    const auto pca = embed::fit_pca(embed::one_hot_encode(rows), 0.95, 10);
    const Eigen::MatrixXd I =
        pca.basis.transpose() * pca.basis -
        Eigen::MatrixXd::Identity(pca.d(), pca.d());
    CHECK(I.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("dimension grows with the retained-variance target") {
    const auto rows = testsup::make_rows(30, 12, 13);
    const auto X = embed::one_hot_encode(rows);
    const auto lo = embed::fit_pca(X, 0.5, 12);
    const auto hi = embed::fit_pca(X, 0.99, 12);
    CHECK(lo.d() <= hi.d());
    CHECK(lo.retained_variance() / lo.total_variance() >= 0.5);
}

TEST_CASE("reconstruction improves as the dimension grows") {
    const auto rows = testsup::make_rows(30, 12, 13);
    const auto X = embed::one_hot_encode(rows);
    const auto lo = embed::fit_pca(X, 0.5, 12);
    const auto hi = embed::fit_pca(X, 0.99, 12);
    double err_lo = 0.0, err_hi = 0.0;
    for (int k = 0; k < 30; ++k) {
        const Eigen::VectorXd x = X.col(k);
        err_lo += (x - (lo.mean + lo.basis * embed::project(lo, x))).squaredNorm();
        err_hi += (x - (hi.mean + hi.basis * embed::project(hi, x))).squaredNorm();
    }
    CHECK(err_hi <= err_lo + 1e-9);
}

TEST_CASE("full-variance fits reproduce every gap-free sequence") {
    const auto rows = testsup::make_rows(25, 15, 77);
    const auto pca = embed::fit_pca(embed::one_hot_encode(rows), 1.0, 15);
    for (const auto& row : rows) {
        const Eigen::VectorXd z = embed::project(pca, embed::one_hot_encode(row));
        CHECK(embed::decode(pca, z) == row);
    }
}

TEST_CASE("decode never produces gaps and is deterministic") {
    const auto rows = testsup::make_rows(12, 9, 41);
    const auto pca = embed::fit_pca(embed::one_hot_encode(rows), 0.9, 9);
    RandomStream rng(5, 6);
    for (int t = 0; t < 20; ++t) {
        const Eigen::VectorXd z = rng.normal_vector(pca.d());
        const std::string s = embed::decode(pca, z);
        CHECK(s == embed::decode(pca, z));
        for (char c : s) CHECK(is_canonical(c));
    }
}

TEST_CASE("projection of the mean is the origin") {
    const auto rows = testsup::make_rows(14, 6, 23);
    const auto pca = embed::fit_pca(embed::one_hot_encode(rows), 0.9, 6);
    CHECK(embed::project(pca, pca.mean).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("memory columns are unit length") {
    const auto aln = testsup::make_clean(18, 10, 3);
    const auto model = embed::build_memory(aln, 0.95, "fam");
    for (Eigen::Index k = 0; k < model.memory.K(); ++k)
        CHECK(model.memory.patterns.col(k).norm() == Approx(1.0).epsilon(1e-12));
    CHECK(model.memory.family == "fam");
    CHECK(model.memory.source_ids.size() == 18);
}

TEST_CASE("a single-sequence family cannot form a memory") {
    msa::CleanAlignment aln;
    aln.ids = {"only"};
    aln.rows = {"ARND"};
    aln.kept_column_indices = {0, 1, 2, 3};
    CHECK_THROWS_AS(embed::build_memory(aln, 0.95, "x"), data_error);
}

TEST_CASE("projecting a zero-variance direction fails loudly") {
    // identical sequences: centered matrix is zero, no usable spectrum
    const std::vector<std::string> rows(5, std::string("AAAA"));
    CHECK_THROWS_AS(embed::fit_pca(embed::one_hot_encode(rows), 0.95, 4),
                    numeric_error);
}
