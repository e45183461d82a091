#include "hopgen/embed.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "hopgen/alphabet.hpp"
#include "hopgen/errors.hpp"

namespace hopgen::embed {

Eigen::VectorXd one_hot_encode(const std::string& row) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(
        static_cast<Eigen::Index>(row.size()) * kNumResidues);
    for (std::size_t j = 0; j < row.size(); ++j) {
        const char c = row[j];
        if (c == kGap) continue; // gap block stays all-zero
        const int idx = residue_index(c);
        if (idx < 0)
            throw data_error("one_hot_encode: unexpected character '" +
                             std::string(1, c) + "' at position " +
                             std::to_string(j + 1));
        x[static_cast<Eigen::Index>(j) * kNumResidues + idx] = 1.0;
    }
    return x;
}

Eigen::MatrixXd one_hot_encode(const std::vector<std::string>& rows) {
    if (rows.empty()) throw data_error("one_hot_encode: empty alignment");
    const Eigen::Index n = static_cast<Eigen::Index>(rows.front().size()) *
                           kNumResidues;
    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k].size() != rows.front().size())
            throw data_error("one_hot_encode: ragged alignment");
        X.col(static_cast<Eigen::Index>(k)) = one_hot_encode(rows[k]);
    }
    return X;
}

PcaModel fit_pca(const Eigen::MatrixXd& onehot, double rho_min, std::size_t L) {
    if (rho_min <= 0.0 || rho_min > 1.0)
        throw std::invalid_argument("fit_pca: rho_min must be in (0, 1]");
    if (onehot.cols() < 2)
        throw data_error("fit_pca: need at least 2 sequences");

    PcaModel model;
    model.rho_min = rho_min;
    model.L = L;
    model.mean = onehot.rowwise().mean();

    Eigen::MatrixXd centered = onehot.colwise() - model.mean;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
    model.singular_values = svd.singularValues();

    const double sigma0 = model.singular_values[0];
    if (!(sigma0 > 1e-9))
        throw numeric_error("fit_pca: degenerate family, centered matrix has "
                            "rank 0 (all sequences identical?)");

    const double total = model.singular_values.squaredNorm();
    const Eigen::Index n_sv = model.singular_values.size();
    const double rank_tol = static_cast<double>(std::max(onehot.rows(), onehot.cols())) *
                            std::numeric_limits<double>::epsilon() * sigma0;
    Eigen::Index rank = 0;
    while (rank < n_sv && model.singular_values[rank] > rank_tol) ++rank;

    Eigen::Index d = rank; // fallback when rounding keeps cum below rho_min
    double cum = 0.0;
    for (Eigen::Index p = 0; p < n_sv; ++p) {
        cum += model.singular_values[p] * model.singular_values[p];
        if (cum + 1e-12 * total >= rho_min * total) {
            d = std::min(p + 1, rank);
            break;
        }
    }

    model.basis = svd.matrixU().leftCols(d);
    // sign convention: largest-magnitude entry of each column positive
    for (Eigen::Index c = 0; c < d; ++c) {
        Eigen::Index imax;
        model.basis.col(c).cwiseAbs().maxCoeff(&imax);
        if (model.basis(imax, c) < 0.0) model.basis.col(c) = -model.basis.col(c);
    }
    return model;
}

Eigen::VectorXd project(const PcaModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.mean.size())
        throw data_error("project: vector length " + std::to_string(x.size()) +
                         " does not match encoding length " +
                         std::to_string(model.mean.size()));
    return model.basis.transpose() * (x - model.mean);
}

Eigen::VectorXd project_normalize(const PcaModel& model, const Eigen::VectorXd& x) {
    Eigen::VectorXd z = project(model, x);
    const double norm = z.norm();
    if (norm < 1e-12)
        throw numeric_error("project_normalize: projection is numerically zero "
                            "(sequence coincides with the family mean)");
    return z / norm;
}

std::string decode(const PcaModel& model, const Eigen::VectorXd& xi) {
    if (xi.size() != model.d())
        throw data_error("decode: state dimension " + std::to_string(xi.size()) +
                         " does not match model d=" + std::to_string(model.d()));
    if (!xi.allFinite())
        throw numeric_error("decode: non-finite state");
    const Eigen::VectorXd x = model.mean + model.basis * xi;
    std::string seq(model.L, '?');
    for (std::size_t j = 0; j < model.L; ++j) {
        const Eigen::Index off = static_cast<Eigen::Index>(j) * kNumResidues;
        int best = 0;
        for (int a = 1; a < kNumResidues; ++a)
            if (x[off + a] > x[off + best]) best = a; // canonical order on ties
        seq[j] = kAlphabet[static_cast<std::size_t>(best)];
    }
    return seq;
}

FamilyModel build_memory(const msa::CleanAlignment& aln, double rho_min,
                         const std::string& family) {
    if (aln.K() < 2)
        throw data_error("build_memory: need at least 2 sequences, got " +
                         std::to_string(aln.K()));
    FamilyModel fm;
    const Eigen::MatrixXd X = one_hot_encode(aln.rows);
    fm.pca = fit_pca(X, rho_min, aln.L());
    fm.memory.family = family;
    fm.memory.source_ids = aln.ids;
    fm.memory.patterns.resize(fm.pca.d(), X.cols());
    for (Eigen::Index k = 0; k < X.cols(); ++k)
        fm.memory.patterns.col(k) = project_normalize(fm.pca, X.col(k));
    return fm;
}

} // namespace hopgen::embed
