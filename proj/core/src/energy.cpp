#include "hopgen/energy.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "hopgen/errors.hpp"
#include "hopgen/rng.hpp"

namespace hopgen::energy {

double logsumexp(const Eigen::VectorXd& v) {
    const double vmax = v.maxCoeff();
    if (!std::isfinite(vmax)) return vmax; // all -inf, or a non-finite entry
    return vmax + std::log((v.array() - vmax).exp().sum());
}

Eigen::VectorXd softmax(const Eigen::VectorXd& v) {
    const double vmax = v.maxCoeff();
    Eigen::VectorXd w = (v.array() - vmax).exp();
    return w / w.sum();
}

double energy_value(const Eigen::MatrixXd& M, double beta, const Eigen::VectorXd& xi) {
    if (beta <= 0.0) throw std::invalid_argument("energy: beta must be positive");
    const Eigen::VectorXd sims = M.transpose() * xi;
    return 0.5 * xi.squaredNorm() - logsumexp(beta * sims) / beta;
}

AttentionResult attention(const Eigen::MatrixXd& M, double beta,
                          const Eigen::VectorXd& xi) {
    if (beta <= 0.0) throw std::invalid_argument("attention: beta must be positive");
    AttentionResult r;
    const Eigen::VectorXd sims = M.transpose() * xi;
    r.weights = softmax(beta * sims);
    r.retrieved = M * r.weights;
    double h = 0.0;
    for (Eigen::Index k = 0; k < r.weights.size(); ++k) {
        const double p = r.weights[k];
        if (p > 0.0) h -= p * std::log(p);
    }
    r.entropy = h;
    r.similarity_mean = r.weights.dot(sims);
    r.similarity_variance =
        r.weights.dot(sims.cwiseProduct(sims)) - r.similarity_mean * r.similarity_mean;
    if (r.similarity_variance < 0.0) r.similarity_variance = 0.0; // roundoff
    return r;
}

Eigen::VectorXd score(const Eigen::MatrixXd& M, double beta, const Eigen::VectorXd& xi) {
    const Eigen::VectorXd retrieved = M * softmax(beta * (M.transpose() * xi));
    return beta * (retrieved - xi);
}

EntropyDerivativeCheck entropy_derivative_check(const Eigen::MatrixXd& M, double beta,
                                                const Eigen::VectorXd& xi, double h) {
    EntropyDerivativeCheck c;
    const AttentionResult at = attention(M, beta, xi);
    c.analytic = -beta * at.similarity_variance;
    const double h_plus = attention(M, beta + h, xi).entropy;
    const double h_minus = attention(M, beta - h, xi).entropy;
    c.numeric = (h_plus - h_minus) / (2.0 * h);
    c.abs_err = std::abs(c.analytic - c.numeric);
    return c;
}

BetaStarResult find_beta_star(const Eigen::MatrixXd& M, const BetaStarGrid& grid,
                              ProbeKind probe, int n_probes, std::uint64_t seed) {
    if (grid.n_points < 3)
        throw std::invalid_argument("find_beta_star: grid needs at least 3 points");
    if (!(grid.beta_min > 0.0) || !(grid.beta_max > grid.beta_min))
        throw std::invalid_argument("find_beta_star: invalid grid bounds");

    BetaStarResult res;
    res.probe_kind = probe;
    res.grid.resize(grid.n_points);
    const double lmin = std::log(grid.beta_min), lmax = std::log(grid.beta_max);
    for (int i = 0; i < grid.n_points; ++i)
        res.grid[i] = std::exp(lmin + (lmax - lmin) * i / (grid.n_points - 1));

    std::vector<Eigen::VectorXd> probes;
    if (probe == ProbeKind::stored_patterns) {
        probes.reserve(static_cast<std::size_t>(M.cols()));
        for (Eigen::Index k = 0; k < M.cols(); ++k) probes.push_back(M.col(k));
    } else {
        RandomStream rng(seed, 0x9e7a);
        probes.reserve(static_cast<std::size_t>(n_probes));
        for (int k = 0; k < n_probes; ++k) probes.push_back(rng.unit_sphere(M.rows()));
    }

    res.mean_entropy = Eigen::VectorXd::Zero(grid.n_points);
    for (const auto& xi : probes) {
        const Eigen::VectorXd sims = M.transpose() * xi;
        for (int i = 0; i < grid.n_points; ++i) {
            const Eigen::VectorXd w = softmax(res.grid[i] * sims);
            double h = 0.0;
            for (Eigen::Index k = 0; k < w.size(); ++k)
                if (w[k] > 0.0) h -= w[k] * std::log(w[k]);
            res.mean_entropy[i] += h;
        }
    }
    res.mean_entropy /= static_cast<double>(probes.size());

    if (res.mean_entropy.maxCoeff() - res.mean_entropy.minCoeff() < 1e-9)
        throw numeric_error("find_beta_star: entropy curve is flat, no transition "
                            "on the grid");

    // uniform in ln(beta), so the raw second difference ranks curvature
    double best = -1.0;
    int best_i = 1;
    for (int i = 1; i + 1 < grid.n_points; ++i) {
        const double d2 = std::abs(res.mean_entropy[i + 1] - 2.0 * res.mean_entropy[i] +
                                   res.mean_entropy[i - 1]);
        if (d2 > best) {
            best = d2;
            best_i = i;
        }
    }
    res.grid_index = best_i;
    res.beta_star = res.grid[best_i];
    return res;
}

double lipschitz_bound(const Eigen::MatrixXd& M, double beta) {
    const double sigma_max = Eigen::BDCSVD<Eigen::MatrixXd>(M).singularValues()[0];
    return 1.0 + beta * sigma_max * sigma_max / 2.0;
}

SelfSimilarityGap self_similarity_gap(const Eigen::MatrixXd& M) {
    const Eigen::Index K = M.cols();
    if (K < 2) throw data_error("self_similarity_gap: need at least 2 patterns");
    const Eigen::MatrixXd G = M.transpose() * M;
    SelfSimilarityGap r;
    r.gaps.resize(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        double max_other = -2.0;
        for (Eigen::Index j = 0; j < K; ++j)
            if (j != k && G(j, k) > max_other) max_other = G(j, k);
        r.gaps[k] = 1.0 - max_other;
    }
    r.min_gap = r.gaps.minCoeff();
    r.duplicate_warning = r.min_gap <= 1e-12;
    return r;
}

SimilarityProbe similarity_variance_probe(const Eigen::MatrixXd& M, int n_probes,
                                          std::uint64_t seed) {
    if (n_probes < 1)
        throw std::invalid_argument("similarity_variance_probe: n_probes < 1");
    RandomStream rng(seed, 0x51a1);
    const Eigen::Index K = M.cols();
    const auto n = static_cast<double>(K) * n_probes;
    double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
    for (int p = 0; p < n_probes; ++p) {
        const Eigen::VectorXd xi = rng.unit_sphere(M.rows());
        const Eigen::VectorXd sims = M.transpose() * xi;
        for (Eigen::Index k = 0; k < K; ++k) {
            const double e = sims[k];
            s1 += e;
            s2 += e * e;
            s3 += e * e * e;
            s4 += e * e * e * e;
        }
    }
    SimilarityProbe r;
    r.mean = s1 / n;
    const double m2 = s2 / n - r.mean * r.mean;
    const double m4 = s4 / n - 4.0 * r.mean * s3 / n +
                      6.0 * r.mean * r.mean * s2 / n -
                      3.0 * r.mean * r.mean * r.mean * r.mean;
    r.variance = m2;
    r.d_times_variance = static_cast<double>(M.rows()) * m2;
    r.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    return r;
}

} // namespace hopgen::energy
