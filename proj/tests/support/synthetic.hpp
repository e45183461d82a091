// Test-side helpers: synthetic families plus small reference implementations
// (naive energy, Jacobi eigenvalues, Simpson CDF) kept deliberately
// independent of the library's code paths.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hopgen/alphabet.hpp"
#include "hopgen/msa.hpp"
#include "hopgen/rng.hpp"

namespace testsup {

// Gap-free synthetic family: a random consensus with i.i.d. per-position
// mutations, so rows share structure the way an alignment would.
inline std::vector<std::string> make_rows(int K, int L, std::uint64_t seed,
                                          double mutation_rate = 0.2) {
    hopgen::RandomStream rng(seed, 0x517e);
    std::string consensus(static_cast<std::size_t>(L), 'A');
    for (int j = 0; j < L; ++j)
        consensus[static_cast<std::size_t>(j)] =
            hopgen::kAlphabet[rng.uniform_int(hopgen::kNumResidues)];
    std::vector<std::string> rows;
    rows.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        std::string row = consensus;
        for (int j = 0; j < L; ++j)
            if (rng.uniform() < mutation_rate)
                row[static_cast<std::size_t>(j)] =
                    hopgen::kAlphabet[rng.uniform_int(hopgen::kNumResidues)];
        rows.push_back(row);
    }
    return rows;
}

inline hopgen::msa::RawAlignment make_raw(int K, int L, std::uint64_t seed,
                                          double mutation_rate = 0.2) {
    hopgen::msa::RawAlignment raw;
    raw.rows = make_rows(K, L, seed, mutation_rate);
    for (int k = 0; k < K; ++k) raw.ids.push_back("seq" + std::to_string(k));
    return raw;
}

inline hopgen::msa::CleanAlignment make_clean(int K, int L, std::uint64_t seed,
                                              double mutation_rate = 0.2) {
    hopgen::msa::CleanAlignment aln;
    aln.rows = make_rows(K, L, seed, mutation_rate);
    for (int k = 0; k < K; ++k) aln.ids.push_back("seq" + std::to_string(k));
    for (int j = 0; j < L; ++j)
        aln.kept_column_indices.push_back(static_cast<std::size_t>(j));
    return aln;
}

inline Eigen::MatrixXd random_unit_columns(int d, int K, std::uint64_t seed) {
    hopgen::RandomStream rng(seed, 0xc01);
    Eigen::MatrixXd M(d, K);
    for (int k = 0; k < K; ++k) M.col(k) = rng.unit_sphere(d);
    return M;
}

// Naive reference energy with plain loops and long-double accumulation:
// E = 1/2 |xi|^2 - (1/beta) log sum_k exp(beta m_k . xi).
inline double naive_energy(const Eigen::MatrixXd& M, double beta,
                           const Eigen::VectorXd& xi) {
    long double sq = 0.0L;
    for (Eigen::Index i = 0; i < xi.size(); ++i)
        sq += static_cast<long double>(xi[i]) * xi[i];
    long double zmax = -1e308L;
    std::vector<long double> sims(static_cast<std::size_t>(M.cols()));
    for (Eigen::Index k = 0; k < M.cols(); ++k) {
        long double s = 0.0L;
        for (Eigen::Index i = 0; i < M.rows(); ++i)
            s += static_cast<long double>(M(i, k)) * xi[i];
        s *= beta;
        sims[static_cast<std::size_t>(k)] = s;
        if (s > zmax) zmax = s;
    }
    long double acc = 0.0L;
    for (long double s : sims) acc += std::exp(static_cast<double>(s - zmax));
    const long double lse = zmax + std::log(static_cast<double>(acc));
    return static_cast<double>(0.5L * sq - lse / beta);
}

// Naive softmax-weight entropy at a probe.
inline double naive_entropy(const Eigen::MatrixXd& M, double beta,
                            const Eigen::VectorXd& xi) {
    const Eigen::Index K = M.cols();
    std::vector<double> z(static_cast<std::size_t>(K));
    double zmax = -1e308;
    for (Eigen::Index k = 0; k < K; ++k) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < M.rows(); ++i) s += M(i, k) * xi[i];
        z[static_cast<std::size_t>(k)] = beta * s;
        zmax = std::max(zmax, beta * s);
    }
    double denom = 0.0;
    for (double v : z) denom += std::exp(v - zmax);
    double h = 0.0;
    for (double v : z) {
        const double w = std::exp(v - zmax) / denom;
        if (w > 0.0) h -= w * std::log(w);
    }
    return h;
}

// Central finite difference of the score from the naive energy.
inline Eigen::VectorXd fd_score(const Eigen::MatrixXd& M, double beta,
                                const Eigen::VectorXd& xi, double h = 1e-6) {
    Eigen::VectorXd g(xi.size());
    Eigen::VectorXd p = xi;
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
        p[i] = xi[i] + h;
        const double ep = naive_energy(M, beta, p);
        p[i] = xi[i] - h;
        const double em = naive_energy(M, beta, p);
        p[i] = xi[i];
        g[i] = -beta * (ep - em) / (2.0 * h);
    }
    return g;
}

// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations,
// descending. Independent of Eigen's decompositions.
inline std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-26) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a[i][p], aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a[p][i], aqi = a[q][i];
                    a[p][i] = c * api - s * aqi;
                    a[q][i] = s * api + c * aqi;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
    std::sort(ev.begin(), ev.end(), std::greater<double>());
    return ev;
}

// CDF of the first coordinate of a uniform point on the unit sphere in
// d dims: density proportional to (1 - x^2)^((d-3)/2) on [-1, 1],
// integrated with Simpson's rule.
inline double sphere_marginal_cdf(double x, int d) {
    auto pdf = [d](double t) {
        return std::pow(std::max(0.0, 1.0 - t * t), (d - 3) / 2.0);
    };
    auto simpson = [&pdf](double a, double b) {
        const int n = 2000; // even
        const double h = (b - a) / n;
        double s = pdf(a) + pdf(b);
        for (int i = 1; i < n; ++i) s += pdf(a + i * h) * (i % 2 ? 4.0 : 2.0);
        return s * h / 3.0;
    };
    const double total = simpson(-1.0, 1.0);
    if (x <= -1.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return simpson(-1.0, x) / total;
}

inline double ks_statistic(std::vector<double> xs, int d) {
    std::sort(xs.begin(), xs.end());
    const auto n = static_cast<double>(xs.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = sphere_marginal_cdf(xs[i], d);
        ks = std::max(ks, std::abs((i + 1) / n - f));
        ks = std::max(ks, std::abs(f - i / n));
    }
    return ks;
}

} // namespace testsup
