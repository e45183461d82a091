#include "hopgen/betafit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Dense>

#include "hopgen/errors.hpp"
#include "hopgen/rng.hpp"

namespace hopgen::betafit {

namespace {

struct XY {
    Eigen::VectorXd x; // sqrt(d)
    Eigen::VectorXd y; // beta_star
};

XY to_xy(const std::vector<BetaPoint>& points) {
    XY xy;
    xy.x.resize(static_cast<Eigen::Index>(points.size()));
    xy.y.resize(static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(points[i].d > 0.0))
            throw data_error("betafit: non-positive d for family '" +
                             points[i].family + "'");
        xy.x[static_cast<Eigen::Index>(i)] = std::sqrt(points[i].d);
        xy.y[static_cast<Eigen::Index>(i)] = points[i].beta_star;
    }
    return xy;
}

// simple 2-parameter OLS; returns false when x is (numerically) constant
bool ols_line(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double& intercept,
              double& slope) {
    const auto n = static_cast<double>(x.size());
    const double mx = x.mean(), my = y.mean();
    const double sxx = (x.array() - mx).square().sum();
    if (sxx <= 1e-12 * n) return false;
    slope = (x.array() - mx).matrix().dot((y.array() - my).matrix()) / sxx;
    intercept = my - slope * mx;
    return true;
}

FitResult finish_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                     double intercept, double slope) {
    FitResult f;
    f.intercept = intercept;
    f.slope = slope;
    f.n = static_cast<int>(x.size());
    const Eigen::VectorXd resid = y.array() - intercept - slope * x.array();
    const double sse = resid.squaredNorm();
    const double sst = (y.array() - y.mean()).square().sum();
    f.r2 = sst > 0.0 ? 1.0 - sse / sst : 1.0;
    f.rmse = std::sqrt(sse / static_cast<double>(x.size()));
    return f;
}

} // namespace

FitResult fit_sqrt_d(const std::vector<BetaPoint>& points) {
    if (points.size() < 3)
        throw data_error("fit_sqrt_d: need at least 3 points, got " +
                         std::to_string(points.size()));
    const XY xy = to_xy(points);
    double a, b;
    if (!ols_line(xy.x, xy.y, a, b))
        throw numeric_error("fit_sqrt_d: all points share one d, slope is "
                            "unidentifiable");
    return finish_fit(xy.x, xy.y, a, b);
}

BootstrapResult bootstrap_coefficients(const std::vector<BetaPoint>& points,
                                       int n_resamples, std::uint64_t seed) {
    if (n_resamples < 2)
        throw std::invalid_argument("bootstrap_coefficients: n_resamples < 2");
    fit_sqrt_d(points); // validates the base dataset
    const XY xy = to_xy(points);
    const auto n = static_cast<std::uint64_t>(points.size());

    RandomStream rng(seed, 0xb00);
    std::vector<double> intercepts, slopes, r2s;
    intercepts.reserve(static_cast<std::size_t>(n_resamples));
    slopes.reserve(static_cast<std::size_t>(n_resamples));
    r2s.reserve(static_cast<std::size_t>(n_resamples));
    BootstrapResult r;
    Eigen::VectorXd bx(xy.x.size()), by(xy.y.size());
    for (int b = 0; b < n_resamples; ++b) {
        for (Eigen::Index i = 0; i < bx.size(); ++i) {
            const auto pick = static_cast<Eigen::Index>(rng.uniform_int(n));
            bx[i] = xy.x[pick];
            by[i] = xy.y[pick];
        }
        double a0, b0;
        if (!ols_line(bx, by, a0, b0)) {
            ++r.n_degenerate_skipped; // all resampled points share one d
            continue;
        }
        const FitResult f = finish_fit(bx, by, a0, b0);
        intercepts.push_back(f.intercept);
        slopes.push_back(f.slope);
        r2s.push_back(f.r2);
    }
    if (intercepts.size() < 2)
        throw numeric_error("bootstrap_coefficients: nearly all resamples "
                            "degenerate");
    r.n_resamples = static_cast<int>(intercepts.size());

    auto sd = [](const std::vector<double>& v) {
        const double m =
            std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return std::sqrt(ss / static_cast<double>(v.size() - 1));
    };
    auto pct = [](std::vector<double> v, double q) {
        std::sort(v.begin(), v.end());
        const auto idx = static_cast<std::size_t>(
            std::llround(q * static_cast<double>(v.size() - 1)));
        return v[idx];
    };
    r.se_intercept = sd(intercepts);
    r.se_slope = sd(slopes);
    r.ci_intercept_lo = pct(intercepts, 0.025);
    r.ci_intercept_hi = pct(intercepts, 0.975);
    r.ci_slope_lo = pct(slopes, 0.025);
    r.ci_slope_hi = pct(slopes, 0.975);
    r.median_r2 = pct(r2s, 0.5);
    return r;
}

LoocvResult leave_one_family_out(const std::vector<BetaPoint>& points) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < points.size(); ++i)
        groups[points[i].family].push_back(i);
    if (groups.size() < 3)
        throw data_error("leave_one_family_out: need at least 3 families, got " +
                         std::to_string(groups.size()));

    const XY all = to_xy(points);
    const double y_mean = all.y.mean();
    double sse = 0.0, sst = 0.0;
    LoocvResult r;
    for (const auto& [family, held] : groups) {
        std::vector<BetaPoint> train;
        train.reserve(points.size() - held.size());
        for (std::size_t i = 0; i < points.size(); ++i)
            if (points[i].family != family) train.push_back(points[i]);
        const FitResult f = fit_sqrt_d(train);
        double fam_sse = 0.0;
        for (std::size_t i : held) {
            const double pred = f.intercept + f.slope * std::sqrt(points[i].d);
            const double err = points[i].beta_star - pred;
            fam_sse += err * err;
            sse += err * err;
            sst += (points[i].beta_star - y_mean) * (points[i].beta_star - y_mean);
        }
        r.families.push_back(family);
        r.held_out_rmse.push_back(
            std::sqrt(fam_sse / static_cast<double>(held.size())));
    }
    if (sst <= 0.0)
        throw numeric_error("leave_one_family_out: constant beta_star");
    r.r2 = 1.0 - sse / sst;
    r.rmse = std::sqrt(sse / static_cast<double>(points.size()));
    return r;
}

double predict_beta_star(double d, double intercept, double slope) {
    if (!(d > 0.0)) throw std::invalid_argument("predict_beta_star: d must be > 0");
    return intercept + slope * std::sqrt(d);
}

TauStarResult tau_star_gaussian(int K, int n_realizations, const TauStarGrid& grid,
                                std::uint64_t seed) {
    if (K < 2) throw std::invalid_argument("tau_star_gaussian: K < 2");
    if (n_realizations < 1)
        throw std::invalid_argument("tau_star_gaussian: n_realizations < 1");
    if (grid.n_points < 3 || !(grid.tau_min > 0.0) || !(grid.tau_max > grid.tau_min))
        throw std::invalid_argument("tau_star_gaussian: invalid grid");

    TauStarResult res;
    res.grid.resize(grid.n_points);
    const double lmin = std::log(grid.tau_min), lmax = std::log(grid.tau_max);
    for (int i = 0; i < grid.n_points; ++i)
        res.grid[i] = std::exp(lmin + (lmax - lmin) * i / (grid.n_points - 1));

    res.mean_entropy = Eigen::VectorXd::Zero(grid.n_points);
    RandomStream rng(seed, 0x7a0);
    for (int r = 0; r < n_realizations; ++r) {
        const Eigen::VectorXd z = rng.normal_vector(K);
        const double zmax = z.maxCoeff();
        for (int i = 0; i < grid.n_points; ++i) {
            // H = ln S - sum(u e^u)/S with u = tau (z - zmax), S = sum e^u
            const Eigen::ArrayXd u = res.grid[i] * (z.array() - zmax);
            const Eigen::ArrayXd e = u.exp();
            const double s = e.sum();
            res.mean_entropy[i] += std::log(s) - (u * e).sum() / s;
        }
    }
    res.mean_entropy /= static_cast<double>(n_realizations);

    double best = -1.0;
    int best_i = 1;
    for (int i = 1; i + 1 < grid.n_points; ++i) {
        const double d2 = std::abs(res.mean_entropy[i + 1] -
                                   2.0 * res.mean_entropy[i] +
                                   res.mean_entropy[i - 1]);
        if (d2 > best) {
            best = d2;
            best_i = i;
        }
    }
    res.grid_index = best_i;
    res.tau_star = res.grid[best_i];
    return res;
}

BifurcationPrediction bifurcation_predictor(const Eigen::MatrixXd& M) {
    if (M.cols() < 2)
        throw data_error("bifurcation_predictor: need at least 2 patterns");
    const Eigen::VectorXd mean = M.rowwise().mean();
    const Eigen::MatrixXd centered = M.colwise() - mean;
    const Eigen::MatrixXd C =
        centered * centered.transpose() / static_cast<double>(M.cols());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    BifurcationPrediction r;
    r.lambda1 = es.eigenvalues().maxCoeff();
    if (!(r.lambda1 > 1e-12))
        throw numeric_error("bifurcation_predictor: degenerate pattern covariance");
    r.beta_c = 1.0 / r.lambda1;
    return r;
}

NestedModelReport nested_models(const std::vector<BetaPoint>& points) {
    if (points.size() < 6)
        throw data_error("nested_models: need at least 6 points");
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd X(n, 5);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = points[static_cast<std::size_t>(i)];
        if (!(p.k_eff > 0.0))
            throw data_error("nested_models: k_eff must be positive for family '" +
                             p.family + "'");
        X(i, 0) = 1.0;
        X(i, 1) = std::sqrt(p.d);
        X(i, 2) = p.h_col;
        X(i, 3) = std::log(p.k_eff);
        X(i, 4) = p.spectral_concentration;
        y[i] = p.beta_star;
    }
    const double sst = (y.array() - y.mean()).square().sum();
    if (sst <= 0.0) throw numeric_error("nested_models: constant beta_star");

    NestedModelReport rep;
    rep.model_names = {"sqrt_d", "sqrt_d+h_col", "sqrt_d+h_col+log_k_eff",
                       "sqrt_d+h_col+log_k_eff+spectral_concentration"};
    for (int m = 0; m < 4; ++m) {
        const Eigen::MatrixXd Xm = X.leftCols(m + 2);
        const Eigen::VectorXd coef = Xm.colPivHouseholderQr().solve(y);
        const double sse = (y - Xm * coef).squaredNorm();
        rep.r2.push_back(1.0 - sse / sst);
    }
    return rep;
}

} // namespace hopgen::betafit
