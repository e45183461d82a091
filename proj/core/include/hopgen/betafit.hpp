#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hopgen::betafit {

// One family (or subsampled family) measurement.
struct BetaPoint {
    std::string family; // also the grouping key for leave-one-family-out
    double d = 0.0;
    double beta_star = 0.0;
    // optional extra features; 0 when absent
    double h_col = 0.0;
    double k_eff = 0.0;
    double spectral_concentration = 0.0;
};

struct FitResult {
    double intercept = 0.0;
    double slope = 0.0;
    double r2 = 0.0;
    double rmse = 0.0;
    int n = 0;
};

// OLS of beta_star on (1, sqrt(d)). Needs >= 3 points and non-constant d.
FitResult fit_sqrt_d(const std::vector<BetaPoint>& points);

struct BootstrapResult {
    double se_intercept = 0.0;
    double se_slope = 0.0;
    double ci_intercept_lo = 0.0, ci_intercept_hi = 0.0; // 95% percentile
    double ci_slope_lo = 0.0, ci_slope_hi = 0.0;
    double median_r2 = 0.0;
    int n_resamples = 0;
    int n_degenerate_skipped = 0;
};
BootstrapResult bootstrap_coefficients(const std::vector<BetaPoint>& points,
                                       int n_resamples = 10000,
                                       std::uint64_t seed = 0);

struct LoocvResult {
    double r2 = 0.0;   // 1 - SSE/SST over pooled held-out predictions
    double rmse = 0.0;
    std::vector<std::string> families;
    std::vector<double> held_out_rmse; // per left-out family
};
// Leave-one-family-out: groups points by family id, refits on the rest.
LoocvResult leave_one_family_out(const std::vector<BetaPoint>& points);

// beta* = intercept + slope sqrt(d); defaults are the pooled fit.
double predict_beta_star(double d, double intercept = 1.565, double slope = 0.281);

struct TauStarGrid {
    double tau_min = 0.01;
    double tau_max = 100.0;
    int n_points = 400; // log-spaced
};
struct TauStarResult {
    double tau_star = 0.0;
    int grid_index = 0;
    Eigen::VectorXd grid;
    Eigen::VectorXd mean_entropy;
};
// Pattern-free analogue: entropy of softmax(tau z), z a K-vector of standard
// normals, averaged over n_realizations; tau* maximizes |second difference|
// of the averaged curve vs ln tau. Lands near 1.6 for K >= 30.
TauStarResult tau_star_gaussian(int K, int n_realizations = 500,
                                const TauStarGrid& grid = {}, std::uint64_t seed = 0);

// beta_c = 1 / lambda_1(cov of memory columns). Weak single-feature
// predictor; empirically beta* / beta_c sits in [0.2, 0.4].
struct BifurcationPrediction {
    double lambda1 = 0.0;
    double beta_c = 0.0;
};
BifurcationPrediction bifurcation_predictor(const Eigen::MatrixXd& M);

// Nested OLS models over optional features, reported as R2 per model:
// (sqrt d), (sqrt d, h_col), (sqrt d, h_col, log k_eff),
// (sqrt d, h_col, log k_eff, spectral_concentration).
struct NestedModelReport {
    std::vector<std::string> model_names;
    std::vector<double> r2;
};
NestedModelReport nested_models(const std::vector<BetaPoint>& points);

} // namespace hopgen::betafit
