#include <doctest.h>

#include <cmath>
#include <set>

#include "hopgen/baselines.hpp"
#include "hopgen/betafit.hpp"
#include "hopgen/errors.hpp"
#include "support/synthetic.hpp"

using namespace hopgen;
using doctest::Approx;

namespace {

embed::FamilyModel small_model(int K = 14, int L = 10, std::uint64_t seed = 71) {
    return embed::build_memory(testsup::make_clean(K, L, seed), 0.95, "fam");
}

} // namespace

TEST_CASE("bootstrap replay copies stored patterns bit for bit") {
    const auto model = small_model();
    const auto s = baselines::bootstrap_replay(model, 40, 7, 8);
    REQUIRE(s.size() == 40);
    CHECK(s.method == "bootstrap");
    CHECK(s.n_chains == 8);
    for (const auto& st : s.states) {
        bool found = false;
        for (Eigen::Index k = 0; k < model.memory.K() && !found; ++k)
            found = (st - model.memory.patterns.col(k)).cwiseAbs().maxCoeff() == 0.0;
        CHECK(found);
    }
    // provenance groups are contiguous and cover the whole range
    CHECK(s.chain_of.front() == 0);
    CHECK(s.chain_of.back() == 7);
    for (std::size_t i = 1; i < s.chain_of.size(); ++i)
        CHECK(s.chain_of[i] >= s.chain_of[i - 1]);
}

TEST_CASE("gaussian perturbation moves states by the step-noise scale") {
    const auto model = small_model();
    const double beta = 8.0, alpha = 0.01;
    const auto s = baselines::gaussian_perturbation(model, 60, beta, alpha, 7, 8);
    REQUIRE(s.size() == 60);
    const double sigma = std::sqrt(2.0 * alpha / beta);
    // displacement from the closest pattern is a d-dim gaussian of scale sigma
    double mean_sq = 0.0;
    for (const auto& st : s.states) {
        double best = 1e300;
        for (Eigen::Index k = 0; k < model.memory.K(); ++k)
            best = std::min(best,
                            (st - model.memory.patterns.col(k)).squaredNorm());
        mean_sq += best;
    }
    mean_sq /= 60.0;
    const double d = static_cast<double>(model.memory.d());
    CHECK(mean_sq == Approx(sigma * sigma * d).epsilon(0.35));
}

TEST_CASE("convex combinations replay their dirichlet weights") {
    const auto model = small_model();
    const std::uint64_t seed = 31;
    const auto s = baselines::convex_combination(model, 25, seed, 5);
    REQUIRE(s.size() == 25);

    RandomStream rng(seed, 0xcc);
    const Eigen::Index K = model.memory.K();
    for (int i = 0; i < 25; ++i) {
        Eigen::VectorXd w(K);
        for (Eigen::Index k = 0; k < K; ++k) w[k] = rng.exponential();
        w /= w.sum();
        CHECK(w.minCoeff() >= 0.0);
        CHECK(w.sum() == Approx(1.0).epsilon(1e-12));
        const Eigen::VectorXd expect = model.memory.patterns * w;
        CHECK((s.states[static_cast<std::size_t>(i)] - expect)
                  .cwiseAbs()
                  .maxCoeff() < 1e-14);
    }
}

TEST_CASE("a two-pattern convex state sits on the connecting segment") {
    // shrink the family to two patterns so hull membership is a line check
    auto model = small_model();
    model.memory.patterns = model.memory.patterns.leftCols(2).eval();
    model.memory.source_ids.resize(2);
    const auto s = baselines::convex_combination(model, 10, 3, 2);
    const Eigen::VectorXd a = model.memory.patterns.col(0);
    const Eigen::VectorXd b = model.memory.patterns.col(1);
    for (const auto& st : s.states) {
        const Eigen::VectorXd dir = b - a;
        const double t = (st - a).dot(dir) / dir.squaredNorm();
        CHECK(t >= -1e-12);
        CHECK(t <= 1.0 + 1e-12);
        CHECK((st - (a + t * dir)).norm() < 1e-12);
    }
}

TEST_CASE("consensus noise scatters around the projected consensus") {
    const auto aln = testsup::make_clean(14, 10, 71);
    const auto model = embed::build_memory(aln, 0.95, "fam");
    const auto s = baselines::consensus_with_noise(aln, model, 30, 7, 6);
    REQUIRE(s.size() == 30);
    const Eigen::VectorXd center =
        embed::project(model.pca, embed::one_hot_encode(msa::consensus(aln.rows)));
    double mean_dist = 0.0;
    for (const auto& st : s.states) mean_dist += (st - center).norm();
    mean_dist /= 30.0;
    CHECK(mean_dist > 0.0);
    CHECK(std::isfinite(mean_dist));
}

TEST_CASE("baselines reject nonsensical budgets") {
    const auto model = small_model();
    CHECK_THROWS_AS(baselines::bootstrap_replay(model, 0, 1, 4),
                    std::invalid_argument);
    CHECK_THROWS_AS(baselines::convex_combination(model, 10, 1, 0),
                    std::invalid_argument);
}

// ------------------------------------------------------------------ betafit

TEST_CASE("least squares reproduces an exact affine law") {
    std::vector<betafit::BetaPoint> pts;
    for (const double d : {1.0, 4.0, 9.0, 16.0}) {
        betafit::BetaPoint p;
        p.family = "f" + std::to_string(static_cast<int>(d));
        p.d = d;
        p.beta_star = 2.0 + 3.0 * std::sqrt(d);
        pts.push_back(p);
    }
    const auto fit = betafit::fit_sqrt_d(pts);
    CHECK(fit.intercept == Approx(2.0).epsilon(1e-12));
    CHECK(fit.slope == Approx(3.0).epsilon(1e-12));
    CHECK(fit.r2 == Approx(1.0).epsilon(1e-12));
    CHECK(fit.rmse == Approx(0.0).scale(1.0).epsilon(1e-10));
    CHECK(fit.n == 4);
}

TEST_CASE("least squares matches hand-solved normal equations") {
    // x = sqrt(d) in {1, 2, 3}, y = {5.1, 7.9, 11.2}
    std::vector<betafit::BetaPoint> pts(3);
    pts[0] = {"a", 1.0, 5.1, 0, 0, 0};
    pts[1] = {"b", 4.0, 7.9, 0, 0, 0};
    pts[2] = {"c", 9.0, 11.2, 0, 0, 0};
    // slope = (n Sxy - Sx Sy) / (n Sxx - Sx^2)
    // Sx = 6, Sy = 24.2, Sxy = 5.1 + 15.8 + 33.6 = 54.5, Sxx = 14
    const double slope = (3 * 54.5 - 6 * 24.2) / (3 * 14.0 - 36.0);
    const double intercept = 24.2 / 3.0 - slope * 2.0;
    const auto fit = betafit::fit_sqrt_d(pts);
    CHECK(fit.slope == Approx(slope).epsilon(1e-12));
    CHECK(fit.intercept == Approx(intercept).epsilon(1e-12));

    // residuals are orthogonal to the design
    double r_sum = 0.0, rx_sum = 0.0;
    for (const auto& p : pts) {
        const double r = p.beta_star - (fit.intercept + fit.slope * std::sqrt(p.d));
        r_sum += r;
        rx_sum += r * std::sqrt(p.d);
    }
    CHECK(r_sum == Approx(0.0).scale(1.0).epsilon(1e-10));
    CHECK(rx_sum == Approx(0.0).scale(1.0).epsilon(1e-10));
}

TEST_CASE("fits with identical dimensions are degenerate") {
    std::vector<betafit::BetaPoint> pts(3);
    pts[0] = {"a", 4.0, 1.0, 0, 0, 0};
    pts[1] = {"b", 4.0, 2.0, 0, 0, 0};
    pts[2] = {"c", 4.0, 3.0, 0, 0, 0};
    CHECK_THROWS_AS(betafit::fit_sqrt_d(pts), numeric_error);
}

TEST_CASE("bootstrap intervals cover the point estimate") {
    RandomStream rng(83, 0);
    std::vector<betafit::BetaPoint> pts;
    for (int i = 0; i < 12; ++i) {
        betafit::BetaPoint p;
        p.family = "f" + std::to_string(i);
        p.d = 10.0 + 15.0 * i;
        p.beta_star = 1.6 + 0.28 * std::sqrt(p.d) + 0.05 * rng.normal();
        pts.push_back(p);
    }
    const auto fit = betafit::fit_sqrt_d(pts);
    const auto bs = betafit::bootstrap_coefficients(pts, 2000, 17);
    CHECK(bs.n_resamples == 2000);
    CHECK(bs.se_slope > 0.0);
    CHECK(bs.ci_slope_lo < fit.slope);
    CHECK(bs.ci_slope_hi > fit.slope);
    CHECK(bs.ci_intercept_lo < fit.intercept);
    CHECK(bs.ci_intercept_hi > fit.intercept);
    CHECK(bs.median_r2 > 0.9);
    // same seed, same intervals
    const auto again = betafit::bootstrap_coefficients(pts, 2000, 17);
    CHECK(again.ci_slope_lo == bs.ci_slope_lo);
    CHECK(again.ci_slope_hi == bs.ci_slope_hi);
}

TEST_CASE("leave-one-family-out pools held-out errors per family") {
    RandomStream rng(87, 0);
    std::vector<betafit::BetaPoint> pts;
    for (int f = 0; f < 5; ++f)
        for (int r = 0; r < 3; ++r) {
            betafit::BetaPoint p;
            p.family = "fam" + std::to_string(f);
            p.d = 20.0 + 30.0 * f + r;
            p.beta_star = 1.6 + 0.28 * std::sqrt(p.d) + 0.02 * rng.normal();
            pts.push_back(p);
        }
    const auto cv = betafit::leave_one_family_out(pts);
    CHECK(cv.families.size() == 5);
    CHECK(cv.held_out_rmse.size() == 5);
    CHECK(cv.r2 > 0.9);
    CHECK(cv.rmse < 0.1);
    CHECK_THROWS_AS(
        betafit::leave_one_family_out(
            std::vector<betafit::BetaPoint>(pts.begin(), pts.begin() + 6)),
        data_error);
}

TEST_CASE("the default prediction grows with the dimension") {
    CHECK(betafit::predict_beta_star(59) > betafit::predict_beta_star(34));
    CHECK(betafit::predict_beta_star(59) ==
          Approx(1.565 + 0.281 * std::sqrt(59.0)).epsilon(1e-12));
}

TEST_CASE("the gaussian entropy inflection replays a naive evaluation") {
    const int K = 8, n_real = 20;
    const std::uint64_t seed = 91;
    const betafit::TauStarGrid grid{0.01, 100.0, 120};
    const auto res = betafit::tau_star_gaussian(K, n_real, grid, seed);

    // naive recomputation on the same stream: softmax entropy by definition
    RandomStream rng(seed, 0x7a0);
    std::vector<double> h(120, 0.0);
    std::vector<double> taus(120);
    for (int i = 0; i < 120; ++i)
        taus[static_cast<std::size_t>(i)] =
            std::exp(std::log(0.01) +
                     (std::log(100.0) - std::log(0.01)) * i / 119.0);
    for (int r = 0; r < n_real; ++r) {
        const Eigen::VectorXd z = rng.normal_vector(K);
        for (int i = 0; i < 120; ++i) {
            double zmax = -1e300;
            for (int k = 0; k < K; ++k)
                zmax = std::max(zmax, taus[static_cast<std::size_t>(i)] * z[k]);
            double denom = 0.0;
            for (int k = 0; k < K; ++k)
                denom += std::exp(taus[static_cast<std::size_t>(i)] * z[k] - zmax);
            double ent = 0.0;
            for (int k = 0; k < K; ++k) {
                const double w =
                    std::exp(taus[static_cast<std::size_t>(i)] * z[k] - zmax) /
                    denom;
                if (w > 0) ent -= w * std::log(w);
            }
            h[static_cast<std::size_t>(i)] += ent;
        }
    }
    int best = 1;
    double best_d2 = -1.0;
    for (int i = 1; i + 1 < 120; ++i) {
        const double d2 =
            std::abs(h[static_cast<std::size_t>(i + 1)] / n_real -
                     2.0 * h[static_cast<std::size_t>(i)] / n_real +
                     h[static_cast<std::size_t>(i - 1)] / n_real);
        if (d2 > best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    CHECK(res.grid_index == best);
    for (int i = 0; i < 120; ++i)
        CHECK(res.mean_entropy[i] ==
              Approx(h[static_cast<std::size_t>(i)] / n_real).epsilon(1e-10));
}

TEST_CASE("a two-pattern population covariance pins the bifurcation point") {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2, 4);
    M(0, 0) = 1.0;
    M(0, 1) = -1.0;
    M(1, 2) = 1.0;
    M(1, 3) = -1.0;
    const auto bif = betafit::bifurcation_predictor(M);
    CHECK(bif.lambda1 == Approx(0.5).epsilon(1e-12));
    CHECK(bif.beta_c == Approx(2.0).epsilon(1e-12));
}

TEST_CASE("nested feature models never lose explanatory power") {
    RandomStream rng(93, 0);
    std::vector<betafit::BetaPoint> pts;
    for (int i = 0; i < 16; ++i) {
        betafit::BetaPoint p;
        p.family = "f" + std::to_string(i);
        p.d = 15.0 + 12.0 * i;
        p.h_col = 1.5 + 0.3 * rng.uniform();
        p.k_eff = 30.0 + 10.0 * i + rng.uniform();
        p.spectral_concentration = 0.1 + 0.5 * rng.uniform();
        p.beta_star = 1.6 + 0.28 * std::sqrt(p.d) + 0.1 * p.h_col +
                      0.02 * rng.normal();
        pts.push_back(p);
    }
    const auto rep = betafit::nested_models(pts);
    REQUIRE(rep.r2.size() == rep.model_names.size());
    REQUIRE(rep.r2.size() == 4);
    for (std::size_t i = 1; i < rep.r2.size(); ++i)
        CHECK(rep.r2[i] >= rep.r2[i - 1] - 1e-10);
    CHECK(rep.r2.front() > 0.9);
}
