#pragma once

#include <optional>
#include <string>

#include <Eigen/Core>

#include "hopgen/sampler.hpp"

namespace hopgen::diagnostics {

// Normalized autocorrelation rho(0..max_lag) with the biased (1/n),
// mean-subtracted covariance estimator.
Eigen::VectorXd autocorrelation(const Eigen::VectorXd& trace, int max_lag);

// tau_int = 1 + 2 sum of rho(tau) over lags before the first rho < cutoff.
// If the cutoff is never reached the value is a lower bound.
struct IntegratedAutocorr {
    double tau_int;
    int cutoff_lag;      // first lag with rho < cutoff; max_lag+1 if never
    bool cutoff_reached;
};
IntegratedAutocorr integrated_autocorr_time(const Eigen::VectorXd& rho,
                                            double cutoff = 0.05);

double effective_sample_size(int n, double tau_int);

// Earliest iteration whose trailing windowed mean is within rel_tol of the
// stationary mean (mean of the final half); stationary means below 1e-9 in
// magnitude switch to an absolute 1e-9 comparison.
struct BurnInResult {
    int iteration;   // 1-based; window if converged immediately
    bool converged;
    double stationary_mean;
};
BurnInResult burn_in_convergence(const Eigen::VectorXd& trace, int window = 200,
                                 double rel_tol = 0.01);

// Post burn-in energy-trace diagnostics for one chain.
struct ChainDiagnostics {
    int chain_index = 0;
    double tau_int = 0.0;
    bool tau_cutoff_reached = true;
    double ess = 0.0;
    double acceptance_rate = 1.0;
    std::optional<int> convergence_iter; // absent if never converged
    double burn_in_margin = 0.0;         // burn_in / convergence_iter
};
ChainDiagnostics chain_diagnostics(const sampler::ChainResult& chain, int burn_in,
                                   int max_lag = 1000, int window = 200,
                                   double rel_tol = 0.01);

} // namespace hopgen::diagnostics
