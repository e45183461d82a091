#include "hopgen/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

namespace hopgen::diagnostics {

Eigen::VectorXd autocorrelation(const Eigen::VectorXd& trace, int max_lag) {
    const auto n = static_cast<int>(trace.size());
    if (n < 2) throw std::invalid_argument("autocorrelation: trace too short");
    if (max_lag < 0 || max_lag >= n)
        throw std::invalid_argument("autocorrelation: max_lag must be in [0, n)");
    const double mean = trace.mean();
    const Eigen::VectorXd x = trace.array() - mean;
    const double c0 = x.squaredNorm() / n;
    Eigen::VectorXd rho(max_lag + 1);
    if (c0 <= 0.0) { // constant trace: rho(0) = 1, undefined elsewhere -> 0
        rho.setZero();
        rho[0] = 1.0;
        return rho;
    }
    rho[0] = 1.0;
    for (int lag = 1; lag <= max_lag; ++lag) {
        double c = 0.0;
        for (int t = 0; t + lag < n; ++t) c += x[t] * x[t + lag];
        rho[lag] = (c / n) / c0; // biased 1/n estimator at every lag
    }
    return rho;
}

IntegratedAutocorr integrated_autocorr_time(const Eigen::VectorXd& rho,
                                            double cutoff) {
    IntegratedAutocorr r;
    const auto max_lag = static_cast<int>(rho.size()) - 1;
    int c = max_lag + 1;
    for (int lag = 1; lag <= max_lag; ++lag) {
        if (rho[lag] < cutoff) {
            c = lag;
            break;
        }
    }
    r.cutoff_lag = c;
    r.cutoff_reached = c <= max_lag;
    double sum = 0.0;
    for (int lag = 1; lag < c; ++lag) sum += rho[lag]; // lags before the cutoff
    r.tau_int = 1.0 + 2.0 * sum;
    return r;
}

double effective_sample_size(int n, double tau_int) {
    if (n < 1) throw std::invalid_argument("effective_sample_size: n < 1");
    if (!(tau_int > 0.0))
        throw std::invalid_argument("effective_sample_size: tau_int must be positive");
    return static_cast<double>(n) / tau_int;
}

BurnInResult burn_in_convergence(const Eigen::VectorXd& trace, int window,
                                 double rel_tol) {
    const auto n = static_cast<int>(trace.size());
    if (window < 1 || window > n)
        throw std::invalid_argument("burn_in_convergence: window must be in [1, n]");

    BurnInResult r;
    const int tail_start = n / 2;
    r.stationary_mean =
        trace.segment(tail_start, n - tail_start).mean();
    const bool near_zero = std::abs(r.stationary_mean) < 1e-9;

    double win_sum = trace.head(window).sum();
    for (int t = window; t <= n; ++t) { // t = 1-based end of the window
        if (t > window) win_sum += trace[t - 1] - trace[t - window - 1];
        const double win_mean = win_sum / window;
        const double err = std::abs(win_mean - r.stationary_mean);
        const bool ok = near_zero ? err <= 1e-9
                                  : err <= rel_tol * std::abs(r.stationary_mean);
        if (ok) {
            r.iteration = t;
            r.converged = true;
            return r;
        }
    }
    r.iteration = n;
    r.converged = false;
    return r;
}

ChainDiagnostics chain_diagnostics(const sampler::ChainResult& chain, int burn_in,
                                   int max_lag, int window, double rel_tol) {
    ChainDiagnostics d;
    d.chain_index = chain.chain_index;
    d.acceptance_rate = chain.acceptance_rate;

    const auto n = static_cast<int>(chain.energy_trace.size());
    if (burn_in < 0 || burn_in >= n)
        throw std::invalid_argument("chain_diagnostics: burn_in must be in [0, n)");
    const Eigen::VectorXd post = chain.energy_trace.segment(burn_in, n - burn_in);
    const int lag = std::min(max_lag, static_cast<int>(post.size()) - 1);
    const auto ac = integrated_autocorr_time(autocorrelation(post, lag));
    d.tau_int = ac.tau_int;
    d.tau_cutoff_reached = ac.cutoff_reached;
    d.ess = effective_sample_size(static_cast<int>(post.size()), ac.tau_int);

    const auto bi =
        burn_in_convergence(chain.energy_trace, std::min(window, n), rel_tol);
    if (bi.converged) {
        d.convergence_iter = bi.iteration;
        d.burn_in_margin = static_cast<double>(burn_in) / bi.iteration;
    }
    return d;
}

} // namespace hopgen::diagnostics
