#include "hopgen/sampler.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "hopgen/energy.hpp"
#include "hopgen/errors.hpp"

namespace hopgen::sampler {

double generation_temperature(double beta_star, TemperatureRule rule) {
    if (!(beta_star > 0.0))
        throw std::invalid_argument("generation_temperature: beta_star must be positive");
    if (rule == TemperatureRule::ceiling)
        return std::max(std::ceil(2.0 * beta_star), 5.0);
    return static_cast<double>(std::llround(std::max(2.0 * beta_star, 5.0)));
}

double retrieval_temperature(double beta_star) {
    if (!(beta_star > 0.0))
        throw std::invalid_argument("retrieval_temperature: beta_star must be positive");
    return static_cast<double>(std::llround(20.0 * beta_star));
}

void ChainConfig::validate() const {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    if (!(alpha > 0.0) || alpha > 1.0)
        throw std::invalid_argument("alpha must be in (0, 1]");
    if (steps < 1) throw std::invalid_argument("steps must be >= 1");
    if (burn_in < 0 || burn_in >= steps)
        throw std::invalid_argument("burn_in must be in [0, steps)");
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    if (min_spacing < 1) throw std::invalid_argument("min_spacing must be >= 1");
    if (n_samples * min_spacing > steps - burn_in + min_spacing)
        throw std::invalid_argument(
            "sampling budget violated: n_samples * min_spacing must be <= "
            "steps - burn_in + min_spacing");
    if ((steps - burn_in) / n_samples < 1)
        throw std::invalid_argument("n_samples exceeds post-burn-in steps");
    if (init_jitter < 0.0) throw std::invalid_argument("init_jitter must be >= 0");
    if (n_chains < 1) throw std::invalid_argument("n_chains must be >= 1");
    if (nonfinite_check_interval < 1)
        throw std::invalid_argument("nonfinite_check_interval must be >= 1");
}

std::vector<int> ChainConfig::sample_iterations() const {
    const int stride = (steps - burn_in) / n_samples;
    std::vector<int> iters(static_cast<std::size_t>(n_samples));
    for (int j = 1; j <= n_samples; ++j)
        iters[static_cast<std::size_t>(j - 1)] = burn_in + j * stride;
    return iters;
}

Eigen::VectorXd ula_step(const Eigen::MatrixXd& M, double beta, double alpha,
                         const Eigen::VectorXd& xi, const Eigen::VectorXd& noise) {
    const Eigen::VectorXd w = energy::softmax(beta * (M.transpose() * xi));
    return (1.0 - alpha) * xi + alpha * (M * w) +
           std::sqrt(2.0 * alpha / beta) * noise;
}

namespace {

// Similarity vector and derived quantities for the current state, reused
// across a step so each step costs two mat-vecs.
struct StateCache {
    Eigen::VectorXd sims; // M^T xi
    double energy;
    Eigen::VectorXd retrieved;

    void compute(const Eigen::MatrixXd& M, double beta, const Eigen::VectorXd& xi) {
        sims.noalias() = M.transpose() * xi;
        const Eigen::VectorXd w = energy::softmax(beta * sims);
        retrieved.noalias() = M * w;
        energy = 0.5 * xi.squaredNorm() - energy::logsumexp(beta * sims) / beta;
    }
};

// One MALA step on cached state. Always consumes d normals + 1 uniform so
// the stream stays aligned on every branch.
bool mala_step_cached(const Eigen::MatrixXd& M, double beta, double alpha,
                      Eigen::VectorXd& xi, StateCache& cache, RandomStream& rng,
                      bool& proposal_finite) {
    const double step_var = 2.0 * alpha / beta;
    const Eigen::VectorXd mu = (1.0 - alpha) * xi + alpha * cache.retrieved;
    const Eigen::VectorXd prop =
        mu + std::sqrt(step_var) * rng.normal_vector(xi.size());
    const double u = rng.uniform_pos();

    proposal_finite = prop.allFinite();
    if (!proposal_finite) return false;

    StateCache prop_cache;
    prop_cache.compute(M, beta, prop);
    const Eigen::VectorXd mu_rev = (1.0 - alpha) * prop + alpha * prop_cache.retrieved;

    const double log_q_fwd = -(prop - mu).squaredNorm() / (2.0 * step_var);
    const double log_q_rev = -(xi - mu_rev).squaredNorm() / (2.0 * step_var);
    const double log_accept =
        -beta * (prop_cache.energy - cache.energy) + log_q_rev - log_q_fwd;
    if (!std::isfinite(log_accept)) {
        proposal_finite = false;
        return false;
    }
    if (std::log(u) < log_accept) {
        xi = prop;
        cache = std::move(prop_cache);
        return true;
    }
    return false;
}

} // namespace

MalaStep mala_step(const Eigen::MatrixXd& M, double beta, double alpha,
                   const Eigen::VectorXd& xi, RandomStream& rng) {
    MalaStep r{xi, false, true};
    StateCache cache;
    cache.compute(M, beta, xi);
    r.accepted = mala_step_cached(M, beta, alpha, r.next, cache, rng,
                                  r.proposal_finite);
    return r;
}

Eigen::VectorXd init_near_pattern(const Eigen::MatrixXd& M, int pattern_index,
                                  double jitter, RandomStream& rng) {
    if (pattern_index < 0 || pattern_index >= M.cols())
        throw std::invalid_argument("init_near_pattern: pattern index out of range");
    return M.col(pattern_index) + jitter * rng.normal_vector(M.rows());
}

Eigen::VectorXd init_random_sphere(Eigen::Index d, RandomStream& rng) {
    return rng.unit_sphere(d);
}

ChainResult run_chain(const Eigen::MatrixXd& M, const ChainConfig& cfg,
                      int chain_index, std::optional<int> init_pattern) {
    cfg.validate();
    RandomStream rng(cfg.master_seed, static_cast<std::uint64_t>(chain_index));

    ChainResult res;
    res.chain_index = chain_index;
    res.sample_iterations = cfg.sample_iterations();
    res.energy_trace.resize(cfg.steps);

    Eigen::VectorXd xi;
    if (cfg.init == InitKind::near_pattern) {
        const int k = init_pattern
                          ? *init_pattern
                          : static_cast<int>(rng.uniform_int(
                                static_cast<std::uint64_t>(M.cols())));
        res.init_pattern_index = k;
        xi = init_near_pattern(M, k, cfg.init_jitter, rng);
    } else {
        xi = init_random_sphere(M.rows(), rng);
    }

    StateCache cache;
    cache.compute(M, cfg.beta, xi);
    const double noise_scale = std::sqrt(2.0 * cfg.alpha / cfg.beta);

    long accepted = 0;
    auto next_sample = res.sample_iterations.begin();
    for (int t = 1; t <= cfg.steps; ++t) {
        if (cfg.kernel == Kernel::ula) {
            xi = (1.0 - cfg.alpha) * xi + cfg.alpha * cache.retrieved +
                 noise_scale * rng.normal_vector(xi.size());
            cache.compute(M, cfg.beta, xi);
        } else {
            bool finite = true;
            if (mala_step_cached(M, cfg.beta, cfg.alpha, xi, cache, rng, finite))
                ++accepted;
            if (!finite) ++res.nonfinite_proposals;
        }
        res.energy_trace[t - 1] = cache.energy;

        if (t % cfg.nonfinite_check_interval == 0 && !xi.allFinite())
            throw numeric_error("chain " + std::to_string(chain_index) +
                                " diverged: non-finite state at step " +
                                std::to_string(t));
        if (next_sample != res.sample_iterations.end() && t == *next_sample) {
            res.samples.push_back(xi);
            ++next_sample;
        }
    }
    res.acceptance_rate = cfg.kernel == Kernel::ula
                              ? 1.0
                              : static_cast<double>(accepted) / cfg.steps;
    return res;
}

EnsembleResult run_ensemble(const embed::FamilyModel& model, const ChainConfig& cfg,
                            int n_threads) {
    cfg.validate();
    if (n_threads < 1) throw std::invalid_argument("n_threads must be >= 1");
    const Eigen::MatrixXd& M = model.memory.patterns;

    // Pattern indices come from a dedicated master stream so results do not
    // depend on how chains are scheduled.
    std::vector<std::optional<int>> init_pattern(
        static_cast<std::size_t>(cfg.n_chains));
    if (cfg.init == InitKind::near_pattern) {
        RandomStream master(cfg.master_seed, 0x696e6974); // init stream
        for (auto& p : init_pattern)
            p = static_cast<int>(master.uniform_int(
                static_cast<std::uint64_t>(M.cols())));
    }

    std::vector<ChainResult> chains(static_cast<std::size_t>(cfg.n_chains));
    std::vector<std::string> failures(static_cast<std::size_t>(cfg.n_chains));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            const int c = next.fetch_add(1);
            if (c >= cfg.n_chains) return;
            try {
                chains[static_cast<std::size_t>(c)] =
                    run_chain(M, cfg, c, init_pattern[static_cast<std::size_t>(c)]);
            } catch (const std::exception& e) {
                failures[static_cast<std::size_t>(c)] = e.what();
            }
        }
    };
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (int c = 0; c < cfg.n_chains; ++c)
        if (!failures[static_cast<std::size_t>(c)].empty())
            throw numeric_error("ensemble aborted, chain " + std::to_string(c) +
                                ": " + failures[static_cast<std::size_t>(c)]);

    EnsembleResult out;
    out.chains = std::move(chains);
    out.samples.family = model.memory.family;
    out.samples.method = cfg.kernel == Kernel::ula ? "ula" : "mala";
    out.samples.beta = cfg.beta;
    out.samples.n_chains = cfg.n_chains;
    for (const auto& ch : out.chains) {
        for (std::size_t j = 0; j < ch.samples.size(); ++j) {
            out.samples.states.push_back(ch.samples[j]);
            out.samples.sequences.push_back(embed::decode(model.pca, ch.samples[j]));
            out.samples.chain_of.push_back(ch.chain_index);
            out.samples.iter_of.push_back(ch.sample_iterations[j]);
        }
    }
    return out;
}

} // namespace hopgen::sampler
