#include "hopgen/baselines.hpp"

#include <cmath>

#include "hopgen/errors.hpp"
#include "hopgen/rng.hpp"

namespace hopgen::baselines {

namespace {

sampler::SampleSet make_set(const embed::FamilyModel& model, const std::string& method,
                            double beta, int n_samples, int n_chains) {
    if (n_samples < 1) throw std::invalid_argument("baseline: n_samples < 1");
    if (n_chains < 1) throw std::invalid_argument("baseline: n_chains < 1");
    sampler::SampleSet s;
    s.family = model.memory.family;
    s.method = method;
    s.beta = beta;
    s.n_chains = std::min(n_chains, n_samples);
    return s;
}

// contiguous chunks stand in for chains in the per-chain error bars
void push(sampler::SampleSet& s, const embed::FamilyModel& model,
          Eigen::VectorXd state, int index, int n_samples) {
    s.sequences.push_back(embed::decode(model.pca, state));
    s.states.push_back(std::move(state));
    s.chain_of.push_back(static_cast<int>(
        static_cast<long>(index) * s.n_chains / n_samples));
    s.iter_of.push_back(0);
}

} // namespace

sampler::SampleSet bootstrap_replay(const embed::FamilyModel& model, int n_samples,
                                    std::uint64_t seed, int n_chains) {
    auto s = make_set(model, "bootstrap", 0.0, n_samples, n_chains);
    RandomStream rng(seed, 0xb5);
    const auto K = static_cast<std::uint64_t>(model.memory.K());
    for (int i = 0; i < n_samples; ++i) {
        const auto k = static_cast<Eigen::Index>(rng.uniform_int(K));
        push(s, model, model.memory.patterns.col(k), i, n_samples);
    }
    return s;
}

sampler::SampleSet gaussian_perturbation(const embed::FamilyModel& model,
                                         int n_samples, double beta_gen, double alpha,
                                         std::uint64_t seed, int n_chains) {
    if (!(beta_gen > 0.0) || !(alpha > 0.0))
        throw std::invalid_argument("gaussian_perturbation: beta_gen and alpha "
                                    "must be positive");
    auto s = make_set(model, "gaussian", beta_gen, n_samples, n_chains);
    RandomStream rng(seed, 0x6a);
    const double sigma = std::sqrt(2.0 * alpha / beta_gen);
    const auto K = static_cast<std::uint64_t>(model.memory.K());
    for (int i = 0; i < n_samples; ++i) {
        const auto k = static_cast<Eigen::Index>(rng.uniform_int(K));
        Eigen::VectorXd state = model.memory.patterns.col(k) +
                                sigma * rng.normal_vector(model.memory.d());
        push(s, model, std::move(state), i, n_samples);
    }
    return s;
}

sampler::SampleSet convex_combination(const embed::FamilyModel& model, int n_samples,
                                      std::uint64_t seed, int n_chains) {
    auto s = make_set(model, "convex", 0.0, n_samples, n_chains);
    RandomStream rng(seed, 0xcc);
    const Eigen::Index K = model.memory.K();
    for (int i = 0; i < n_samples; ++i) {
        // Dirichlet(1,...,1): normalized exponentials
        Eigen::VectorXd w(K);
        for (Eigen::Index k = 0; k < K; ++k) w[k] = rng.exponential();
        w /= w.sum();
        push(s, model, model.memory.patterns * w, i, n_samples);
    }
    return s;
}

sampler::SampleSet consensus_with_noise(const msa::CleanAlignment& aln,
                                        const embed::FamilyModel& model,
                                        int n_samples, std::uint64_t seed,
                                        int n_chains) {
    auto s = make_set(model, "consensus_noise", 0.0, n_samples, n_chains);
    RandomStream rng(seed, 0xc0);

    const Eigen::VectorXd z_c =
        embed::project(model.pca, embed::one_hot_encode(msa::consensus(aln.rows)));

    // noise scale: mean distance of the un-normalized stored projections
    // from their centroid
    const Eigen::Index K = static_cast<Eigen::Index>(aln.K());
    Eigen::MatrixXd Z(model.pca.d(), K);
    for (Eigen::Index k = 0; k < K; ++k)
        Z.col(k) = embed::project(model.pca,
                                  embed::one_hot_encode(aln.rows[static_cast<
                                      std::size_t>(k)]));
    const Eigen::VectorXd centroid = Z.rowwise().mean();
    double sigma = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) sigma += (Z.col(k) - centroid).norm();
    sigma /= static_cast<double>(K);

    for (int i = 0; i < n_samples; ++i) {
        Eigen::VectorXd state = z_c + sigma * rng.normal_vector(model.pca.d());
        push(s, model, std::move(state), i, n_samples);
    }
    return s;
}

} // namespace hopgen::baselines
