#include "hopgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "hopgen/alphabet.hpp"
#include "hopgen/errors.hpp"
#include "hopgen/msa.hpp"
#include "hopgen/rng.hpp"

namespace hopgen::metrics {

namespace {

Eigen::VectorXd residue_counts(const std::vector<std::string>& seqs) {
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(kNumResidues);
    for (const auto& s : seqs) {
        for (char c : s) {
            if (c == kGap) continue;
            const int idx = residue_index(c);
            if (idx < 0)
                throw data_error("composition: unexpected character '" +
                                 std::string(1, c) + "'");
            counts[idx] += 1.0;
        }
    }
    return counts;
}

Eigen::VectorXd smooth_normalize(Eigen::VectorXd counts, double pseudocount) {
    counts.array() += pseudocount;
    const double total = counts.sum();
    if (total <= 0.0) throw data_error("composition: no residues");
    return counts / total;
}

double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    double kl = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) kl += p[i] * std::log(p[i] / q[i]);
    }
    return kl;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// SE of the mean over per-chain means: sample SD / sqrt(n_chains).
double chain_se(const std::vector<double>& chain_means) {
    const std::size_t n = chain_means.size();
    if (n < 2) return 0.0;
    const double m = mean_of(chain_means);
    double ss = 0.0;
    for (double v : chain_means) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(n - 1)) /
           std::sqrt(static_cast<double>(n));
}

} // namespace

Eigen::VectorXd aa_composition(const std::vector<std::string>& seqs,
                               double pseudocount) {
    if (seqs.empty()) throw data_error("aa_composition: no sequences");
    return smooth_normalize(residue_counts(seqs), pseudocount);
}

double aa_kl(const std::vector<std::string>& generated,
             const std::vector<std::string>& stored, double pseudocount) {
    return kl_divergence(aa_composition(generated, pseudocount),
                         aa_composition(stored, pseudocount));
}

double aa_kl_bootstrap_se(const std::vector<std::string>& generated,
                          const std::vector<std::string>& stored, int n_boot,
                          std::uint64_t seed, double pseudocount) {
    if (generated.empty()) throw data_error("bootstrap: no generated sequences");
    const Eigen::VectorXd q = aa_composition(stored, pseudocount);

    // per-sequence counts so each fold is a weighted sum, not a recount
    std::vector<Eigen::VectorXd> per_seq;
    per_seq.reserve(generated.size());
    for (const auto& s : generated)
        per_seq.push_back(residue_counts(std::vector<std::string>{s}));

    RandomStream rng(seed, 0xb007);
    const std::size_t n = generated.size();
    std::vector<double> kls(static_cast<std::size_t>(n_boot));
    for (int b = 0; b < n_boot; ++b) {
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(kNumResidues);
        for (std::size_t i = 0; i < n; ++i)
            counts += per_seq[rng.uniform_int(n)];
        kls[static_cast<std::size_t>(b)] =
            kl_divergence(smooth_normalize(counts, pseudocount), q);
    }
    const double m = mean_of(kls);
    double ss = 0.0;
    for (double v : kls) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(n_boot - 1));
}

double novelty(const Eigen::VectorXd& state, const Eigen::MatrixXd& M) {
    const double sn = state.norm();
    if (!(sn > 0.0) || !state.allFinite())
        throw numeric_error("novelty: state has zero norm or is non-finite");
    double max_cos = -1.0;
    for (Eigen::Index k = 0; k < M.cols(); ++k) {
        if (state.size() == M.rows() &&
            (state.array() == M.col(k).array()).all()) {
            // a replayed pattern is identical by construction; don't let the
            // norm round-trip report a phantom distance
            max_cos = 1.0;
            break;
        }
        const double mn = M.col(k).norm();
        if (!(mn > 0.0)) throw numeric_error("novelty: zero-norm pattern");
        const double c = state.dot(M.col(k)) / (sn * mn);
        max_cos = std::max(max_cos, std::clamp(c, -1.0, 1.0));
    }
    return 1.0 - max_cos;
}

std::optional<double> diversity(const std::vector<Eigen::VectorXd>& states) {
    const std::size_t n = states.size();
    if (n < 2) return std::nullopt;
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ni = states[i].norm();
        for (std::size_t j = i + 1; j < n; ++j) {
            const double nj = states[j].norm();
            sum += 1.0 - states[i].dot(states[j]) / (ni * nj);
            ++pairs;
        }
    }
    return sum / static_cast<double>(pairs);
}

double max_seq_identity(const std::string& seq,
                        const std::vector<std::string>& stored) {
    if (stored.empty()) throw data_error("max_seq_identity: no stored sequences");
    double best = 0.0;
    for (const auto& s : stored)
        best = std::max(best, msa::pairwise_identity(seq, s));
    return best;
}

NearDuplicateStats near_duplicate_stats(const std::vector<std::string>& generated,
                                        const std::vector<std::string>& stored) {
    if (generated.empty() || stored.empty())
        throw data_error("near_duplicate_stats: empty input");
    NearDuplicateStats r{};
    for (const auto& g : generated) {
        double best_id = 0.0;
        std::size_t min_subs = g.size();
        for (const auto& s : stored) {
            const double id = msa::pairwise_identity(g, s);
            best_id = std::max(best_id, id);
            const auto subs = static_cast<std::size_t>(
                std::llround((1.0 - id) * static_cast<double>(g.size())));
            min_subs = std::min(min_subs, subs);
        }
        for (std::size_t t = 0; t < kDuplicateIdentityThresholds.size(); ++t)
            if (best_id >= kDuplicateIdentityThresholds[t])
                r.frac_identity_above[t] += 1.0;
        for (std::size_t t = 0; t < kDuplicateSubstitutionCounts.size(); ++t)
            if (min_subs <= static_cast<std::size_t>(kDuplicateSubstitutionCounts[t]))
                r.frac_within_subs[t] += 1.0;
    }
    const auto n = static_cast<double>(generated.size());
    for (auto& v : r.frac_identity_above) v /= n;
    for (auto& v : r.frac_within_subs) v /= n;
    return r;
}

Eigen::MatrixXd mi_matrix(const std::vector<std::string>& rows, double pseudocount) {
    if (rows.empty()) throw data_error("mi_matrix: empty alignment");
    const std::size_t K = rows.size(), L = rows.front().size();
    constexpr int S = kNumResidues + 1; // gap is symbol 20

    std::vector<int> sym(K * L);
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t j = 0; j < L; ++j) {
            const char c = rows[k][j];
            sym[k * L + j] = c == kGap ? kNumResidues : residue_index(c);
            if (sym[k * L + j] < 0)
                throw data_error("mi_matrix: unexpected character '" +
                                 std::string(1, c) + "'");
        }

    Eigen::MatrixXd mi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(L),
                                               static_cast<Eigen::Index>(L));
    const double denom = static_cast<double>(K) + pseudocount * S * S;
    std::array<double, S * S> joint{};
    for (std::size_t i = 0; i < L; ++i) {
        for (std::size_t j = i + 1; j < L; ++j) {
            joint.fill(pseudocount);
            for (std::size_t k = 0; k < K; ++k)
                joint[static_cast<std::size_t>(sym[k * L + i]) * S +
                      static_cast<std::size_t>(sym[k * L + j])] += 1.0;
            std::array<double, S> pi{}, pj{};
            for (int a = 0; a < S; ++a)
                for (int b = 0; b < S; ++b) {
                    const double p = joint[static_cast<std::size_t>(a) * S + b];
                    pi[static_cast<std::size_t>(a)] += p;
                    pj[static_cast<std::size_t>(b)] += p;
                }
            double v = 0.0;
            for (int a = 0; a < S; ++a)
                for (int b = 0; b < S; ++b) {
                    const double pab =
                        joint[static_cast<std::size_t>(a) * S + b] / denom;
                    const double pa = pi[static_cast<std::size_t>(a)] / denom;
                    const double pb = pj[static_cast<std::size_t>(b)] / denom;
                    v += pab * std::log(pab / (pa * pb));
                }
            if (v < 0.0) v = 0.0; // roundoff
            mi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            mi(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    }
    return mi;
}

namespace {

std::vector<double> upper_triangle(const Eigen::MatrixXd& m) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(m.rows() * (m.rows() - 1) / 2));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = i + 1; j < m.cols(); ++j) v.push_back(m(i, j));
    return v;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0)
        throw numeric_error("correlation: constant input");
    return sxy / std::sqrt(sxx * syy);
}

// fractional ranks, ties averaged
std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

// indices of the top_n largest values, strict value order, index tie-break
std::vector<std::size_t> top_indices(const std::vector<double>& v, int top_n) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (v[a] != v[b]) return v[a] > v[b];
        return a < b;
    });
    order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(top_n)));
    return order;
}

} // namespace

MICorrelation mi_correlation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             int top_n) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw data_error("mi_correlation: shape mismatch");
    const auto va = upper_triangle(a);
    const auto vb = upper_triangle(b);
    if (va.size() < 2) throw data_error("mi_correlation: too few pairs");

    MICorrelation r;
    r.pearson = pearson(va, vb);
    r.spearman = pearson(ranks(va), ranks(vb));

    const auto ta = top_indices(va, top_n);
    const auto tb = top_indices(vb, top_n);
    std::size_t shared = 0;
    for (std::size_t ia : ta)
        if (std::find(tb.begin(), tb.end(), ia) != tb.end()) ++shared;
    r.top50_overlap = static_cast<double>(shared) / static_cast<double>(ta.size());
    return r;
}

BiophysProfile biophysics(const std::string& seq, bool include_his) {
    if (seq.empty()) throw data_error("biophysics: empty sequence");
    int k = 0, r = 0, d = 0, e = 0, h = 0, cys = 0, hydrophobic = 0;
    double kd_sum = 0.0;
    for (char c : seq) {
        const int idx = residue_index(c);
        if (idx < 0)
            throw data_error("biophysics: non-canonical character '" +
                             std::string(1, c) + "'");
        kd_sum += kKyteDoolittle[static_cast<std::size_t>(idx)];
        switch (c) {
            case 'K': ++k; break;
            case 'R': ++r; break;
            case 'D': ++d; break;
            case 'E': ++e; break;
            case 'H': ++h; break;
            case 'C': ++cys; break;
            default: break;
        }
        switch (c) {
            case 'A': case 'V': case 'I': case 'L':
            case 'M': case 'F': case 'W': case 'P':
                ++hydrophobic;
                break;
            default: break;
        }
    }
    BiophysProfile p;
    const auto n = static_cast<double>(seq.size());
    p.net_charge = (k + r) - (d + e) + (include_his ? 0.5 * h : 0.0);
    p.hydrophobic_fraction = hydrophobic / n;
    p.kd_mean = kd_sum / n;
    p.cys_count = cys;
    p.amp_pass = p.net_charge >= 2.0 && p.hydrophobic_fraction >= 0.3 &&
                 p.hydrophobic_fraction <= 0.7 && cys >= 4;
    return p;
}

GenerationMetrics evaluate(const sampler::SampleSet& samples,
                           const std::vector<std::string>& stored_rows,
                           const Eigen::MatrixXd& M, int n_boot,
                           std::uint64_t boot_seed) {
    if (samples.size() == 0) throw data_error("evaluate: empty sample set");
    if (samples.sequences.size() != samples.states.size() ||
        samples.chain_of.size() != samples.states.size())
        throw data_error("evaluate: inconsistent sample set");

    GenerationMetrics gm;
    gm.kl = aa_kl(samples.sequences, stored_rows);
    gm.kl_se = aa_kl_bootstrap_se(samples.sequences, stored_rows, n_boot, boot_seed);
    gm.diversity = diversity(samples.states);

    // group by chain provenance, chains in sorted order
    std::map<int, std::vector<std::size_t>> by_chain;
    for (std::size_t i = 0; i < samples.size(); ++i)
        by_chain[samples.chain_of[i]].push_back(i);

    std::vector<double> nov(samples.size()), sid(samples.size());
    std::size_t valid = 0, total = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        nov[i] = novelty(samples.states[i], M);
        sid[i] = max_seq_identity(samples.sequences[i], stored_rows);
        for (char c : samples.sequences[i]) {
            ++total;
            if (is_canonical(c)) ++valid;
        }
    }
    gm.novelty_mean = mean_of(nov);
    gm.seq_identity_mean = mean_of(sid);
    gm.valid_fraction = total == 0 ? 0.0
                                   : static_cast<double>(valid) /
                                         static_cast<double>(total);

    for (const auto& [chain, idx] : by_chain) {
        double n_sum = 0.0, s_sum = 0.0;
        for (std::size_t i : idx) {
            n_sum += nov[i];
            s_sum += sid[i];
        }
        gm.novelty_per_chain.push_back(n_sum / static_cast<double>(idx.size()));
        gm.seq_identity_per_chain.push_back(s_sum / static_cast<double>(idx.size()));
    }
    gm.novelty_se = chain_se(gm.novelty_per_chain);
    gm.seq_identity_se = chain_se(gm.seq_identity_per_chain);
    return gm;
}

} // namespace hopgen::metrics
