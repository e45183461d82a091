// Command-line front end: build family models from seed alignments, sample
// new sequences with Langevin kernels on the attention energy, evaluate
// against stored sequences and baselines, and fit the beta* scaling law.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hopgen/alphabet.hpp"
#include "hopgen/baselines.hpp"
#include "hopgen/betafit.hpp"
#include "hopgen/diagnostics.hpp"
#include "hopgen/embed.hpp"
#include "hopgen/energy.hpp"
#include "hopgen/errors.hpp"
#include "hopgen/io.hpp"
#include "hopgen/metrics.hpp"
#include "hopgen/msa.hpp"
#include "hopgen/pipeline.hpp"
#include "hopgen/rng.hpp"
#include "hopgen/sampler.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hopgen;

namespace {

// ---------------------------------------------------------------- helpers

json load_json_or_empty(const std::string& path) {
    std::ifstream in(path);
    if (!in) return json::object();
    json j;
    in >> j;
    return j;
}

// Records the effective invocation (command, options after config-file
// merge, seed) into an existing or new JSON manifest in the output dir.
void record_invocation(const std::string& dir, const std::string& manifest_file,
                       const CLI::App* sub, json extra = json::object()) {
    const std::string path = (fs::path(dir) / manifest_file).string();
    json j = load_json_or_empty(path);
    json inv;
    inv["command"] = sub->get_name();
    inv["effective_config"] = sub->config_to_str(true, false);
    for (auto& [k, v] : extra.items()) inv[k] = v;
    j["invocation"] = inv;
    io::write_text_file(path, j.dump(2) + "\n");
}

msa::RawAlignment parse_msa(const std::string& path, const std::string& format) {
    std::string fmt = format;
    if (fmt == "auto") {
        std::ifstream in(path);
        if (!in) throw data_error("cannot open: " + path);
        std::string first;
        while (std::getline(in, first)) {
            if (!first.empty()) break;
        }
        fmt = (!first.empty() && first[0] == '>') ? "fasta" : "stockholm";
    }
    if (fmt == "fasta") return msa::parse_fasta_file(path);
    if (fmt == "stockholm") return msa::parse_stockholm_file(path);
    throw data_error("unknown alignment format: " + format);
}

std::string family_from_path(const std::string& path) {
    return fs::path(path).stem().string();
}

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Flat key=value config file, one option per line, '#' starts a comment.
// Options given on the command line keep their values; everything else
// falls back to the file, then to the built-in default.
void apply_flat_config(CLI::App* sub, const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw data_error("cannot open: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string entry = strip(line);
        if (entry.empty()) continue;
        const auto where = path + ":" + std::to_string(lineno);
        const auto eq = entry.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(where + ": expected key=value");
        const std::string key = strip(entry.substr(0, eq));
        std::string val = strip(entry.substr(eq + 1));
        if (val.size() >= 2 && (val.front() == '"' || val.front() == '\'') &&
            val.back() == val.front())
            val = val.substr(1, val.size() - 2);
        CLI::Option* opt =
            key.empty() ? nullptr : sub->get_option_no_throw("--" + key);
        if (opt == nullptr || opt->get_name() == "--config")
            throw std::invalid_argument(where + ": unknown option '" + key + "'");
        if (opt->count() > 0) continue;
        opt->add_result(val);
        opt->run_callback();
    }
}

void require_flag(const std::string& value, const char* flag) {
    if (value.empty())
        throw std::invalid_argument(std::string(flag) + " is required");
}

double resolve_beta(const std::optional<double>& beta_flag, const std::string& regime,
                    double beta_star, const std::string& rule) {
    if (beta_flag) return *beta_flag;
    if (regime == "retrieval") return sampler::retrieval_temperature(beta_star);
    return sampler::generation_temperature(
        beta_star, rule == "ceiling" ? sampler::TemperatureRule::ceiling
                                     : sampler::TemperatureRule::round_nearest);
}

json metrics_to_json(const metrics::GenerationMetrics& m) {
    json j;
    j["kl"] = m.kl;
    j["kl_se"] = m.kl_se;
    j["novelty"] = m.novelty_mean;
    j["novelty_se"] = m.novelty_se;
    j["seq_identity"] = m.seq_identity_mean;
    j["seq_identity_se"] = m.seq_identity_se;
    if (m.diversity) j["diversity"] = *m.diversity;
    j["valid_fraction"] = m.valid_fraction;
    j["novelty_per_chain"] = m.novelty_per_chain;
    j["seq_identity_per_chain"] = m.seq_identity_per_chain;
    return j;
}

json duplicates_to_json(const metrics::NearDuplicateStats& nd) {
    json j;
    for (std::size_t i = 0; i < metrics::kDuplicateIdentityThresholds.size(); ++i)
        j["frac_identity_ge_" +
          io::fmt_double(metrics::kDuplicateIdentityThresholds[i])] =
            nd.frac_identity_above[i];
    for (std::size_t i = 0; i < metrics::kDuplicateSubstitutionCounts.size(); ++i)
        j["frac_within_" +
          std::to_string(metrics::kDuplicateSubstitutionCounts[i]) + "_subs"] =
            nd.frac_within_subs[i];
    return j;
}

std::string degap(const std::string& row) {
    std::string s;
    s.reserve(row.size());
    for (char c : row)
        if (c != kGap) s += c;
    return s;
}

json biophysics_summary(const std::vector<std::string>& seqs, bool include_his) {
    double charge = 0.0, hydro = 0.0, kd = 0.0, cys = 0.0, amp = 0.0;
    std::size_t n = 0;
    for (const auto& raw : seqs) {
        const std::string s = degap(raw);
        if (s.empty()) continue;
        const auto p = metrics::biophysics(s, include_his);
        charge += p.net_charge;
        hydro += p.hydrophobic_fraction;
        kd += p.kd_mean;
        cys += p.cys_count;
        amp += p.amp_pass ? 1.0 : 0.0;
        ++n;
    }
    if (n == 0) throw data_error("biophysics: no non-empty sequences");
    const auto dn = static_cast<double>(n);
    return json{{"mean_net_charge", charge / dn},
                {"mean_hydrophobic_fraction", hydro / dn},
                {"mean_kd", kd / dn},
                {"mean_cys_count", cys / dn},
                {"amp_pass_rate", amp / dn},
                {"n_sequences", n},
                {"charge_includes_his", include_his}};
}

// External FASTA has no chain provenance; group samples into contiguous
// chunks so the per-chain error bars stay defined.
sampler::SampleSet sample_set_from_fasta(const std::string& path,
                                         const pipeline::FamilyBuild& build,
                                         const std::string& label, int n_chains) {
    const auto aln = msa::parse_fasta_file(path);
    if (aln.L() != build.aln.L())
        throw data_error(path + ": sequence length " + std::to_string(aln.L()) +
                         " does not match family length " +
                         std::to_string(build.aln.L()));
    sampler::SampleSet s;
    s.family = build.stats.family;
    s.method = label;
    s.beta = 0.0;
    const int n = static_cast<int>(aln.rows.size());
    s.n_chains = std::min(n_chains, n);
    for (int i = 0; i < n; ++i) {
        const auto& row = aln.rows[static_cast<std::size_t>(i)];
        s.states.push_back(
            embed::project(build.model.pca, embed::one_hot_encode(row)));
        s.sequences.push_back(row);
        s.chain_of.push_back(static_cast<int>(
            static_cast<long>(i) * s.n_chains / n));
        s.iter_of.push_back(0);
    }
    return s;
}

// ------------------------------------------------------------ subcommands

struct BuildArgs {
    std::string msa_path, format = "auto", family, out;
    double rho_min = 0.95, col_gap_max = 0.5, row_gap_max = 0.3;
    energy::BetaStarGrid grid;
    std::string probe = "stored";
    int n_probes = 64;
    std::uint64_t seed = 42;
    bool force = false;
    std::string config;
};

void run_build(const BuildArgs& a, CLI::App* sub) {
    apply_flat_config(sub, a.config);
    require_flag(a.msa_path, "--msa");
    require_flag(a.out, "--out");
    pipeline::BuildOptions opts;
    opts.family = a.family.empty() ? family_from_path(a.msa_path) : a.family;
    opts.rho_min = a.rho_min;
    opts.col_gap_max = a.col_gap_max;
    opts.row_gap_max = a.row_gap_max;
    opts.grid = a.grid;
    opts.probe = a.probe == "random" ? energy::ProbeKind::random_sphere
                                     : energy::ProbeKind::stored_patterns;
    opts.n_probes = a.n_probes;
    opts.probe_seed = a.seed;

    const auto raw = parse_msa(a.msa_path, a.format);
    const auto build = pipeline::build_family(raw, opts);

    io::prepare_out_dir(a.out, a.force);
    pipeline::save_build(a.out, build, a.msa_path, io::checksum_file(a.msa_path));
    record_invocation(a.out, "manifest.json", sub, {{"seed", a.seed}});

    std::cout << "family " << opts.family << ": K=" << build.aln.K()
              << " L=" << build.aln.L() << " d=" << build.model.pca.d()
              << " beta_star=" << io::fmt_double(build.beta_star.beta_star)
              << " (replaced " << build.non_canonical_replaced
              << " non-canonical residues)\n";
}

struct SampleArgs {
    std::string build_dir, out;
    std::string kernel = "ula", regime = "generation", rule = "round";
    std::string init = "near_pattern";
    std::optional<double> beta;
    sampler::ChainConfig cfg;
    int threads = 1;
    std::uint64_t seed = 42;
    bool force = false;
    std::string config;
};

void run_sample(const SampleArgs& a, CLI::App* sub) {
    apply_flat_config(sub, a.config);
    require_flag(a.build_dir, "--build");
    require_flag(a.out, "--out");
    auto build = pipeline::load_build(a.build_dir);
    sampler::ChainConfig cfg = a.cfg;
    cfg.kernel = a.kernel == "mala" ? sampler::Kernel::mala : sampler::Kernel::ula;
    cfg.init = a.init == "random_sphere" ? sampler::InitKind::random_sphere
                                         : sampler::InitKind::near_pattern;
    cfg.master_seed = a.seed;
    cfg.beta = resolve_beta(a.beta, a.regime, build.beta_star.beta_star, a.rule);
    cfg.validate();

    const auto res = sampler::run_ensemble(build.model, cfg, a.threads);

    pipeline::RunData run;
    run.samples = res.samples;
    run.config = cfg;
    run.has_chains = true;
    run.energy_traces.resize(cfg.n_chains, cfg.steps);
    run.acceptance_rates.resize(cfg.n_chains);
    for (const auto& ch : res.chains) {
        run.energy_traces.row(ch.chain_index) = ch.energy_trace.transpose();
        run.acceptance_rates[ch.chain_index] = ch.acceptance_rate;
        run.init_pattern_index.push_back(ch.init_pattern_index.value_or(-1));
        run.nonfinite_proposals.push_back(ch.nonfinite_proposals);
    }

    io::prepare_out_dir(a.out, a.force);
    pipeline::save_run(a.out, run, a.build_dir);
    record_invocation(a.out, "run.json", sub,
                      {{"seed", a.seed},
                       {"threads", a.threads},
                       {"beta", cfg.beta},
                       {"beta_star", build.beta_star.beta_star},
                       {"d", build.model.pca.d()},
                       {"K", build.aln.K()},
                       {"L", build.aln.L()}});

    const double mean_acc = run.acceptance_rates.mean();
    std::cout << "sampled " << run.samples.size() << " sequences ("
              << cfg.n_chains << " chains x " << cfg.n_samples
              << ") at beta=" << io::fmt_double(cfg.beta) << " kernel=" << a.kernel
              << " mean_acceptance=" << io::fmt_double(mean_acc) << "\n";
}

struct EvaluateArgs {
    std::string build_dir, run_dir, fasta, out, label;
    bool biophysics = false, charge_no_his = false, mi = false;
    int n_boot = 1000;
    int n_chains = 30;
    std::uint64_t seed = 42;
    bool force = false;
    std::string config;
};

void run_evaluate(const EvaluateArgs& a, CLI::App* sub) {
    apply_flat_config(sub, a.config);
    require_flag(a.build_dir, "--build");
    require_flag(a.out, "--out");
    if (a.run_dir.empty() == a.fasta.empty())
        throw std::invalid_argument("evaluate: pass exactly one of --run and --fasta");
    const auto build = pipeline::load_build(a.build_dir);

    sampler::SampleSet samples;
    std::string source;
    if (!a.run_dir.empty()) {
        auto run = pipeline::load_run(a.run_dir);
        samples = std::move(run.samples);
        source = a.run_dir;
    } else {
        const std::string label =
            a.label.empty() ? family_from_path(a.fasta) : a.label;
        samples = sample_set_from_fasta(a.fasta, build, label, a.n_chains);
        source = a.fasta;
    }
    if (!a.label.empty()) samples.method = a.label;

    const auto m = metrics::evaluate(samples, build.aln.rows,
                                     build.model.memory.patterns, a.n_boot, a.seed);
    const auto nd = metrics::near_duplicate_stats(samples.sequences, build.aln.rows);

    json out_json;
    out_json["family"] = build.stats.family;
    out_json["method"] = samples.method;
    out_json["n_samples"] = samples.size();
    out_json["metrics"] = metrics_to_json(m);
    out_json["near_duplicates"] = duplicates_to_json(nd);

    if (a.mi) {
        const auto mi_stored = metrics::mi_matrix(build.aln.rows);
        const auto mi_gen = metrics::mi_matrix(samples.sequences);
        const auto c = metrics::mi_correlation(mi_stored, mi_gen);
        out_json["mi_correlation"] = {{"pearson", c.pearson},
                                      {"spearman", c.spearman},
                                      {"top50_overlap", c.top50_overlap}};
    }
    if (a.biophysics) {
        out_json["biophysics_generated"] =
            biophysics_summary(samples.sequences, !a.charge_no_his);
        out_json["biophysics_stored"] =
            biophysics_summary(build.aln.rows, !a.charge_no_his);
    }

    io::prepare_out_dir(a.out, a.force);
    pipeline::write_metrics_tsv(
        (fs::path(a.out) / "metrics.tsv").string(),
        {{build.stats.family, samples.method, m}});
    io::write_text_file((fs::path(a.out) / "metrics.json").string(),
                        out_json.dump(2) + "\n");
    record_invocation(a.out, "manifest.json", sub,
                      {{"seed", a.seed}, {"source", source}});

    std::cout << "evaluated " << samples.size() << " samples (" << samples.method
              << "): kl=" << io::fmt_double(m.kl)
              << " novelty=" << io::fmt_double(m.novelty_mean)
              << " seqid=" << io::fmt_double(m.seq_identity_mean)
              << " valid=" << io::fmt_double(m.valid_fraction) << "\n";
}

struct BaselineArgs {
    std::string build_dir, method, out;
    int n_samples = 150, n_chains = 30;
    double alpha = 0.01;
    std::optional<double> beta;
    std::string rule = "round";
    std::uint64_t seed = 42;
    bool force = false;
    std::string config;
};

void run_baseline(const BaselineArgs& a, CLI::App* sub) {
    apply_flat_config(sub, a.config);
    require_flag(a.build_dir, "--build");
    require_flag(a.method, "--method");
    require_flag(a.out, "--out");
    const auto build = pipeline::load_build(a.build_dir);

    sampler::SampleSet samples;
    if (a.method == "bootstrap") {
        samples = baselines::bootstrap_replay(build.model, a.n_samples, a.seed,
                                              a.n_chains);
    } else if (a.method == "gaussian") {
        const double beta = resolve_beta(a.beta, "generation",
                                         build.beta_star.beta_star, a.rule);
        samples = baselines::gaussian_perturbation(build.model, a.n_samples, beta,
                                                   a.alpha, a.seed, a.n_chains);
    } else if (a.method == "convex") {
        samples = baselines::convex_combination(build.model, a.n_samples, a.seed,
                                                a.n_chains);
    } else if (a.method == "consensus_noise") {
        samples = baselines::consensus_with_noise(build.aln, build.model,
                                                  a.n_samples, a.seed, a.n_chains);
    } else {
        throw data_error("unknown baseline method: " + a.method);
    }

    pipeline::RunData run;
    run.samples = samples;
    run.has_chains = false;
    run.config.n_chains = samples.n_chains;
    run.config.n_samples = a.n_samples;
    run.config.master_seed = a.seed;
    run.config.beta = samples.beta > 0 ? samples.beta : run.config.beta;

    io::prepare_out_dir(a.out, a.force);
    pipeline::save_run(a.out, run, a.build_dir);
    record_invocation(a.out, "run.json", sub, {{"seed", a.seed}});

    std::cout << "baseline " << a.method << ": " << samples.size()
              << " samples\n";
}

struct ControlArgs {
    std::string msa_path, format = "auto", family, out;
    double rho_min = 0.95, col_gap_max = 0.5, row_gap_max = 0.3;
    energy::BetaStarGrid grid;
    std::string kernel = "ula", rule = "round";
    std::optional<double> beta;
    sampler::ChainConfig cfg;
    int threads = 1;
    std::uint64_t seed = 42;
    bool force = false;
    std::string config;
};

void run_control_permute(const ControlArgs& a, CLI::App* sub) {
    apply_flat_config(sub, a.config);
    require_flag(a.msa_path, "--msa");
    require_flag(a.out, "--out");
    const std::string family =
        a.family.empty() ? family_from_path(a.msa_path) : a.family;
    const auto raw = parse_msa(a.msa_path, a.format);
    const auto cleaned = msa::clean(raw, a.col_gap_max, a.row_gap_max);

    io::prepare_out_dir(a.out, a.force);
    std::ostringstream tsv;
    tsv << "variant\tK\tL\td\tbeta_star\tkl\tkl_se\tnovelty\tnovelty_se\tseqid\t"
           "seqid_se\tdiversity\tmi_pearson\tmi_spearman\tmi_top50_overlap\n";

    for (const bool permuted : {false, true}) {
        const std::string variant = permuted ? "permuted" : "real";
        msa::CleanAlignment aln =
            permuted ? msa::permute_columns(cleaned, derive_seed(a.seed, 0x9e))
                     : cleaned;

        pipeline::BuildOptions opts;
        opts.family = family + (permuted ? "_permuted" : "");
        opts.rho_min = a.rho_min;
        opts.grid = a.grid;
        opts.probe_seed = a.seed;
        auto build = pipeline::build_family(aln, opts);
        const std::string bdir = (fs::path(a.out) / variant / "build").string();
        pipeline::save_build(bdir, build, a.msa_path,
                             io::checksum_file(a.msa_path));

        sampler::ChainConfig cfg = a.cfg;
        cfg.kernel =
            a.kernel == "mala" ? sampler::Kernel::mala : sampler::Kernel::ula;
        cfg.master_seed = a.seed;
        cfg.beta = resolve_beta(a.beta, "generation", build.beta_star.beta_star,
                                a.rule);
        cfg.validate();
        const auto res = sampler::run_ensemble(build.model, cfg, a.threads);

        pipeline::RunData run;
        run.samples = res.samples;
        run.config = cfg;
        run.has_chains = true;
        run.energy_traces.resize(cfg.n_chains, cfg.steps);
        run.acceptance_rates.resize(cfg.n_chains);
        for (const auto& ch : res.chains) {
            run.energy_traces.row(ch.chain_index) = ch.energy_trace.transpose();
            run.acceptance_rates[ch.chain_index] = ch.acceptance_rate;
            run.init_pattern_index.push_back(ch.init_pattern_index.value_or(-1));
            run.nonfinite_proposals.push_back(ch.nonfinite_proposals);
        }
        pipeline::save_run((fs::path(a.out) / variant / "run").string(), run, bdir);

        const auto m = metrics::evaluate(res.samples, build.aln.rows,
                                         build.model.memory.patterns, 1000, a.seed);
        const auto mi =
            metrics::mi_correlation(metrics::mi_matrix(build.aln.rows),
                                    metrics::mi_matrix(res.samples.sequences));

        tsv << variant << '\t' << build.aln.K() << '\t' << build.aln.L() << '\t'
            << build.model.pca.d() << '\t'
            << io::fmt_double(build.beta_star.beta_star) << '\t'
            << io::fmt_double(m.kl) << '\t' << io::fmt_double(m.kl_se) << '\t'
            << io::fmt_double(m.novelty_mean) << '\t'
            << io::fmt_double(m.novelty_se) << '\t'
            << io::fmt_double(m.seq_identity_mean) << '\t'
            << io::fmt_double(m.seq_identity_se) << '\t'
            << io::fmt_double(m.diversity.value_or(0.0)) << '\t'
            << io::fmt_double(mi.pearson) << '\t' << io::fmt_double(mi.spearman)
            << '\t' << io::fmt_double(mi.top50_overlap) << '\n';

        std::cout << variant << ": kl=" << io::fmt_double(m.kl)
                  << " mi_pearson=" << io::fmt_double(mi.pearson) << "\n";
    }

    io::write_text_file((fs::path(a.out) / "control.tsv").string(), tsv.str());
    record_invocation(a.out, "manifest.json", sub, {{"seed", a.seed}});
}

struct ScalingArgs {
    std::string msa_path, format = "auto", family, out;
    std::vector<int> sizes;
    int repeats = 5;
    double rho_min = 0.95, col_gap_max = 0.5, row_gap_max = 0.3;
    energy::BetaStarGrid grid;
    std::uint64_t seed = 42;
    bool force = false;
    std::string config;
};

void run_scaling(const ScalingArgs& a, CLI::App* sub) {
    apply_flat_config(sub, a.config);
    require_flag(a.msa_path, "--msa");
    require_flag(a.out, "--out");
    const std::string family =
        a.family.empty() ? family_from_path(a.msa_path) : a.family;
    const auto raw = parse_msa(a.msa_path, a.format);
    if (a.sizes.empty()) throw std::invalid_argument("--sizes is required");

    std::ostringstream tsv;
    tsv << "family\tsize\trepeat\tK\tL\td\tbeta_star\th_col\tk_eff\t"
           "spectral_concentration\n";
    std::vector<betafit::BetaPoint> points;

    for (const int size : a.sizes) {
        if (size < 2 || static_cast<std::size_t>(size) > raw.K())
            throw data_error("scaling: size " + std::to_string(size) +
                             " out of range [2, " + std::to_string(raw.K()) + "]");
        for (int rep = 0; rep < a.repeats; ++rep) {
            // seeded subsample without replacement, then the full pipeline
            RandomStream rng(a.seed,
                             static_cast<std::uint64_t>(size) * 10007u +
                                 static_cast<std::uint64_t>(rep));
            std::vector<std::size_t> idx(raw.K());
            std::iota(idx.begin(), idx.end(), 0);
            for (std::size_t i = 0; i < static_cast<std::size_t>(size); ++i) {
                const auto j =
                    i + rng.uniform_int(static_cast<std::uint64_t>(idx.size() - i));
                std::swap(idx[i], idx[j]);
            }
            msa::RawAlignment sub_raw;
            for (std::size_t i = 0; i < static_cast<std::size_t>(size); ++i) {
                sub_raw.ids.push_back(raw.ids[idx[i]]);
                sub_raw.rows.push_back(raw.rows[idx[i]]);
            }

            pipeline::BuildOptions opts;
            opts.family = family;
            opts.rho_min = a.rho_min;
            opts.col_gap_max = a.col_gap_max;
            opts.row_gap_max = a.row_gap_max;
            opts.grid = a.grid;
            opts.probe_seed = a.seed;
            const auto build = pipeline::build_family(sub_raw, opts);

            betafit::BetaPoint p;
            p.family = family;
            p.d = static_cast<double>(build.model.pca.d());
            p.beta_star = build.beta_star.beta_star;
            p.h_col = build.stats.mean_column_entropy;
            p.k_eff = build.stats.k_eff;
            p.spectral_concentration = build.stats.spectral_concentration;
            points.push_back(p);

            tsv << family << '\t' << size << '\t' << rep << '\t' << build.aln.K()
                << '\t' << build.aln.L() << '\t' << build.model.pca.d() << '\t'
                << io::fmt_double(p.beta_star) << '\t' << io::fmt_double(p.h_col)
                << '\t' << io::fmt_double(p.k_eff) << '\t'
                << io::fmt_double(p.spectral_concentration) << '\n';
        }
    }

    io::prepare_out_dir(a.out, a.force);
    io::write_text_file((fs::path(a.out) / "scaling.tsv").string(), tsv.str());
    pipeline::write_beta_dataset((fs::path(a.out) / "dataset.tsv").string(), points);
    record_invocation(a.out, "manifest.json", sub, {{"seed", a.seed}});
    std::cout << "scaling: " << points.size() << " subsample models fitted\n";
}

struct DiagnoseArgs {
    std::string run_dir, out;
    int max_lag = 1000, window = 200;
    double rel_tol = 0.01;
    bool force = false;
    std::string config;
};

void run_diagnose(const DiagnoseArgs& a, CLI::App* sub) {
    apply_flat_config(sub, a.config);
    require_flag(a.run_dir, "--run");
    require_flag(a.out, "--out");
    const auto run = pipeline::load_run(a.run_dir);
    if (!run.has_chains)
        throw data_error("diagnose: run has no persisted energy traces ('" +
                         run.samples.method + "' is not a chain sampler)");

    std::vector<diagnostics::ChainDiagnostics> rows;
    for (Eigen::Index c = 0; c < run.energy_traces.rows(); ++c) {
        sampler::ChainResult ch;
        ch.chain_index = static_cast<int>(c);
        ch.energy_trace = run.energy_traces.row(c).transpose();
        ch.acceptance_rate = run.acceptance_rates[c];
        rows.push_back(diagnostics::chain_diagnostics(ch, run.config.burn_in,
                                                      a.max_lag, a.window,
                                                      a.rel_tol));
    }

    io::prepare_out_dir(a.out, a.force);
    const std::string kernel =
        run.config.kernel == sampler::Kernel::ula ? "ula" : "mala";
    pipeline::write_diagnostics_tsv((fs::path(a.out) / "diagnostics.tsv").string(),
                                    run.samples.family, kernel, rows);

    double tau = 0.0, ess = 0.0, acc = 0.0;
    double worst_margin = std::numeric_limits<double>::infinity();
    int converged = 0;
    for (const auto& r : rows) {
        tau += r.tau_int;
        ess += r.ess;
        acc += r.acceptance_rate;
        if (r.convergence_iter) {
            ++converged;
            worst_margin = std::min(worst_margin, r.burn_in_margin);
        }
    }
    const auto n = static_cast<double>(rows.size());
    json summary;
    summary["family"] = run.samples.family;
    summary["kernel"] = kernel;
    summary["n_chains"] = rows.size();
    summary["mean_tau_int"] = tau / n;
    summary["mean_ess"] = ess / n;
    summary["mean_acceptance"] = acc / n;
    summary["n_converged"] = converged;
    if (converged > 0) summary["worst_burn_in_margin"] = worst_margin;
    io::write_text_file((fs::path(a.out) / "diagnose.json").string(),
                        summary.dump(2) + "\n");
    record_invocation(a.out, "manifest.json", sub);

    std::cout << "diagnose " << run.samples.family << " (" << kernel
              << "): mean_tau_int=" << io::fmt_double(tau / n)
              << " mean_ess=" << io::fmt_double(ess / n) << " converged "
              << converged << "/" << rows.size() << "\n";
}

struct BetafitArgs {
    std::string dataset, out;
    std::vector<std::string> from_builds;
    bool loocv = false, nested = false;
    int bootstrap = 0;
    std::vector<int> tau_star_k;
    int tau_realizations = 500;
    std::uint64_t seed = 42;
    bool force = false;
    std::string config;
};

void run_betafit(const BetafitArgs& a, CLI::App* sub) {
    apply_flat_config(sub, a.config);
    require_flag(a.out, "--out");
    if (a.dataset.empty() == a.from_builds.empty())
        throw std::invalid_argument(
            "betafit: pass exactly one of --dataset and --from-builds");

    std::vector<betafit::BetaPoint> points;
    json per_build = json::array();
    if (!a.dataset.empty()) {
        points = pipeline::read_beta_dataset(a.dataset);
    } else {
        for (const auto& dir : a.from_builds) {
            const auto b = pipeline::load_build(dir);
            betafit::BetaPoint p;
            p.family = b.stats.family;
            p.d = static_cast<double>(b.model.pca.d());
            p.beta_star = b.beta_star.beta_star;
            p.h_col = b.stats.mean_column_entropy;
            p.k_eff = b.stats.k_eff;
            p.spectral_concentration = b.stats.spectral_concentration;
            points.push_back(p);

            const auto bif =
                betafit::bifurcation_predictor(b.model.memory.patterns);
            per_build.push_back({{"family", p.family},
                                 {"beta_star", p.beta_star},
                                 {"lambda1", bif.lambda1},
                                 {"beta_c", bif.beta_c},
                                 {"beta_star_over_beta_c",
                                  p.beta_star / bif.beta_c}});
        }
    }

    const auto fit = betafit::fit_sqrt_d(points);
    json out_json;
    out_json["n_points"] = fit.n;
    out_json["intercept"] = fit.intercept;
    out_json["slope"] = fit.slope;
    out_json["r2"] = fit.r2;
    out_json["rmse"] = fit.rmse;

    if (a.bootstrap > 0) {
        const auto bs = betafit::bootstrap_coefficients(points, a.bootstrap, a.seed);
        out_json["bootstrap"] = {{"se_intercept", bs.se_intercept},
                                 {"se_slope", bs.se_slope},
                                 {"ci_intercept", {bs.ci_intercept_lo,
                                                   bs.ci_intercept_hi}},
                                 {"ci_slope", {bs.ci_slope_lo, bs.ci_slope_hi}},
                                 {"median_r2", bs.median_r2},
                                 {"n_resamples", bs.n_resamples},
                                 {"n_degenerate_skipped", bs.n_degenerate_skipped}};
    }
    if (a.loocv) {
        const auto cv = betafit::leave_one_family_out(points);
        json fams = json::array();
        for (std::size_t i = 0; i < cv.families.size(); ++i)
            fams.push_back({{"family", cv.families[i]},
                            {"held_out_rmse", cv.held_out_rmse[i]}});
        out_json["loocv"] = {
            {"r2", cv.r2}, {"rmse", cv.rmse}, {"families", fams}};
    }
    for (const int K : a.tau_star_k) {
        const auto ts =
            betafit::tau_star_gaussian(K, a.tau_realizations, {}, a.seed);
        out_json["tau_star"][std::to_string(K)] = ts.tau_star;
    }
    if (a.nested) {
        const auto rep = betafit::nested_models(points);
        json models = json::array();
        for (std::size_t i = 0; i < rep.model_names.size(); ++i)
            models.push_back({{"model", rep.model_names[i]}, {"r2", rep.r2[i]}});
        out_json["nested_models"] = models;
    }
    if (!per_build.empty()) out_json["bifurcation"] = per_build;

    io::prepare_out_dir(a.out, a.force);
    io::write_text_file((fs::path(a.out) / "fit.json").string(),
                        out_json.dump(2) + "\n");
    pipeline::write_beta_dataset((fs::path(a.out) / "dataset.tsv").string(), points);
    record_invocation(a.out, "manifest.json", sub, {{"seed", a.seed}});

    std::cout << "fit: beta_star = " << io::fmt_double(fit.intercept) << " + "
              << io::fmt_double(fit.slope) << " sqrt(d), R2="
              << io::fmt_double(fit.r2) << " (n=" << fit.n << ")\n";
}

// ------------------------------------------------------------- option wiring

void add_grid_options(CLI::App* sub, energy::BetaStarGrid& grid) {
    sub->add_option("--grid-min", grid.beta_min, "beta grid lower bound")
        ->capture_default_str();
    sub->add_option("--grid-max", grid.beta_max, "beta grid upper bound")
        ->capture_default_str();
    sub->add_option("--grid-points", grid.n_points, "log-spaced grid size")
        ->capture_default_str();
}

void add_chain_options(CLI::App* sub, sampler::ChainConfig& cfg,
                       std::optional<double>& beta, std::string& kernel,
                       std::string& rule) {
    sub->add_option("--kernel", kernel, "ula or mala")
        ->check(CLI::IsMember({"ula", "mala"}))
        ->capture_default_str();
    sub->add_option("--beta", beta,
                    "inverse temperature (overrides the regime-derived value)");
    sub->add_option("--temperature-rule", rule,
                    "rounding for the generation temperature: round or ceiling")
        ->check(CLI::IsMember({"round", "ceiling"}))
        ->capture_default_str();
    sub->add_option("--alpha", cfg.alpha, "step size")->capture_default_str();
    sub->add_option("--steps", cfg.steps, "chain length T")->capture_default_str();
    sub->add_option("--burn-in", cfg.burn_in, "burn-in T_b")->capture_default_str();
    sub->add_option("--n-samples", cfg.n_samples, "samples per chain")
        ->capture_default_str();
    sub->add_option("--min-spacing", cfg.min_spacing,
                    "minimum sample spacing (validation floor)")
        ->capture_default_str();
    sub->add_option("--n-chains", cfg.n_chains, "number of chains")
        ->capture_default_str();
    sub->add_option("--jitter", cfg.init_jitter, "near-pattern init jitter")
        ->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"protein sequence generation by Langevin sampling of a "
                 "Hopfield attention energy"};
    app.require_subcommand(1);

    BuildArgs build_args;
    SampleArgs sample_args;
    EvaluateArgs eval_args;
    BaselineArgs baseline_args;
    ControlArgs control_args;
    ScalingArgs scaling_args;
    DiagnoseArgs diagnose_args;
    BetafitArgs betafit_args;

    auto* b = app.add_subcommand("build",
                                 "build a family model from a seed alignment");
    b->add_option("--config", build_args.config,
                  "flat key=value config file (flags take precedence)");
    b->add_option("--msa", build_args.msa_path, "seed alignment path");
    b->add_option("--format", build_args.format, "stockholm, fasta, or auto")
        ->check(CLI::IsMember({"auto", "stockholm", "fasta"}))
        ->capture_default_str();
    b->add_option("--family", build_args.family,
                  "family id (default: file stem)");
    b->add_option("--rho-min", build_args.rho_min, "retained variance fraction")
        ->capture_default_str();
    b->add_option("--col-gap-max", build_args.col_gap_max,
                  "column gap-fraction cutoff")
        ->capture_default_str();
    b->add_option("--row-gap-max", build_args.row_gap_max,
                  "row gap-fraction cutoff")
        ->capture_default_str();
    add_grid_options(b, build_args.grid);
    b->add_option("--probe", build_args.probe, "beta* probes: stored or random")
        ->check(CLI::IsMember({"stored", "random"}))
        ->capture_default_str();
    b->add_option("--n-probes", build_args.n_probes,
                  "number of random probes (random probe kind only)")
        ->capture_default_str();
    b->add_option("--seed", build_args.seed, "master seed")->capture_default_str();
    b->add_option("--out", build_args.out, "output directory");
    b->add_flag("--force", build_args.force, "overwrite a non-empty out dir");
    b->callback([&] { run_build(build_args, b); });

    auto* s = app.add_subcommand("sample", "run the Langevin sampler on a build");
    s->add_option("--config", sample_args.config,
                  "flat key=value config file (flags take precedence)");
    s->add_option("--build", sample_args.build_dir, "build directory");
    s->add_option("--regime", sample_args.regime,
                  "temperature regime: generation or retrieval")
        ->check(CLI::IsMember({"generation", "retrieval"}))
        ->capture_default_str();
    add_chain_options(s, sample_args.cfg, sample_args.beta, sample_args.kernel,
                      sample_args.rule);
    s->add_option("--init", sample_args.init,
                  "chain initialization: near_pattern or random_sphere")
        ->check(CLI::IsMember({"near_pattern", "random_sphere"}))
        ->capture_default_str();
    s->add_option("--threads", sample_args.threads, "worker threads")
        ->capture_default_str();
    s->add_option("--seed", sample_args.seed, "master seed")->capture_default_str();
    s->add_option("--out", sample_args.out, "output directory");
    s->add_flag("--force", sample_args.force, "overwrite a non-empty out dir");
    s->callback([&] { run_sample(sample_args, s); });

    auto* e = app.add_subcommand("evaluate",
                                 "score samples against the stored family");
    e->add_option("--config", eval_args.config,
                  "flat key=value config file (flags take precedence)");
    e->add_option("--build", eval_args.build_dir, "build directory");
    e->add_option("--run", eval_args.run_dir, "run directory to evaluate");
    e->add_option("--fasta", eval_args.fasta, "external FASTA to evaluate");
    e->add_option("--label", eval_args.label, "method label for the report");
    e->add_flag("--biophysics", eval_args.biophysics,
                "add charge/hydropathy/AMP-filter summary");
    e->add_flag("--charge-no-his", eval_args.charge_no_his,
                "exclude the +0.5 histidine term from net charge");
    e->add_flag("--mi", eval_args.mi,
                "add mutual-information correlation vs the stored family");
    e->add_option("--n-boot", eval_args.n_boot, "bootstrap folds for the KL SE")
        ->capture_default_str();
    e->add_option("--n-chains", eval_args.n_chains,
                  "provenance groups for external FASTA input")
        ->capture_default_str();
    e->add_option("--seed", eval_args.seed, "bootstrap seed")
        ->capture_default_str();
    e->add_option("--out", eval_args.out, "output directory");
    e->add_flag("--force", eval_args.force, "overwrite a non-empty out dir");
    e->callback([&] { run_evaluate(eval_args, e); });

    auto* bl = app.add_subcommand("baseline", "generate baseline sample sets");
    bl->add_option("--config", baseline_args.config,
                  "flat key=value config file (flags take precedence)");
    bl->add_option("--build", baseline_args.build_dir, "build directory")
        ;
    bl->add_option("--method", baseline_args.method,
                   "bootstrap, gaussian, convex, or consensus_noise")
        
        ->check(CLI::IsMember(
            {"bootstrap", "gaussian", "convex", "consensus_noise"}));
    bl->add_option("--n-samples", baseline_args.n_samples, "sample budget")
        ->capture_default_str();
    bl->add_option("--n-chains", baseline_args.n_chains,
                   "provenance groups for error bars")
        ->capture_default_str();
    bl->add_option("--alpha", baseline_args.alpha,
                   "step size for the gaussian baseline's noise scale")
        ->capture_default_str();
    bl->add_option("--beta", baseline_args.beta,
                   "inverse temperature for the gaussian baseline "
                   "(default: generation temperature)");
    bl->add_option("--temperature-rule", baseline_args.rule,
                   "rounding for the generation temperature")
        ->check(CLI::IsMember({"round", "ceiling"}))
        ->capture_default_str();
    bl->add_option("--seed", baseline_args.seed, "seed")->capture_default_str();
    bl->add_option("--out", baseline_args.out, "output directory");
    bl->add_flag("--force", baseline_args.force, "overwrite a non-empty out dir");
    bl->callback([&] { run_baseline(baseline_args, bl); });

    auto* cp = app.add_subcommand(
        "control-permute", "side-by-side pipeline on real vs column-permuted MSA");
    cp->add_option("--config", control_args.config,
                  "flat key=value config file (flags take precedence)");
    cp->add_option("--msa", control_args.msa_path, "seed alignment path")
        ;
    cp->add_option("--format", control_args.format, "stockholm, fasta, or auto")
        ->check(CLI::IsMember({"auto", "stockholm", "fasta"}))
        ->capture_default_str();
    cp->add_option("--family", control_args.family, "family id");
    cp->add_option("--rho-min", control_args.rho_min, "retained variance fraction")
        ->capture_default_str();
    cp->add_option("--col-gap-max", control_args.col_gap_max,
                   "column gap-fraction cutoff")
        ->capture_default_str();
    cp->add_option("--row-gap-max", control_args.row_gap_max,
                   "row gap-fraction cutoff")
        ->capture_default_str();
    add_grid_options(cp, control_args.grid);
    add_chain_options(cp, control_args.cfg, control_args.beta, control_args.kernel,
                      control_args.rule);
    cp->add_option("--threads", control_args.threads, "worker threads")
        ->capture_default_str();
    cp->add_option("--seed", control_args.seed, "master seed")
        ->capture_default_str();
    cp->add_option("--out", control_args.out, "output directory");
    cp->add_flag("--force", control_args.force, "overwrite a non-empty out dir");
    cp->callback([&] { run_control_permute(control_args, cp); });

    auto* sc = app.add_subcommand("scaling",
                                  "beta* vs d over row-subsampled rebuilds");
    sc->add_option("--config", scaling_args.config,
                  "flat key=value config file (flags take precedence)");
    sc->add_option("--msa", scaling_args.msa_path, "seed alignment path")
        ;
    sc->add_option("--format", scaling_args.format, "stockholm, fasta, or auto")
        ->check(CLI::IsMember({"auto", "stockholm", "fasta"}))
        ->capture_default_str();
    sc->add_option("--family", scaling_args.family, "family id");
    sc->add_option("--sizes", scaling_args.sizes, "subsample sizes")
        
        ->delimiter(',');
    sc->add_option("--repeats", scaling_args.repeats, "repeats per size")
        ->capture_default_str();
    sc->add_option("--rho-min", scaling_args.rho_min, "retained variance fraction")
        ->capture_default_str();
    sc->add_option("--col-gap-max", scaling_args.col_gap_max,
                   "column gap-fraction cutoff")
        ->capture_default_str();
    sc->add_option("--row-gap-max", scaling_args.row_gap_max,
                   "row gap-fraction cutoff")
        ->capture_default_str();
    add_grid_options(sc, scaling_args.grid);
    sc->add_option("--seed", scaling_args.seed, "master seed")
        ->capture_default_str();
    sc->add_option("--out", scaling_args.out, "output directory");
    sc->add_flag("--force", scaling_args.force, "overwrite a non-empty out dir");
    sc->callback([&] { run_scaling(scaling_args, sc); });

    auto* dg = app.add_subcommand("diagnose", "chain diagnostics for a run");
    dg->add_option("--config", diagnose_args.config,
                  "flat key=value config file (flags take precedence)");
    dg->add_option("--run", diagnose_args.run_dir, "run directory");
    dg->add_option("--max-lag", diagnose_args.max_lag, "autocorrelation lag cap")
        ->capture_default_str();
    dg->add_option("--window", diagnose_args.window, "running-mean window")
        ->capture_default_str();
    dg->add_option("--rel-tol", diagnose_args.rel_tol,
                   "relative tolerance for convergence detection")
        ->capture_default_str();
    dg->add_option("--out", diagnose_args.out, "output directory");
    dg->add_flag("--force", diagnose_args.force, "overwrite a non-empty out dir");
    dg->callback([&] { run_diagnose(diagnose_args, dg); });

    auto* bf = app.add_subcommand("betafit",
                                  "fit beta* = a + b sqrt(d) and related probes");
    bf->add_option("--config", betafit_args.config,
                  "flat key=value config file (flags take precedence)");
    bf->add_option("--dataset", betafit_args.dataset,
                   "dataset TSV (family, d, beta_star[, h_col, k_eff, "
                   "spectral_concentration])");
    bf->add_option("--from-builds", betafit_args.from_builds,
                   "build directories to harvest points from")
        ->delimiter(',');
    bf->add_flag("--loocv", betafit_args.loocv, "leave-one-family-out validation");
    bf->add_option("--bootstrap", betafit_args.bootstrap,
                   "bootstrap resamples for coefficient uncertainty (0 = off)")
        ->capture_default_str();
    bf->add_option("--tau-star", betafit_args.tau_star_k,
                   "pattern counts K for the Gaussian tau* probe")
        ->delimiter(',');
    bf->add_option("--tau-realizations", betafit_args.tau_realizations,
                   "realizations per tau* probe")
        ->capture_default_str();
    bf->add_flag("--nested", betafit_args.nested,
                 "report nested multi-feature model R2");
    bf->add_option("--seed", betafit_args.seed, "seed")->capture_default_str();
    bf->add_option("--out", betafit_args.out, "output directory");
    bf->add_flag("--force", betafit_args.force, "overwrite a non-empty out dir");
    bf->callback([&] { run_betafit(betafit_args, bf); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex);
        return code == 0 ? 0 : 2; // usage errors
    } catch (const data_error& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 3;
    } catch (const numeric_error& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
