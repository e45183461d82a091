#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hopgen/baselines.hpp"
#include "hopgen/betafit.hpp"
#include "hopgen/diagnostics.hpp"
#include "hopgen/embed.hpp"
#include "hopgen/energy.hpp"
#include "hopgen/metrics.hpp"
#include "hopgen/msa.hpp"
#include "hopgen/sampler.hpp"

namespace hopgen::pipeline {

struct BuildOptions {
    std::string family = "family";
    double rho_min = 0.95;
    double col_gap_max = 0.5;
    double row_gap_max = 0.3;
    energy::BetaStarGrid grid;
    energy::ProbeKind probe = energy::ProbeKind::stored_patterns;
    int n_probes = 64;           // random_sphere probes only
    std::uint64_t probe_seed = 0;
};

struct FamilyBuild {
    msa::CleanAlignment aln;
    msa::AlignmentStats stats;
    embed::FamilyModel model;
    energy::BetaStarResult beta_star;
    std::size_t non_canonical_replaced = 0;
};

// clean -> stats -> one-hot/PCA/memory -> beta* sweep.
FamilyBuild build_family(const msa::RawAlignment& raw, const BuildOptions& opts);

// Same pipeline on an already-cleaned alignment (gap filters skipped).
FamilyBuild build_family(const msa::CleanAlignment& aln, const BuildOptions& opts);

// Build directory: model.bin + manifest.json + stored.fasta + stats.tsv +
// betastar.tsv + entropy_curve.tsv.
void save_build(const std::string& dir, const FamilyBuild& build,
                const std::string& source_path, std::uint64_t source_checksum);
FamilyBuild load_build(const std::string& dir);

// Run directory: samples.fasta + states.bin + traces.bin + run.json.
struct RunData {
    sampler::SampleSet samples;
    Eigen::MatrixXd energy_traces;       // n_chains x steps; empty for baselines
    Eigen::VectorXd acceptance_rates;    // per chain
    std::vector<int> init_pattern_index; // -1 where absent
    std::vector<int> nonfinite_proposals;
    sampler::ChainConfig config;
    bool has_chains = false;
};
void save_run(const std::string& dir, const RunData& run,
              const std::string& build_dir);
RunData load_run(const std::string& dir);

std::string sample_fasta_header(const sampler::SampleSet& s, std::size_t i);

// Report writers (TSV shapes are part of the tool's contract).
void write_stats_tsv(const std::string& path, const msa::AlignmentStats& stats);
void write_beta_star_tsv(const std::string& path, const std::string& family,
                         Eigen::Index d, const energy::BetaStarResult& bs);
void write_entropy_curve_tsv(const std::string& path,
                             const energy::BetaStarResult& bs);
void write_diagnostics_tsv(const std::string& path, const std::string& family,
                           const std::string& kernel,
                           const std::vector<diagnostics::ChainDiagnostics>& rows);
struct MetricsRow {
    std::string family;
    std::string method;
    metrics::GenerationMetrics m;
};
void write_metrics_tsv(const std::string& path, const std::vector<MetricsRow>& rows);

// betafit dataset: family, d, beta_star [, h_col, k_eff, spectral_concentration]
std::vector<betafit::BetaPoint> read_beta_dataset(const std::string& path);
void write_beta_dataset(const std::string& path,
                        const std::vector<betafit::BetaPoint>& points);

} // namespace hopgen::pipeline
