#include "hopgen/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hopgen/errors.hpp"
#include "hopgen/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hopgen::pipeline {

namespace {

std::string probe_kind_name(energy::ProbeKind p) {
    return p == energy::ProbeKind::stored_patterns ? "stored_patterns"
                                                   : "random_sphere";
}

energy::ProbeKind probe_kind_from(const std::string& s) {
    if (s == "stored_patterns") return energy::ProbeKind::stored_patterns;
    if (s == "random_sphere") return energy::ProbeKind::random_sphere;
    throw data_error("unknown probe kind: " + s);
}

std::string kernel_name(sampler::Kernel k) {
    return k == sampler::Kernel::ula ? "ula" : "mala";
}

sampler::Kernel kernel_from(const std::string& s) {
    if (s == "ula") return sampler::Kernel::ula;
    if (s == "mala") return sampler::Kernel::mala;
    throw data_error("unknown kernel: " + s);
}

std::string init_name(sampler::InitKind k) {
    return k == sampler::InitKind::near_pattern ? "near_pattern" : "random_sphere";
}

sampler::InitKind init_from(const std::string& s) {
    if (s == "near_pattern") return sampler::InitKind::near_pattern;
    if (s == "random_sphere") return sampler::InitKind::random_sphere;
    throw data_error("unknown init kind: " + s);
}

json config_to_json(const sampler::ChainConfig& c) {
    return json{{"beta", c.beta},
                {"alpha", c.alpha},
                {"steps", c.steps},
                {"burn_in", c.burn_in},
                {"n_samples", c.n_samples},
                {"min_spacing", c.min_spacing},
                {"kernel", kernel_name(c.kernel)},
                {"init", init_name(c.init)},
                {"init_jitter", c.init_jitter},
                {"n_chains", c.n_chains},
                {"master_seed", c.master_seed},
                {"nonfinite_check_interval", c.nonfinite_check_interval}};
}

sampler::ChainConfig config_from_json(const json& j) {
    sampler::ChainConfig c;
    c.beta = j.at("beta").get<double>();
    c.alpha = j.at("alpha").get<double>();
    c.steps = j.at("steps").get<int>();
    c.burn_in = j.at("burn_in").get<int>();
    c.n_samples = j.at("n_samples").get<int>();
    c.min_spacing = j.at("min_spacing").get<int>();
    c.kernel = kernel_from(j.at("kernel").get<std::string>());
    c.init = init_from(j.at("init").get<std::string>());
    c.init_jitter = j.at("init_jitter").get<double>();
    c.n_chains = j.at("n_chains").get<int>();
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    c.nonfinite_check_interval = j.at("nonfinite_check_interval").get<int>();
    return c;
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw data_error(path + ": " + e.what());
    }
    return j;
}

void dump_json(const std::string& path, const json& j) {
    io::write_text_file(path, j.dump(2) + "\n");
}

std::string tsv_cell(double v) { return io::fmt_double(v); }

} // namespace

FamilyBuild build_family(const msa::RawAlignment& raw, const BuildOptions& opts) {
    FamilyBuild b = build_family(msa::clean(raw, opts.col_gap_max, opts.row_gap_max),
                                 opts);
    b.non_canonical_replaced = raw.non_canonical_replaced;
    return b;
}

FamilyBuild build_family(const msa::CleanAlignment& aln, const BuildOptions& opts) {
    FamilyBuild b;
    b.aln = aln;
    b.stats = msa::alignment_stats(b.aln, opts.family);
    b.model = embed::build_memory(b.aln, opts.rho_min, opts.family);
    b.stats.spectral_concentration = b.model.pca.spectral_concentration();
    b.beta_star = energy::find_beta_star(b.model.memory.patterns, opts.grid,
                                         opts.probe, opts.n_probes, opts.probe_seed);
    return b;
}

void save_build(const std::string& dir, const FamilyBuild& build,
                const std::string& source_path, std::uint64_t source_checksum) {
    const fs::path p(dir);
    fs::create_directories(p);

    std::vector<io::NamedArray> arrays;
    arrays.push_back({"mean", build.model.pca.mean});
    arrays.push_back({"basis", build.model.pca.basis});
    arrays.push_back({"singular_values", build.model.pca.singular_values});
    arrays.push_back({"memory", build.model.memory.patterns});
    io::write_arrays((p / "model.bin").string(), arrays);

    msa::write_fasta_file((p / "stored.fasta").string(), build.aln.ids,
                          build.aln.rows);

    json manifest;
    manifest["family"] = build.stats.family;
    manifest["rho_min"] = build.model.pca.rho_min;
    manifest["d"] = build.model.pca.d();
    manifest["K"] = build.aln.K();
    manifest["L"] = build.aln.L();
    manifest["source_path"] = source_path;
    manifest["source_checksum_fnv1a64"] = io::checksum_hex(source_checksum);
    manifest["non_canonical_replaced"] = build.non_canonical_replaced;
    manifest["kept_column_indices"] = build.aln.kept_column_indices;
    manifest["stats"] = {
        {"mean_column_entropy", build.stats.mean_column_entropy},
        {"k_eff", build.stats.k_eff},
        {"spectral_concentration", build.stats.spectral_concentration}};
    manifest["beta_star"] = {
        {"value", build.beta_star.beta_star},
        {"grid_index", build.beta_star.grid_index},
        {"grid_min", build.beta_star.grid[0]},
        {"grid_max", build.beta_star.grid[build.beta_star.grid.size() - 1]},
        {"grid_points", build.beta_star.grid.size()},
        {"probe_kind", probe_kind_name(build.beta_star.probe_kind)}};
    dump_json((p / "manifest.json").string(), manifest);

    write_stats_tsv((p / "stats.tsv").string(), build.stats);
    write_beta_star_tsv((p / "betastar.tsv").string(), build.stats.family,
                        build.model.pca.d(), build.beta_star);
    write_entropy_curve_tsv((p / "entropy_curve.tsv").string(), build.beta_star);
}

FamilyBuild load_build(const std::string& dir) {
    const fs::path p(dir);
    const json manifest = load_json((p / "manifest.json").string());

    FamilyBuild b;
    const auto raw = msa::parse_fasta_file((p / "stored.fasta").string());
    b.aln.ids = raw.ids;
    b.aln.rows = raw.rows;
    b.aln.kept_column_indices =
        manifest.at("kept_column_indices").get<std::vector<std::size_t>>();
    b.non_canonical_replaced =
        manifest.at("non_canonical_replaced").get<std::size_t>();

    b.stats.family = manifest.at("family").get<std::string>();
    b.stats.K = manifest.at("K").get<std::size_t>();
    b.stats.L = manifest.at("L").get<std::size_t>();
    const auto& st = manifest.at("stats");
    b.stats.mean_column_entropy = st.at("mean_column_entropy").get<double>();
    b.stats.k_eff = st.at("k_eff").get<double>();
    b.stats.spectral_concentration =
        st.at("spectral_concentration").get<double>();

    const auto arrays = io::read_arrays((p / "model.bin").string());
    b.model.pca.mean = io::find_array(arrays, "mean");
    b.model.pca.basis = io::find_array(arrays, "basis");
    b.model.pca.singular_values = io::find_array(arrays, "singular_values");
    b.model.pca.rho_min = manifest.at("rho_min").get<double>();
    b.model.pca.L = b.stats.L;
    b.model.memory.family = b.stats.family;
    b.model.memory.patterns = io::find_array(arrays, "memory");
    b.model.memory.source_ids = b.aln.ids;

    if (b.model.pca.mean.cols() != 1 || b.model.pca.singular_values.cols() != 1)
        throw data_error(dir + ": malformed model.bin");
    if (b.model.memory.patterns.rows() != b.model.pca.basis.cols())
        throw data_error(dir + ": model dimensions disagree");

    const auto& bs = manifest.at("beta_star");
    b.beta_star.beta_star = bs.at("value").get<double>();
    b.beta_star.grid_index = bs.at("grid_index").get<int>();
    energy::BetaStarGrid grid;
    grid.beta_min = bs.at("grid_min").get<double>();
    grid.beta_max = bs.at("grid_max").get<double>();
    grid.n_points = bs.at("grid_points").get<int>();
    b.beta_star.grid.resize(grid.n_points);
    const double lmin = std::log(grid.beta_min), lmax = std::log(grid.beta_max);
    for (int i = 0; i < grid.n_points; ++i)
        b.beta_star.grid[i] =
            std::exp(lmin + (lmax - lmin) * i / (grid.n_points - 1));
    b.beta_star.probe_kind = probe_kind_from(bs.at("probe_kind").get<std::string>());
    return b;
}

std::string sample_fasta_header(const sampler::SampleSet& s, std::size_t i) {
    std::ostringstream h;
    h << '>' << s.family;
    if (s.method != "ula" && s.method != "mala") h << "|method=" << s.method;
    h << "|chain=" << s.chain_of[i] << "|iter=" << s.iter_of[i]
      << "|beta=" << io::fmt_double(s.beta);
    return h.str();
}

void save_run(const std::string& dir, const RunData& run,
              const std::string& build_dir) {
    const fs::path p(dir);
    fs::create_directories(p);

    std::ostringstream fasta;
    for (std::size_t i = 0; i < run.samples.size(); ++i)
        fasta << sample_fasta_header(run.samples, i) << '\n'
              << run.samples.sequences[i] << '\n';
    io::write_text_file((p / "samples.fasta").string(), fasta.str());

    const auto S = static_cast<Eigen::Index>(run.samples.size());
    Eigen::MatrixXd states(S, run.samples.states.empty()
                                  ? 0
                                  : run.samples.states.front().size());
    Eigen::MatrixXd chain_idx(S, 1), iter_idx(S, 1);
    for (Eigen::Index i = 0; i < S; ++i) {
        states.row(i) = run.samples.states[static_cast<std::size_t>(i)].transpose();
        chain_idx(i, 0) = run.samples.chain_of[static_cast<std::size_t>(i)];
        iter_idx(i, 0) = run.samples.iter_of[static_cast<std::size_t>(i)];
    }
    io::write_arrays((p / "states.bin").string(),
                     {{"states", states}, {"chain", chain_idx}, {"iter", iter_idx}});

    if (run.has_chains) {
        const auto n_chains = static_cast<Eigen::Index>(run.acceptance_rates.size());
        Eigen::MatrixXd acc(n_chains, 1), init_idx(n_chains, 1), nonf(n_chains, 1);
        for (Eigen::Index c = 0; c < n_chains; ++c) {
            acc(c, 0) = run.acceptance_rates[c];
            init_idx(c, 0) = run.init_pattern_index[static_cast<std::size_t>(c)];
            nonf(c, 0) = run.nonfinite_proposals[static_cast<std::size_t>(c)];
        }
        io::write_arrays((p / "traces.bin").string(),
                         {{"energy", run.energy_traces},
                          {"acceptance", acc},
                          {"init_pattern", init_idx},
                          {"nonfinite_proposals", nonf}});
    }

    json manifest;
    manifest["family"] = run.samples.family;
    manifest["method"] = run.samples.method;
    manifest["beta"] = run.samples.beta;
    manifest["n_samples"] = run.samples.size();
    manifest["n_chains"] = run.samples.n_chains;
    manifest["has_chains"] = run.has_chains;
    manifest["config"] = config_to_json(run.config);
    manifest["build_dir"] = build_dir;
    if (!build_dir.empty()) {
        const auto model_path = (fs::path(build_dir) / "model.bin").string();
        if (fs::exists(model_path))
            manifest["model_checksum_fnv1a64"] =
                io::checksum_hex(io::checksum_file(model_path));
    }
    dump_json((p / "run.json").string(), manifest);
}

RunData load_run(const std::string& dir) {
    const fs::path p(dir);
    const json manifest = load_json((p / "run.json").string());

    RunData run;
    run.samples.family = manifest.at("family").get<std::string>();
    run.samples.method = manifest.at("method").get<std::string>();
    run.samples.beta = manifest.at("beta").get<double>();
    run.samples.n_chains = manifest.at("n_chains").get<int>();
    run.has_chains = manifest.at("has_chains").get<bool>();
    run.config = config_from_json(manifest.at("config"));

    const auto arrays = io::read_arrays((p / "states.bin").string());
    const auto& states = io::find_array(arrays, "states");
    const auto& chain_idx = io::find_array(arrays, "chain");
    const auto& iter_idx = io::find_array(arrays, "iter");
    for (Eigen::Index i = 0; i < states.rows(); ++i) {
        run.samples.states.push_back(states.row(i).transpose());
        run.samples.chain_of.push_back(static_cast<int>(chain_idx(i, 0)));
        run.samples.iter_of.push_back(static_cast<int>(iter_idx(i, 0)));
    }

    // sequences come from the FASTA (no re-decode; keeps the run self-contained)
    const auto fasta = msa::parse_fasta_file((p / "samples.fasta").string());
    if (fasta.rows.size() != run.samples.states.size())
        throw data_error(dir + ": samples.fasta and states.bin disagree");
    run.samples.sequences = fasta.rows;

    if (run.has_chains) {
        const auto traces = io::read_arrays((p / "traces.bin").string());
        run.energy_traces = io::find_array(traces, "energy");
        const auto& acc = io::find_array(traces, "acceptance");
        const auto& init_idx = io::find_array(traces, "init_pattern");
        const auto& nonf = io::find_array(traces, "nonfinite_proposals");
        run.acceptance_rates = acc.col(0);
        for (Eigen::Index c = 0; c < init_idx.rows(); ++c) {
            run.init_pattern_index.push_back(static_cast<int>(init_idx(c, 0)));
            run.nonfinite_proposals.push_back(static_cast<int>(nonf(c, 0)));
        }
    }
    return run;
}

void write_stats_tsv(const std::string& path, const msa::AlignmentStats& stats) {
    std::ostringstream out;
    out << "family\tK\tL\tmean_column_entropy\tk_eff\tspectral_concentration\n";
    out << stats.family << '\t' << stats.K << '\t' << stats.L << '\t'
        << tsv_cell(stats.mean_column_entropy) << '\t' << tsv_cell(stats.k_eff)
        << '\t' << tsv_cell(stats.spectral_concentration) << '\n';
    io::write_text_file(path, out.str());
}

void write_beta_star_tsv(const std::string& path, const std::string& family,
                         Eigen::Index d, const energy::BetaStarResult& bs) {
    std::ostringstream out;
    out << "family\td\tbeta_star\tgrid_min\tgrid_max\tgrid_points\tprobe_kind\n";
    out << family << '\t' << d << '\t' << tsv_cell(bs.beta_star) << '\t'
        << tsv_cell(bs.grid[0]) << '\t' << tsv_cell(bs.grid[bs.grid.size() - 1])
        << '\t' << bs.grid.size() << '\t' << probe_kind_name(bs.probe_kind) << '\n';
    io::write_text_file(path, out.str());
}

void write_entropy_curve_tsv(const std::string& path,
                             const energy::BetaStarResult& bs) {
    std::ostringstream out;
    out << "beta\tmean_entropy\n";
    for (Eigen::Index i = 0; i < bs.grid.size(); ++i)
        out << tsv_cell(bs.grid[i]) << '\t' << tsv_cell(bs.mean_entropy[i]) << '\n';
    io::write_text_file(path, out.str());
}

void write_diagnostics_tsv(const std::string& path, const std::string& family,
                           const std::string& kernel,
                           const std::vector<diagnostics::ChainDiagnostics>& rows) {
    std::ostringstream out;
    out << "family\tkernel\ttau_int\tess\tacceptance_rate\tconvergence_iter\t"
           "margin\n";
    for (const auto& r : rows) {
        out << family << '\t' << kernel << '\t' << tsv_cell(r.tau_int) << '\t'
            << tsv_cell(r.ess) << '\t' << tsv_cell(r.acceptance_rate) << '\t';
        if (r.convergence_iter)
            out << *r.convergence_iter << '\t' << tsv_cell(r.burn_in_margin);
        else
            out << "NA\tNA";
        out << '\n';
    }
    io::write_text_file(path, out.str());
}

void write_metrics_tsv(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ostringstream out;
    out << "family\tmethod\tkl\tkl_se\tnovelty\tnovelty_se\tseqid\tseqid_se\t"
           "diversity\tvalid_fraction\n";
    for (const auto& r : rows) {
        out << r.family << '\t' << r.method << '\t' << tsv_cell(r.m.kl) << '\t'
            << tsv_cell(r.m.kl_se) << '\t' << tsv_cell(r.m.novelty_mean) << '\t'
            << tsv_cell(r.m.novelty_se) << '\t' << tsv_cell(r.m.seq_identity_mean)
            << '\t' << tsv_cell(r.m.seq_identity_se) << '\t';
        if (r.m.diversity)
            out << tsv_cell(*r.m.diversity);
        else
            out << "NA";
        out << '\t' << tsv_cell(r.m.valid_fraction) << '\n';
    }
    io::write_text_file(path, out.str());
}

std::vector<betafit::BetaPoint> read_beta_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw data_error(path + ": empty dataset");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const bool extended =
        line == "family\td\tbeta_star\th_col\tk_eff\tspectral_concentration";
    if (!extended && line != "family\td\tbeta_star")
        throw data_error(path + ": unexpected dataset header '" + line + "'");

    std::vector<betafit::BetaPoint> points;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream f(line);
        betafit::BetaPoint p;
        std::string d_s, bs_s, h_s, keff_s, sc_s;
        if (!std::getline(f, p.family, '\t') || !std::getline(f, d_s, '\t') ||
            !std::getline(f, bs_s, extended ? '\t' : '\n'))
            throw data_error(path + ": malformed row at line " +
                             std::to_string(line_no));
        try {
            p.d = std::stod(d_s);
            p.beta_star = std::stod(bs_s);
            if (extended) {
                if (!std::getline(f, h_s, '\t') || !std::getline(f, keff_s, '\t') ||
                    !std::getline(f, sc_s))
                    throw data_error(path + ": malformed row at line " +
                                     std::to_string(line_no));
                p.h_col = std::stod(h_s);
                p.k_eff = std::stod(keff_s);
                p.spectral_concentration = std::stod(sc_s);
            }
        } catch (const std::invalid_argument&) {
            throw data_error(path + ": non-numeric field at line " +
                             std::to_string(line_no));
        }
        points.push_back(std::move(p));
    }
    if (points.empty()) throw data_error(path + ": dataset has no rows");
    return points;
}

void write_beta_dataset(const std::string& path,
                        const std::vector<betafit::BetaPoint>& points) {
    std::ostringstream out;
    out << "family\td\tbeta_star\th_col\tk_eff\tspectral_concentration\n";
    for (const auto& p : points)
        out << p.family << '\t' << tsv_cell(p.d) << '\t' << tsv_cell(p.beta_star)
            << '\t' << tsv_cell(p.h_col) << '\t' << tsv_cell(p.k_eff) << '\t'
            << tsv_cell(p.spectral_concentration) << '\n';
    io::write_text_file(path, out.str());
}

} // namespace hopgen::pipeline
