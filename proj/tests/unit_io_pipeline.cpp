#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "hopgen/errors.hpp"
#include "hopgen/io.hpp"
#include "hopgen/pipeline.hpp"
#include "support/synthetic.hpp"

using namespace hopgen;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("hopgen_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string str(const std::string& sub = "") const {
        return sub.empty() ? path.string() : (path / sub).string();
    }
};

std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace

TEST_CASE("the checksum matches published fnv-1a test vectors") {
    CHECK(io::fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(io::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(io::fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("doubles are formatted to shortest round-trip form") {
    CHECK(io::fmt_double(0.1) == "0.1");
    CHECK(io::fmt_double(8.0) == "8");
    CHECK(io::fmt_double(-2.5e-7) == "-2.5e-07");
    CHECK(std::stod(io::fmt_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("array containers round-trip bit for bit") {
    TempDir tmp;
    RandomStream rng(3, 0);
    Eigen::MatrixXd A(3, 5), B(1, 1);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 5; ++j) A(i, j) = rng.normal();
    B(0, 0) = -0.0;

    io::write_arrays(tmp.str("x.bin"), {{"alpha", A}, {"beta", B}});
    const auto back = io::read_arrays(tmp.str("x.bin"));
    REQUIRE(back.size() == 2);
    CHECK(back[0].name == "alpha");
    CHECK((io::find_array(back, "alpha") - A).cwiseAbs().maxCoeff() == 0.0);
    CHECK(io::find_array(back, "beta")(0, 0) == 0.0);
    CHECK_THROWS_AS(io::find_array(back, "missing"), data_error);
}

TEST_CASE("corrupt containers are rejected") {
    TempDir tmp;
    io::write_text_file(tmp.str("bad.bin"), "not a container at all");
    CHECK_THROWS_AS(io::read_arrays(tmp.str("bad.bin")), data_error);
}

TEST_CASE("output directories refuse silent overwrites") {
    TempDir tmp;
    const std::string dir = tmp.str("out");
    io::prepare_out_dir(dir, false); // fresh: fine
    io::prepare_out_dir(dir, false); // empty existing: fine
    io::write_text_file(dir + "/x.txt", "content");
    CHECK_THROWS_AS(io::prepare_out_dir(dir, false), data_error);
    io::prepare_out_dir(dir, true); // forced
}

TEST_CASE("family builds survive a save and load cycle") {
    TempDir tmp;
    const auto raw = testsup::make_raw(16, 12, 101);
    pipeline::BuildOptions opts;
    opts.family = "famX";
    const auto build = pipeline::build_family(raw, opts);

    const std::string dir = tmp.str("build");
    io::prepare_out_dir(dir, false);
    pipeline::save_build(dir, build, "source.fasta", 0x1234);
    const auto back = pipeline::load_build(dir);

    CHECK(back.stats.family == "famX");
    CHECK(back.stats.K == build.stats.K);
    CHECK(back.stats.L == build.stats.L);
    CHECK(back.stats.k_eff == Approx(build.stats.k_eff));
    CHECK(back.stats.spectral_concentration ==
          Approx(build.stats.spectral_concentration));
    CHECK(back.aln.rows == build.aln.rows);
    CHECK(back.aln.kept_column_indices == build.aln.kept_column_indices);
    CHECK((back.model.pca.mean - build.model.pca.mean).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK((back.model.pca.basis - build.model.pca.basis).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK((back.model.memory.patterns - build.model.memory.patterns)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK(back.beta_star.beta_star == build.beta_star.beta_star);
    CHECK(back.beta_star.grid_index == build.beta_star.grid_index);
    CHECK(back.model.pca.rho_min == build.model.pca.rho_min);

    // report files exist with their pinned headers
    CHECK(slurp(dir + "/stats.tsv").rfind(
              "family\tK\tL\tmean_column_entropy\tk_eff\tspectral_"
              "concentration\n", 0) == 0);
    CHECK(slurp(dir + "/betastar.tsv").rfind(
              "family\td\tbeta_star\tgrid_min\tgrid_max\tgrid_points\t"
              "probe_kind\n", 0) == 0);
    CHECK(slurp(dir + "/entropy_curve.tsv").rfind("beta\tmean_entropy\n", 0) ==
          0);
}

TEST_CASE("runs survive a save and load cycle") {
    TempDir tmp;
    const auto aln = testsup::make_clean(12, 10, 103);
    const auto model = embed::build_memory(aln, 0.95, "famY");

    sampler::ChainConfig cfg;
    cfg.beta = 6.0;
    cfg.steps = 200;
    cfg.burn_in = 50;
    cfg.n_samples = 2;
    cfg.min_spacing = 20;
    cfg.n_chains = 3;
    cfg.master_seed = 5;
    const auto res = sampler::run_ensemble(model, cfg, 1);

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

    const std::string dir = tmp.str("run");
    io::prepare_out_dir(dir, false);
    pipeline::save_run(dir, run, "some/build");
    const auto back = pipeline::load_run(dir);

    CHECK(back.samples.family == "famY");
    CHECK(back.samples.method == run.samples.method);
    CHECK(back.samples.beta == run.samples.beta);
    CHECK(back.samples.sequences == run.samples.sequences);
    CHECK(back.samples.chain_of == run.samples.chain_of);
    CHECK(back.samples.iter_of == run.samples.iter_of);
    REQUIRE(back.has_chains);
    CHECK((back.energy_traces - run.energy_traces).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.acceptance_rates - run.acceptance_rates).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK(back.init_pattern_index == run.init_pattern_index);
    CHECK(back.config.beta == cfg.beta);
    CHECK(back.config.steps == cfg.steps);
    CHECK(back.config.burn_in == cfg.burn_in);
    CHECK(back.config.master_seed == cfg.master_seed);
    for (std::size_t i = 0; i < back.samples.size(); ++i)
        CHECK((back.samples.states[i] - run.samples.states[i])
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
}

TEST_CASE("sample headers carry family, chain, iteration, and temperature") {
    sampler::SampleSet s;
    s.family = "famZ";
    s.method = "ula";
    s.beta = 8.0;
    s.chain_of = {0, 4};
    s.iter_of = {2600, 5000};
    s.states.resize(2);
    s.sequences = {"AA", "RR"};
    CHECK(pipeline::sample_fasta_header(s, 0) == ">famZ|chain=0|iter=2600|beta=8");
    CHECK(pipeline::sample_fasta_header(s, 1) == ">famZ|chain=4|iter=5000|beta=8");
    s.method = "convex";
    CHECK(pipeline::sample_fasta_header(s, 0) ==
          ">famZ|method=convex|chain=0|iter=2600|beta=8");
}

TEST_CASE("diagnostics and metrics tables have the pinned shapes") {
    TempDir tmp;
    diagnostics::ChainDiagnostics d;
    d.chain_index = 0;
    d.tau_int = 2.5;
    d.tau_cutoff_reached = true;
    d.ess = 40.0;
    d.acceptance_rate = 1.0;
    d.convergence_iter = {};
    d.burn_in_margin = 0.0;
    pipeline::write_diagnostics_tsv(tmp.str("d.tsv"), "fam", "ula", {d});
    const std::string dtext = slurp(tmp.str("d.tsv"));
    CHECK(dtext.rfind("family\tkernel\ttau_int\tess\tacceptance_rate\t"
                      "convergence_iter\tmargin\n", 0) == 0);
    CHECK(dtext.find("\tNA\t") != std::string::npos); // absent convergence

    metrics::GenerationMetrics m;
    m.kl = 0.05;
    m.kl_se = 0.01;
    m.novelty_mean = 0.5;
    m.novelty_se = 0.02;
    m.diversity = {};
    m.seq_identity_mean = 0.55;
    m.seq_identity_se = 0.01;
    m.valid_fraction = 1.0;
    pipeline::write_metrics_tsv(tmp.str("m.tsv"), {{"fam", "ula", m}});
    const std::string mtext = slurp(tmp.str("m.tsv"));
    CHECK(mtext.rfind("family\tmethod\tkl\tkl_se\tnovelty\tnovelty_se\tseqid\t"
                      "seqid_se\tdiversity\tvalid_fraction\n", 0) == 0);
    CHECK(mtext.find("fam\tula\t0.05\t") != std::string::npos);
    CHECK(mtext.find("\tNA\t1\n") != std::string::npos); // null diversity
}

TEST_CASE("regression datasets round-trip and reject malformed input") {
    TempDir tmp;
    std::vector<betafit::BetaPoint> pts(2);
    pts[0] = {"famA", 59.0, 3.85, 1.92, 68.0, 0.21};
    pts[1] = {"famB", 46.0, 3.85, 1.68, 55.0, 0.25};
    pipeline::write_beta_dataset(tmp.str("ds.tsv"), pts);
    const auto back = pipeline::read_beta_dataset(tmp.str("ds.tsv"));
    REQUIRE(back.size() == 2);
    CHECK(back[0].family == "famA");
    CHECK(back[0].d == 59.0);
    CHECK(back[0].beta_star == 3.85);
    CHECK(back[1].k_eff == 55.0);

    io::write_text_file(tmp.str("short.tsv"),
                        "family\td\tbeta_star\nfamC\t10\t2.5\n");
    const auto short_back = pipeline::read_beta_dataset(tmp.str("short.tsv"));
    REQUIRE(short_back.size() == 1);
    CHECK(short_back[0].d == 10.0);

    io::write_text_file(tmp.str("badhdr.tsv"), "fam\tdim\tbeta\nx\t1\t2\n");
    CHECK_THROWS_AS(pipeline::read_beta_dataset(tmp.str("badhdr.tsv")),
                    data_error);
    io::write_text_file(tmp.str("badnum.tsv"),
                        "family\td\tbeta_star\nfamC\tten\t2.5\n");
    try {
        pipeline::read_beta_dataset(tmp.str("badnum.tsv"));
        FAIL("expected a data error");
    } catch (const data_error& e) {
        CHECK(std::string(e.what()).find("line") != std::string::npos);
    }
}

TEST_CASE("building from a raw alignment populates every model field") {
    const auto raw = testsup::make_raw(20, 14, 107);
    pipeline::BuildOptions opts;
    opts.family = "fam";
    const auto b = pipeline::build_family(raw, opts);
    CHECK(b.stats.K == 20);
    CHECK(b.stats.L == 14);
    CHECK(b.stats.k_eff > 0.0);
    CHECK(b.stats.spectral_concentration > 0.0);
    CHECK(b.stats.spectral_concentration <= 1.0);
    CHECK(b.model.memory.K() == 20);
    CHECK(b.beta_star.beta_star >= opts.grid.beta_min);
    CHECK(b.beta_star.beta_star <= opts.grid.beta_max);
    CHECK(b.beta_star.mean_entropy.size() == opts.grid.n_points);
    CHECK(b.non_canonical_replaced == 0);
}
