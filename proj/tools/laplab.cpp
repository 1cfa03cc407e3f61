#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "laplab/config.hpp"
#include "laplab/io.hpp"
#include "laplab/svg.hpp"

namespace fs = std::filesystem;
using namespace laplab;

namespace {

struct Overrides {
    std::string out_dir;
    std::string backend;
    std::int64_t seed = -1;
    int replicas = 0;
    int workers = 0;
    bool quiet = false;
};

void apply_overrides(ExperimentConfig& cfg, const Overrides& ov) {
    if (const char* env = std::getenv("LAPLAB_OUT_DIR"); env && cfg.out_dir == ".")
        cfg.out_dir = env;
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
    if (!ov.backend.empty()) cfg.backend = parse_backend(ov.backend);
    if (ov.seed >= 0) cfg.base_seed = static_cast<std::uint64_t>(ov.seed);
    if (ov.replicas > 0) cfg.replicas = ov.replicas;
    if (ov.workers > 0) cfg.workers = ov.workers;
    if (ov.quiet) cfg.quiet = true;
}

fs::path out_path(const ExperimentConfig& cfg, const std::string& suffix) {
    fs::create_directories(cfg.out_dir);
    return fs::path(cfg.out_dir) / (cfg.name + suffix);
}

void emit_outputs(const SweepResult& res) {
    const auto& cfg = res.config;
    write_csv(res, out_path(cfg, ".csv").string());
    write_json(res, out_path(cfg, ".json").string());
    write_svgs(res, out_path(cfg, "_field.svg").string(), out_path(cfg, "_best.svg").string());
    if (!cfg.quiet) {
        std::printf("wrote %s{.csv,.json,_field.svg,_best.svg}\n",
                    (fs::path(cfg.out_dir) / cfg.name).string().c_str());
        for (const auto& metric : res.metric_names)
            if (auto it = res.best_slope.find(metric);
                it != res.best_slope.end() && it->second)
                std::printf("  %s: best-error slope %.3f (r2 %.3f)\n", metric.c_str(),
                            it->second->slope, it->second->r2);
        for (const auto& metric : res.metric_names) {
            auto s = res.small_eps_slope.find(metric);
            auto l = res.large_eps_slope.find(metric);
            if (s != res.small_eps_slope.end() && s->second && l != res.large_eps_slope.end() &&
                l->second)
                std::printf("  %s: small-eps slope %.3f, large-eps slope %.3f\n", metric.c_str(),
                            s->second->slope, l->second->slope);
        }
    }
}

int run_from_config(const std::string& config_path, const Overrides& ov,
                    ExperimentType expected_kind, const char* subcommand) {
    ExperimentConfig cfg = load_config(config_path);
    if (cfg.experiment != expected_kind)
        throw config_error(std::string("config: '") + config_path + "' is not a " + subcommand +
                           " experiment (got " + to_string(cfg.experiment) + ")");
    apply_overrides(cfg, ov);
    const SweepResult res = run_experiment(cfg);
    emit_outputs(res);
    return 0;
}

int run_validate(const std::string& config_path, const Overrides& ov) {
    ExperimentConfig cfg = load_config(config_path);
    if (cfg.experiment != ExperimentType::HeatKernelCheck &&
        cfg.experiment != ExperimentType::DegreeCheck)
        throw config_error("config: validate expects a heat-kernel-check or degree-check experiment");
    apply_overrides(cfg, ov);
    const ValidationReport rep = run_validation_suite(cfg);
    for (const auto& c : rep.checks)
        std::printf("[%s] %-45s measured=%.6g threshold=%.6g%s%s\n", c.pass ? "PASS" : "FAIL",
                    c.name.c_str(), c.measured, c.threshold, c.note.empty() ? "" : "  ",
                    c.note.c_str());
    write_json(rep, cfg, out_path(cfg, ".json").string());
    if (!cfg.quiet)
        std::printf("%s: %zu checks, %s\n", to_string(cfg.experiment).c_str(), rep.checks.size(),
                    rep.all_pass ? "all passed" : "FAILURES PRESENT");
    return 0;
}

int run_spectrum(const std::string& manifold, const std::string& density,
                 const std::string& laplacian, int n, double eps, int k, std::int64_t seed,
                 const std::string& backend) {
    const ManifoldKind mk = parse_manifold(manifold);
    const DensityKind dk = parse_density(density);
    const ManifoldModel model =
        mk == ManifoldKind::CircleR4 ? ManifoldModel::circle_r4() : ManifoldModel::sphere_r3();
    const DensityModel dens = dk == DensityKind::Uniform ? DensityModel::uniform()
                                                         : DensityModel::circle_nonuniform();
    const SampleSet samples = sample(model, dens, n, static_cast<std::uint64_t>(seed));
    const KernelSpec spec = KernelSpec::gaussian(eps, model.intrinsic_dim);
    const GraphOperators ops =
        build_operators(samples, spec, parse_laplacian(laplacian), model, dens);
    const SpectralResult sr =
        solve_lowest(ops, spec, k - 1, parse_backend(backend));
    const AnalyticEigensystem sys = analytic_spectrum(model, k);
    std::printf("%4s  %14s  %14s  %12s\n", "k", "mu(analytic)", "lambda(graph)", "rel.err");
    for (int i = 0; i < k; ++i) {
        const double mu = sys.eigenvalues[i], lam = sr.eigenvalues[i];
        if (mu > 0)
            std::printf("%4d  %14.6g  %14.6g  %12.4g\n", i + 1, mu, lam, std::abs(lam - mu) / mu);
        else
            std::printf("%4d  %14.6g  %14.6g  %12s\n", i + 1, mu, lam, "-");
    }
    std::printf("solver: %s, iterations %d, max residual %.3g\n",
                to_string(sr.meta.backend).c_str(), sr.meta.iterations, sr.meta.max_residual);
    return 0;
}

int run_plot(const std::string& csv_path, const Overrides& ov) {
    SweepResult res = read_csv(csv_path);
    res.config.name = fs::path(csv_path).stem().string();
    res.config.out_dir = ov.out_dir.empty() ? fs::path(csv_path).parent_path().string()
                                            : ov.out_dir;
    if (res.config.out_dir.empty()) res.config.out_dir = ".";
    write_svgs(res, out_path(res.config, "_field.svg").string(),
               out_path(res.config, "_best.svg").string());
    if (!ov.quiet)
        std::printf("wrote %s{_field.svg,_best.svg}\n",
                    (fs::path(res.config.out_dir) / res.config.name).string().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph-Laplacian spectral convergence laboratory"};
    app.require_subcommand(1);

    Overrides ov;
    app.add_option("--out-dir", ov.out_dir, "output directory (overrides config and LAPLAB_OUT_DIR)");
    app.add_option("--seed", ov.seed, "base seed override");
    app.add_option("--replicas", ov.replicas, "replica count override");
    app.add_option("--workers", ov.workers, "worker thread count (default: available parallelism)");
    app.add_option("--backend", ov.backend, "eigensolver backend: dense | iterative");
    app.add_flag("--quiet", ov.quiet, "suppress progress output");

    std::string config_path, csv_path;
    auto* sweep = app.add_subcommand("sweep", "eigen-convergence sweep over an (N, eps) grid");
    sweep->add_option("--config", config_path, "experiment TOML")->required();
    auto* pointwise = app.add_subcommand("pointwise", "pointwise error curve at fixed N");
    pointwise->add_option("--config", config_path, "experiment TOML")->required();
    auto* form = app.add_subcommand("form", "Dirichlet-form convergence check");
    form->add_option("--config", config_path, "experiment TOML")->required();
    auto* validate = app.add_subcommand("validate", "heat-kernel / degree validation suites");
    validate->add_option("--config", config_path, "experiment TOML")->required();

    std::string sp_manifold = "s1", sp_density = "uniform", sp_laplacian = "rw",
                sp_backend = "iterative";
    int sp_n = 1000, sp_k = 10;
    double sp_eps = 1e-3;
    std::int64_t sp_seed = 0;
    auto* spectrum = app.add_subcommand("spectrum", "analytic vs empirical eigenvalues, one cell");
    spectrum->add_option("--manifold", sp_manifold, "s1 | s2");
    spectrum->add_option("--density", sp_density, "uniform | s1-nonuniform");
    spectrum->add_option("--laplacian", sp_laplacian, "un | rw | dc");
    spectrum->add_option("--n", sp_n, "sample count");
    spectrum->add_option("--eps", sp_eps, "kernel bandwidth");
    spectrum->add_option("--k", sp_k, "eigenvalue count");
    spectrum->add_option("--spectrum-seed", sp_seed, "sample seed");
    spectrum->add_option("--spectrum-backend", sp_backend, "dense | iterative");

    auto* plot = app.add_subcommand("plot", "regenerate SVGs from a results CSV");
    plot->add_option("--csv", csv_path, "results CSV produced by a sweep")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (sweep->parsed())
            return run_from_config(config_path, ov, ExperimentType::EigenSweep, "sweep");
        if (pointwise->parsed())
            return run_from_config(config_path, ov, ExperimentType::PointwiseCurve, "pointwise");
        if (form->parsed())
            return run_from_config(config_path, ov, ExperimentType::FormCheck, "form");
        if (validate->parsed()) return run_validate(config_path, ov);
        if (spectrum->parsed()) {
            if (ov.seed >= 0) sp_seed = ov.seed;
            if (!ov.backend.empty()) sp_backend = ov.backend;
            return run_spectrum(sp_manifold, sp_density, sp_laplacian, sp_n, sp_eps, sp_k,
                                sp_seed, sp_backend);
        }
        if (plot->parsed()) return run_plot(csv_path, ov);
    } catch (const config_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime failure: %s\n", e.what());
        return 2;
    }
    return 1;
}
