// Command-line front end. Every subcommand takes either --config <file> or
// --model <kind> (preset defaults) and reads/writes artifacts in the output
// directory so stages can run one at a time.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "mvbu/error.hpp"
#include "mvbu/pipeline/config.hpp"
#include "mvbu/pipeline/dataset.hpp"
#include "mvbu/pipeline/experiment.hpp"
#include "mvbu/pipeline/report.hpp"

namespace fs = std::filesystem;
using namespace mvbu;
using namespace mvbu::pipeline;

namespace {

struct CommonOptions {
    std::string config;
    std::string model;
    std::optional<std::uint64_t> seed;
    bool paper_scale = false;
    std::string geometry;
    std::string out;
    std::optional<int> threads;
};

void add_common(CLI::App* app, CommonOptions& o)
{
    app->add_option("--config", o.config, "experiment config (JSON)");
    app->add_option("--model", o.model, "preset to use without a config: frame, lumped or sdof");
    app->add_option("--seed", o.seed, "master seed; every stage seed derives from it");
    app->add_flag("--paper-scale", o.paper_scale, "full-size dataset, network and chain settings");
    app->add_option("--geometry", o.geometry, "frame geometry file");
    app->add_option("--out", o.out, "output directory");
    app->add_option("--threads", o.threads, "worker threads for dataset generation and replica exchange");
}

ExperimentConfig resolve_config(const CommonOptions& o)
{
    require(o.config.empty() != o.model.empty(), "pass exactly one of --config or --model");
    nlohmann::json overrides = nlohmann::json::object();
    if (o.seed) overrides["seed"] = *o.seed;
    if (o.paper_scale) overrides["paper_scale"] = true;
    // Paths given on the command line are relative to the working directory.
    if (!o.geometry.empty()) overrides["geometry"] = fs::absolute(o.geometry).string();
    if (!o.out.empty()) overrides["output_dir"] = fs::absolute(o.out).string();
    if (o.threads) overrides["threads"] = *o.threads;
    if (!o.config.empty()) return load_config(o.config, overrides);
    overrides["model"] = o.model;
    return ExperimentConfig::from_json(overrides, fs::current_path());
}

void progress_line(const std::string& what, std::size_t done, std::size_t total)
{
    if (done == total || done % std::max<std::size_t>(1, total / 20) == 0)
        std::fprintf(stderr, "%s %zu/%zu\n", what.c_str(), done, total);
}

std::vector<double> parse_theta(const std::string& text, const ExperimentConfig& cfg)
{
    if (text.empty()) {
        require(!cfg.ground_truth.empty(), "no --theta given and the config has no ground_truth");
        return cfg.ground_truth;
    }
    std::vector<double> theta;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            theta.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw ValidationError("--theta entry '" + cell + "' is not a number");
        }
    }
    require(theta.size() == cfg.parameters.size(),
            "--theta needs " + std::to_string(cfg.parameters.size()) + " comma-separated values");
    require(cfg.parameters.contains(theta), "--theta lies outside the parameter bounds");
    return theta;
}

void cmd_simulate(const ExperimentConfig& cfg, const std::string& theta_text)
{
    auto run = cfg;
    run.ground_truth = parse_theta(theta_text, cfg);
    const auto sim = run.simulator();
    const auto obs = simulate_observation(run, sim);
    const auto dir = run.output_path("observation");
    write_observation(dir, obs, sim.channel_names());
    std::vector<fs::path> artifacts{dir / "features.csv"};
    update_manifest(run, "simulate", artifacts);
    std::printf("wrote %zu channels and features to %s\n", obs.recording.responses.size(), dir.string().c_str());
}

void cmd_make_dataset(const ExperimentConfig& cfg)
{
    const auto ds = generate_dataset(cfg, [](std::size_t d, std::size_t n) { progress_line("simulated", d, n); });
    const auto path = cfg.output_path(kDatasetFile);
    write_dataset(path, ds);
    update_manifest(cfg, "make-dataset", {path});
    std::printf("wrote %zu samples (%zu skipped) to %s\n", ds.size(), ds.header.skipped.size(), path.string().c_str());
}

void cmd_train(const ExperimentConfig& cfg, const std::string& dataset)
{
    const auto ds = read_dataset(dataset.empty() ? cfg.output_path(kDatasetFile) : fs::path(dataset));
    const int epochs = cfg.training.epochs;
    const auto result = run_training(cfg, ds, [epochs](int epoch, double loss) {
        if (epoch == 1 || epoch == epochs || epoch % 10 == 0) std::fprintf(stderr, "epoch %d loss %.6g\n", epoch, loss);
    });
    update_manifest(cfg, "train", {cfg.output_path(kModelFile), cfg.output_path(kTrainingLogFile)});
    std::printf("final loss %.6g; model written to %s\n", result.loss_history.back(),
                cfg.output_path(kModelFile).string().c_str());
}

jmvae::JmvaeModel load_model(const ExperimentConfig& cfg, const std::string& path)
{
    return jmvae::JmvaeModel::load((path.empty() ? cfg.output_path(kModelFile) : fs::path(path)).string());
}

void cmd_update(const ExperimentConfig& cfg, const std::string& model_path)
{
    const auto model = load_model(cfg, model_path);
    const auto r = run_update(cfg, model);
    std::printf("wrote %zu samples to %s\n", r.samples.size(), cfg.output_path(kSamplesFile).string().c_str());
    std::printf("acceptance %s\n", r.diagnostics.at("acceptance_rate").dump().c_str());
    if (r.diagnostics.contains("exchange_rate"))
        std::printf("exchange %s\n", r.diagnostics.at("exchange_rate").dump().c_str());
}

void cmd_report(const ExperimentConfig& cfg)
{
    const auto dir = cfg.output_path("report");
    std::vector<fs::path> written;
    for (const auto& [file, sub] : {std::pair{kSamplesFile, ""}, std::pair{kSimulationSamplesFile, "simulation"}}) {
        const auto path = cfg.output_path(file);
        if (!fs::exists(path)) {
            if (std::string(sub).empty()) throw IoError("no samples at " + path.string() + "; run update first");
            continue;
        }
        const auto samples = samplers::read_samples_csv(path.string());
        const auto files = emit_report(cfg.parameters, samples, cfg.ground_truth, dir / sub);
        written.insert(written.end(), files.begin(), files.end());
        for (const auto& row : summarize(cfg.parameters, samples, cfg.ground_truth))
            std::printf("%s%s median %.5g [%.5g, %.5g]%s\n", std::string(sub).empty() ? "" : "simulation: ",
                        row.parameter.c_str(), row.median, row.q05, row.q95,
                        row.has_truth ? (" truth " + std::to_string(row.truth)).c_str() : "");
    }
    update_manifest(cfg, "report", written);
}

void cmd_benchmark(const ExperimentConfig& cfg, const std::string& model_path, int evaluations)
{
    const auto model = load_model(cfg, model_path);
    const auto b = benchmark_likelihood(cfg, model, evaluations);
    const auto path = cfg.output_path("benchmark.json");
    std::ofstream(path) << b.to_json().dump(2) << '\n';
    if (!fs::exists(path)) throw IoError("cannot write " + path.string());
    update_manifest(cfg, "benchmark-likelihood", {path});
    std::printf("surrogate %.3g s, simulation %.3g s per evaluation, ratio %.1f\n", b.surrogate_seconds,
                b.simulation_seconds, b.speedup());
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Bayesian model updating of structural models with a multimodal variational autoencoder"};
    app.require_subcommand(1);

    CommonOptions common;
    std::string theta, dataset, model_path;
    int evaluations = 1000;

    auto* simulate = app.add_subcommand("simulate", "run one model analysis and write channel files and features");
    add_common(simulate, common);
    simulate->add_option("--theta", theta, "comma-separated parameter values (default: ground truth)");
    auto* make_dataset = app.add_subcommand("make-dataset", "simulate prior draws into a training set");
    add_common(make_dataset, common);
    auto* train = app.add_subcommand("train", "train the multimodal autoencoder");
    add_common(train, common);
    train->add_option("--dataset", dataset, "dataset file (default: <out>/dataset.bin)");
    auto* update = app.add_subcommand("update", "sample the posterior for the simulated observation");
    add_common(update, common);
    update->add_option("--checkpoint", model_path, "model checkpoint (default: <out>/model.ckpt)");
    auto* report = app.add_subcommand("report", "write posterior CDF tables, plots and a summary");
    add_common(report, common);
    auto* bench = app.add_subcommand("benchmark-likelihood", "time the surrogate and simulation likelihoods");
    add_common(bench, common);
    bench->add_option("--checkpoint", model_path, "model checkpoint (default: <out>/model.ckpt)");
    bench->add_option("--evaluations", evaluations, "evaluations per path")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::Validation);
    }

    try {
        const auto cfg = resolve_config(common);
        if (*simulate) cmd_simulate(cfg, theta);
        else if (*make_dataset) cmd_make_dataset(cfg);
        else if (*train) cmd_train(cfg, dataset);
        else if (*update) cmd_update(cfg, model_path);
        else if (*report) cmd_report(cfg);
        else if (*bench) cmd_benchmark(cfg, model_path, evaluations);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.exit_code());
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(ExitCode::Validation);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
