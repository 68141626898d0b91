#include "mvbu/pipeline/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>

#include "mvbu/binary_io.hpp"
#include "mvbu/error.hpp"

namespace mvbu::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

samplers::Box transformed_box(const ParameterSpace& space)
{
    samplers::Box box;
    for (const auto& p : space.specs()) {
        box.lower.push_back(p.transformed_lower());
        box.upper.push_back(p.transformed_upper());
    }
    return box;
}

nlohmann::json latent_json(const jmvae::DiagonalGaussianLatent& q) { return {{"mu", q.mu}, {"log_var", q.log_var}}; }

void ensure_dir(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write " + path.string());
    os << text;
    if (!os) throw IoError("failed writing " + path.string());
}

samplers::PosteriorSamples run_sampler(const ExperimentConfig& cfg, const samplers::LogTarget& target,
                                       const samplers::Box& box)
{
    auto chain = cfg.sampler.chain;
    chain.seed = cfg.stage_seed(SeedStream::Chain);
    const bool replica = cfg.sampler.method == SamplerMethod::ReplicaExchange;
    const int n_starts = replica ? cfg.sampler.replica.n_replicas : 1;
    const auto starts = samplers::screen_starts(target, box, std::max(cfg.sampler.screen_candidates, n_starts), n_starts,
                                                cfg.stage_seed(SeedStream::Screen));
    if (replica) {
        auto rcfg = cfg.sampler.replica;
        rcfg.threads = std::max(rcfg.threads, cfg.threads);
        return samplers::replica_exchange_sample(target, box, starts, chain, rcfg);
    }
    return samplers::mh_sample(target, box, starts.front(), chain);
}

} // namespace

Observation simulate_observation(const ExperimentConfig& cfg, const ResponseSimulator& sim)
{
    require(!cfg.ground_truth.empty(), "the config has no ground_truth to simulate");
    Observation obs;
    obs.recording = sim.record(cfg.ground_truth, cfg.stage_seed(SeedStream::Observation));
    obs.features = sim.features(obs.recording);
    obs.features.validate();
    return obs;
}

void write_observation(const std::filesystem::path& dir, const Observation& obs,
                       const std::vector<std::string>& channel_names)
{
    ensure_dir(dir);
    require(channel_names.size() == obs.recording.responses.size(), "one name per recorded channel is required");
    for (std::size_t c = 0; c < channel_names.size(); ++c)
        write_ground_motion(dir / (channel_names[c] + ".txt"), obs.recording.responses[c]);
    write_ground_motion(dir / "input.txt", obs.recording.input);
    std::ofstream os(dir / "features.csv", std::ios::trunc);
    if (!os) throw IoError("cannot write " + (dir / "features.csv").string());
    const auto& f = obs.features;
    os << "# kind=" << signals::to_string(f.kind) << " f_start=" << f.grid.f_start << " df=" << f.grid.df
       << " bins=" << f.grid.n_bins << '\n';
    char buf[32];
    for (int c = 0; c < f.channels; ++c) {
        for (int b = 0; b < f.grid.n_bins; ++b) {
            std::snprintf(buf, sizeof buf, "%.17g", f.at(c, b));
            os << (b ? "," : "") << buf;
        }
        os << '\n';
    }
    if (!os) throw IoError("failed writing features.csv");
}

jmvae::TrainingResult run_training(const ExperimentConfig& cfg, const Dataset& ds, const jmvae::EpochCallback& on_epoch)
{
    require(ds.header.model == cfg.model, "dataset was generated for the " + to_string(ds.header.model) + " model");
    require(ds.header.space == cfg.parameters, "dataset parameter space differs from the config");
    jmvae::JmvaeModel model(cfg.architecture, cfg.parameters, cfg.stage_seed(SeedStream::ModelInit));
    auto tc = cfg.training;
    tc.seed = cfg.stage_seed(SeedStream::Training);
    tc.checkpoint_path.clear();

    ensure_dir(cfg.resolve(cfg.output_dir));
    std::ofstream log(cfg.output_path(kTrainingLogFile), std::ios::trunc);
    if (!log) throw IoError("cannot write " + cfg.output_path(kTrainingLogFile).string());
    log << "epoch,mean_loss\n";
    const auto result = jmvae::train(model, ds.data, tc, [&](int epoch, double loss) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%d,%.17g\n", epoch, loss);
        log << buf << std::flush;
        if (on_epoch) on_epoch(epoch, loss);
    });
    model.save(cfg.output_path(kModelFile).string(),
               {{"config_hash", io::hex64(cfg.hash())}, {"model_kind", to_string(cfg.model)}});
    return result;
}

samplers::PosteriorSamples to_natural_units(const ParameterSpace& space, const samplers::PosteriorSamples& t)
{
    auto out = t;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto theta = space.inverse(t.row(i));
        for (std::size_t k = 0; k < theta.size(); ++k)
            out.samples[i * space.size() + k] = std::clamp(theta[k], space[k].lower, space[k].upper);
    }
    return out;
}

UpdateResult run_update(const ExperimentConfig& cfg, const jmvae::JmvaeModel& model, bool write)
{
    require(model.space() == cfg.parameters, "model parameter space differs from the config");
    const auto t0 = Clock::now();
    const auto sim = cfg.simulator();
    const auto obs = simulate_observation(cfg, sim);
    const auto x_latent = model.encode_x(obs.features);

    inference::LikelihoodOptions opts;
    opts.fallback_seed = cfg.stage_seed(SeedStream::Fallback);
    const inference::LatentPosterior posterior(model, x_latent, opts);
    const auto box = transformed_box(cfg.parameters);
    const auto target = [&](std::span<const double> t) { return posterior.log_density_transformed(t); };

    const auto t1 = Clock::now();
    UpdateResult result;
    result.samples = to_natural_units(cfg.parameters, run_sampler(cfg, target, box));
    const double sampling_seconds = seconds_since(t1);

    auto diag = samplers::diagnostics(result.samples);
    diag["config"] = cfg.to_json();
    diag["sampler_method"] = to_string(cfg.sampler.method);
    diag["likelihood_fallbacks"] = posterior.fallback_count();
    diag["observation_latent"] = latent_json(x_latent);
    diag["sampling_seconds"] = sampling_seconds;

    if (cfg.compare_simulation) {
        const inference::SimulationPosterior sim_post(
            model, [&](std::span<const double> theta) { return sim.clean_features(theta, obs.recording.input); },
            x_latent, opts);
        const auto sim_target = [&](std::span<const double> t) { return sim_post.log_density_transformed(t); };
        const auto t2 = Clock::now();
        result.simulation_samples = to_natural_units(cfg.parameters, run_sampler(cfg, sim_target, box));
        diag["simulation_path"] = samplers::diagnostics(*result.simulation_samples);
        diag["simulation_path"]["sampling_seconds"] = seconds_since(t2);
    }
    diag["total_seconds"] = seconds_since(t0);
    result.diagnostics = diag;

    if (write) {
        ensure_dir(cfg.resolve(cfg.output_dir));
        const auto names = cfg.parameters.names();
        std::vector<std::filesystem::path> artifacts{cfg.output_path(kSamplesFile)};
        samplers::write_samples_csv(cfg.output_path(kSamplesFile).string(), names, result.samples);
        if (result.simulation_samples) {
            samplers::write_samples_csv(cfg.output_path(kSimulationSamplesFile).string(), names,
                                        *result.simulation_samples);
            artifacts.push_back(cfg.output_path(kSimulationSamplesFile));
        }
        write_text(cfg.output_path(kDiagnosticsFile), diag.dump(2) + "\n");
        update_manifest(cfg, "update", artifacts);
    }
    return result;
}

nlohmann::json LikelihoodBenchmark::to_json() const
{
    return {{"evaluations", evaluations},
            {"surrogate_seconds_per_evaluation", surrogate_seconds},
            {"simulation_seconds_per_evaluation", simulation_seconds},
            {"speedup", speedup()}};
}

LikelihoodBenchmark benchmark_likelihood(const ExperimentConfig& cfg, const jmvae::JmvaeModel& model, int evaluations)
{
    require(evaluations >= 1, "benchmark needs at least one evaluation");
    const auto sim = cfg.simulator();
    const auto obs = simulate_observation(cfg, sim);
    const auto x_latent = model.encode_x(obs.features);
    const inference::LatentPosterior surrogate(model, x_latent);
    const inference::SimulationPosterior simulation(
        model, [&](std::span<const double> theta) { return sim.clean_features(theta, obs.recording.input); }, x_latent);

    Rng rng(cfg.stage_seed(SeedStream::Screen));
    std::vector<std::vector<double>> draws;
    for (int i = 0; i < evaluations; ++i) draws.push_back(cfg.parameters.sample(rng));

    // Sums keep the work observable so it cannot be optimized away.
    double sink = 0.0;
    auto t0 = Clock::now();
    for (const auto& th : draws) sink += surrogate.log_density(th);
    const double surrogate_total = seconds_since(t0);
    t0 = Clock::now();
    for (const auto& th : draws) sink += simulation.log_density(th);
    const double simulation_total = seconds_since(t0);
    if (std::isnan(sink)) throw NumericalError("likelihood benchmark produced NaN");

    LikelihoodBenchmark b;
    b.evaluations = evaluations;
    b.surrogate_seconds = surrogate_total / evaluations;
    b.simulation_seconds = simulation_total / evaluations;
    return b;
}

void update_manifest(const ExperimentConfig& cfg, const std::string& stage,
                     const std::vector<std::filesystem::path>& artifacts)
{
    const auto path = cfg.output_path(kManifestFile);
    nlohmann::json m = nlohmann::json::object();
    if (std::filesystem::exists(path)) {
        std::ifstream is(path);
        try {
            m = nlohmann::json::parse(is);
        } catch (const nlohmann::json::parse_error&) {
            m = nlohmann::json::object();
        }
    }
    nlohmann::json seeds;
    for (auto [name, s] : {std::pair{"dataset", SeedStream::Dataset}, std::pair{"model_init", SeedStream::ModelInit},
                           std::pair{"training", SeedStream::Training}, std::pair{"observation", SeedStream::Observation},
                           std::pair{"chain", SeedStream::Chain}, std::pair{"screen", SeedStream::Screen},
                           std::pair{"fallback", SeedStream::Fallback}})
        seeds[name] = cfg.stage_seed(s);
    nlohmann::json files = nlohmann::json::object();
    for (const auto& a : artifacts) files[a.filename().string()] = io::hex64(io::hash_file(a.string()));
    m["master_seed"] = cfg.seed;
    m["seeds"] = seeds;
    m["stages"][stage] = {{"config_hash", io::hex64(cfg.hash())}, {"artifacts", files}};
    write_text(path, m.dump(2) + "\n");
}

} // namespace mvbu::pipeline
