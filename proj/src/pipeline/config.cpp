#include "mvbu/pipeline/config.hpp"

#include <fstream>
#include <sstream>

#include "mvbu/binary_io.hpp"
#include "mvbu/error.hpp"
#include "mvbu/json_util.hpp"

namespace mvbu::pipeline {

using json_util::get_checked;
using json_util::reject_unknown;

namespace {

SyntheticMotion frame_motion()
{
    SyntheticMotion s;
    s.dt = 0.02;
    s.samples = 2048;
    s.pga = 3.0;
    s.ground_freq = 2.5;
    s.seed = 1940;
    return s;
}

// Scaled so the first-story drift of the reference building briefly passes d_y.
SyntheticMotion lumped_motion()
{
    SyntheticMotion s;
    s.dt = 0.01;
    s.samples = 10000;
    s.pga = 4.0;
    s.ground_freq = 2.0;
    s.seed = 2016;
    return s;
}

nlohmann::json without_seed(nlohmann::json j)
{
    j.erase("seed");
    return j;
}

void forbid_seed(const nlohmann::json& j, const std::string& where)
{
    require(!j.contains("seed"), where + " takes no seed; stage seeds derive from the top-level seed");
}

} // namespace

nlohmann::json GroundMotionSource::to_json() const
{
    if (synthetic) return {{"synthetic", synthetic->to_json()}};
    return {{"path", path}};
}

GroundMotionSource GroundMotionSource::from_json(const nlohmann::json& j)
{
    reject_unknown(j, {"path", "synthetic"}, "ground_motion");
    require(j.contains("path") != j.contains("synthetic"), "ground_motion needs exactly one of 'path' or 'synthetic'");
    GroundMotionSource g;
    if (j.contains("synthetic"))
        g.synthetic = SyntheticMotion::from_json(j.at("synthetic"));
    else
        g.path = get_checked(j, "path", std::string());
    return g;
}

std::string to_string(SamplerMethod m)
{
    return m == SamplerMethod::MetropolisHastings ? "metropolis-hastings" : "replica-exchange";
}

SamplerMethod sampler_method_from_string(const std::string& s)
{
    if (s == "metropolis-hastings") return SamplerMethod::MetropolisHastings;
    if (s == "replica-exchange") return SamplerMethod::ReplicaExchange;
    throw ValidationError("unknown sampler method '" + s + "' (expected metropolis-hastings or replica-exchange)");
}

nlohmann::json SamplerSettings::to_json() const
{
    return {{"method", to_string(method)},
            {"chain", without_seed(chain.to_json())},
            {"replica", replica.to_json()},
            {"screen_candidates", screen_candidates}};
}

SamplerSettings SamplerSettings::from_json(const nlohmann::json& j)
{
    reject_unknown(j, {"method", "chain", "replica", "screen_candidates"}, "sampler");
    SamplerSettings s;
    if (j.contains("method")) s.method = sampler_method_from_string(get_checked(j, "method", std::string()));
    if (j.contains("chain")) {
        forbid_seed(j.at("chain"), "sampler.chain");
        s.chain = samplers::ChainConfig::from_json(j.at("chain"));
    }
    if (j.contains("replica")) s.replica = samplers::ReplicaConfig::from_json(j.at("replica"));
    s.screen_candidates = get_checked(j, "screen_candidates", s.screen_candidates);
    require(s.screen_candidates >= 1, "sampler.screen_candidates must be positive");
    return s;
}

nlohmann::json noise_to_json(const signals::NoiseSpec& n)
{
    if (n.mode == signals::NoiseSpec::Mode::Sigma) return {{"mode", "sigma"}, {"sigma", n.sigma}};
    if (std::isinf(n.snr_db)) return {{"mode", "none"}};
    return {{"mode", "snr-db"}, {"snr_db", n.snr_db}};
}

signals::NoiseSpec noise_from_json(const nlohmann::json& j)
{
    reject_unknown(j, {"mode", "snr_db", "sigma"}, "noise");
    const auto mode = get_checked(j, "mode", std::string("none"));
    if (mode == "none") return signals::NoiseSpec::none();
    if (mode == "snr-db") {
        require(j.contains("snr_db"), "noise mode snr-db needs snr_db");
        return signals::NoiseSpec::snr(get_checked(j, "snr_db", 0.0), 0);
    }
    if (mode == "sigma") {
        require(j.contains("sigma"), "noise mode sigma needs sigma");
        const double sigma = get_checked(j, "sigma", 0.0);
        require(sigma >= 0.0, "noise sigma must be non-negative");
        return signals::NoiseSpec::absolute(sigma, 0);
    }
    throw ValidationError("unknown noise mode '" + mode + "' (expected none, snr-db or sigma)");
}

ExperimentConfig ExperimentConfig::preset(ModelKind kind, bool paper_scale)
{
    ExperimentConfig c;
    c.model = kind;
    c.parameters = default_space(kind);
    c.ground_truth = default_ground_truth(kind);
    switch (kind) {
    case ModelKind::Frame:
        c.ground_motion.synthetic = frame_motion();
        c.noise = signals::NoiseSpec::snr(40.0, 0);
        c.dataset_size = paper_scale ? 10000 : 2000;
        c.architecture = jmvae::Architecture::frame(paper_scale);
        c.training.epochs = paper_scale ? 1000 : 200;
        c.sampler.method = SamplerMethod::MetropolisHastings;
        // Desk posteriors are a few hundredths of a decade wide; 0.1 of the box stalls the chain.
        if (!paper_scale) c.sampler.chain.proposal_std_fraction = 0.01;
        c.sampler.chain.burn_in = paper_scale ? 10000 : 2000;
        c.sampler.chain.thin = paper_scale ? 100 : 20;
        c.sampler.chain.target_samples = 1000;
        break;
    case ModelKind::Lumped:
        c.ground_motion.synthetic = lumped_motion();
        c.noise = signals::NoiseSpec::absolute(0.001, 0);
        c.dataset_size = paper_scale ? 100000 : 5000;
        c.architecture = jmvae::Architecture::lumped(paper_scale);
        c.training.epochs = paper_scale ? 1000 : 200;
        c.sampler.method = SamplerMethod::ReplicaExchange;
        c.sampler.chain.burn_in = 10000;
        c.sampler.chain.thin = 30;
        c.sampler.chain.target_samples = 3000;
        c.sampler.replica.n_replicas = paper_scale ? 8 : 4;
        c.sampler.replica.exchange_interval = 100;
        c.sampler.replica.n_exchanges = 1000;
        break;
    case ModelKind::Sdof: {
        c.ground_motion.synthetic = frame_motion();
        c.noise = signals::NoiseSpec::snr(40.0, 0);
        c.dataset_size = 500;
        jmvae::Architecture a;
        a.theta_dim = 1;
        a.channels = 1;
        a.latent_dim = 4;
        a.conv_width = 4;
        a.hidden = 32;
        c.architecture = a;
        c.training.epochs = 50;
        c.training.batch_size = 16;
        c.training.learning_rate = 1e-3;
        // The posterior spans a few percent of the log-stiffness range.
        c.sampler.chain.proposal_std_fraction = 0.02;
        c.sampler.chain.burn_in = 2000;
        c.sampler.chain.thin = 10;
        c.sampler.chain.target_samples = 1000;
        c.sampler.screen_candidates = 200;
        break;
    }
    }
    return c;
}

std::filesystem::path ExperimentConfig::resolve(const std::string& p) const
{
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
}

std::filesystem::path ExperimentConfig::output_path(const std::string& file) const
{
    return resolve(output_dir) / file;
}

void ExperimentConfig::validate() const
{
    require(parameters.size() > 0, "parameters must not be empty");
    require(ground_truth.empty() || ground_truth.size() == parameters.size(),
            "ground_truth needs one value per parameter");
    if (!ground_truth.empty())
        require(parameters.contains(ground_truth), "ground_truth lies outside the parameter bounds");
    require(parameters.size() == default_space(model).size(),
            to_string(model) + " model takes " + std::to_string(default_space(model).size()) + " parameters");
    architecture.validate();
    require(architecture.theta_dim == static_cast<int>(parameters.size()),
            "architecture.theta_dim must equal the number of parameters");
    require(architecture.channels == channel_count(model), "architecture.channels must be " +
                                                                std::to_string(channel_count(model)) + " for the " +
                                                                to_string(model) + " model");
    require(architecture.bins == signals::kFeatureBins, "architecture.bins must be 512");
    training.validate();
    sampler.chain.validate();
    sampler.replica.validate();
    require(dataset_size >= 2, "dataset_size must be at least 2");
    require(threads >= 1, "threads must be positive");
    require(!output_dir.empty(), "output_dir must not be empty");
    if (ground_motion.synthetic) {
        ground_motion.synthetic->validate();
    } else {
        require(!ground_motion.path.empty(), "ground_motion.path must not be empty");
        if (!std::filesystem::exists(resolve(ground_motion.path)))
            throw IoError("ground motion file not found: " + resolve(ground_motion.path).string());
    }
    if (!geometry.empty()) {
        require(model == ModelKind::Frame, "geometry applies to the frame model only");
        if (!std::filesystem::exists(resolve(geometry)))
            throw IoError("geometry file not found: " + resolve(geometry).string());
    }
}

nlohmann::json ExperimentConfig::to_json() const
{
    return {{"model", to_string(model)},
            {"ground_motion", ground_motion.to_json()},
            {"noise", noise_to_json(noise)},
            {"noise_on_input", noise_on_input},
            {"parameters", parameters.to_json()},
            {"ground_truth", ground_truth},
            {"dataset_size", dataset_size},
            {"architecture", architecture.to_json()},
            {"training", without_seed(training.to_json())},
            {"sampler", sampler.to_json()},
            {"seed", seed},
            {"geometry", geometry},
            {"output_dir", output_dir},
            {"threads", threads},
            {"compare_simulation", compare_simulation}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir)
{
    reject_unknown(j, {"model", "ground_motion", "noise", "noise_on_input", "parameters", "ground_truth",
                       "dataset_size", "architecture", "training", "sampler", "seed", "geometry", "output_dir",
                       "threads", "compare_simulation", "paper_scale"},
                   "experiment config");
    require(j.contains("model"), "experiment config needs a 'model' entry");
    const auto kind = model_kind_from_string(get_checked(j, "model", std::string()));
    auto c = preset(kind, get_checked(j, "paper_scale", false));
    c.base_dir = base_dir;
    if (j.contains("ground_motion")) c.ground_motion = GroundMotionSource::from_json(j.at("ground_motion"));
    if (j.contains("noise")) c.noise = noise_from_json(j.at("noise"));
    c.noise_on_input = get_checked(j, "noise_on_input", c.noise_on_input);
    if (j.contains("parameters")) c.parameters = ParameterSpace::from_json(j.at("parameters"));
    c.ground_truth = get_checked(j, "ground_truth", c.ground_truth);
    c.dataset_size = get_checked(j, "dataset_size", c.dataset_size);
    if (j.contains("architecture")) c.architecture = jmvae::Architecture::from_json(j.at("architecture"));
    if (j.contains("training")) {
        forbid_seed(j.at("training"), "training");
        c.training = jmvae::TrainingConfig::from_json(j.at("training"));
    }
    if (j.contains("sampler")) c.sampler = SamplerSettings::from_json(j.at("sampler"));
    c.seed = get_checked(j, "seed", c.seed);
    c.geometry = get_checked(j, "geometry", c.geometry);
    c.output_dir = get_checked(j, "output_dir", c.output_dir);
    c.threads = get_checked(j, "threads", c.threads);
    c.compare_simulation = get_checked(j, "compare_simulation", c.compare_simulation);
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const nlohmann::json& overrides)
{
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    require(j.is_object(), "config " + path.string() + " must hold a JSON object");
    if (!overrides.is_null()) j.merge_patch(overrides);
    return ExperimentConfig::from_json(j, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

TimeSeries ExperimentConfig::load_ground_motion() const
{
    if (ground_motion.synthetic) return synthetic_ground_motion(*ground_motion.synthetic);
    return read_ground_motion(resolve(ground_motion.path));
}

std::optional<frame::FrameGeometry> ExperimentConfig::load_geometry() const
{
    if (model != ModelKind::Frame || geometry.empty()) return std::nullopt;
    return frame::load_geometry(resolve(geometry));
}

ResponseSimulator ExperimentConfig::simulator() const
{
    return ResponseSimulator(model, load_ground_motion(), noise, noise_on_input, load_geometry());
}

std::uint64_t ExperimentConfig::hash() const
{
    const auto text = to_json().dump();
    return io::fnv1a(std::span<const char>(text.data(), text.size()));
}

} // namespace mvbu::pipeline
