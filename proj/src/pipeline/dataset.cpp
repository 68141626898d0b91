#include "mvbu/pipeline/dataset.hpp"

#include <atomic>
#include <cstring>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

#include "mvbu/binary_io.hpp"
#include "mvbu/error.hpp"
#include "mvbu/json_util.hpp"

namespace mvbu::pipeline {

namespace {

constexpr char kMagic[8] = {'M', 'V', 'B', 'U', 'D', 'S', 'E', 'T'};
constexpr std::uint64_t kThetaStream = 0;
constexpr std::uint64_t kNoiseStream = 1;

} // namespace

nlohmann::json DatasetHeader::to_json(std::size_t sample_count) const
{
    return {{"format_version", kDatasetVersion},
            {"model", pipeline::to_string(model)},
            {"parameters", space.to_json()},
            {"grid", {{"f_start", grid.f_start}, {"df", grid.df}, {"n_bins", grid.n_bins}}},
            {"feature_kind", signals::to_string(kind)},
            {"channels", channels},
            {"sample_count", sample_count},
            {"generator_seed", generator_seed},
            {"skipped", skipped}};
}

DatasetHeader DatasetHeader::from_json(const nlohmann::json& j, std::size_t* sample_count)
{
    using json_util::get_checked;
    json_util::reject_unknown(j, {"format_version", "model", "parameters", "grid", "feature_kind", "channels",
                                  "sample_count", "generator_seed", "skipped"},
                              "dataset header");
    for (const char* key : {"format_version", "model", "parameters", "grid", "feature_kind", "channels",
                            "sample_count", "generator_seed"})
        if (!j.contains(key)) throw IoError(std::string("dataset header lacks '") + key + "'");
    if (get_checked(j, "format_version", 0U) != kDatasetVersion) throw IoError("unsupported dataset format version");
    DatasetHeader h;
    h.model = model_kind_from_string(get_checked(j, "model", std::string()));
    h.space = ParameterSpace::from_json(j.at("parameters"));
    const auto& g = j.at("grid");
    json_util::reject_unknown(g, {"f_start", "df", "n_bins"}, "dataset grid");
    h.grid.f_start = get_checked(g, "f_start", 0.0);
    h.grid.df = get_checked(g, "df", 0.0);
    h.grid.n_bins = get_checked(g, "n_bins", 0);
    h.kind = signals::feature_kind_from_string(get_checked(j, "feature_kind", std::string()));
    h.channels = get_checked(j, "channels", 0);
    h.generator_seed = get_checked(j, "generator_seed", std::uint64_t{0});
    h.skipped = get_checked(j, "skipped", h.skipped);
    if (sample_count) *sample_count = get_checked(j, "sample_count", std::size_t{0});
    require(h.channels > 0 && h.grid.n_bins > 0, "dataset header has an empty feature layout");
    return h;
}

std::size_t Dataset::record_bytes() const
{
    return data.theta_dim * sizeof(double) + data.feature_size * sizeof(float);
}

void write_dataset(const std::filesystem::path& path, const Dataset& ds)
{
    ds.data.validate();
    require(static_cast<std::size_t>(ds.data.theta_dim) == ds.header.space.size(), "dataset theta width does not match its parameter space");
    require(ds.data.feature_size == ds.header.channels * ds.header.grid.n_bins,
            "dataset feature width does not match its header");
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + path.string());
    os.write(kMagic, sizeof kMagic);
    io::write_pod<std::uint32_t>(os, kDatasetVersion);
    io::write_string(os, ds.header.to_json(ds.size()).dump());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        io::write_array(os, ds.data.theta_row(i));
        io::write_array(os, ds.data.x_row(i));
    }
    if (!os) throw IoError("failed writing " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open dataset " + path.string());
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) throw IoError(path.string() + " is not a dataset file");
    if (io::read_pod<std::uint32_t>(is, "dataset version") != kDatasetVersion)
        throw IoError("unsupported dataset format version in " + path.string());
    nlohmann::json header_json;
    try {
        header_json = nlohmann::json::parse(io::read_string(is, "dataset header"));
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError("corrupt dataset header in " + path.string() + ": " + e.what());
    }
    Dataset ds;
    std::size_t n = 0;
    ds.header = DatasetHeader::from_json(header_json, &n);
    ds.data.theta_dim = ds.header.space.size();
    ds.data.feature_size = static_cast<std::size_t>(ds.header.channels) * ds.header.grid.n_bins;

    const auto payload_start = is.tellg();
    is.seekg(0, std::ios::end);
    const auto payload = static_cast<std::uint64_t>(is.tellg() - payload_start);
    is.seekg(payload_start);
    if (payload != n * ds.record_bytes())
        throw IoError(path.string() + ": payload holds " + std::to_string(payload) + " bytes, header implies " +
                      std::to_string(n * ds.record_bytes()));

    ds.data.theta.resize(n * ds.data.theta_dim);
    ds.data.x.resize(n * ds.data.feature_size);
    for (std::size_t i = 0; i < n; ++i) {
        io::read_array(is, std::span<double>(ds.data.theta.data() + i * ds.data.theta_dim, ds.data.theta_dim),
                       "dataset record");
        io::read_array(is, std::span<float>(ds.data.x.data() + i * ds.data.feature_size, ds.data.feature_size),
                       "dataset record");
    }
    return ds;
}

std::vector<double> dataset_theta(const ExperimentConfig& cfg, std::size_t index)
{
    Rng rng(derive_seed(cfg.stage_seed(SeedStream::Dataset), index, kThetaStream));
    return cfg.parameters.sample(rng);
}

Dataset generate_dataset(const ExperimentConfig& cfg, const ProgressCallback& progress)
{
    cfg.validate();
    const auto sim = cfg.simulator();
    const auto seed = cfg.stage_seed(SeedStream::Dataset);
    const auto n = static_cast<std::size_t>(cfg.dataset_size);

    struct Slot {
        std::vector<double> theta;
        std::vector<float> x;
        signals::FrequencyGrid grid;
        bool ok = false;
    };
    std::vector<Slot> slots(n);
    std::atomic<std::size_t> next{0}, done{0};
    std::mutex progress_mutex;
    std::exception_ptr fatal;
    std::mutex fatal_mutex;

    const auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                auto& slot = slots[i];
                slot.theta = dataset_theta(cfg, i);
                try {
                    const auto f = sim.features(slot.theta, derive_seed(seed, i, kNoiseStream));
                    f.validate();
                    slot.x.assign(f.data.begin(), f.data.end());
                    slot.grid = f.grid;
                    slot.ok = true;
                } catch (const NumericalError&) {
                    slot.ok = false;
                } catch (const ValidationError&) {
                    // Parameter combinations the model rejects (e.g. d_c = d_y) count as failures.
                    slot.ok = false;
                }
            } catch (...) {
                std::lock_guard lock(fatal_mutex);
                if (!fatal) fatal = std::current_exception();
                next = n;
                return;
            }
            const auto d = ++done;
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(d, n);
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < cfg.threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (fatal) std::rethrow_exception(fatal);

    Dataset ds;
    ds.header.model = cfg.model;
    ds.header.space = cfg.parameters;
    ds.header.kind = feature_kind(cfg.model);
    ds.header.channels = channel_count(cfg.model);
    ds.header.generator_seed = seed;
    ds.data.theta_dim = cfg.parameters.size();
    ds.data.feature_size = static_cast<std::size_t>(ds.header.channels) * signals::kFeatureBins;
    bool have_grid = false;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = slots[i];
        if (!s.ok) {
            ds.header.skipped.push_back(i);
            continue;
        }
        if (!have_grid) {
            ds.header.grid = s.grid;
            have_grid = true;
        }
        ds.data.theta.insert(ds.data.theta.end(), s.theta.begin(), s.theta.end());
        ds.data.x.insert(ds.data.x.end(), s.x.begin(), s.x.end());
    }
    if (ds.header.skipped.size() * 100 > n)
        throw NumericalError(std::to_string(ds.header.skipped.size()) + " of " + std::to_string(n) +
                             " dataset simulations failed (more than 1%)");
    return ds;
}

} // namespace mvbu::pipeline
