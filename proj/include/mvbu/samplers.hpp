#pragma once

// Random-walk Metropolis-Hastings and replica exchange over a box. Chains work
// in whatever coordinates the target is written in; callers pass the
// transformed parameter box so that proposal widths are fractions of it.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mvbu/rng.hpp"

namespace mvbu::samplers {

using LogTarget = std::function<double(std::span<const double>)>;

struct Box {
    std::vector<double> lower, upper;

    std::size_t dim() const { return lower.size(); }
    bool contains(std::span<const double> x) const;
    void validate() const;
};

struct ChainConfig {
    double proposal_std_fraction = 0.1;
    int burn_in = 10000;
    int thin = 100;
    int target_samples = 1000;
    std::uint64_t seed = 1;
    int stall_limit = 5000; // consecutive rejections that abort the chain

    void validate() const;
    nlohmann::json to_json() const;
    static ChainConfig from_json(const nlohmann::json& j);
};

struct ReplicaConfig {
    int n_replicas = 8;
    double max_temperature = 50.0;
    std::vector<double> temperatures; // explicit ladder; geometric from 1 to max_temperature when empty
    int exchange_interval = 100;
    int n_exchanges = 1000;
    int threads = 1;

    std::vector<double> ladder() const;
    void validate() const;
    nlohmann::json to_json() const;
    static ReplicaConfig from_json(const nlohmann::json& j);
};

struct PosteriorSamples {
    int dim = 0;
    std::vector<double> samples;             // n_kept x dim, row-major
    std::vector<double> log_target;          // per kept sample
    std::vector<double> acceptance_rate;     // per chain, over every proposal made
    std::vector<double> exchange_rate;       // per adjacent replica pair
    std::vector<double> temperatures;
    std::vector<std::uint64_t> chain_seeds;

    std::size_t size() const { return dim ? samples.size() / static_cast<std::size_t>(dim) : 0; }
    std::span<const double> row(std::size_t i) const
    {
        return {samples.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }
    std::vector<double> column(int j) const;
};

/// Seed of chain r for a master seed; chain 0 of replica exchange uses the same
/// stream as a plain Metropolis-Hastings run.
std::uint64_t chain_seed(std::uint64_t master, int chain);

/// Accepts when log(u) < delta_log, so delta_log >= 0 always accepts.
bool metropolis_accept(double delta_log, double u);

PosteriorSamples mh_sample(const LogTarget& target, const Box& box, std::span<const double> start,
                           const ChainConfig& cfg);

/// Replica r targets target / T_r. After every exchange_interval local steps,
/// adjacent pairs (alternating even and odd offsets) attempt a swap. Samples come
/// from the T = 1 chain only. `starts` gives one start per replica (or a single
/// start shared by all).
PosteriorSamples replica_exchange_sample(const LogTarget& target, const Box& box,
                                         const std::vector<std::vector<double>>& starts, const ChainConfig& cfg,
                                         const ReplicaConfig& rcfg);

/// Swap probability min(1, exp((1/T_i - 1/T_j)(E_i - E_j))) with E = -log target,
/// the ratio that keeps the product of tempered targets invariant.
double swap_probability(double t_i, double log_target_i, double t_j, double log_target_j);

/// Latin-hypercube screen: `n_candidates` stratified points ranked by target,
/// returning the best `n_keep` (highest first).
std::vector<std::vector<double>> screen_starts(const LogTarget& target, const Box& box, int n_candidates, int n_keep,
                                               std::uint64_t seed);

/// Sorted values paired with rank / n.
std::vector<std::pair<double, double>> empirical_cdf(std::span<const double> values);

/// sup |F_n - F| for a continuous reference CDF.
double ks_distance(std::span<const double> values, const std::function<double(double)>& cdf);

/// Quantile by linear interpolation between order statistics (type 7):
/// position (n - 1) p in the sorted sample.
double quantile(std::span<const double> values, double p);

/// One row per kept sample; a trailing log_target column is written when present.
void write_samples_csv(const std::string& path, const std::vector<std::string>& names, const PosteriorSamples& s);
PosteriorSamples read_samples_csv(const std::string& path, std::vector<std::string>* names = nullptr);
nlohmann::json diagnostics(const PosteriorSamples& s);

} // namespace mvbu::samplers
