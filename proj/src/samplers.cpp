#include "mvbu/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <numeric>
#include <sstream>

#include "mvbu/error.hpp"
#include "mvbu/json_util.hpp"

namespace mvbu::samplers {

namespace {

struct Chain {
    std::vector<double> x;
    double log_p = 0.0;
    Rng rng;
    long proposals = 0;
    long accepts = 0;
    int since_accept = 0;
};

struct Sampler {
    const LogTarget& target;
    const Box& box;
    std::vector<double> step_std;
    int stall_limit;

    void step(Chain& c, double temperature) const
    {
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        std::vector<double> y(c.x.size());
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = c.x[i] + step_std[i] * normal(c.rng);
        ++c.proposals;
        bool accepted = false;
        // Out-of-box proposals carry zero prior density and are rejected outright.
        if (box.contains(y)) {
            const double log_q = target(y);
            const double u = uniform(c.rng);
            if (!std::isnan(log_q) && metropolis_accept((log_q - c.log_p) / temperature, u)) {
                c.x = std::move(y);
                c.log_p = log_q;
                accepted = true;
            }
        }
        if (accepted) {
            ++c.accepts;
            c.since_accept = 0;
        } else if (++c.since_accept >= stall_limit) {
            throw NumericalError("chain stalled: no acceptance in " + std::to_string(stall_limit) +
                                 " consecutive proposals at temperature " + std::to_string(temperature) +
                                 " (log target " + std::to_string(c.log_p) + ")");
        }
    }
};

Chain start_chain(const LogTarget& target, const Box& box, std::span<const double> start, std::uint64_t seed)
{
    require(start.size() == box.dim(), "start point has the wrong dimension");
    require(box.contains(start), "start point lies outside the parameter bounds");
    Chain c{{start.begin(), start.end()}, target(start), Rng(seed)};
    if (!std::isfinite(c.log_p)) throw ValidationError("target is not finite at the start point");
    return c;
}

std::vector<double> step_sizes(const Box& box, double fraction)
{
    std::vector<double> s(box.dim());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = fraction * (box.upper[i] - box.lower[i]);
    return s;
}

void keep(PosteriorSamples& out, const Chain& c)
{
    out.samples.insert(out.samples.end(), c.x.begin(), c.x.end());
    out.log_target.push_back(c.log_p);
}

double rate(long hits, long tries) { return tries ? static_cast<double>(hits) / static_cast<double>(tries) : 0.0; }

} // namespace

using json_util::get_checked;
using json_util::reject_unknown;

bool Box::contains(std::span<const double> x) const
{
    if (x.size() != dim()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
    return true;
}

void Box::validate() const
{
    require(!lower.empty() && lower.size() == upper.size(), "box bounds must be nonempty and of equal length");
    for (std::size_t i = 0; i < lower.size(); ++i)
        require(std::isfinite(lower[i]) && std::isfinite(upper[i]) && lower[i] < upper[i], "box needs lower < upper");
}

void ChainConfig::validate() const
{
    require(proposal_std_fraction > 0.0, "proposal_std_fraction must be positive");
    require(burn_in >= 0 && thin > 0 && target_samples > 0, "burn_in, thin and target_samples must be positive");
    require(stall_limit > 0, "stall_limit must be positive");
}

nlohmann::json ChainConfig::to_json() const
{
    return {{"proposal_std_fraction", proposal_std_fraction}, {"burn_in", burn_in}, {"thin", thin},
            {"target_samples", target_samples}, {"seed", seed}, {"stall_limit", stall_limit}};
}

ChainConfig ChainConfig::from_json(const nlohmann::json& j)
{
    reject_unknown(j, {"proposal_std_fraction", "burn_in", "thin", "target_samples", "seed", "stall_limit"},
                   "chain config");
    ChainConfig c;
    c.proposal_std_fraction = get_checked(j, "proposal_std_fraction", c.proposal_std_fraction);
    c.burn_in = get_checked(j, "burn_in", c.burn_in);
    c.thin = get_checked(j, "thin", c.thin);
    c.target_samples = get_checked(j, "target_samples", c.target_samples);
    c.seed = get_checked(j, "seed", c.seed);
    c.stall_limit = get_checked(j, "stall_limit", c.stall_limit);
    c.validate();
    return c;
}

std::vector<double> ReplicaConfig::ladder() const
{
    if (!temperatures.empty()) return temperatures;
    std::vector<double> t(static_cast<std::size_t>(n_replicas));
    for (int r = 0; r < n_replicas; ++r)
        t[r] = n_replicas == 1 ? 1.0 : std::pow(max_temperature, static_cast<double>(r) / (n_replicas - 1));
    return t;
}

void ReplicaConfig::validate() const
{
    require(n_replicas >= 1, "n_replicas must be at least 1");
    require(exchange_interval > 0 && n_exchanges > 0, "exchange_interval and n_exchanges must be positive");
    require(threads >= 1, "threads must be at least 1");
    const auto t = ladder();
    require(static_cast<int>(t.size()) == n_replicas, "temperature ladder length differs from n_replicas");
    require(t.front() == 1.0, "the first temperature must be 1");
    for (std::size_t i = 1; i < t.size(); ++i) require(t[i] > t[i - 1], "temperature ladder must increase strictly");
}

nlohmann::json ReplicaConfig::to_json() const
{
    return {{"n_replicas", n_replicas},         {"max_temperature", max_temperature},
            {"temperatures", ladder()},         {"exchange_interval", exchange_interval},
            {"n_exchanges", n_exchanges},       {"threads", threads}};
}

ReplicaConfig ReplicaConfig::from_json(const nlohmann::json& j)
{
    reject_unknown(j, {"n_replicas", "max_temperature", "temperatures", "exchange_interval", "n_exchanges", "threads"},
                   "replica config");
    ReplicaConfig c;
    c.n_replicas = get_checked(j, "n_replicas", c.n_replicas);
    c.max_temperature = get_checked(j, "max_temperature", c.max_temperature);
    c.temperatures = get_checked(j, "temperatures", c.temperatures);
    c.exchange_interval = get_checked(j, "exchange_interval", c.exchange_interval);
    c.n_exchanges = get_checked(j, "n_exchanges", c.n_exchanges);
    c.threads = get_checked(j, "threads", c.threads);
    c.validate();
    return c;
}

std::vector<double> PosteriorSamples::column(int j) const
{
    std::vector<double> c(size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = samples[i * static_cast<std::size_t>(dim) + j];
    return c;
}

std::uint64_t chain_seed(std::uint64_t master, int chain) { return derive_seed(master, 0xc4a1, chain); }

bool metropolis_accept(double delta_log, double u)
{
    if (delta_log >= 0.0) return true;
    return std::log(u) < delta_log;
}

double swap_probability(double t_i, double log_target_i, double t_j, double log_target_j)
{
    const double e_i = -log_target_i, e_j = -log_target_j;
    const double a = (1.0 / t_i - 1.0 / t_j) * (e_i - e_j);
    return a >= 0.0 ? 1.0 : std::exp(a);
}

PosteriorSamples mh_sample(const LogTarget& target, const Box& box, std::span<const double> start,
                           const ChainConfig& cfg)
{
    cfg.validate();
    box.validate();
    const Sampler sampler{target, box, step_sizes(box, cfg.proposal_std_fraction), cfg.stall_limit};
    Chain c = start_chain(target, box, start, chain_seed(cfg.seed, 0));
    PosteriorSamples out;
    out.dim = static_cast<int>(box.dim());
    out.temperatures = {1.0};
    out.chain_seeds = {chain_seed(cfg.seed, 0)};
    const long total = cfg.burn_in + static_cast<long>(cfg.thin) * cfg.target_samples;
    for (long s = 1; s <= total; ++s) {
        sampler.step(c, 1.0);
        if (s > cfg.burn_in && (s - cfg.burn_in) % cfg.thin == 0) keep(out, c);
    }
    out.acceptance_rate = {rate(c.accepts, c.proposals)};
    return out;
}

PosteriorSamples replica_exchange_sample(const LogTarget& target, const Box& box,
                                         const std::vector<std::vector<double>>& starts, const ChainConfig& cfg,
                                         const ReplicaConfig& rcfg)
{
    cfg.validate();
    rcfg.validate();
    box.validate();
    const long needed = cfg.burn_in + static_cast<long>(cfg.thin) * cfg.target_samples;
    require(static_cast<long>(rcfg.n_exchanges) * rcfg.exchange_interval >= needed,
            "n_exchanges x exchange_interval (" +
                std::to_string(static_cast<long>(rcfg.n_exchanges) * rcfg.exchange_interval) +
                " steps) is shorter than burn_in + thin x target_samples (" + std::to_string(needed) + ")");
    require(starts.size() == 1 || static_cast<int>(starts.size()) == rcfg.n_replicas,
            "give one start point or one per replica");

    const auto temps = rcfg.ladder();
    const int n = rcfg.n_replicas;
    const Sampler sampler{target, box, step_sizes(box, cfg.proposal_std_fraction), cfg.stall_limit};
    std::vector<Chain> chains;
    PosteriorSamples out;
    out.dim = static_cast<int>(box.dim());
    out.temperatures = temps;
    for (int r = 0; r < n; ++r) {
        const auto& s = starts.size() == 1 ? starts[0] : starts[static_cast<std::size_t>(r)];
        chains.push_back(start_chain(target, box, s, chain_seed(cfg.seed, r)));
        out.chain_seeds.push_back(chain_seed(cfg.seed, r));
    }
    Rng exchange_rng(derive_seed(cfg.seed, 0xe8c4));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<long> swap_tries(static_cast<std::size_t>(std::max(n - 1, 0)), 0), swap_hits(swap_tries.size(), 0);

    long step = 0; // local steps taken by each replica so far
    auto run_segment = [&](int r, long first_step, int count) {
        Chain& c = chains[static_cast<std::size_t>(r)];
        for (int k = 0; k < count; ++k) {
            sampler.step(c, temps[static_cast<std::size_t>(r)]);
            const long s = first_step + k + 1;
            if (r == 0 && s > cfg.burn_in && (s - cfg.burn_in) % cfg.thin == 0 &&
                out.log_target.size() < static_cast<std::size_t>(cfg.target_samples))
                keep(out, c);
        }
    };

    for (int round = 0; round < rcfg.n_exchanges && step < needed; ++round) {
        const int count = static_cast<int>(std::min<long>(rcfg.exchange_interval, needed - step));
        if (rcfg.threads > 1 && n > 1) {
            // Replicas own their RNG streams, so the schedule does not affect results.
            std::vector<std::future<void>> jobs;
            for (int r = 0; r < n; ++r) jobs.push_back(std::async(std::launch::async, run_segment, r, step, count));
            for (auto& j : jobs) j.get();
        } else {
            for (int r = 0; r < n; ++r) run_segment(r, step, count);
        }
        step += count;
        if (step >= needed) break;
        for (int i = round % 2; i + 1 < n; i += 2) {
            auto& a = chains[static_cast<std::size_t>(i)];
            auto& b = chains[static_cast<std::size_t>(i + 1)];
            ++swap_tries[static_cast<std::size_t>(i)];
            if (uniform(exchange_rng) < swap_probability(temps[i], a.log_p, temps[i + 1], b.log_p)) {
                std::swap(a.x, b.x);
                std::swap(a.log_p, b.log_p);
                ++swap_hits[static_cast<std::size_t>(i)];
            }
        }
    }
    for (const auto& c : chains) out.acceptance_rate.push_back(rate(c.accepts, c.proposals));
    for (std::size_t i = 0; i < swap_tries.size(); ++i) out.exchange_rate.push_back(rate(swap_hits[i], swap_tries[i]));
    return out;
}

std::vector<std::vector<double>> screen_starts(const LogTarget& target, const Box& box, int n_candidates, int n_keep,
                                               std::uint64_t seed)
{
    box.validate();
    require(n_candidates >= n_keep && n_keep >= 1, "screen needs n_candidates >= n_keep >= 1");
    Rng rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const std::size_t d = box.dim();
    std::vector<std::vector<double>> points(static_cast<std::size_t>(n_candidates), std::vector<double>(d));
    std::vector<int> perm(static_cast<std::size_t>(n_candidates));
    for (std::size_t k = 0; k < d; ++k) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int i = 0; i < n_candidates; ++i) {
            const double cell = (perm[static_cast<std::size_t>(i)] + uniform(rng)) / n_candidates;
            points[static_cast<std::size_t>(i)][k] = box.lower[k] + cell * (box.upper[k] - box.lower[k]);
        }
    }
    std::vector<std::pair<double, int>> scored;
    for (int i = 0; i < n_candidates; ++i) {
        const double lp = target(points[static_cast<std::size_t>(i)]);
        if (std::isfinite(lp)) scored.emplace_back(lp, i);
    }
    if (scored.empty()) throw NumericalError("target is not finite at any screened point");
    // Stable order: score, then candidate index.
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    std::vector<std::vector<double>> out;
    for (int r = 0; r < n_keep; ++r)
        out.push_back(points[static_cast<std::size_t>(scored[static_cast<std::size_t>(r) % scored.size()].second)]);
    return out;
}

std::vector<std::pair<double, double>> empirical_cdf(std::span<const double> values)
{
    require(!values.empty(), "empirical CDF of an empty sample");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    std::vector<std::pair<double, double>> out(v.size());
    const double n = static_cast<double>(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = {v[i], static_cast<double>(i + 1) / n};
    return out;
}

double ks_distance(std::span<const double> values, const std::function<double(double)>& cdf)
{
    const auto ecdf = empirical_cdf(values);
    const double n = static_cast<double>(ecdf.size());
    double d = 0.0;
    for (std::size_t i = 0; i < ecdf.size(); ++i) {
        const double f = cdf(ecdf[i].first);
        d = std::max({d, std::abs(ecdf[i].second - f), std::abs(f - static_cast<double>(i) / n)});
    }
    return d;
}

double quantile(std::span<const double> values, double p)
{
    require(!values.empty(), "quantile of an empty sample");
    require(p >= 0.0 && p <= 1.0, "quantile level must lie in [0, 1]");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

constexpr const char* kLogTargetColumn = "log_target";

void write_samples_csv(const std::string& path, const std::vector<std::string>& names, const PosteriorSamples& s)
{
    require(names.size() == static_cast<std::size_t>(s.dim), "one column name per parameter is required");
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write " + path);
    const bool with_target = s.log_target.size() == s.size();
    for (std::size_t j = 0; j < names.size(); ++j) os << (j ? "," : "") << names[j];
    if (with_target) os << ',' << kLogTargetColumn;
    os << '\n';
    char buf[32];
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (int j = 0; j < s.dim; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", s.row(i)[static_cast<std::size_t>(j)]);
            os << (j ? "," : "") << buf;
        }
        if (with_target) {
            std::snprintf(buf, sizeof buf, "%.17g", s.log_target[i]);
            os << ',' << buf;
        }
        os << '\n';
    }
    if (!os) throw IoError("failed writing " + path);
}

PosteriorSamples read_samples_csv(const std::string& path, std::vector<std::string>* names)
{
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw IoError(path + " is empty");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    const bool with_target = !header.empty() && header.back() == kLogTargetColumn;
    if (with_target) header.pop_back();
    PosteriorSamples s;
    s.dim = static_cast<int>(header.size());
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        int count = 0;
        while (std::getline(ss, cell, ',')) {
            double v = 0.0;
            try {
                v = std::stod(cell);
            } catch (const std::exception&) {
                throw IoError("bad number '" + cell + "' in " + path);
            }
            if (count < s.dim)
                s.samples.push_back(v);
            else
                s.log_target.push_back(v);
            ++count;
        }
        if (count != s.dim + (with_target ? 1 : 0)) throw IoError("ragged row in " + path);
    }
    if (names) *names = std::move(header);
    return s;
}

nlohmann::json diagnostics(const PosteriorSamples& s)
{
    return {{"kept_samples", s.size()},
            {"acceptance_rate", s.acceptance_rate},
            {"exchange_rate", s.exchange_rate},
            {"temperatures", s.temperatures},
            {"chain_seeds", s.chain_seeds}};
}

} // namespace mvbu::samplers
