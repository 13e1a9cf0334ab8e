#pragma once

#include <gridse/netmodel.hpp>
#include <gridse/rng.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridse {

// Reference quantities of the per-unit system. Everything stored downstream is
// already per unit; this records what one unit means.
struct PerUnitBase {
    double z_ref = 100.0;
    double p_ref = 1.0;

    double l_ref() const { return p_ref / z_ref; }

    void validate() const {
        if (z_ref <= 0 || p_ref <= 0)
            throw std::invalid_argument("per-unit references must be positive");
    }
};

// Proportional Gaussian noise: sigma_A,i = |A_0,i| * sigma_pct, floored so
// that nodes with near-zero actual values keep positive weights.
struct NoiseModel {
    double sigma_pct = 0.1;
    double sigma_floor = 1e-6;

    double sigma_for(double actual) const {
        return std::max(std::abs(actual) * sigma_pct, sigma_floor);
    }

    VectorXd sigmas_for(const VectorXd& actual) const {
        VectorXd s(actual.size());
        for (int i = 0; i < actual.size(); ++i) s[i] = sigma_for(actual[i]);
        return s;
    }
};

enum class Quantity { Potential, Injection };

inline const char* to_string(Quantity q) {
    return q == Quantity::Potential ? "potential" : "injection";
}

// Optional branch reading: a flow F_ij or a power flow S_ij with its sigma.
struct BranchReading {
    int i = 0;
    int k = 0;
    double value = 0.0;
    double sigma = 0.0;
    bool is_power = false;
};

// One timestep of nodal readings. Sigmas are carried for every node; the
// availability flags say which readings exist. Unavailable readings are
// estimation unknowns (the tilde convention).
struct MeasurementSet {
    int t = 0;
    VectorXd potential;             // undefined where unavailable
    VectorXd injection;
    std::vector<char> has_potential;
    std::vector<char> has_injection;
    VectorXd sigma_potential;
    VectorXd sigma_injection;
    std::vector<BranchReading> branch_readings;

    int node_count() const { return static_cast<int>(has_potential.size()); }

    int available_count() const {
        int m = 0;
        for (char c : has_potential) m += c != 0;
        for (char c : has_injection) m += c != 0;
        return m;
    }

    int missing_count() const { return 2 * node_count() - available_count(); }

    bool available(int node, Quantity q) const {
        return q == Quantity::Potential ? has_potential[node] != 0 : has_injection[node] != 0;
    }

    void drop(int node, Quantity q) {
        (q == Quantity::Potential ? has_potential : has_injection)[node] = 0;
    }
};

// Which readings a scenario produces. Defaults to everything available.
struct AvailabilityMask {
    std::vector<char> potential;
    std::vector<char> injection;

    static AvailabilityMask full(int n) { return {std::vector<char>(n, 1), std::vector<char>(n, 1)}; }

    int available_count() const {
        int m = 0;
        for (char c : potential) m += c != 0;
        for (char c : injection) m += c != 0;
        return m;
    }

    // Random mask with q readings removed, keeping m = 2n - q > n.
    static AvailabilityMask random_missing(int n, int q, Rng& rng) {
        if (q < 0 || 2 * n - q <= n)
            throw std::invalid_argument("mask must keep more than N readings");
        AvailabilityMask mask = full(n);
        std::vector<int> slots(2 * n);
        for (int s = 0; s < 2 * n; ++s) slots[s] = s;
        for (int d = 0; d < q; ++d) {
            const int pick = d + rng.index(2 * n - d);
            std::swap(slots[d], slots[pick]);
            const int s = slots[d];
            (s < n ? mask.potential[s] : mask.injection[s - n]) = 0;
        }
        return mask;
    }
};

// A gross measurement error: an offset of `factor` sigmas (sign drawn once per
// event) on one reading, active for t in [t_begin, t_end).
struct GrossErrorEvent {
    int node = 0;
    Quantity quantity = Quantity::Potential;
    double factor = 10.0;
    int t_begin = 0;
    int t_end = std::numeric_limits<int>::max();

    bool active(int t) const { return t >= t_begin && t < t_end; }
};

// An unrecorded switch flip in the true topology at timestep t.
struct FaultEvent {
    int i = 0;
    int k = 0;
    int t = 0;
};

// N >= 2, mean degree p: each candidate pair exists independently with
// probability p/(N-1); impedances uniform in z_ref*[lo,hi]. Resamples until the
// closed subgraph is connected. All sampled branches carry switches (closed).
struct NetworkSamplerConfig {
    int nodes = 20;
    double connectivity = 3.0;   // mean connections per node
    double z_ref = 100.0;
    double z_lo = 0.5;           // impedance band, in units of z_ref
    double z_hi = 1.5;
    Regime regime = Regime::DC;
    bool switchable = true;
    int max_retries = 1000;
};

inline NetworkTopology sample_network(const NetworkSamplerConfig& cfg, Rng& rng) {
    if (cfg.nodes < 2) throw std::invalid_argument("sample_network: need at least 2 nodes");
    if (cfg.connectivity <= 0 || cfg.connectivity > cfg.nodes - 1)
        throw std::invalid_argument("sample_network: connectivity must lie in (0, N-1]");
    const double edge_prob = cfg.connectivity / (cfg.nodes - 1);
    for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
        std::vector<Branch> branches;
        for (int i = 0; i < cfg.nodes; ++i)
            for (int k = i + 1; k < cfg.nodes; ++k) {
                if (!rng.bernoulli(edge_prob)) continue;
                Branch b;
                b.i = i;
                b.k = k;
                const double z = cfg.z_ref * rng.uniform(cfg.z_lo, cfg.z_hi);
                if (cfg.regime == Regime::DC) {
                    b.resistance = z;
                } else {
                    b.reactance = z;
                }
                b.switchable = cfg.switchable;
                b.closed = true;
                branches.push_back(b);
            }
        NetworkTopology topo(cfg.nodes, std::move(branches), cfg.regime);
        if (topo.closed_subgraph_connected()) return topo;
    }
    throw std::runtime_error("sample_network: no connected sample within " +
                             std::to_string(cfg.max_retries) + " retries (connectivity too low?)");
}

inline NetworkTopology sample_network(int nodes, double connectivity, double z_ref, Regime regime,
                                      std::uint64_t seed) {
    NetworkSamplerConfig cfg;
    cfg.nodes = nodes;
    cfg.connectivity = connectivity;
    cfg.z_ref = z_ref;
    cfg.regime = regime;
    Rng rng(seed);
    return sample_network(cfg, rng);
}

// Range the true potentials are drawn from. DC potentials sit near one unit;
// DCApprox states are small phases.
struct PotentialProfile {
    double lo = 0.8;
    double hi = 1.2;

    static PotentialProfile defaults(Regime r) {
        return r == Regime::DC ? PotentialProfile{0.8, 1.2} : PotentialProfile{-0.2, 0.2};
    }

    // Same spread recentred on `mean`; used by the mean-potential sweeps.
    PotentialProfile recentred(double mean) const {
        const double half = (hi - lo) / 2.0;
        return {mean - half, mean + half};
    }
};

// True state consistent with the topology by construction: draw P_0, set
// L_0 = Y * P_0.
inline NodalState synthesize_state(const NetworkTopology& topo, const PotentialProfile& profile,
                                   Rng& rng) {
    NodalState s;
    s.potentials.resize(topo.node_count());
    for (int i = 0; i < topo.node_count(); ++i) s.potentials[i] = rng.uniform(profile.lo, profile.hi);
    s.injections = build_admittance(topo).matrix * s.potentials;
    return s;
}

inline NodalState synthesize_state(const NetworkTopology& topo, Rng& rng) {
    return synthesize_state(topo, PotentialProfile::defaults(topo.regime()), rng);
}

// State with the same potentials re-propagated through a (possibly different)
// topology; used when faults change the true network under fixed potentials.
inline NodalState repropagate(const NodalState& state, const NetworkTopology& topo) {
    NodalState s;
    s.potentials = state.potentials;
    s.injections = build_admittance(topo).matrix * s.potentials;
    return s;
}

namespace detail {

inline double gross_sign(std::uint64_t seed, const GrossErrorEvent& ev) {
    Rng r = Rng::derive(seed, {0x6e6f6973ULL, static_cast<std::uint64_t>(ev.node),
                               ev.quantity == Quantity::Potential ? 0ULL : 1ULL,
                               static_cast<std::uint64_t>(ev.t_begin)});
    return r.bernoulli(0.5) ? 1.0 : -1.0;
}

}  // namespace detail

// One noisy measurement draw of `state`. Readings are true value plus
// Gaussian(0, sigma); active gross events add factor*sigma with the event's
// fixed sign. Requires m > N available readings.
inline MeasurementSet measure(const NodalState& state, const NoiseModel& noise,
                              const AvailabilityMask& mask,
                              const std::vector<GrossErrorEvent>& gross, int t, Rng& rng,
                              std::uint64_t sign_seed = 0) {
    const int n = static_cast<int>(state.potentials.size());
    if (static_cast<int>(mask.potential.size()) != n ||
        static_cast<int>(mask.injection.size()) != n)
        throw std::invalid_argument("measure: mask length mismatch");
    if (mask.available_count() <= n)
        throw std::invalid_argument("measure: only " + std::to_string(mask.available_count()) +
                                    " readings available; estimation requires more than " +
                                    std::to_string(n));
    MeasurementSet ms;
    ms.t = t;
    ms.has_potential = mask.potential;
    ms.has_injection = mask.injection;
    ms.sigma_potential = noise.sigmas_for(state.potentials);
    ms.sigma_injection = noise.sigmas_for(state.injections);
    ms.potential.resize(n);
    ms.injection.resize(n);
    // Noise draws consume a fixed two uniforms per slot so the stream is
    // independent of the mask.
    for (int i = 0; i < n; ++i) {
        const double eps = rng.normal(0.0, ms.sigma_potential[i]);
        ms.potential[i] = mask.potential[i] ? state.potentials[i] + eps : 0.0;
    }
    for (int i = 0; i < n; ++i) {
        const double eps = rng.normal(0.0, ms.sigma_injection[i]);
        ms.injection[i] = mask.injection[i] ? state.injections[i] + eps : 0.0;
    }
    for (const GrossErrorEvent& ev : gross) {
        if (!ev.active(t)) continue;
        const double sign = detail::gross_sign(sign_seed, ev);
        if (ev.quantity == Quantity::Potential) {
            if (mask.potential[ev.node])
                ms.potential[ev.node] += sign * ev.factor * ms.sigma_potential[ev.node];
        } else {
            if (mask.injection[ev.node])
                ms.injection[ev.node] += sign * ev.factor * ms.sigma_injection[ev.node];
        }
    }
    return ms;
}

// One emitted timestep of a replay: the measurements plus the true topology
// and state they were drawn from.
struct ReplayStep {
    int t = 0;
    MeasurementSet measurements;
    NodalState true_state;
    NetworkTopology true_topology;
};

struct ReplayConfig {
    int steps = 100;
    NoiseModel noise;
    AvailabilityMask mask;  // empty -> full availability
    std::vector<GrossErrorEvent> gross;
    std::vector<FaultEvent> faults;
};

// Deterministic stream of T timesteps. Fault events flip the true switch from
// their timestep onward and the injections are re-derived from the fixed
// potentials; the estimator-side assumed topology is tracked elsewhere.
inline std::vector<ReplayStep> replay(const NetworkTopology& start, const NodalState& state,
                                      const ReplayConfig& cfg, std::uint64_t seed) {
    if (cfg.steps < 1) throw std::invalid_argument("replay: need at least one timestep");
    const int n = start.node_count();
    AvailabilityMask mask = cfg.mask.potential.empty() ? AvailabilityMask::full(n) : cfg.mask;
    for (const FaultEvent& f : cfg.faults) {
        const auto idx = start.find_branch(f.i, f.k);
        if (!idx || !start.branch(*idx).switchable)
            throw std::invalid_argument("replay: fault on missing or non-switchable branch (" +
                                        std::to_string(f.i + 1) + "," + std::to_string(f.k + 1) +
                                        ")");
    }
    std::vector<ReplayStep> out;
    out.reserve(cfg.steps);
    NetworkTopology current = start;
    NodalState truth = repropagate(state, current);
    for (int t = 0; t < cfg.steps; ++t) {
        bool changed = false;
        for (const FaultEvent& f : cfg.faults)
            if (f.t == t) {
                current = current.with_flipped(*current.find_branch(f.i, f.k));
                changed = true;
            }
        if (changed) truth = repropagate(state, current);
        Rng step_rng = Rng::derive(seed, {0x7265706cULL, static_cast<std::uint64_t>(t)});
        ReplayStep step;
        step.t = t;
        step.measurements = measure(truth, cfg.noise, mask, cfg.gross, t, step_rng, seed);
        step.true_state = truth;
        step.true_topology = current;
        out.push_back(std::move(step));
    }
    return out;
}

}  // namespace gridse
