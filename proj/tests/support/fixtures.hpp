#pragma once

#include <gridse/netmodel.hpp>
#include <gridse/scenario.hpp>

#include <vector>

namespace gridse::test {

// Three-node triangle, all branches z, all switches closed.
inline NetworkTopology triangle(double z = 100.0, Regime regime = Regime::DC) {
    std::vector<Branch> branches;
    for (auto [i, k] : {std::pair{0, 1}, std::pair{0, 2}, std::pair{1, 2}}) {
        Branch b;
        b.i = i;
        b.k = k;
        if (regime == Regime::DC)
            b.resistance = z;
        else
            b.reactance = z;
        b.switchable = true;
        b.closed = true;
        branches.push_back(b);
    }
    return NetworkTopology(3, std::move(branches), regime);
}

inline NetworkTopology random_net(int nodes, double p, double z_ref, Regime regime,
                                  std::uint64_t seed) {
    NetworkSamplerConfig cfg;
    cfg.nodes = nodes;
    cfg.connectivity = p;
    cfg.z_ref = z_ref;
    cfg.regime = regime;
    Rng rng(seed);
    return sample_network(cfg, rng);
}

}  // namespace gridse::test
