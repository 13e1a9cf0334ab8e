#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridse {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

// Operating regime. Both keep every quantity real: DC uses branch resistances,
// the DC approximation to AC uses reactances and stores phase angles in the
// potential slots (|P| ~ 1, so the phase is the state).
enum class Regime { DC, DCApprox };

inline const char* to_string(Regime r) { return r == Regime::DC ? "dc" : "dc_approx"; }

inline Regime regime_from_string(const std::string& s) {
    if (s == "dc") return Regime::DC;
    if (s == "dc_approx") return Regime::DCApprox;
    throw std::invalid_argument("unknown regime '" + s + "' (expected dc or dc_approx)");
}

// A branch between two nodes. Node ids are 0-based internally; file formats
// and logs use 1-based ids to match engineering convention.
struct Branch {
    int i = 0;
    int k = 0;
    double resistance = 0.0;  // R, per unit
    double reactance = 0.0;   // X, per unit
    bool switchable = false;
    bool closed = true;       // s_ik; permanently 1 when not switchable

    // Effective series impedance used by the regime.
    double impedance(Regime r) const { return r == Regime::DC ? resistance : reactance; }
};

class NetworkTopology {
public:
    NetworkTopology() = default;

    NetworkTopology(int node_count, std::vector<Branch> branches, Regime regime,
                    VectorXd earth_admittance = VectorXd())
        : nodes_(node_count), branches_(std::move(branches)), regime_(regime),
          earth_(earth_admittance.size() == 0 ? VectorXd::Zero(node_count)
                                              : std::move(earth_admittance)) {
        validate();
    }

    int node_count() const { return nodes_; }
    Regime regime() const { return regime_; }
    const std::vector<Branch>& branches() const { return branches_; }
    const VectorXd& earth_admittance() const { return earth_; }

    const Branch& branch(std::size_t idx) const { return branches_.at(idx); }

    std::optional<std::size_t> find_branch(int i, int k) const {
        if (i > k) std::swap(i, k);
        for (std::size_t b = 0; b < branches_.size(); ++b)
            if (branches_[b].i == i && branches_[b].k == k) return b;
        return std::nullopt;
    }

    std::vector<std::size_t> switchable_branches() const {
        std::vector<std::size_t> out;
        for (std::size_t b = 0; b < branches_.size(); ++b)
            if (branches_[b].switchable) out.push_back(b);
        return out;
    }

    // Switchable branches incident to `node`, in branch order.
    std::vector<std::size_t> switchable_at(int node) const {
        std::vector<std::size_t> out;
        for (std::size_t b = 0; b < branches_.size(); ++b)
            if (branches_[b].switchable && (branches_[b].i == node || branches_[b].k == node))
                out.push_back(b);
        return out;
    }

    int degree(int node) const {
        int d = 0;
        for (const Branch& b : branches_)
            if (b.closed && (b.i == node || b.k == node)) ++d;
        return d;
    }

    NetworkTopology with_switch(std::size_t branch_idx, bool closed) const {
        NetworkTopology copy = *this;
        Branch& b = copy.branches_.at(branch_idx);
        if (!b.switchable && b.closed != closed)
            throw std::invalid_argument("branch (" + std::to_string(b.i + 1) + "," +
                                        std::to_string(b.k + 1) + ") has no switch");
        b.closed = closed;
        return copy;
    }

    NetworkTopology with_flipped(std::size_t branch_idx) const {
        return with_switch(branch_idx, !branches_.at(branch_idx).closed);
    }

    // All switches closed; the reference configuration of the switch
    // decomposition Y(s) = Y_on - sum over open switches of M_ik / z_ik.
    NetworkTopology all_on() const {
        NetworkTopology copy = *this;
        for (Branch& b : copy.branches_) b.closed = true;
        return copy;
    }

    // Connectivity of the subgraph of closed branches.
    bool closed_subgraph_connected() const {
        if (nodes_ <= 1) return true;
        std::vector<std::vector<int>> adj(nodes_);
        for (const Branch& b : branches_) {
            if (!b.closed) continue;
            adj[b.i].push_back(b.k);
            adj[b.k].push_back(b.i);
        }
        std::vector<char> seen(nodes_, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        int count = 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int w : adj[v])
                if (!seen[w]) {
                    seen[w] = 1;
                    ++count;
                    stack.push_back(w);
                }
        }
        return count == nodes_;
    }

    // FNV-1a over the defining fields; identifies the source topology of an
    // admittance matrix.
    std::uint64_t hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto feed = [&h](std::uint64_t v) {
            for (int byte = 0; byte < 8; ++byte) {
                h ^= (v >> (8 * byte)) & 0xff;
                h *= 0x100000001b3ULL;
            }
        };
        auto feed_double = [&](double d) {
            std::uint64_t bits;
            static_assert(sizeof bits == sizeof d);
            std::memcpy(&bits, &d, sizeof bits);
            feed(bits);
        };
        feed(static_cast<std::uint64_t>(nodes_));
        feed(regime_ == Regime::DC ? 0 : 1);
        for (const Branch& b : branches_) {
            feed(static_cast<std::uint64_t>(b.i));
            feed(static_cast<std::uint64_t>(b.k));
            feed_double(b.resistance);
            feed_double(b.reactance);
            feed(static_cast<std::uint64_t>(b.switchable ? 1 : 0));
            feed(static_cast<std::uint64_t>(b.closed ? 1 : 0));
        }
        for (int i = 0; i < earth_.size(); ++i) feed_double(earth_[i]);
        return h;
    }

private:
    void validate() {
        if (nodes_ < 1) throw std::invalid_argument("node count must be positive");
        if (earth_.size() != nodes_) throw std::invalid_argument("earth admittance length mismatch");
        std::set<std::pair<int, int>> seen;
        for (Branch& b : branches_) {
            if (b.i > b.k) std::swap(b.i, b.k);
            if (b.i == b.k)
                throw std::invalid_argument("branch endpoints coincide at node " +
                                            std::to_string(b.i + 1));
            if (b.i < 0 || b.k >= nodes_) throw std::invalid_argument("branch endpoint out of range");
            if (!seen.insert({b.i, b.k}).second)
                throw std::invalid_argument("duplicate branch (" + std::to_string(b.i + 1) + "," +
                                            std::to_string(b.k + 1) + ")");
            if (!b.switchable) b.closed = true;
            if (b.resistance < 0 || b.reactance < 0)
                throw std::invalid_argument("negative impedance on branch (" +
                                            std::to_string(b.i + 1) + "," +
                                            std::to_string(b.k + 1) + ")");
        }
        sort_branches();
    }

    void sort_branches() {
        std::sort(branches_.begin(), branches_.end(), [](const Branch& a, const Branch& b) {
            return std::pair(a.i, a.k) < std::pair(b.i, b.k);
        });
    }

    int nodes_ = 0;
    std::vector<Branch> branches_;
    Regime regime_ = Regime::DC;
    VectorXd earth_;
};

// Symmetric nodal admittance matrix together with the hash of the topology it
// was built from. Real in both implemented regimes.
struct AdmittanceMatrix {
    MatrixXd matrix;
    std::uint64_t source_topology_hash = 0;
};

// Nodal state: potentials (phases in DCApprox) and injections, per unit.
struct NodalState {
    VectorXd potentials;
    VectorXd injections;

    bool consistent_with(const MatrixXd& Y, double tol = 1e-9) const {
        return (injections - Y * potentials).lpNorm<Eigen::Infinity>() <= tol;
    }
};

// Y_ik = -s_ik / z_ik off diagonal, Y_ii = y_i + sum_k s_ik / z_ik. With zero
// earth admittances every row sums to zero, so Y is singular (constant vectors
// span its kernel); estimation is anchored by potential measurements instead
// of a slack node. Nonzero earth admittances are accepted for forward
// compatibility; `warning` is set when they void the conservation identity.
inline AdmittanceMatrix build_admittance(const NetworkTopology& topo,
                                         std::string* warning = nullptr) {
    const int n = topo.node_count();
    MatrixXd y = MatrixXd::Zero(n, n);
    for (const Branch& b : topo.branches()) {
        if (!b.closed) continue;
        const double z = b.impedance(topo.regime());
        if (z <= 0.0)
            throw std::invalid_argument("branch (" + std::to_string(b.i + 1) + "," +
                                        std::to_string(b.k + 1) +
                                        ") has non-positive impedance in this regime");
        const double g = 1.0 / z;
        y(b.i, b.k) -= g;
        y(b.k, b.i) -= g;
        y(b.i, b.i) += g;
        y(b.k, b.k) += g;
    }
    bool earthed = false;
    for (int i = 0; i < n; ++i) {
        y(i, i) += topo.earth_admittance()[i];
        earthed = earthed || topo.earth_admittance()[i] != 0.0;
    }
    if (earthed && warning)
        *warning = "nonzero earth admittance: row sums and injection conservation do not vanish";
    return {std::move(y), topo.hash()};
}

// L = Y * P.
inline VectorXd apply_law(const MatrixXd& Y, const VectorXd& P) {
    if (Y.cols() != P.size())
        throw std::invalid_argument("apply_law: dimension mismatch (" + std::to_string(Y.cols()) +
                                    " vs " + std::to_string(P.size()) + ")");
    return Y * P;
}

// The same law written as the explicit nodal sum L_i = sum_k s_ik/z_ik (P_i - P_k)
// plus the earth term. Independent of the matrix route; used to cross-check it.
inline VectorXd apply_law_nodal(const NetworkTopology& topo, const VectorXd& P) {
    if (P.size() != topo.node_count())
        throw std::invalid_argument("apply_law_nodal: dimension mismatch");
    VectorXd l = VectorXd::Zero(topo.node_count());
    for (const Branch& b : topo.branches()) {
        if (!b.closed) continue;
        const double g = 1.0 / b.impedance(topo.regime());
        l[b.i] += g * (P[b.i] - P[b.k]);
        l[b.k] += g * (P[b.k] - P[b.i]);
    }
    for (int i = 0; i < topo.node_count(); ++i) l[i] += topo.earth_admittance()[i] * P[i];
    return l;
}

// Basis stencil of one branch: +1 at (i,i) and (k,k), -1 at (i,k) and (k,i).
// M_ik * P has the two entries +-(P_i - P_k) and vanishes iff P_i = P_k.
struct BranchBasisMatrix {
    int i = 0;
    int k = 0;
    MatrixXd matrix;
};

inline BranchBasisMatrix branch_basis(int i, int k, int n) {
    if (i == k) throw std::invalid_argument("branch basis requires distinct endpoints");
    if (i > k) std::swap(i, k);
    if (i < 0 || k >= n) throw std::invalid_argument("branch basis endpoint out of range");
    MatrixXd m = MatrixXd::Zero(n, n);
    m(i, i) = 1.0;
    m(k, k) = 1.0;
    m(i, k) = -1.0;
    m(k, i) = -1.0;
    return {i, k, std::move(m)};
}

// Cartesian split of the complex law into a 2N real block system:
//   [L_R]   [Y_R  -Y_I] [P_R]
//   [L_I] = [Y_I   Y_R] [P_I]
// Both shipped regimes are real, so this is exercised only by consistency
// checks against complex arithmetic.
struct RealBlockSystem {
    MatrixXd block;          // 2N x 2N
    VectorXd potentials;     // [P_R; P_I]
    VectorXd injections;     // [L_R; L_I] of the inputs
    VectorXd law_injections; // block * potentials
};

inline RealBlockSystem decompose_complex(const MatrixXcd& Y, const VectorXcd& P,
                                         const VectorXcd& L) {
    const auto n = Y.rows();
    if (Y.cols() != n || P.size() != n || L.size() != n)
        throw std::invalid_argument("decompose_complex: dimension mismatch");
    RealBlockSystem sys;
    sys.block.resize(2 * n, 2 * n);
    sys.block.topLeftCorner(n, n) = Y.real();
    sys.block.topRightCorner(n, n) = -Y.imag();
    sys.block.bottomLeftCorner(n, n) = Y.imag();
    sys.block.bottomRightCorner(n, n) = Y.real();
    sys.potentials.resize(2 * n);
    sys.potentials << P.real(), P.imag();
    sys.injections.resize(2 * n);
    sys.injections << L.real(), L.imag();
    sys.law_injections = sys.block * sys.potentials;
    return sys;
}

}  // namespace gridse
