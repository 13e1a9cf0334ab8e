#pragma once

#include <gridse/netmodel.hpp>
#include <gridse/scenario.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridse {

// Families of the law-residual weight Sigma_i^2. The exponent n is kept an
// integer in 0..6 for numerical stability; alpha keeps the objective
// dimensionless and stays at one.
enum class WeightFamily { SigmaL, SigmaP, SigmaPL, SigmaMixed };

inline const char* to_string(WeightFamily f) {
    switch (f) {
        case WeightFamily::SigmaL: return "L";
        case WeightFamily::SigmaP: return "P";
        case WeightFamily::SigmaPL: return "PL";
        case WeightFamily::SigmaMixed: return "MIXED";
    }
    return "?";
}

inline WeightFamily weight_family_from_string(const std::string& s) {
    if (s == "L") return WeightFamily::SigmaL;
    if (s == "P") return WeightFamily::SigmaP;
    if (s == "PL") return WeightFamily::SigmaPL;
    if (s == "MIXED") return WeightFamily::SigmaMixed;
    throw std::invalid_argument("unknown weight family '" + s + "' (expected L, P, PL or MIXED)");
}

struct WeightScheme {
    WeightFamily family = WeightFamily::SigmaL;
    int exponent = 2;
    double alpha = 1.0;
};

// Sigma_i^2 per node.
//   SigmaL:     sigma_L,i^n
//   SigmaP:     alpha * (sigma_P,i * sigma_P,i)^(n/2)
//   SigmaPL:    (sigma_L,i^2 + sum_k Y_ik^2 sigma_P,k^2)^(n/2)
//   SigmaMixed: (sigma_L,i * sigma_P,i)^(n/2)
// n = 0 gives the unweighted law residual.
inline VectorXd sigma_weights(const WeightScheme& scheme, const VectorXd& sigma_p,
                              const VectorXd& sigma_l, const MatrixXd& Y) {
    if (scheme.exponent < 0 || scheme.exponent > 6)
        throw std::invalid_argument("weight exponent must lie in 0..6");
    const int n = static_cast<int>(sigma_l.size());
    const double half_n = scheme.exponent / 2.0;
    VectorXd w(n);
    for (int i = 0; i < n; ++i) {
        double v = 0.0;
        switch (scheme.family) {
            case WeightFamily::SigmaL:
                v = std::pow(sigma_l[i], scheme.exponent);
                break;
            case WeightFamily::SigmaP:
                v = scheme.alpha * std::pow(sigma_p[i] * sigma_p[i], half_n);
                break;
            case WeightFamily::SigmaPL: {
                double acc = sigma_l[i] * sigma_l[i];
                for (int k = 0; k < n; ++k) acc += Y(i, k) * Y(i, k) * sigma_p[k] * sigma_p[k];
                v = std::pow(acc, half_n);
                break;
            }
            case WeightFamily::SigmaMixed:
                v = std::pow(sigma_l[i] * sigma_p[i], half_n);
                break;
        }
        if (!(v > 0.0))
            throw std::logic_error("sigma_weights: non-positive weight at node " +
                                   std::to_string(i + 1));
        w[i] = v;
    }
    return w;
}

inline VectorXd sigma_weights(const WeightScheme& scheme, const MeasurementSet& meas,
                              const MatrixXd& Y) {
    return sigma_weights(scheme, meas.sigma_potential, meas.sigma_injection, Y);
}

enum class ObjectiveKind { J1, J2_1, J2_2, J3 };

inline const char* to_string(ObjectiveKind k) {
    switch (k) {
        case ObjectiveKind::J1: return "J1";
        case ObjectiveKind::J2_1: return "J2_1";
        case ObjectiveKind::J2_2: return "J2_2";
        case ObjectiveKind::J3: return "J3";
    }
    return "?";
}

inline ObjectiveKind objective_from_string(const std::string& s) {
    if (s == "J1") return ObjectiveKind::J1;
    if (s == "J2_1") return ObjectiveKind::J2_1;
    if (s == "J2_2") return ObjectiveKind::J2_2;
    if (s == "J3") return ObjectiveKind::J3;
    throw std::invalid_argument("unknown objective '" + s + "'");
}

// Benchmark-selected default weight per objective and regime.
inline WeightScheme default_weight(ObjectiveKind kind, Regime regime) {
    if (regime == Regime::DC) {
        switch (kind) {
            case ObjectiveKind::J1: return {WeightFamily::SigmaL, 2};
            case ObjectiveKind::J2_1: return {WeightFamily::SigmaPL, 2};
            case ObjectiveKind::J2_2: return {WeightFamily::SigmaL, 2};
            case ObjectiveKind::J3: return {WeightFamily::SigmaPL, 3};
        }
    }
    switch (kind) {
        case ObjectiveKind::J1: return {WeightFamily::SigmaL, 2};
        case ObjectiveKind::J2_1: return {WeightFamily::SigmaL, 2};
        case ObjectiveKind::J2_2: return {WeightFamily::SigmaL, 2};
        case ObjectiveKind::J3: return {WeightFamily::SigmaMixed, 3};
    }
    return {};
}

// Equality constraint from a branch reading, enforced through a Lagrange
// multiplier: P_i - P_k - z*F = 0, or the quadratic power form
// (P_i - P_k)^2 - z*S = 0 which is handled as dP = sign*sqrt(z*S) with the
// sign resolved by objective comparison.
struct FlowConstraint {
    int i = 0;
    int k = 0;
    double z = 0.0;
    double value = 0.0;
    bool is_power = false;
};

inline std::vector<FlowConstraint> flow_constraints(const std::vector<BranchReading>& readings,
                                                    const NetworkTopology& topo) {
    std::vector<FlowConstraint> out;
    for (const BranchReading& r : readings) {
        const auto idx = topo.find_branch(r.i, r.k);
        if (!idx)
            throw std::invalid_argument("branch reading references missing branch (" +
                                        std::to_string(r.i + 1) + "," + std::to_string(r.k + 1) +
                                        ")");
        const Branch& b = topo.branch(*idx);
        out.push_back({b.i, b.k, b.impedance(topo.regime()), r.value, r.is_power});
    }
    return out;
}

struct ObjectiveSpec {
    ObjectiveKind kind = ObjectiveKind::J1;
    WeightScheme weights;
    std::vector<FlowConstraint> constraints;
    // J2_1 minimizes given the J1 potentials. When absent, solve() runs J1
    // first with `prior_weights` (the reference choice for J1 in both regimes).
    std::optional<VectorXd> prior_potentials;
    WeightScheme prior_weights{WeightFamily::SigmaL, 2};
};

inline ObjectiveSpec default_objective(ObjectiveKind kind, Regime regime) {
    ObjectiveSpec spec;
    spec.kind = kind;
    spec.weights = default_weight(kind, regime);
    return spec;
}

enum class SolverStatus { Exact, Iterative, Singular };

inline const char* to_string(SolverStatus s) {
    switch (s) {
        case SolverStatus::Exact: return "exact";
        case SolverStatus::Iterative: return "iterative";
        case SolverStatus::Singular: return "singular";
    }
    return "?";
}

struct EstimatedState {
    VectorXd potentials;   // P-hat
    VectorXd injections;   // L-hat
    double objective = 0.0;
    SolverStatus status = SolverStatus::Exact;
    int rank = 0;
    int deficiency = 0;       // unknowns minus rank of the stationarity system
    double condition = 0.0;   // pivot-ratio estimate of the solved system
    VectorXd multipliers;     // one per active constraint
};

// Measured-vs-estimated quality of one draw. Percentages compare the estimate
// residual against the realized measurement error; 100% means the estimate is
// no better than reading the meters.
struct ErrorReport {
    double pct_potential = 0.0;
    double pct_injection = 0.0;
    double pct_power = 0.0;
    VectorXd sq_residual_potential;  // (P_i - Phat_i)^2 where measured, else 0
    VectorXd sq_residual_injection;
};

// --- objective evaluation -------------------------------------------------

// Evaluates the selected quadratic objective at (P-hat, L-hat) under the tilde
// convention: measured quantities are data, unavailable ones are the passed
// estimates. For J2_1 the potentials argument plays the role of the pinned J1
// solution. Lagrange terms vanish at feasible points and are not added here.
inline double objective_value(const ObjectiveSpec& spec, const MeasurementSet& meas,
                              const MatrixXd& Y, const VectorXd& p_hat, const VectorXd& l_hat) {
    const int n = meas.node_count();
    if (p_hat.size() != n || l_hat.size() != n || Y.rows() != n)
        throw std::invalid_argument("objective_value: dimension mismatch");
    const VectorXd w = sigma_weights(spec.weights, meas, Y);
    const VectorXd yp = Y * p_hat;
    double j = 0.0;
    auto anchor_p = [&] {
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
            if (meas.has_potential[i]) {
                const double r = meas.potential[i] - p_hat[i];
                acc += r * r / (meas.sigma_potential[i] * meas.sigma_potential[i]);
            }
        return acc;
    };
    auto anchor_l = [&] {
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
            if (meas.has_injection[i]) {
                const double r = meas.injection[i] - l_hat[i];
                acc += r * r / (meas.sigma_injection[i] * meas.sigma_injection[i]);
            }
        return acc;
    };
    switch (spec.kind) {
        case ObjectiveKind::J1:
            j = anchor_p();
            for (int i = 0; i < n; ++i) {
                const double lt = meas.has_injection[i] ? meas.injection[i] : l_hat[i];
                const double r = lt - yp[i];
                j += r * r / w[i];
            }
            break;
        case ObjectiveKind::J2_1:
        case ObjectiveKind::J2_2:
            // Same functional form; they differ in how the potentials are
            // produced (pinned J1 solution vs simultaneous stationarity).
            j = anchor_l();
            for (int i = 0; i < n; ++i) {
                const double r = l_hat[i] - yp[i];
                j += r * r / w[i];
            }
            break;
        case ObjectiveKind::J3:
            j = anchor_p() + anchor_l();
            for (int i = 0; i < n; ++i) {
                const double r = l_hat[i] - yp[i];
                j += r * r / w[i];
            }
            break;
    }
    return j;
}

// --- solver ----------------------------------------------------------------

namespace detail {

constexpr double kRankThreshold = 1e-10;  // relative pivot threshold

struct LinearSolution {
    VectorXd x;
    SolverStatus status = SolverStatus::Exact;
    int rank = 0;
    int deficiency = 0;
    double condition = 0.0;
};

// Rank-revealing solve of K x = rhs (K need not be square or symmetric).
// Full rank gives the unique/least-squares solution; rank deficiency is
// reported and the minimum-norm solution returned.
inline LinearSolution solve_rank_checked(const MatrixXd& K, const VectorXd& rhs) {
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(K.rows(), K.cols());
    cod.setThreshold(kRankThreshold);
    cod.compute(K);
    LinearSolution sol;
    sol.rank = static_cast<int>(cod.rank());
    sol.deficiency = static_cast<int>(K.cols()) - sol.rank;
    sol.x = cod.solve(rhs);
    const auto& t = cod.matrixT();
    double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < sol.rank; ++i) {
        const double d = std::abs(t(i, i));
        dmax = std::max(dmax, d);
        dmin = std::min(dmin, d);
    }
    sol.condition = (sol.rank == 0 || dmin == 0.0) ? std::numeric_limits<double>::infinity()
                                                   : dmax / dmin;
    if (sol.deficiency > 0) {
        sol.status = SolverStatus::Singular;
        return sol;
    }
    // One step of iterative refinement when the direct residual is loose.
    const double rhs_norm = std::max(rhs.norm(), 1.0);
    if ((K * sol.x - rhs).norm() > 1e-10 * rhs_norm) {
        const VectorXd dx = cod.solve(rhs - K * sol.x);
        sol.x += dx;
        sol.status = SolverStatus::Iterative;
    }
    return sol;
}

struct Assembled {
    MatrixXd H;   // stationarity matrix over the unknowns
    VectorXd b;
    MatrixXd G;   // constraint rows over the unknowns (may be empty)
    VectorXd d;
};

// KKT bordering of H x = b with G x = d. Constraint rows are rescaled to the
// magnitude of H so the rank check is not dominated by unit mismatch; the
// reported multipliers are unscaled back.
inline LinearSolution solve_kkt(const Assembled& sys, VectorXd* multipliers) {
    const int nx = static_cast<int>(sys.H.cols());
    const int nc = static_cast<int>(sys.G.rows());
    if (nc == 0) {
        LinearSolution sol = solve_rank_checked(sys.H, sys.b);
        if (multipliers) multipliers->resize(0);
        return sol;
    }
    const double scale = std::sqrt(std::max(sys.H.diagonal().cwiseAbs().mean(), 1e-300));
    MatrixXd kkt = MatrixXd::Zero(nx + nc, nx + nc);
    kkt.topLeftCorner(nx, nx) = sys.H;
    kkt.topRightCorner(nx, nc) = sys.G.transpose() * scale;
    kkt.bottomLeftCorner(nc, nx) = sys.G * scale;
    VectorXd rhs(nx + nc);
    rhs << sys.b, sys.d * scale;
    LinearSolution sol = solve_rank_checked(kkt, rhs);
    if (multipliers) *multipliers = sol.x.tail(nc) * scale;
    sol.x = sol.x.head(nx).eval();
    sol.deficiency = std::max(0, sol.deficiency);
    return sol;
}

// Expand power-flow constraints into sign alternatives of the linear form
// dP = sign * sqrt(z*S).
inline std::vector<std::vector<FlowConstraint>> linearized_constraint_sets(
    const std::vector<FlowConstraint>& cs) {
    std::vector<std::vector<FlowConstraint>> sets{{}};
    for (const FlowConstraint& c : cs) {
        if (!c.is_power) {
            for (auto& s : sets) s.push_back(c);
            continue;
        }
        const double zs = c.z * c.value;
        if (zs < 0)
            throw std::invalid_argument("power-flow reading on branch (" + std::to_string(c.i + 1) +
                                        "," + std::to_string(c.k + 1) +
                                        ") is inconsistent with its impedance sign");
        const double dp = std::sqrt(zs);
        std::vector<std::vector<FlowConstraint>> grown;
        grown.reserve(sets.size() * 2);
        for (const auto& s : sets)
            for (const double sign : {1.0, -1.0}) {
                auto t = s;
                FlowConstraint lin = c;
                lin.is_power = false;
                lin.value = sign * dp / c.z;  // equivalent linear flow
                t.push_back(lin);
                grown.push_back(std::move(t));
            }
        sets = std::move(grown);
        if (sets.size() > 1024)
            throw std::invalid_argument("too many power-flow constraints to resolve signs");
    }
    return sets;
}

inline MatrixXd constraint_rows(const std::vector<FlowConstraint>& cs, int n, int nx,
                                VectorXd* d) {
    MatrixXd g = MatrixXd::Zero(static_cast<int>(cs.size()), nx);
    d->resize(static_cast<int>(cs.size()));
    for (std::size_t c = 0; c < cs.size(); ++c) {
        g(static_cast<int>(c), cs[c].i) = 1.0;
        g(static_cast<int>(c), cs[c].k) = -1.0;
        (*d)[static_cast<int>(c)] = cs[c].z * cs[c].value;
    }
    (void)n;
    return g;
}

}  // namespace detail

// Stationary point of the selected objective.
//   J1:   minimize over P-hat and the unavailable injections; reported
//         injections are back-substituted as L-hat = Y * P-hat.
//   J2_1: solve J1 first, then minimize over L-hat holding those potentials.
//   J2_2: joint stationarity of J1 in P-hat and J2(2) in L-hat.
//   J3:   minimize jointly over (P-hat, L-hat).
// A rank-deficient stationarity system is reported as Singular with the
// minimum-norm solution and the deficiency count.
inline EstimatedState solve(const ObjectiveSpec& spec, const MeasurementSet& meas,
                            const MatrixXd& Y) {
    const int n = meas.node_count();
    if (Y.rows() != n || Y.cols() != n) throw std::invalid_argument("solve: dimension mismatch");
    if (meas.available_count() <= n)
        throw std::invalid_argument("solve: " + std::to_string(meas.available_count()) +
                                    " readings for " + std::to_string(n) +
                                    " nodes; the m > N premise is violated");
    const VectorXd w = sigma_weights(spec.weights, meas, Y);

    std::vector<int> missing_l;
    for (int i = 0; i < n; ++i)
        if (!meas.has_injection[i]) missing_l.push_back(i);
    const int ql = static_cast<int>(missing_l.size());

    const auto constraint_sets = detail::linearized_constraint_sets(spec.constraints);

    auto finish = [&](EstimatedState st) {
        st.objective = objective_value(spec, meas, Y, st.potentials, st.injections);
        return st;
    };

    auto solve_variant = [&](const std::vector<FlowConstraint>& cons) -> EstimatedState {
        EstimatedState st;
        switch (spec.kind) {
            case ObjectiveKind::J1: {
                // Unknowns: [P-hat; L-hat at missing nodes].
                const int nx = n + ql;
                const int rows = n /* law */ + n /* potential anchors, zero rows skipped */;
                MatrixXd a = MatrixXd::Zero(rows, nx);
                VectorXd z = VectorXd::Zero(rows);
                int r = 0;
                for (int i = 0; i < n; ++i)
                    if (meas.has_potential[i]) {
                        a(r, i) = 1.0 / meas.sigma_potential[i];
                        z[r] = meas.potential[i] / meas.sigma_potential[i];
                        ++r;
                    }
                for (int i = 0; i < n; ++i) {
                    const double s = 1.0 / std::sqrt(w[i]);
                    a.row(r).head(n) = Y.row(i) * s;
                    if (!meas.has_injection[i]) {
                        const auto offset =
                            std::lower_bound(missing_l.begin(), missing_l.end(), i) -
                            missing_l.begin();
                        a(r, n + static_cast<int>(offset)) = -s;
                        z[r] = 0.0;
                    } else {
                        z[r] = meas.injection[i] * s;
                    }
                    ++r;
                }
                detail::LinearSolution sol;
                if (cons.empty()) {
                    sol = detail::solve_rank_checked(a.topRows(r), z.head(r));
                } else {
                    detail::Assembled sys;
                    sys.H = (a.topRows(r).transpose() * a.topRows(r)).eval();
                    sys.b = a.topRows(r).transpose() * z.head(r);
                    sys.G = detail::constraint_rows(cons, n, nx, &sys.d);
                    sol = detail::solve_kkt(sys, &st.multipliers);
                }
                st.potentials = sol.x.head(n);
                st.injections = Y * st.potentials;
                st.status = sol.status;
                st.rank = sol.rank;
                st.deficiency = sol.deficiency;
                st.condition = sol.condition;
                break;
            }
            case ObjectiveKind::J2_1: {
                VectorXd prior;
                if (spec.prior_potentials) {
                    if (spec.prior_potentials->size() != n)
                        throw std::invalid_argument("solve: prior potentials have wrong length");
                    prior = *spec.prior_potentials;
                    st.status = SolverStatus::Exact;
                } else {
                    ObjectiveSpec j1;
                    j1.kind = ObjectiveKind::J1;
                    j1.weights = spec.prior_weights;
                    j1.constraints = spec.constraints;
                    EstimatedState first = solve(j1, meas, Y);
                    prior = first.potentials;
                    st.status = first.status;
                    st.multipliers = first.multipliers;
                }
                // Minimize over L-hat with the potentials pinned; diagonal system.
                const VectorXd yp = Y * prior;
                VectorXd diag(n), rhs(n);
                for (int i = 0; i < n; ++i) {
                    const double anchor = meas.has_injection[i]
                                              ? 1.0 / (meas.sigma_injection[i] *
                                                       meas.sigma_injection[i])
                                              : 0.0;
                    diag[i] = anchor + 1.0 / w[i];
                    rhs[i] = (meas.has_injection[i] ? meas.injection[i] * anchor : 0.0) +
                             yp[i] / w[i];
                }
                detail::Assembled sys;
                sys.H = diag.asDiagonal();
                sys.b = rhs;
                detail::LinearSolution sol = detail::solve_kkt(sys, nullptr);
                st.potentials = prior;
                st.injections = sol.x;
                if (sol.status == SolverStatus::Singular) st.status = SolverStatus::Singular;
                st.rank = sol.rank;
                st.deficiency = sol.deficiency;
                st.condition = sol.condition;
                break;
            }
            case ObjectiveKind::J2_2: {
                // Coupled stationarity: d(J1)/dP-hat = 0 rows, d(J2(2))/dL-hat = 0
                // rows. Non-symmetric square system in [P-hat; L-hat].
                const int nx = 2 * n;
                MatrixXd k = MatrixXd::Zero(nx, nx);
                VectorXd rhs = VectorXd::Zero(nx);
                MatrixXd winv_y(n, n);
                for (int i = 0; i < n; ++i) winv_y.row(i) = Y.row(i) / w[i];
                // P-hat block: (D_P + Y^T W^-1 Y) P - Y^T W^-1 (I - M_L) L = D_P p + Y^T W^-1 M_L l
                k.topLeftCorner(n, n) = Y.transpose() * winv_y;
                for (int i = 0; i < n; ++i)
                    if (meas.has_potential[i]) {
                        const double dp = 1.0 / (meas.sigma_potential[i] * meas.sigma_potential[i]);
                        k(i, i) += dp;
                        rhs[i] += dp * meas.potential[i];
                    }
                for (int i = 0; i < n; ++i) {
                    if (meas.has_injection[i])
                        rhs.head(n) += Y.row(i).transpose() * (meas.injection[i] / w[i]);
                    else
                        k.block(0, n + i, n, 1) -= Y.row(i).transpose() / w[i];
                }
                // L-hat block: -W^-1 Y P + (D_L + W^-1) L = D_L l
                k.bottomLeftCorner(n, n) = -winv_y;
                for (int i = 0; i < n; ++i) {
                    double dl = 0.0;
                    if (meas.has_injection[i]) {
                        dl = 1.0 / (meas.sigma_injection[i] * meas.sigma_injection[i]);
                        rhs[n + i] = dl * meas.injection[i];
                    }
                    k(n + i, n + i) = dl + 1.0 / w[i];
                }
                detail::Assembled sys;
                sys.H = std::move(k);
                sys.b = std::move(rhs);
                if (!cons.empty()) sys.G = detail::constraint_rows(cons, n, nx, &sys.d);
                detail::LinearSolution sol = detail::solve_kkt(sys, &st.multipliers);
                st.potentials = sol.x.head(n);
                st.injections = sol.x.tail(n);
                st.status = sol.status;
                st.rank = sol.rank;
                st.deficiency = sol.deficiency;
                st.condition = sol.condition;
                break;
            }
            case ObjectiveKind::J3: {
                // Least-squares rows over [P-hat; L-hat].
                const int nx = 2 * n;
                const int rows = 3 * n;
                MatrixXd a = MatrixXd::Zero(rows, nx);
                VectorXd z = VectorXd::Zero(rows);
                int r = 0;
                for (int i = 0; i < n; ++i)
                    if (meas.has_potential[i]) {
                        a(r, i) = 1.0 / meas.sigma_potential[i];
                        z[r] = meas.potential[i] / meas.sigma_potential[i];
                        ++r;
                    }
                for (int i = 0; i < n; ++i)
                    if (meas.has_injection[i]) {
                        a(r, n + i) = 1.0 / meas.sigma_injection[i];
                        z[r] = meas.injection[i] / meas.sigma_injection[i];
                        ++r;
                    }
                for (int i = 0; i < n; ++i) {
                    const double s = 1.0 / std::sqrt(w[i]);
                    a.row(r).head(n) = Y.row(i) * s;
                    a(r, n + i) = -s;
                    z[r] = 0.0;
                    ++r;
                }
                detail::LinearSolution sol;
                if (cons.empty()) {
                    sol = detail::solve_rank_checked(a.topRows(r), z.head(r));
                } else {
                    detail::Assembled sys;
                    sys.H = (a.topRows(r).transpose() * a.topRows(r)).eval();
                    sys.b = a.topRows(r).transpose() * z.head(r);
                    sys.G = detail::constraint_rows(cons, n, nx, &sys.d);
                    sol = detail::solve_kkt(sys, &st.multipliers);
                }
                st.potentials = sol.x.head(n);
                st.injections = sol.x.tail(n);
                st.status = sol.status;
                st.rank = sol.rank;
                st.deficiency = sol.deficiency;
                st.condition = sol.condition;
                break;
            }
        }
        return st;
    };

    EstimatedState best;
    bool have = false;
    for (const auto& cons : constraint_sets) {
        EstimatedState st = finish(solve_variant(cons));
        if (!have || (st.status != SolverStatus::Singular &&
                      (best.status == SolverStatus::Singular || st.objective < best.objective))) {
            best = std::move(st);
            have = true;
        }
    }
    return best;
}

// Percentage of the estimation error relative to the realized measurement
// error for one draw; the sweep average is taken by the caller. Sums run over
// the available readings. Active power is P*L in DC and the injection itself
// in the DC approximation (diagnostic only; the objectives do not target it).
inline ErrorReport error_percentage(const NodalState& truth, const EstimatedState& est,
                                    const MeasurementSet& meas, Regime regime) {
    const int n = meas.node_count();
    if (truth.potentials.size() != n || est.potentials.size() != n)
        throw std::invalid_argument("error_percentage: dimension mismatch");
    ErrorReport rep;
    rep.sq_residual_potential = VectorXd::Zero(n);
    rep.sq_residual_injection = VectorXd::Zero(n);
    double num_p = 0, den_p = 0, num_l = 0, den_l = 0, num_a = 0, den_a = 0;
    for (int i = 0; i < n; ++i) {
        if (meas.has_potential[i]) {
            const double e = meas.potential[i] - truth.potentials[i];
            const double r = truth.potentials[i] - est.potentials[i];
            const double tr = meas.potential[i] - est.potentials[i];
            num_p += r * r;
            den_p += e * e;
            rep.sq_residual_potential[i] = tr * tr;
        }
        if (meas.has_injection[i]) {
            const double e = meas.injection[i] - truth.injections[i];
            const double r = truth.injections[i] - est.injections[i];
            const double tr = meas.injection[i] - est.injections[i];
            num_l += r * r;
            den_l += e * e;
            rep.sq_residual_injection[i] = tr * tr;
        }
        const bool both = meas.has_potential[i] && meas.has_injection[i];
        if (both) {
            double a0, am, ah;
            if (regime == Regime::DC) {
                a0 = truth.potentials[i] * truth.injections[i];
                am = meas.potential[i] * meas.injection[i];
                ah = est.potentials[i] * est.injections[i];
            } else {
                a0 = truth.injections[i];
                am = meas.injection[i];
                ah = est.injections[i];
            }
            const double e = am - a0;
            const double r = a0 - ah;
            num_a += r * r;
            den_a += e * e;
        }
    }
    if (den_p <= 0.0 || den_l <= 0.0)
        throw std::invalid_argument("error_percentage: zero-norm measurement error");
    rep.pct_potential = 100.0 * std::sqrt(num_p / den_p);
    rep.pct_injection = 100.0 * std::sqrt(num_l / den_l);
    rep.pct_power = den_a > 0.0 ? 100.0 * std::sqrt(num_a / den_a) : 0.0;
    return rep;
}

}  // namespace gridse
