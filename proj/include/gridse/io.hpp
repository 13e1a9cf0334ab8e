#pragma once

#include <gridse/estimator.hpp>
#include <gridse/netmodel.hpp>
#include <gridse/scenario.hpp>

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridse {

using nlohmann::json;

// All file formats use 1-based node indices; everything in memory is 0-based.

// --- network files ----------------------------------------------------------
// { "nodes": N, "regime": "dc"|"dc_approx",
//   "branches": [{"i":1,"k":2,"R":100.0,"X":0.0,"switchable":true,"s":1}, ...],
//   "earth": [0.0, ...] }

inline json network_to_json(const NetworkTopology& topo) {
    json j;
    j["nodes"] = topo.node_count();
    j["regime"] = to_string(topo.regime());
    json branches = json::array();
    for (const Branch& b : topo.branches()) {
        branches.push_back({{"i", b.i + 1},
                            {"k", b.k + 1},
                            {"R", b.resistance},
                            {"X", b.reactance},
                            {"switchable", b.switchable},
                            {"s", b.closed ? 1 : 0}});
    }
    j["branches"] = std::move(branches);
    std::vector<double> earth(topo.earth_admittance().begin(), topo.earth_admittance().end());
    j["earth"] = std::move(earth);
    return j;
}

inline NetworkTopology network_from_json(const json& j) {
    const int n = j.at("nodes").get<int>();
    const Regime regime = regime_from_string(j.at("regime").get<std::string>());
    std::vector<Branch> branches;
    for (const json& jb : j.at("branches")) {
        Branch b;
        b.i = jb.at("i").get<int>() - 1;
        b.k = jb.at("k").get<int>() - 1;
        b.resistance = jb.at("R").get<double>();
        b.reactance = jb.at("X").get<double>();
        b.switchable = jb.at("switchable").get<bool>();
        b.closed = jb.at("s").get<int>() != 0;
        branches.push_back(b);
    }
    VectorXd earth;
    if (j.contains("earth")) {
        const auto& je = j.at("earth");
        earth.resize(static_cast<Eigen::Index>(je.size()));
        for (std::size_t i = 0; i < je.size(); ++i) earth[static_cast<Eigen::Index>(i)] = je[i].get<double>();
    }
    return NetworkTopology(n, std::move(branches), regime, std::move(earth));
}

inline std::string serialize_network(const NetworkTopology& topo) {
    return network_to_json(topo).dump(2) + "\n";
}

inline NetworkTopology parse_network(const std::string& text) {
    return network_from_json(json::parse(text));
}

// --- measurement streams -----------------------------------------------------
// One JSON record per line per timestep:
// {"t":0,"P":[v|null,...],"L":[...],"sigmaP":[...],"sigmaL":[...]}

inline json measurement_to_json(const MeasurementSet& ms) {
    json j;
    j["t"] = ms.t;
    json p = json::array(), l = json::array(), sp = json::array(), sl = json::array();
    for (int i = 0; i < ms.node_count(); ++i) {
        if (ms.has_potential[i])
            p.push_back(ms.potential[i]);
        else
            p.push_back(nullptr);
        if (ms.has_injection[i])
            l.push_back(ms.injection[i]);
        else
            l.push_back(nullptr);
        sp.push_back(ms.sigma_potential[i]);
        sl.push_back(ms.sigma_injection[i]);
    }
    j["P"] = std::move(p);
    j["L"] = std::move(l);
    j["sigmaP"] = std::move(sp);
    j["sigmaL"] = std::move(sl);
    if (!ms.branch_readings.empty()) {
        json br = json::array();
        for (const BranchReading& r : ms.branch_readings)
            br.push_back({{"i", r.i + 1},
                          {"k", r.k + 1},
                          {"value", r.value},
                          {"sigma", r.sigma},
                          {"power", r.is_power}});
        j["branch"] = std::move(br);
    }
    return j;
}

inline MeasurementSet measurement_from_json(const json& j) {
    MeasurementSet ms;
    ms.t = j.at("t").get<int>();
    const auto& p = j.at("P");
    const auto& l = j.at("L");
    const auto& sp = j.at("sigmaP");
    const auto& sl = j.at("sigmaL");
    const int n = static_cast<int>(p.size());
    if (static_cast<int>(l.size()) != n || static_cast<int>(sp.size()) != n ||
        static_cast<int>(sl.size()) != n)
        throw std::invalid_argument("measurement record: array length mismatch");
    ms.potential.resize(n);
    ms.injection.resize(n);
    ms.sigma_potential.resize(n);
    ms.sigma_injection.resize(n);
    ms.has_potential.assign(n, 0);
    ms.has_injection.assign(n, 0);
    for (int i = 0; i < n; ++i) {
        if (!p[i].is_null()) {
            ms.has_potential[i] = 1;
            ms.potential[i] = p[i].get<double>();
        } else {
            ms.potential[i] = 0.0;
        }
        if (!l[i].is_null()) {
            ms.has_injection[i] = 1;
            ms.injection[i] = l[i].get<double>();
        } else {
            ms.injection[i] = 0.0;
        }
        ms.sigma_potential[i] = sp[i].get<double>();
        ms.sigma_injection[i] = sl[i].get<double>();
    }
    if (j.contains("branch"))
        for (const json& jb : j.at("branch")) {
            BranchReading r;
            r.i = jb.at("i").get<int>() - 1;
            r.k = jb.at("k").get<int>() - 1;
            r.value = jb.at("value").get<double>();
            r.sigma = jb.at("sigma").get<double>();
            r.is_power = jb.at("power").get<bool>();
            ms.branch_readings.push_back(r);
        }
    return ms;
}

inline std::string serialize_measurements(const std::vector<MeasurementSet>& stream) {
    std::string out;
    for (const MeasurementSet& ms : stream) out += measurement_to_json(ms).dump() + "\n";
    return out;
}

inline std::vector<MeasurementSet> parse_measurements(const std::string& text) {
    std::vector<MeasurementSet> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(measurement_from_json(json::parse(line)));
    }
    return out;
}

// --- estimates ---------------------------------------------------------------

inline json estimate_to_json(const EstimatedState& st) {
    json j;
    j["P"] = std::vector<double>(st.potentials.begin(), st.potentials.end());
    j["L"] = std::vector<double>(st.injections.begin(), st.injections.end());
    j["objective"] = st.objective;
    j["status"] = to_string(st.status);
    j["rank"] = st.rank;
    j["deficiency"] = st.deficiency;
    j["condition"] = st.condition;
    if (st.multipliers.size() > 0)
        j["multipliers"] = std::vector<double>(st.multipliers.begin(), st.multipliers.end());
    return j;
}

// --- files --------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path);
}

inline NetworkTopology load_network(const std::string& path) {
    return parse_network(read_file(path));
}

inline std::vector<MeasurementSet> load_measurements(const std::string& path) {
    return parse_measurements(read_file(path));
}

// --- CSV -----------------------------------------------------------------------

// Full-precision formatting so reruns are byte-identical and parseable losslessly.
inline std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : columns_(std::move(header)) {}

    void add_row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_.size())
            throw std::invalid_argument("csv row width mismatch");
        rows_.push_back(cells);
    }

    std::size_t row_count() const { return rows_.size(); }

    std::string str() const {
        std::string out = join(columns_);
        for (const auto& r : rows_) out += join(r);
        return out;
    }

    void write(const std::string& path) const {
        if (rows_.empty()) throw std::runtime_error("refusing to write empty table to " + path);
        write_file(path, str());
    }

private:
    static std::string join(const std::vector<std::string>& cells) {
        std::string line;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) line += ',';
            line += cells[i];
        }
        line += '\n';
        return line;
    }

    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

// True-state audit export: one row per (t, node).
inline std::string states_to_csv(const std::vector<ReplayStep>& steps) {
    CsvWriter csv({"t", "node", "P0", "L0"});
    for (const ReplayStep& s : steps)
        for (int i = 0; i < s.true_state.potentials.size(); ++i)
            csv.add_row({std::to_string(s.t), std::to_string(i + 1),
                         csv_double(s.true_state.potentials[i]),
                         csv_double(s.true_state.injections[i])});
    return csv.str();
}

}  // namespace gridse
