// File emission and parsing: crosstalk matrices (CSV with fixed 2-decimal dB
// and JSON), the QBER table and SKR summaries, stability time series, click
// logs, tallies, and heater states. Numeric CSV cells other than the
// crosstalk matrix use %.17g so parsing a report reproduces the in-memory
// doubles exactly.
#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oamqkd/channel.hpp"
#include "oamqkd/detection.hpp"
#include "oamqkd/emitter.hpp"
#include "oamqkd/security.hpp"

namespace oamqkd {

inline std::string format_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string format_fixed2(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

// ---- crosstalk matrix ----

inline std::string crosstalk_to_csv(const CrosstalkMatrix& xt) {
    std::ostringstream out;
    out << "out_mode";
    for (int m : xt.modes) out << ',' << m;
    out << '\n';
    const size_t n = xt.modes.size();
    for (size_t r = 0; r < n; ++r) {
        out << xt.modes[r];
        for (size_t c = 0; c < n; ++c) out << ',' << format_fixed2(xt.db[r * n + c]);
        out << '\n';
    }
    return out.str();
}

inline CrosstalkMatrix crosstalk_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("crosstalk csv: empty");
    const std::vector<std::string> header = split_csv_line(line);
    CrosstalkMatrix xt;
    for (size_t i = 1; i < header.size(); ++i) xt.modes.push_back(std::stoi(header[i]));
    const size_t n = xt.modes.size();
    xt.db.assign(n * n, 0.0);
    for (size_t r = 0; r < n; ++r) {
        if (!std::getline(in, line)) throw std::runtime_error("crosstalk csv: truncated");
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != n + 1) throw std::runtime_error("crosstalk csv: bad row width");
        for (size_t c = 0; c < n; ++c)
            xt.db[r * n + c] = cells[c + 1] == "nan" ? std::numeric_limits<double>::quiet_NaN()
                                                     : std::stod(cells[c + 1]);
    }
    return xt;
}

inline nlohmann::json crosstalk_to_json(const CrosstalkMatrix& xt) {
    nlohmann::json j;
    j["modes"] = xt.modes;
    const size_t n = xt.modes.size();
    nlohmann::json rows = nlohmann::json::array();
    for (size_t r = 0; r < n; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (size_t c = 0; c < n; ++c) {
            const double v = xt.db[r * n + c];
            if (std::isnan(v))
                row.push_back(nullptr);
            else
                row.push_back(v);
        }
        rows.push_back(row);
    }
    j["db"] = rows;
    j["degenerate_inputs"] = xt.degenerate_inputs;
    return j;
}

// ---- heater state ----

inline std::string heaters_to_json(const HeaterState& h) {
    nlohmann::json j = h.phase_trim;
    return j.dump();
}

inline HeaterState heaters_from_json(const std::string& text) {
    HeaterState h;
    for (const auto& v : nlohmann::json::parse(text)) h.phase_trim.push_back(v.get<double>());
    return h;
}

// ---- click log / tally ----

inline std::string clicklog_to_csv(const ClickLog& log) {
    std::ostringstream out;
    out << "detector_id,time_ps\n";
    for (const ClickEvent& ev : log.events) out << ev.detector << ',' << ev.time_ps << '\n';
    return out.str();
}

inline nlohmann::json tally_to_json(const TallyBlock& t) {
    nlohmann::json j;
    j["duration_s"] = t.duration_s;
    j["n"] = {{"z", {t.n_z[0], t.n_z[1]}}, {"x", {t.n_x[0], t.n_x[1]}}};
    j["m"] = {{"z", {t.m_z[0], t.m_z[1]}}, {"x", {t.m_x[0], t.m_x[1]}}};
    j["sent"] = {{"z", {t.sent_z[0], t.sent_z[1]}}, {"x", {t.sent_x[0], t.sent_x[1]}}};
    return j;
}

inline TallyBlock tally_from_json(const nlohmann::json& j) {
    TallyBlock t;
    t.duration_s = j.at("duration_s").get<double>();
    for (int k = 0; k < 2; ++k) {
        t.n_z[static_cast<size_t>(k)] = j.at("n").at("z").at(static_cast<size_t>(k)).get<double>();
        t.n_x[static_cast<size_t>(k)] = j.at("n").at("x").at(static_cast<size_t>(k)).get<double>();
        t.m_z[static_cast<size_t>(k)] = j.at("m").at("z").at(static_cast<size_t>(k)).get<double>();
        t.m_x[static_cast<size_t>(k)] = j.at("m").at("x").at(static_cast<size_t>(k)).get<double>();
        if (j.contains("sent")) {
            t.sent_z[static_cast<size_t>(k)] =
                j.at("sent").at("z").at(static_cast<size_t>(k)).get<double>();
            t.sent_x[static_cast<size_t>(k)] =
                j.at("sent").at("x").at(static_cast<size_t>(k)).get<double>();
        }
    }
    return t;
}

// ---- symbol log CSV (debug view of the compact binary log) ----

inline std::string symbols_to_csv(const SymbolSequence& seq) {
    std::ostringstream out;
    out << "index,state,intensity\n";
    for (size_t i = 0; i < seq.symbols.size(); ++i)
        out << i << ',' << state_name(seq.symbols[i].state) << ','
            << (seq.symbols[i].intensity == 0 ? "mu1" : "mu2") << '\n';
    return out.str();
}

// ---- key-rate report ----

struct QberTableEntry {
    int mode = 0;
    double mu1 = 0.0, mu2 = 0.0;
    double qz_mu1 = 0.0, qz_mu2 = 0.0, qx_mu1 = 0.0, qx_mu2 = 0.0;
};

/// Table layout mirrored from the experiment reports: one column per mode,
/// rows mu1, mu2 and the four QBERs (percent).
inline std::string qber_table_to_csv(const std::vector<QberTableEntry>& entries) {
    std::ostringstream out;
    out << "quantity";
    for (const auto& e : entries) out << ",mode_" << e.mode;
    out << '\n';
    auto row = [&](const char* name, auto getter) {
        out << name;
        for (const auto& e : entries) out << ',' << format_full(getter(e));
        out << '\n';
    };
    row("mu1", [](const QberTableEntry& e) { return e.mu1; });
    row("mu2", [](const QberTableEntry& e) { return e.mu2; });
    row("qber_z_mu1_percent", [](const QberTableEntry& e) { return e.qz_mu1; });
    row("qber_z_mu2_percent", [](const QberTableEntry& e) { return e.qz_mu2; });
    row("qber_x_mu1_percent", [](const QberTableEntry& e) { return e.qx_mu1; });
    row("qber_x_mu2_percent", [](const QberTableEntry& e) { return e.qx_mu2; });
    return out.str();
}

inline std::vector<QberTableEntry> qber_table_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line))
        if (!line.empty()) rows.push_back(split_csv_line(line));
    if (rows.size() != 7) throw std::runtime_error("qber table csv: expected 7 rows");
    std::vector<QberTableEntry> entries(rows[0].size() - 1);
    for (size_t c = 0; c < entries.size(); ++c) {
        entries[c].mode = std::stoi(rows[0][c + 1].substr(5));
        entries[c].mu1 = std::stod(rows[1][c + 1]);
        entries[c].mu2 = std::stod(rows[2][c + 1]);
        entries[c].qz_mu1 = std::stod(rows[3][c + 1]);
        entries[c].qz_mu2 = std::stod(rows[4][c + 1]);
        entries[c].qx_mu1 = std::stod(rows[5][c + 1]);
        entries[c].qx_mu2 = std::stod(rows[6][c + 1]);
    }
    return entries;
}

inline std::string skr_to_csv(const KeyRateReport& report) {
    std::ostringstream out;
    out << "mode,n_z_mu1,n_z_mu2,m_z_mu1,m_z_mu2,n_x_mu1,n_x_mu2,m_x_mu1,m_x_mu2,"
           "s0,s1,phi_z,key_bits,duration_s,skr_bps\n";
    for (const ModeKeyResult& r : report.per_mode) {
        out << r.mode;
        const double vals[] = {r.tally.n_z[0], r.tally.n_z[1], r.tally.m_z[0], r.tally.m_z[1],
                               r.tally.n_x[0], r.tally.n_x[1], r.tally.m_x[0], r.tally.m_x[1],
                               r.bounds.s0,    r.bounds.s1,    r.bounds.phi_z, r.key_bits,
                               r.tally.duration_s, r.skr_bps};
        for (double v : vals) out << ',' << format_full(v);
        out << '\n';
    }
    out << "total";
    for (int i = 0; i < 13; ++i) out << ',';
    out << format_full(report.total_skr()) << '\n';
    return out.str();
}

inline nlohmann::json report_to_json(const KeyRateReport& report) {
    nlohmann::json j;
    nlohmann::json modes = nlohmann::json::array();
    for (const ModeKeyResult& r : report.per_mode) {
        nlohmann::json m;
        m["mode"] = r.mode;
        m["tally"] = tally_to_json(r.tally);
        m["qber_z"] = {r.tally.qber_z(0), r.tally.qber_z(1)};
        m["qber_x"] = {r.tally.qber_x(0), r.tally.qber_x(1)};
        m["bounds"] = {{"s0", r.bounds.s0}, {"s1", r.bounds.s1}, {"phi_z", r.bounds.phi_z}};
        m["key_bits"] = r.key_bits;
        m["skr_bps"] = r.skr_bps;
        modes.push_back(m);
    }
    j["modes"] = modes;
    j["total_skr_bps"] = report.total_skr();
    return j;
}

struct StabilityWindow {
    double start_s = 0.0;
    double qber_z = 0.0;
    double qber_x = 0.0;
};

inline std::string stability_to_csv(const std::vector<StabilityWindow>& windows) {
    std::ostringstream out;
    out << "window,start_s,qber_z,qber_x\n";
    for (size_t i = 0; i < windows.size(); ++i)
        out << i << ',' << format_full(windows[i].start_s) << ',' << format_full(windows[i].qber_z)
            << ',' << format_full(windows[i].qber_x) << '\n';
    return out.str();
}

inline std::vector<StabilityWindow> stability_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);  // header
    std::vector<StabilityWindow> windows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 4) throw std::runtime_error("stability csv: bad row");
        windows.push_back({std::stod(cells[1]), std::stod(cells[2]), std::stod(cells[3])});
    }
    return windows;
}

}  // namespace oamqkd
