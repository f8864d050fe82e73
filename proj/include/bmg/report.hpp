// Experiment reports: parameter echo, tables of exact values, certificates,
// and machine-checkable boolean findings.  The three renderings (markdown,
// CSV, JSON) carry identical numeric content; rationals print as "a/b"
// everywhere and floats never appear.
#pragma once

#include "bmg/equilibrium.hpp"
#include "bmg/rational.hpp"

#include <json.hpp>

#include <string>
#include <variant>
#include <vector>

namespace bmg {

using Cell = std::variant<Rat, std::string, bool>;

inline std::string cell_text(const Cell& c) {
    if (const auto* r = std::get_if<Rat>(&c)) return rat_str(*r);
    if (const auto* b = std::get_if<bool>(&c)) return *b ? "true" : "false";
    return std::get<std::string>(c);
}

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

struct Report {
    std::string scenario;
    std::vector<std::pair<std::string, std::string>> params;
    std::vector<Table> tables;
    std::vector<EquilibriumCertificate> certificates;
    std::vector<std::pair<std::string, bool>> findings;
    std::vector<std::string> notes;

    const Table& table(const std::string& name) const {
        for (const auto& t : tables)
            if (t.name == name) return t;
        throw DomainError("report has no table '" + name + "'");
    }
    bool finding(const std::string& name) const {
        for (const auto& [k, v] : findings)
            if (k == name) return v;
        throw DomainError("report has no finding '" + name + "'");
    }
};

inline nlohmann::json certificate_to_json(const EquilibriumCertificate& cert) {
    nlohmann::json players = nlohmann::json::array();
    for (const auto& p : cert.players)
        players.push_back({{"gap", rat_str(p.gap)},
                           {"argmax", p.argmax_id},
                           {"candidates", p.provenance}});
    return {{"profile", cert.profile_ids}, {"epsilon", rat_str(cert.epsilon)},
            {"engine", cert.engine},       {"isEpsilonNE", cert.is_epsilon_ne},
            {"strict", cert.strict},       {"players", players}};
}

inline nlohmann::json report_to_json(const Report& r) {
    nlohmann::json j;
    j["scenario"] = r.scenario;
    j["params"] = nlohmann::json::object();
    for (const auto& [k, v] : r.params) j["params"][k] = v;
    j["tables"] = nlohmann::json::array();
    for (const auto& t : r.tables) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : t.rows) {
            nlohmann::json cells = nlohmann::json::array();
            for (const auto& c : row) cells.push_back(cell_text(c));
            rows.push_back(std::move(cells));
        }
        j["tables"].push_back({{"name", t.name}, {"columns", t.columns}, {"rows", rows}});
    }
    j["certificates"] = nlohmann::json::array();
    for (const auto& c : r.certificates) j["certificates"].push_back(certificate_to_json(c));
    j["findings"] = nlohmann::json::object();
    for (const auto& [k, v] : r.findings) j["findings"][k] = v;
    j["notes"] = r.notes;
    return j;
}

inline std::string render_json(const Report& r) { return report_to_json(r).dump(2) + "\n"; }

namespace detail {

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

}  // namespace detail

inline std::string render_csv(const Report& r) {
    std::string out;
    out += "# scenario," + detail::csv_escape(r.scenario) + "\n";
    for (const auto& [k, v] : r.params)
        out += "# param," + detail::csv_escape(k) + "," + detail::csv_escape(v) + "\n";
    for (const auto& t : r.tables) {
        out += "# table," + detail::csv_escape(t.name) + "\n";
        for (std::size_t i = 0; i < t.columns.size(); ++i)
            out += (i ? "," : "") + detail::csv_escape(t.columns[i]);
        out += "\n";
        for (const auto& row : t.rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                out += (i ? "," : "") + detail::csv_escape(cell_text(row[i]));
            out += "\n";
        }
    }
    for (const auto& c : r.certificates) {
        out += "# table,certificate\n";
        out += "profile,epsilon,engine,isEpsilonNE,strict\n";
        std::string ids;
        for (const auto& id : c.profile_ids) ids += (ids.empty() ? "" : " ") + id;
        out += detail::csv_escape(ids) + "," + rat_str(c.epsilon) + "," + c.engine + "," +
               (c.is_epsilon_ne ? "true" : "false") + "," + (c.strict ? "true" : "false") + "\n";
        out += "player,gap,argmax,candidates\n";
        for (std::size_t i = 0; i < c.players.size(); ++i)
            out += std::to_string(i + 1) + "," + rat_str(c.players[i].gap) + "," +
                   detail::csv_escape(c.players[i].argmax_id) + "," +
                   detail::csv_escape(c.players[i].provenance) + "\n";
    }
    for (const auto& [k, v] : r.findings)
        out += "# finding," + detail::csv_escape(k) + "," + (v ? "true" : "false") + "\n";
    return out;
}

inline std::string render_markdown(const Report& r) {
    std::string out = "# " + r.scenario + "\n\n";
    if (!r.params.empty()) {
        out += "Parameters:";
        for (const auto& [k, v] : r.params) out += " " + k + "=" + v;
        out += "\n\n";
    }
    for (const auto& t : r.tables) {
        out += "## " + t.name + "\n\n|";
        for (const auto& c : t.columns) out += " " + c + " |";
        out += "\n|";
        for (std::size_t i = 0; i < t.columns.size(); ++i) out += " --- |";
        out += "\n";
        for (const auto& row : t.rows) {
            out += "|";
            for (const auto& c : row) out += " " + cell_text(c) + " |";
            out += "\n";
        }
        out += "\n";
    }
    for (const auto& c : r.certificates) {
        out += "## certificate: ";
        for (std::size_t i = 0; i < c.profile_ids.size(); ++i)
            out += (i ? ", " : "") + c.profile_ids[i];
        out += "\n\n";
        out += "- epsilon: " + rat_str(c.epsilon) + "\n";
        out += "- engine: " + c.engine + "\n";
        out += std::string("- verdict: ") + (c.is_epsilon_ne ? "epsilon-NE" : "not an epsilon-NE") +
               (c.strict ? " (strict)" : "") + "\n";
        for (std::size_t i = 0; i < c.players.size(); ++i)
            out += "- player " + std::to_string(i + 1) + ": gap " + rat_str(c.players[i].gap) +
                   ", best deviation " + c.players[i].argmax_id + " (over " +
                   c.players[i].provenance + ")\n";
        out += "\n";
    }
    if (!r.findings.empty()) {
        out += "## findings\n\n";
        for (const auto& [k, v] : r.findings)
            out += "- " + k + ": " + (v ? "true" : "false") + "\n";
        out += "\n";
    }
    for (const auto& n : r.notes) out += "> " + n + "\n";
    return out;
}

}  // namespace bmg
