#pragma once

#include <json.hpp>

#include <cstdint>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ofbmlab/corr.hpp"
#include "ofbmlab/hermite.hpp"
#include "ofbmlab/stats.hpp"

namespace ofbmlab {

using json = nlohmann::json;

// Row-major matrix <-> flat JSON array.
inline json matrix_to_json(const Matrix& m) {
    json arr = json::array();
    for (long i = 0; i < m.rows(); ++i)
        for (long j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
    return arr;
}

inline Matrix matrix_from_json(const json& arr, long rows, long cols) {
    if (!arr.is_array() || static_cast<long>(arr.size()) != rows * cols)
        throw std::invalid_argument("matrix_from_json: wrong element count");
    Matrix m(rows, cols);
    long k = 0;
    for (long i = 0; i < rows; ++i)
        for (long j = 0; j < cols; ++j) m(i, j) = arr[static_cast<std::size_t>(k++)].get<double>();
    return m;
}

// Coefficient table document; slots are 1-based on the wire.
inline json table_to_json(const HermiteCoefficientTable& t) {
    json doc;
    doc["dim"] = t.dim();
    doc["max_order"] = t.max_order();
    json entries = json::array();
    for (const auto& [l, v] : t.entries()) {
        for (int k = 0; k < t.dim(); ++k) {
            if (v(k) == 0.0) continue;
            json e;
            e["L"] = l;
            e["slot"] = k + 1;
            e["value"] = v(k);
            entries.push_back(std::move(e));
        }
    }
    doc["entries"] = std::move(entries);
    return doc;
}

inline HermiteCoefficientTable table_from_json(const json& doc) {
    if (!doc.contains("dim") || !doc.contains("max_order") || !doc.contains("entries"))
        throw std::invalid_argument("table_from_json: need dim, max_order, entries");
    HermiteCoefficientTable t(doc["dim"].get<int>(), doc["max_order"].get<int>());
    for (const auto& e : doc["entries"]) {
        const MultiIndex l = e["L"].get<std::vector<int>>();
        const int slot = e["slot"].get<int>();
        if (slot < 1 || slot > t.dim())
            throw std::invalid_argument("table_from_json: slot must be in 1..dim");
        t.set(l, slot - 1, e["value"].get<double>());
    }
    return t;
}

inline json model_to_json(const CorrelationModel& m) {
    json doc;
    doc["dim"] = m.dim();
    doc["family"] = family_name(m.family());
    doc["D"] = matrix_to_json(m.target_d());
    doc["Gamma"] = matrix_to_json(m.target_gamma());
    if (m.family() == CorrFamily::table) {
        json lags = json::array();
        // lags beyond r(0); the table family stores a finite list.
        for (long n = 1;; ++n) {
            const Matrix r = m.lag(n);
            if (r.isZero(0.0)) break;
            lags.push_back(matrix_to_json(r));
        }
        doc["lags"] = std::move(lags);
    }
    return doc;
}

inline CorrelationModel model_from_json(const json& doc) {
    const int d = doc.at("dim").get<int>();
    const Matrix dd = matrix_from_json(doc.at("D"), d, d);
    const Matrix gamma = matrix_from_json(doc.at("Gamma"), d, d);
    const std::string family = doc.at("family").get<std::string>();
    if (family == "ofgn") return ofgn_model(dd, gamma);
    if (family == "white") return white_model(dd, gamma);
    if (family == "table") {
        std::vector<Matrix> lags;
        if (doc.contains("lags"))
            for (const auto& l : doc["lags"]) lags.push_back(matrix_from_json(l, d, d));
        return table_model(dd, gamma, std::move(lags));
    }
    throw std::invalid_argument("model_from_json: unknown family '" + family + "'");
}

inline json report_to_json(const VerificationReport& r) {
    json doc;
    doc["test"] = r.test;
    doc["statistic"] = r.statistic;
    doc["threshold"] = r.threshold;
    doc["pass"] = r.pass;
    doc["standard_error"] = r.standard_error;
    doc["replicates"] = r.replicates;
    doc["config_hash"] = r.config_hash;
    if (!r.note.empty()) doc["note"] = r.note;
    return doc;
}

inline json condition_report_to_json(const ConditionHReport& r) {
    json doc;
    doc["m"] = r.m;
    doc["N_grid"] = r.n_grid;
    doc["sum_ratio"] = r.sum_ratio;
    doc["tail_norms"] = r.tail_norms;
    doc["asymptotic_rel_err"] = r.asymptotic_rel_err;
    doc["passes_sum_bound"] = r.passes_sum_bound;
    doc["passes_decay"] = r.passes_decay;
    doc["passes_exact_asymptotic"] = r.passes_exact_asymptotic;
    doc["slack_factor"] = r.slack_factor;
    doc["note"] = r.note;
    return doc;
}

// FNV-1a over the canonical dump (nlohmann sorts object keys), as a short
// fingerprint in report/CSV sidecars.
inline std::string config_hash(const json& doc) {
    const std::string s = doc.dump();
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

// Plain-text rendering for the CLI.
inline void print_report_table(std::ostream& os, const std::vector<VerificationReport>& reports) {
    os << std::left << std::setw(44) << "test" << std::setw(14) << "statistic" << std::setw(14)
       << "threshold" << std::setw(8) << "pass" << "\n";
    for (const auto& r : reports) {
        os << std::left << std::setw(44) << r.test << std::setw(14) << r.statistic << std::setw(14)
           << r.threshold << std::setw(8) << (r.pass ? "yes" : "NO");
        if (!r.note.empty()) os << " " << r.note;
        os << "\n";
    }
}

}  // namespace ofbmlab
