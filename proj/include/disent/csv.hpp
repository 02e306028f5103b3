#pragma once

#include <cctype>
#include <cerrno>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "disent/analysis.hpp"
#include "disent/errors.hpp"
#include "disent/matrix.hpp"

namespace disent {

// All files are UTF-8, comma separated, '.' decimal point, one header row.
// Doubles are printed with 17 significant digits so a write-read-write cycle
// is byte identical.

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, const std::string& where) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            if (!cur.empty()) throw data_error(where + ": stray quote inside unquoted field");
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw data_error(where + ": unterminated quoted field");
    fields.push_back(std::move(cur));
    return fields;
}

// Rows of fields; `where` prefixes error messages with the file name and
// 1-based line numbers (the header is line 1).
inline std::vector<std::vector<std::string>> read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open '" + path + "'");
    std::vector<std::vector<std::string>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
        rows.push_back(split_csv_line(line, path + " line " + std::to_string(line_no)));
    }
    if (rows.empty()) throw data_error(path + ": empty file");
    return rows;
}

inline double parse_double(const std::string& s, const std::string& where) {
    if (s.empty()) throw data_error(where + ": empty numeric field");
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    // ERANGE with a finite result is denormal underflow; the returned value
    // is the closest representable and keeps round trips exact.
    if (end != s.c_str() + s.size() || (errno == ERANGE && !std::isfinite(v))) {
        throw data_error(where + ": '" + s + "' is not a number");
    }
    return v;
}

inline long long parse_int(const std::string& s, const std::string& where) {
    if (s.empty()) throw data_error(where + ": empty integer field");
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size() || errno == ERANGE) {
        throw data_error(where + ": '" + s + "' is not an integer");
    }
    return v;
}

inline std::uint64_t parse_uint(const std::string& s, const std::string& where) {
    long long v = parse_int(s, where);
    if (v < 0) throw data_error(where + ": '" + s + "' must be nonnegative");
    return static_cast<std::uint64_t>(v);
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write '" + path + "'");
    out << content;
    if (!out) throw data_error("write failed for '" + path + "'");
}

} // namespace detail

// ---- score tables -----------------------------------------------------------

inline const char* scores_csv_header() {
    return "encoder_id,dataset_id,method_label,hyperparam_label,seed,metric_name,n_samples,value";
}

inline std::string scores_csv_text(const ScoreTable& t) {
    std::vector<std::string> lines;
    for (const auto& r : t.rows()) {
        std::string line = csv_escape(r.encoder_id) + ',' + csv_escape(r.dataset_id) + ',' +
                           csv_escape(r.method_label) + ',' + csv_escape(r.hyperparam_label) +
                           ',' + std::to_string(r.seed) + ',' + csv_escape(r.metric_name) + ',' +
                           std::to_string(r.n_samples) + ',' + format_double(r.value);
        lines.push_back(std::move(line));
    }
    std::sort(lines.begin(), lines.end());
    std::string out = scores_csv_header();
    out += '\n';
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

inline void write_scores_csv(const std::string& path, const ScoreTable& t) {
    detail::write_file(path, scores_csv_text(t));
}

inline ScoreTable read_scores_csv(const std::string& path) {
    auto rows = detail::read_csv_file(path);
    if (rows[0] != detail::split_csv_line(scores_csv_header(), path)) {
        throw data_error(path + " line 1: expected header '" + scores_csv_header() + "'");
    }
    ScoreTable t;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const std::string where = path + " line " + std::to_string(i + 1);
        if (rows[i].size() != 8) {
            throw data_error(where + ": expected 8 fields, got " + std::to_string(rows[i].size()));
        }
        ScoreRow r;
        r.encoder_id = rows[i][0];
        r.dataset_id = rows[i][1];
        r.method_label = rows[i][2];
        r.hyperparam_label = rows[i][3];
        r.seed = detail::parse_uint(rows[i][4], where);
        r.metric_name = rows[i][5];
        long long n = detail::parse_int(rows[i][6], where);
        if (n < 0) throw data_error(where + ": negative n_samples");
        r.n_samples = static_cast<int>(n);
        double v = detail::parse_double(rows[i][7], where);
        if (!std::isfinite(v)) throw data_error(where + ": non-finite value");
        r.value = v;
        t.add(std::move(r));
    }
    return t;
}

// ---- named matrices ----------------------------------------------------------

// A labeled grid; missing cells are written as empty fields and come back as
// NaN with the missing flag set.
struct NamedMatrix {
    std::vector<std::string> row_names, col_names;
    Matrix values;
    std::vector<std::vector<bool>> missing;

    bool is_missing(int r, int c) const {
        return !missing.empty() && missing[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
};

inline NamedMatrix named_matrix(const Matrix& m, std::vector<std::string> row_names = {},
                                std::vector<std::string> col_names = {}) {
    NamedMatrix out;
    out.values = m;
    out.row_names = std::move(row_names);
    out.col_names = std::move(col_names);
    for (int r = static_cast<int>(out.row_names.size()); r < m.rows(); ++r) {
        out.row_names.push_back("row_" + std::to_string(r));
    }
    for (int c = static_cast<int>(out.col_names.size()); c < m.cols(); ++c) {
        out.col_names.push_back("col_" + std::to_string(c));
    }
    out.missing.assign(m.rows(), std::vector<bool>(m.cols(), false));
    return out;
}

inline std::string named_matrix_csv_text(const NamedMatrix& m) {
    if (static_cast<int>(m.row_names.size()) != m.values.rows() ||
        static_cast<int>(m.col_names.size()) != m.values.cols()) {
        throw argument_error("named_matrix_csv_text: name counts do not match the matrix shape");
    }
    std::string out = "row";
    for (const auto& c : m.col_names) {
        out += ',';
        out += csv_escape(c);
    }
    out += '\n';
    for (int r = 0; r < m.values.rows(); ++r) {
        out += csv_escape(m.row_names[r]);
        for (int c = 0; c < m.values.cols(); ++c) {
            out += ',';
            if (!m.is_missing(r, c)) out += format_double(m.values(r, c));
        }
        out += '\n';
    }
    return out;
}

inline void write_named_matrix_csv(const std::string& path, const NamedMatrix& m) {
    detail::write_file(path, named_matrix_csv_text(m));
}

inline NamedMatrix read_named_matrix_csv(const std::string& path) {
    auto rows = detail::read_csv_file(path);
    if (rows[0].empty() || rows[0][0] != "row") {
        throw data_error(path + " line 1: first header field must be 'row'");
    }
    NamedMatrix m;
    m.col_names.assign(rows[0].begin() + 1, rows[0].end());
    const int d = static_cast<int>(m.col_names.size());
    m.values = Matrix(static_cast<int>(rows.size()) - 1, d);
    m.missing.assign(rows.size() - 1, std::vector<bool>(d, false));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const std::string where = path + " line " + std::to_string(i + 1);
        if (static_cast<int>(rows[i].size()) != d + 1) {
            throw data_error(where + ": expected " + std::to_string(d + 1) + " fields");
        }
        m.row_names.push_back(rows[i][0]);
        for (int c = 0; c < d; ++c) {
            const std::string& f = rows[i][c + 1];
            if (f.empty()) {
                m.values(static_cast<int>(i) - 1, c) = std::nan("");
                m.missing[i - 1][c] = true;
            } else {
                m.values(static_cast<int>(i) - 1, c) = detail::parse_double(f, where);
            }
        }
    }
    return m;
}

// ---- external representation ingest -------------------------------------------

struct ExternalData {
    FactorBatch factors;
    CodeBatch codes;
    std::vector<int> cardinalities;    // max value + 1 per factor column
    std::vector<std::string> warnings; // unobserved intermediate factor values
};

namespace detail {

inline void check_indexed_header(const std::vector<std::string>& header, const char* stem,
                                 const std::string& path) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string want = std::string(stem) + "_" + std::to_string(i);
        if (header[i] != want) {
            throw data_error(path + " line 1: expected column '" + want + "', got '" + header[i] +
                             "'");
        }
    }
}

} // namespace detail

// Loads a (factors, codes) CSV pair produced outside this tool. Columns must
// be named factor_0.. and code_0.. in order; factor cardinalities are
// inferred as max+1 and unobserved intermediate values are reported as
// warnings, not errors.
inline ExternalData ingest_external(const std::string& factors_path,
                                    const std::string& codes_path) {
    auto fr = detail::read_csv_file(factors_path);
    auto cr = detail::read_csv_file(codes_path);
    detail::check_indexed_header(fr[0], "factor", factors_path);
    detail::check_indexed_header(cr[0], "code", codes_path);
    const int k = static_cast<int>(fr[0].size());
    const int d = static_cast<int>(cr[0].size());
    if (k < 1) throw data_error(factors_path + ": no factor columns");
    if (d < 1) throw data_error(codes_path + ": no code columns");
    if (fr.size() != cr.size()) {
        throw data_error("row count mismatch: " + factors_path + " has " +
                         std::to_string(fr.size() - 1) + " data rows, " + codes_path + " has " +
                         std::to_string(cr.size() - 1));
    }
    const int n = static_cast<int>(fr.size()) - 1;
    if (n < 1) throw data_error(factors_path + ": no data rows");

    ExternalData out;
    out.factors = FactorBatch(n, k);
    out.codes = CodeBatch(n, d);
    for (int i = 0; i < n; ++i) {
        const std::string fwhere = factors_path + " line " + std::to_string(i + 2);
        const std::string cwhere = codes_path + " line " + std::to_string(i + 2);
        if (static_cast<int>(fr[i + 1].size()) != k) {
            throw data_error(fwhere + ": expected " + std::to_string(k) + " fields");
        }
        if (static_cast<int>(cr[i + 1].size()) != d) {
            throw data_error(cwhere + ": expected " + std::to_string(d) + " fields");
        }
        for (int c = 0; c < k; ++c) {
            long long v = detail::parse_int(fr[i + 1][c], fwhere);
            if (v < 0) throw data_error(fwhere + ": factor values must be nonnegative");
            if (v > 1000000) throw data_error(fwhere + ": factor value too large");
            out.factors(i, c) = static_cast<int>(v);
        }
        for (int c = 0; c < d; ++c) {
            double v = detail::parse_double(cr[i + 1][c], cwhere);
            if (!std::isfinite(v)) throw data_error(cwhere + ": non-finite code value");
            out.codes(i, c) = v;
        }
    }

    for (int c = 0; c < k; ++c) {
        std::set<int> seen;
        int top = 0;
        for (int i = 0; i < n; ++i) {
            seen.insert(out.factors(i, c));
            top = std::max(top, out.factors(i, c));
        }
        out.cardinalities.push_back(top + 1);
        for (int v = 0; v <= top; ++v) {
            if (!seen.count(v)) {
                out.warnings.push_back("factor_" + std::to_string(c) + ": value " +
                                       std::to_string(v) +
                                       " never observed; cardinality still inferred as " +
                                       std::to_string(top + 1));
            }
        }
    }
    return out;
}

} // namespace disent
