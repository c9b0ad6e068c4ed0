#pragma once

// Study tables on disk: CSV with header study,TP,FN,FP,TN. Also small
// helpers for writing report files atomically.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "copmeta/error.hpp"
#include "copmeta/margins.hpp"

namespace copmeta {

struct Dataset {
    std::string name;
    std::vector<std::string> labels;  // study identifiers, file order
    std::vector<StudyRecord> studies;
    std::string source;

    std::size_t size() const { return studies.size(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

inline long long parse_count(std::string_view field, const char* column, std::size_t line) {
    long long v = 0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    const auto res = std::from_chars(first, last, v);
    if (field.empty() || res.ec != std::errc() || res.ptr != last) {
        throw ParseError(std::string("column ") + column + ": '" + std::string(field) + "' is not an integer", line);
    }
    return v;
}

}  // namespace detail

/// Parse a study table. Column order is fixed: study,TP,FN,FP,TN (header required).
inline Dataset ingest(std::istream& in, const std::string& source = "<stream>") {
    Dataset ds;
    ds.source = source;
    ds.name = std::filesystem::path(source).stem().string();
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    static constexpr const char* kColumns[] = {"study", "TP", "FN", "FP", "TN"};
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv(line);
        if (!header) {
            if (fields.size() != 5) throw ParseError("header must be study,TP,FN,FP,TN", lineno);
            for (std::size_t k = 0; k < 5; ++k) {
                if (fields[k] != kColumns[k]) throw ParseError("header must be study,TP,FN,FP,TN", lineno);
            }
            header = true;
            continue;
        }
        if (fields.size() != 5) {
            throw ParseError("expected 5 fields, found " + std::to_string(fields.size()), lineno);
        }
        long long c[4];
        for (std::size_t k = 0; k < 4; ++k) c[k] = detail::parse_count(fields[k + 1], kColumns[k + 1], lineno);
        for (std::size_t k = 0; k < 4; ++k) {
            if (c[k] < 0) {
                throw ValidationError("line " + std::to_string(lineno) + ": negative count in column " +
                                      kColumns[k + 1]);
            }
            if (c[k] > std::numeric_limits<int>::max() / 2) {
                throw ValidationError("line " + std::to_string(lineno) + ": count too large in column " +
                                      kColumns[k + 1]);
            }
        }
        const StudyRecord rec{static_cast<int>(c[0]), static_cast<int>(c[0] + c[1]), static_cast<int>(c[3]),
                              static_cast<int>(c[3] + c[2])};
        try {
            validate(rec);
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
        }
        ds.labels.emplace_back(fields[0]);
        ds.studies.push_back(rec);
    }
    if (!header) throw ParseError("missing header study,TP,FN,FP,TN", lineno == 0 ? 1 : lineno);
    if (ds.studies.empty()) throw ValidationError("dataset has no studies");
    return ds;
}

inline Dataset ingest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    return ingest(in, path.string());
}

/// Write a dataset in the ingest format. Missing labels become s1, s2, ...
inline void emit(std::ostream& out, const Dataset& ds) {
    out << "study,TP,FN,FP,TN\n";
    for (std::size_t i = 0; i < ds.studies.size(); ++i) {
        const StudyRecord& s = ds.studies[i];
        const std::string label = i < ds.labels.size() ? ds.labels[i] : "s" + std::to_string(i + 1);
        out << label << ',' << s.y1 << ',' << s.n1 - s.y1 << ',' << s.n2 - s.y2 << ',' << s.y2 << '\n';
    }
}

inline Dataset make_dataset(std::vector<StudyRecord> studies, std::string name = "dataset") {
    Dataset ds;
    ds.name = std::move(name);
    ds.studies = std::move(studies);
    for (std::size_t i = 0; i < ds.studies.size(); ++i) ds.labels.push_back("s" + std::to_string(i + 1));
    return ds;
}

/// Format with 6 significant digits; NaN becomes an empty field.
inline std::string fmt6(double x) {
    if (std::isnan(x)) return "";
    std::ostringstream os;
    os << std::setprecision(6) << x;
    return os.str();
}

/// Full-precision formatting for machine-readable curve files.
inline std::string fmt17(double x) {
    if (std::isnan(x)) return "";
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

/// Write a file via a temporary in the same directory followed by rename.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

}  // namespace copmeta
