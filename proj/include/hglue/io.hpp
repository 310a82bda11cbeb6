#pragma once

// Columnar trajectory files, matrices and run manifests.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hglue/core/error.hpp"
#include "hglue/core/state.hpp"

namespace hglue {

inline constexpr const char* kVersion = "0.3.0";

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed data row; line() is 1-based.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream o;
    o << std::hex << std::setw(16) << std::setfill('0') << v;
    return o.str();
}

/// Hash over canonical config text, seed and version. Timestamps are excluded.
inline std::string manifest_hash(const std::string& canonical_config, std::uint64_t seed) {
    return hex64(fnv1a(canonical_config + "seed=" + std::to_string(seed) + "\nversion=" + kVersion + "\n"));
}

inline std::string format_real(double v) {
    std::ostringstream o;
    o << std::setprecision(17) << v;
    return o.str();
}

struct TrajectoryRow {
    std::size_t step = 0;
    std::size_t replica = 0;
    double time = 0.0;
    Vector coords;
    Vector velocities;
};

struct TrajectoryTable {
    std::string hash;
    std::size_t dim = 0;
    bool has_velocities = false;
    std::vector<TrajectoryRow> rows;
};

inline void write_trajectory(std::ostream& out, const TrajectoryTable& t) {
    out << "# manifest-hash " << t.hash << "\n";
    out << "step,replica,time";
    for (std::size_t i = 0; i < t.dim; ++i) out << ",coord_" << i;
    if (t.has_velocities)
        for (std::size_t i = 0; i < t.dim; ++i) out << ",vel_" << i;
    out << "\n";
    for (const auto& r : t.rows) {
        out << r.step << ',' << r.replica << ',' << format_real(r.time);
        for (double v : r.coords) out << ',' << format_real(v);
        if (t.has_velocities)
            for (double v : r.velocities) out << ',' << format_real(v);
        out << "\n";
    }
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_real(const std::string& s, std::size_t line) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ParseError(line, "not a number: '" + s + "'");
    }
    if (used != s.size()) throw ParseError(line, "not a number: '" + s + "'");
    return v;
}

inline std::size_t parse_index(const std::string& s, std::size_t line) {
    std::size_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw ParseError(line, "not an index: '" + s + "'");
    return v;
}

} // namespace detail

inline TrajectoryTable read_trajectory(std::istream& in) {
    TrajectoryTable t;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string tag = "# manifest-hash ";
            if (line.rfind(tag, 0) == 0) t.hash = line.substr(tag.size());
            continue;
        }
        const auto cells = detail::split_csv(line);
        if (!header) {
            if (cells.size() < 4 || cells[0] != "step" || cells[1] != "replica" || cells[2] != "time")
                throw ParseError(lineno, "expected header step,replica,time,coord_0,...");
            for (std::size_t i = 3; i < cells.size(); ++i) {
                if (cells[i].rfind("coord_", 0) == 0) ++t.dim;
                else if (cells[i].rfind("vel_", 0) == 0) t.has_velocities = true;
                else throw ParseError(lineno, "unknown column '" + cells[i] + "'");
            }
            width = cells.size();
            if (t.has_velocities && width != 3 + 2 * t.dim) throw ParseError(lineno, "velocity columns must match coords");
            header = true;
            continue;
        }
        if (cells.size() != width)
            throw ParseError(lineno, "expected " + std::to_string(width) + " fields, got " + std::to_string(cells.size()));
        TrajectoryRow r;
        r.step = detail::parse_index(cells[0], lineno);
        r.replica = detail::parse_index(cells[1], lineno);
        r.time = detail::parse_real(cells[2], lineno);
        for (std::size_t i = 0; i < t.dim; ++i) r.coords.push_back(detail::parse_real(cells[3 + i], lineno));
        if (t.has_velocities)
            for (std::size_t i = 0; i < t.dim; ++i)
                r.velocities.push_back(detail::parse_real(cells[3 + t.dim + i], lineno));
        t.rows.push_back(std::move(r));
    }
    if (!header) throw ParseError(lineno, "missing header");
    return t;
}

/// "rows cols" then row-major values, one matrix row per line.
inline void write_matrix(std::ostream& out, const Eigen::MatrixXd& m, const std::string& hash = {}) {
    if (!hash.empty()) out << "# manifest-hash " << hash << "\n";
    out << m.rows() << ' ' << m.cols() << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << format_real(m(i, j));
        out << "\n";
    }
}

inline Eigen::MatrixXd read_matrix(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line[0] != '#') break;
    }
    std::istringstream shape(line);
    long rows = -1, cols = -1;
    if (!(shape >> rows >> cols) || rows < 0 || cols < 0) throw ParseError(lineno, "expected 'rows cols'");
    Eigen::MatrixXd m(rows, cols);
    for (long i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) throw ParseError(lineno + 1, "missing matrix row");
        ++lineno;
        std::istringstream row(line);
        for (long j = 0; j < cols; ++j) {
            std::string tok;
            if (!(row >> tok)) throw ParseError(lineno, "short matrix row");
            m(i, j) = tok == "nan" || tok == "-nan" ? std::numeric_limits<double>::quiet_NaN()
                                                    : detail::parse_real(tok, lineno);
        }
    }
    return m;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write '" + path + "'");
    return f;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read '" + path + "'");
    return f;
}

} // namespace hglue
