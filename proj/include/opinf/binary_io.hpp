#pragma once

// Raw array files: IEEE-754 float64, little-endian, row-major, no header.
// Shapes live in the accompanying manifest.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "opinf/equation.hpp"

namespace opinf::io {

static_assert(std::endian::native == std::endian::little, "binary format assumes a little-endian host");

namespace fs = std::filesystem;

inline void write_f64(const fs::path& path, const double* data, std::size_t count) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
    if (!out) throw FormatError("write failed: " + path.string());
}

inline void write_f64(const fs::path& path, const std::vector<double>& v) { write_f64(path, v.data(), v.size()); }

/// Matrix written row by row.
inline void write_f64(const fs::path& path, const Matrix& m) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
    write_f64(path, rm.data(), static_cast<std::size_t>(rm.size()));
}

inline std::vector<double> read_f64(const fs::path& path, std::size_t expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("missing array file: " + path.string());
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes != expected * sizeof(double)) {
        throw FormatError("shape mismatch: " + path.string() + " holds " + std::to_string(bytes / sizeof(double)) +
                          " values, manifest expects " + std::to_string(expected));
    }
    in.seekg(0);
    std::vector<double> v(expected);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw FormatError("read failed: " + path.string());
    for (double x : v) {
        if (!std::isfinite(x)) throw FormatError("non-finite entry in " + path.string());
    }
    return v;
}

inline Matrix read_matrix(const fs::path& path, Eigen::Index rows, Eigen::Index cols) {
    const auto v = read_f64(path, static_cast<std::size_t>(rows * cols));
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v[static_cast<std::size_t>(i * cols + j)];
    return m;
}

inline nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("missing manifest: " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed manifest " + path.string() + ": " + e.what());
    }
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
}

/// Compact, filename-safe rendering of a parameter value ("0.1", "2", "125").
inline std::string param_tag(double p) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", p);
    return buf;
}

}  // namespace opinf::io
