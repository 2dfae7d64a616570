#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "sketchprec/sketch.hpp"
#include "sketchprec/symmat.hpp"

namespace sketchprec {

// Binary formats are little-endian regardless of the host.
//
// .spmx   "SPMX" | u32 version=1 | u64 d | d*d f64 row-major
// .skch   "SKCH" | u32 version=1 | u8 kind | u8 dist | u64 seed | u64 d_orig
//         | u64 d_pad | u64 m | u64 n | m f64 values
//
// All readers throw DataError on malformed or truncated input.

void write_spmx(std::ostream& out, const SymmetricMatrix& a);
void write_spmx(const std::filesystem::path& path, const SymmetricMatrix& a);
SymmetricMatrix read_spmx(std::istream& in);
SymmetricMatrix read_spmx(const std::filesystem::path& path);

void write_skch(std::ostream& out, const Sketch& s);
void write_skch(const std::filesystem::path& path, const Sketch& s);
Sketch read_skch(std::istream& in);
Sketch read_skch(const std::filesystem::path& path);

/// Parses one line of comma-separated reals. Returns nullopt for a blank line.
std::optional<std::vector<double>> parse_csv_row(std::string_view line);

/// Rows of comma-separated reals, all of equal length.
Matrix read_csv_matrix(std::istream& in);
Matrix read_csv_matrix(const std::filesystem::path& path);
void write_csv_matrix(std::ostream& out, const Matrix& a);

/// Square CSV matrix, symmetrized on load.
SymmetricMatrix read_csv_symmetric(const std::filesystem::path& path);

/// .spmx by extension, CSV otherwise.
SymmetricMatrix load_matrix(const std::filesystem::path& path);

}  // namespace sketchprec
