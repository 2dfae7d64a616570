#include "sketchprec/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "sketchprec/errors.hpp"

namespace sketchprec {

namespace {

constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
  const U bits = std::bit_cast<U>(value);
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get(std::istream& in, const char* what) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
  std::array<unsigned char, sizeof(U)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw DataError(std::string("truncated input while reading ") + what);
  }
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

void expect_magic(std::istream& in, const char* magic) {
  char buf[4];
  if (!in.read(buf, 4) || std::memcmp(buf, magic, 4) != 0) {
    throw DataError(std::string("bad magic, expected ") + magic);
  }
  if (const auto v = get<std::uint32_t>(in, "version"); v != kVersion) {
    throw DataError("unsupported format version " + std::to_string(v));
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw DataError("cannot open: " + path.string());
  return in;
}

void finish(std::ostream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw DataError("write failed: " + path.string());
}

// Guards allocations driven by header fields of untrusted files.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

}  // namespace

void write_spmx(std::ostream& out, const SymmetricMatrix& a) {
  out.write("SPMX", 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, a.dim());
  for (double v : a.data()) put<double>(out, v);
}

void write_spmx(const std::filesystem::path& path, const SymmetricMatrix& a) {
  auto out = open_out(path);
  write_spmx(out, a);
  finish(out, path);
}

SymmetricMatrix read_spmx(std::istream& in) {
  expect_magic(in, "SPMX");
  const auto d = get<std::uint64_t>(in, "dimension");
  if (d == 0 || d > (std::uint64_t{1} << 16) || d * d > kMaxElements) throw DataError("invalid matrix dimension");
  std::vector<double> values(d * d);
  for (auto& v : values) {
    v = get<double>(in, "matrix entries");
    if (!std::isfinite(v)) throw DataError("non-finite matrix entry");
  }
  return SymmetricMatrix(d, std::move(values));
}

SymmetricMatrix read_spmx(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  return read_spmx(in);
}

void write_skch(std::ostream& out, const Sketch& s) {
  out.write("SKCH", 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(s.fingerprint.kind));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(s.fingerprint.dist));
  put<std::uint64_t>(out, s.fingerprint.seed);
  put<std::uint64_t>(out, s.d_orig);
  put<std::uint64_t>(out, s.d_pad);
  put<std::uint64_t>(out, s.m);
  put<std::uint64_t>(out, s.n);
  for (double v : s.values) put<double>(out, v);
}

void write_skch(const std::filesystem::path& path, const Sketch& s) {
  auto out = open_out(path);
  write_skch(out, s);
  finish(out, path);
}

Sketch read_skch(std::istream& in) {
  expect_magic(in, "SKCH");
  Sketch s;
  const auto kind = get<std::uint8_t>(in, "operator kind");
  const auto dist = get<std::uint8_t>(in, "distribution");
  if (kind > 1 || dist > 1) throw DataError("unknown operator kind or distribution");
  s.fingerprint.kind = static_cast<OperatorKind>(kind);
  s.fingerprint.dist = static_cast<Distribution>(dist);
  s.fingerprint.seed = get<std::uint64_t>(in, "seed");
  s.d_orig = get<std::uint64_t>(in, "d_orig");
  s.d_pad = get<std::uint64_t>(in, "d_pad");
  s.m = get<std::uint64_t>(in, "m");
  s.n = get<std::uint64_t>(in, "n");
  if (s.d_orig == 0 || s.d_pad < s.d_orig || s.m == 0 || s.m > kMaxElements) throw DataError("invalid sketch header");
  s.fingerprint.m = s.m;
  s.fingerprint.d_pad = s.d_pad;
  s.values.resize(s.m);
  for (auto& v : s.values) {
    v = get<double>(in, "sketch values");
    if (!std::isfinite(v)) throw DataError("non-finite sketch value");
  }
  return s;
}

Sketch read_skch(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  return read_skch(in);
}

std::optional<std::vector<double>> parse_csv_row(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
  if (line.find_first_not_of(" \t") == std::string_view::npos) return std::nullopt;
  std::vector<double> row;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    std::string_view field = line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double value = 0.0;
    const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc() || end != field.data() + field.size() || !std::isfinite(value)) {
      throw DataError("malformed CSV field '" + std::string(field) + "'");
    }
    row.push_back(value);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return row;
}

Matrix read_csv_matrix(std::istream& in) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    auto row = parse_csv_row(line);
    if (!row) continue;
    if (rows == 0) cols = row->size();
    if (row->size() != cols) {
      throw DataError("CSV row " + std::to_string(rows + 1) + " has " + std::to_string(row->size()) +
                      " fields, expected " + std::to_string(cols));
    }
    values.insert(values.end(), row->begin(), row->end());
    ++rows;
  }
  if (rows == 0) throw DataError("CSV input is empty");
  return Matrix(rows, cols, std::move(values));
}

Matrix read_csv_matrix(const std::filesystem::path& path) {
  auto in = open_in(path, false);
  return read_csv_matrix(in);
}

void write_csv_matrix(std::ostream& out, const Matrix& a) {
  std::array<char, 32> buf{};
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (j > 0) out << ',';
      const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), a(i, j));
      out.write(buf.data(), res.ptr - buf.data());
    }
    out << '\n';
  }
}

SymmetricMatrix read_csv_symmetric(const std::filesystem::path& path) {
  const Matrix m = read_csv_matrix(path);
  if (m.rows() != m.cols()) throw DataError("CSV matrix is not square: " + path.string());
  return SymmetricMatrix::from_matrix(m);
}

SymmetricMatrix load_matrix(const std::filesystem::path& path) {
  if (path.extension() == ".spmx") return read_spmx(path);
  return read_csv_symmetric(path);
}

}  // namespace sketchprec
