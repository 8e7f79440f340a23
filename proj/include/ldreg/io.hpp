#pragma once

// Matrix files. CSV is comma-separated decimals with an optional header row;
// LDM1 is a little-endian binary dump ("LDM1", u32 rows, u32 cols, f64
// row-major). Both writers round-trip bit-exactly through the readers.

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ldreg/error.hpp"
#include "ldreg/matrix.hpp"

namespace ldreg::io {

enum class MatrixFormat { csv, ldm1 };

inline std::string_view to_string(MatrixFormat f) noexcept {
  return f == MatrixFormat::csv ? "csv" : "ldm1";
}

inline constexpr std::array<char, 4> kLdmMagic{'L', 'D', 'M', '1'};

namespace detail {

inline std::string_view trim(std::string_view s) noexcept {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_number(std::string_view tok) {
  tok = trim(tok);
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return std::nullopt;
  double v = 0.0;
  const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || end != tok.data() + tok.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFU));
}

inline std::uint32_t get_u32(const unsigned char* p) noexcept {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace detail

/// Parses CSV text. A first row containing any non-numeric field is taken
/// as a header. Blank lines are ignored.
inline Matrix parse_csv(std::string_view text) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  bool first = true;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = detail::trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty()) {
      if (eol == text.size()) break;
      continue;
    }
    const auto fields = detail::split(line);
    std::vector<std::optional<double>> parsed;
    parsed.reserve(fields.size());
    bool numeric = true;
    for (auto f : fields) {
      parsed.push_back(detail::parse_number(f));
      if (!parsed.back()) numeric = false;
    }
    if (first) {
      first = false;
      cols = fields.size();
      if (!numeric) continue;  // header
    }
    if (fields.size() != cols)
      throw DataError("csv line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                      " fields, got " + std::to_string(fields.size()));
    for (std::size_t c = 0; c < parsed.size(); ++c) {
      if (!parsed[c])
        throw DataError("csv line " + std::to_string(line_no) + ": field " + std::to_string(c + 1) +
                        " is not a number");
      if (!std::isfinite(*parsed[c]))
        throw DataError("csv line " + std::to_string(line_no) + ": non-finite value");
      values.push_back(*parsed[c]);
    }
    ++rows;
    if (eol == text.size()) break;
  }
  if (rows == 0) throw DataError("csv: no data rows");
  return Matrix(rows, cols, std::move(values));
}

inline std::string format_csv(const Matrix& m) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j > 0) out.push_back(',');
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out += buf;
    }
    out.push_back('\n');
  }
  return out;
}

inline Matrix parse_ldm1(std::string_view bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kLdmMagic.data(), 4) != 0)
    throw DataError("ldm1: missing magic or truncated header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t rows = detail::get_u32(p + 4);
  const std::uint32_t cols = detail::get_u32(p + 8);
  const std::uint64_t count = static_cast<std::uint64_t>(rows) * cols;
  if (bytes.size() != 12 + 8 * count)
    throw DataError("ldm1: payload is " + std::to_string(bytes.size() - 12) + " bytes, expected " +
                    std::to_string(8 * count));
  if (count == 0) throw DataError("ldm1: empty matrix");
  std::vector<double> values(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(p[12 + 8 * i + b]) << (8 * b);
    values[i] = std::bit_cast<double>(u);
    if (!std::isfinite(values[i])) throw DataError("ldm1: non-finite value");
  }
  return Matrix(rows, cols, std::move(values));
}

inline std::string format_ldm1(const Matrix& m) {
  if (m.rows() > UINT32_MAX || m.cols() > UINT32_MAX)
    throw UsageError("ldm1: matrix too large for a 32-bit header");
  std::string out(kLdmMagic.begin(), kLdmMagic.end());
  detail::put_u32(out, static_cast<std::uint32_t>(m.rows()));
  detail::put_u32(out, static_cast<std::uint32_t>(m.cols()));
  out.reserve(12 + 8 * m.size());
  for (double v : m.values()) {
    const auto u = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((u >> (8 * b)) & 0xFFU));
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw DataError("write failed: " + path);
}

inline bool has_ldm_magic(std::string_view bytes) noexcept {
  return bytes.size() >= 4 && std::memcmp(bytes.data(), kLdmMagic.data(), 4) == 0;
}

/// Reads a matrix file; without an explicit format the LDM1 magic decides.
inline Matrix read_matrix(const std::string& path, std::optional<MatrixFormat> format = std::nullopt) {
  const std::string bytes = read_file(path);
  if (bytes.empty()) throw DataError(path + ": empty file");
  const MatrixFormat f = format.value_or(has_ldm_magic(bytes) ? MatrixFormat::ldm1 : MatrixFormat::csv);
  try {
    return f == MatrixFormat::ldm1 ? parse_ldm1(bytes) : parse_csv(bytes);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

inline void write_matrix(const std::string& path, const Matrix& m, MatrixFormat format) {
  write_file(path, format == MatrixFormat::ldm1 ? format_ldm1(m) : format_csv(m));
}

}  // namespace ldreg::io
