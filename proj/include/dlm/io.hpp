#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dlm/linalg.hpp"

namespace dlm::io {

/// Reads a text file into lines; CRLF and CR line endings are normalised,
/// a UTF-8 byte order mark is dropped, and a trailing empty line is removed.
std::vector<std::string> read_lines(const std::string& path);

std::vector<std::string> split(std::string_view text, char delim);
std::vector<std::string> split_whitespace(std::string_view text);

/// Splits UTF-8 text into code points (each returned as its byte sequence).
std::vector<std::string> utf8_codepoints(std::string_view text);

/// Parses a decimal double; throws ParseError naming `context` on failure.
double parse_double(std::string_view token, const std::string& context);
long long parse_integer(std::string_view token, const std::string& context);

/// Round-trippable decimal rendering (shortest repr that reads back exactly).
std::string format_double(double value);

void write_text(const std::string& path, const std::string& content);

// Binary containers are little-endian; every file starts with a four-byte
// magic followed by a uint32 version.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}
  void magic(std::string_view tag, std::uint32_t version);
  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void matrix(const Matrix& m);

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  BinaryReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}
  /// Checks the magic and returns the version.
  std::uint32_t magic(std::string_view tag);
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  Matrix matrix();

 private:
  void read_bytes(char* dst, std::size_t n);
  std::istream& in_;
  std::string source_;
};

/// Standalone matrix container ("DLMM", version 1): rows, cols, row-major doubles.
void save_matrix(const std::string& path, const Matrix& m);
Matrix load_matrix(const std::string& path);

}  // namespace dlm::io
