#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "nbdiff/tensor.hpp"

namespace nbdiff::io {

// Little-endian primitives. Readers throw FormatError on truncation, with the
// caller-supplied context in the message.

void write_u8(std::ostream& os, std::uint8_t v);
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f32(std::ostream& os, float v);
void write_f32_array(std::ostream& os, const float* p, std::size_t n);

std::uint8_t read_u8(std::istream& is, const char* what);
std::uint32_t read_u32(std::istream& is, const char* what);
std::uint64_t read_u64(std::istream& is, const char* what);
float read_f32(std::istream& is, const char* what);
void read_f32_array(std::istream& is, float* p, std::size_t n, const char* what);

void expect_magic(std::istream& is, const char* magic, const char* what);

// key=value text files ('#' starts a comment line). Order-preserving writer.

using KvPairs = std::vector<std::pair<std::string, std::string>>;

KvPairs read_kv(const std::string& path);
void write_kv(const std::string& path, const KvPairs& pairs);

// Minimal file helpers.

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);
bool file_exists(const std::string& path);

// farbfeld raster (magic "farbfeld", big-endian u32 w/h, RGBA16 per pixel).
// Image values are mapped from [-1, 1] to the full 16-bit range; one-channel
// images are written as gray, three-channel as RGB.
void write_farbfeld(const std::string& path, const Image& img);

// Minimal standalone SVG line plot: one polyline per series, shared x values.
struct SvgSeries {
  std::string label;
  std::vector<double> y;
};
void write_line_svg(const std::string& path, const std::vector<double>& x,
                    const std::vector<SvgSeries>& series, const std::string& x_label,
                    const std::string& y_label);

/// Formats a double so the text is stable and round-trippable in CSV output.
std::string fmt_double(double v);

}  // namespace nbdiff::io
