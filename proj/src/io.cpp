#include "nbdiff/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace nbdiff::io {

namespace {

void write_bytes(std::ostream& os, const std::uint8_t* p, std::size_t n) {
  os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::istream& is, std::uint8_t* p, std::size_t n, const char* what) {
  is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw FormatError(std::string(what) + ": truncated file");
}

}  // namespace

void write_u8(std::ostream& os, std::uint8_t v) { write_bytes(os, &v, 1); }

void write_u32(std::ostream& os, std::uint32_t v) {
  std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                       static_cast<std::uint8_t>(v >> 16),
                       static_cast<std::uint8_t>(v >> 24)};
  write_bytes(os, b, 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  write_u32(os, static_cast<std::uint32_t>(v));
  write_u32(os, static_cast<std::uint32_t>(v >> 32));
}

void write_f32(std::ostream& os, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  write_u32(os, u);
}

void write_f32_array(std::ostream& os, const float* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) write_f32(os, p[i]);
}

std::uint8_t read_u8(std::istream& is, const char* what) {
  std::uint8_t b;
  read_bytes(is, &b, 1, what);
  return b;
}

std::uint32_t read_u32(std::istream& is, const char* what) {
  std::uint8_t b[4];
  read_bytes(is, b, 4, what);
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

std::uint64_t read_u64(std::istream& is, const char* what) {
  std::uint64_t lo = read_u32(is, what);
  std::uint64_t hi = read_u32(is, what);
  return lo | hi << 32;
}

float read_f32(std::istream& is, const char* what) {
  std::uint32_t u = read_u32(is, what);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

void read_f32_array(std::istream& is, float* p, std::size_t n, const char* what) {
  for (std::size_t i = 0; i < n; ++i) p[i] = read_f32(is, what);
}

void expect_magic(std::istream& is, const char* magic, const char* what) {
  std::size_t n = std::strlen(magic);
  std::vector<std::uint8_t> got(n);
  read_bytes(is, got.data(), n, what);
  if (std::memcmp(got.data(), magic, n) != 0)
    throw FormatError(std::string(what) + ": bad magic, expected \"" + magic + "\"");
}

KvPairs read_kv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  KvPairs out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t\r");
      auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

void write_kv(const std::string& path, const KvPairs& pairs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  for (const auto& [k, v] : pairs) out << k << "=" << v << "\n";
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

bool file_exists(const std::string& path) {
  return std::filesystem::exists(path);
}

void write_farbfeld(const std::string& path, const Image& img) {
  if (img.shape.c != 1 && img.shape.c != 3)
    throw Error("farbfeld writer supports 1- or 3-channel images, got " +
                img.shape.str());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  out.write("farbfeld", 8);
  auto write_be32 = [&](std::uint32_t v) {
    std::uint8_t b[4] = {static_cast<std::uint8_t>(v >> 24),
                         static_cast<std::uint8_t>(v >> 16),
                         static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
    out.write(reinterpret_cast<char*>(b), 4);
  };
  write_be32(static_cast<std::uint32_t>(img.shape.w));
  write_be32(static_cast<std::uint32_t>(img.shape.h));
  auto to_u16 = [](float v) {
    float t = (std::clamp(v, -1.0f, 1.0f) + 1.0f) * 0.5f;
    return static_cast<std::uint16_t>(std::lround(t * 65535.0f));
  };
  auto write_be16 = [&](std::uint16_t v) {
    std::uint8_t b[2] = {static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
    out.write(reinterpret_cast<char*>(b), 2);
  };
  for (int y = 0; y < img.shape.h; ++y)
    for (int x = 0; x < img.shape.w; ++x) {
      for (int c = 0; c < 3; ++c) {
        int src = img.shape.c == 3 ? c : 0;
        write_be16(to_u16(img.at(src, y, x)));
      }
      write_be16(0xffff);
    }
}

void write_line_svg(const std::string& path, const std::vector<double>& x,
                    const std::vector<SvgSeries>& series, const std::string& x_label,
                    const std::string& y_label) {
  const int width = 720, height = 440, margin = 56;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (double v : x) {
    if (first || v < xmin) xmin = v;
    if (first || v > xmax) xmax = v;
    first = false;
  }
  first = true;
  for (const auto& s : series)
    for (double v : s.y) {
      if (!std::isfinite(v)) continue;
      if (first || v < ymin) ymin = v;
      if (first || v > ymax) ymax = v;
      first = false;
    }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto px = [&](double v) {
    return margin + (v - xmin) / (xmax - xmin) * (width - 2 * margin);
  };
  auto py = [&](double v) {
    return height - margin - (v - ymin) / (ymax - ymin) * (height - 2 * margin);
  };
  static const char* colors[] = {"#1f6fb2", "#c23b22", "#3a9b5c", "#8a5cb2",
                                 "#b2843a", "#47a3b2"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
      << width - margin << "\" y2=\"" << height - margin
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
      << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
  svg << "<text x=\"16\" y=\"" << height / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
      << height / 2 << ")\">" << y_label << "</text>\n";
  svg << "<text x=\"" << margin << "\" y=\"" << height - margin + 16
      << "\" font-size=\"11\">" << fmt_double(xmin) << "</text>\n";
  svg << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 16
      << "\" text-anchor=\"end\" font-size=\"11\">" << fmt_double(xmax) << "</text>\n";
  svg << "<text x=\"" << margin - 6 << "\" y=\"" << height - margin
      << "\" text-anchor=\"end\" font-size=\"11\">" << fmt_double(ymin) << "</text>\n";
  svg << "<text x=\"" << margin - 6 << "\" y=\"" << margin + 4
      << "\" text-anchor=\"end\" font-size=\"11\">" << fmt_double(ymax) << "</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    svg << "<polyline fill=\"none\" stroke=\"" << colors[si % 6]
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      svg << px(x[i]) << "," << py(s.y[i]) << " ";
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << width - margin - 4 << "\" y=\"" << margin + 16 * (si + 1)
        << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << colors[si % 6] << "\">"
        << s.label << "</text>\n";
  }
  svg << "</svg>\n";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  out << svg.str();
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace nbdiff::io
