#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "frontlab/geometry.hpp"

namespace frontlab {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal that reads back to the same double.
inline std::string fmt_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// Columns of doubles with a declared header.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void row(const std::vector<double>& v) {
    if (v.size() != header_.size()) throw std::invalid_argument("CsvTable: row width differs from header");
    rows_.push_back(v);
  }

  std::string str() const {
    std::string out;
    for (size_t k = 0; k < header_.size(); ++k) out += (k ? "," : "") + header_[k];
    out += '\n';
    for (const auto& r : rows_) {
      for (size_t k = 0; k < r.size(); ++k) out += (k ? "," : "") + fmt_double(r[k]);
      out += '\n';
    }
    return out;
  }

  size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

/// Write to a sibling temporary, then rename over the target.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("rename failed for " + path.string() + ": " + ec.message());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Node table `s,x,y`.
inline std::string curve_csv(const ClosedCurve& c) {
  CsvTable t({"s", "x", "y"});
  for (int j = 0; j < c.size(); ++j) t.row({c.param(j), c.node(j).x, c.node(j).y});
  return t.str();
}

/// Parse `s,x,y` rows (header required, s ascending in [0,1)).
inline std::vector<Vec2> parse_curve_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("curve csv: empty input");
  auto strip = [](std::string v) {
    while (!v.empty() && (v.back() == '\r' || v.back() == ' ')) v.pop_back();
    return v;
  };
  if (strip(line) != "s,x,y") throw IoError("curve csv: header must be s,x,y");
  std::vector<Vec2> pts;
  double last = -1.0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip(line);
    if (line.empty()) continue;
    double v[3];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int k = 0; k < 3; ++k) {
      while (p < end && *p == ' ') ++p;
      auto r = std::from_chars(p, end, v[k]);
      if (r.ec != std::errc()) throw IoError("curve csv: bad number on line " + std::to_string(lineno));
      p = r.ptr;
      if (k < 2) {
        if (p >= end || *p != ',') throw IoError("curve csv: expected 3 columns on line " + std::to_string(lineno));
        ++p;
      }
    }
    if (p != end) throw IoError("curve csv: trailing data on line " + std::to_string(lineno));
    if (!(v[0] > last) || v[0] < 0.0 || v[0] >= 1.0)
      throw IoError("curve csv: s must ascend in [0,1) (line " + std::to_string(lineno) + ")");
    last = v[0];
    pts.push_back({v[1], v[2]});
  }
  if (pts.size() < 8) throw IoError("curve csv: need at least 8 nodes");
  return pts;
}

/// Minimal log-log line chart.
inline std::string loglog_svg(const std::string& title, const std::vector<std::string>& names,
                              const std::vector<std::vector<double>>& xs, const std::vector<std::vector<double>>& ys) {
  const double W = 480, H = 360, m = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (size_t k = 0; k < xs.size(); ++k)
    for (size_t i = 0; i < xs[k].size(); ++i) {
      if (!(xs[k][i] > 0.0 && ys[k][i] > 0.0)) continue;
      x0 = std::min(x0, std::log10(xs[k][i]));
      x1 = std::max(x1, std::log10(xs[k][i]));
      y0 = std::min(y0, std::log10(ys[k][i]));
      y1 = std::max(y1, std::log10(ys[k][i]));
    }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  auto X = [&](double v) { return m + (std::log10(v) - x0) / (x1 - x0) * (W - 2 * m); };
  auto Y = [&](double v) { return H - m - (std::log10(v) - y0) / (y1 - y0) * (H - 2 * m); };
  const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  s << "<rect x=\"" << m << "\" y=\"" << m << "\" width=\"" << W - 2 * m << "\" height=\"" << H - 2 * m
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (size_t k = 0; k < xs.size(); ++k) {
    const char* col = colours[k % 4];
    s << "<polyline fill=\"none\" stroke=\"" << col << "\" points=\"";
    for (size_t i = 0; i < xs[k].size(); ++i)
      if (xs[k][i] > 0.0 && ys[k][i] > 0.0) s << fmt_double(X(xs[k][i])) << "," << fmt_double(Y(ys[k][i])) << " ";
    s << "\"/>\n";
    for (size_t i = 0; i < xs[k].size(); ++i)
      if (xs[k][i] > 0.0 && ys[k][i] > 0.0)
        s << "<circle cx=\"" << fmt_double(X(xs[k][i])) << "\" cy=\"" << fmt_double(Y(ys[k][i])) << "\" r=\"3\" fill=\"" << col
          << "\"/>\n";
    if (k < names.size())
      s << "<text x=\"" << m + 8 << "\" y=\"" << m + 16 + 16 * k << "\" font-size=\"12\" fill=\"" << col << "\">" << names[k]
        << "</text>\n";
  }
  s << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"11\">log10 x: "
    << fmt_double(x0) << " .. " << fmt_double(x1) << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

}  // namespace frontlab
