#pragma once

// Long-format CSV ingestion (one observation per row), band CSV emission and
// a small SVG renderer for band plots.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "scband/band.hpp"
#include "scband/error.hpp"
#include "scband/log.hpp"
#include "scband/observations.hpp"

namespace scband {

/// Affine map between the raw design domain and [0,1].
struct DomainMap {
  double raw_min = 0.0;
  double raw_max = 1.0;

  DomainMap() = default;
  DomainMap(double lo, double hi) : raw_min(lo), raw_max(hi) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
      fail(ErrorCode::Domain, "domain requires finite lo < hi");
  }

  double to_unit(double raw) const { return (raw - raw_min) / (raw_max - raw_min); }
  double to_raw(double unit) const { return raw_min + unit * (raw_max - raw_min); }
};

struct IngestOptions {
  std::string x_column = "x";
  std::string y_column = "y";
  std::string id_column = "id";
  std::optional<DomainMap> domain;
};

struct IngestedData {
  ObservationSet data;
  DomainMap domain;
  /// Subject identifiers in first-appearance order.
  std::vector<std::string> ids;
  /// Raw-scale design points, same ragged shape as `data`.
  std::vector<std::vector<double>> raw_x;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// RFC 4180-style field splitting with double-quote escaping.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

inline bool skippable(const std::string& line) {
  const std::string t = trim(line);
  return t.empty() || t.front() == '#';
}

inline double parse_real(const std::string& field, std::size_t line_no, const std::string& column) {
  double v = std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  try {
    v = std::stod(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != field.size() || !std::isfinite(v))
    fail(ErrorCode::Parse, "row " + std::to_string(line_no) + ": column '" + column +
                               "' has non-numeric or non-finite value '" + field + "'");
  return v;
}

}  // namespace detail

inline IngestedData ingest_csv_stream(std::istream& in, const IngestOptions& opts) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    header = detail::split_csv_line(line);
    break;
  }
  if (header.empty()) fail(ErrorCode::EmptyDataset, "CSV input has no header row");
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail(ErrorCode::Parse, "CSV header lacks column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t xi = column(opts.x_column), yi = column(opts.y_column), ii = column(opts.id_column);
  const std::size_t need = std::max({xi, yi, ii}) + 1;

  std::map<std::string, std::size_t> index;
  IngestedData out;
  std::vector<std::vector<double>> ys;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() < need)
      fail(ErrorCode::Parse, "row " + std::to_string(line_no) + ": expected at least " +
                                 std::to_string(need) + " fields, found " + std::to_string(fields.size()));
    const double x = detail::parse_real(fields[xi], line_no, opts.x_column);
    const double y = detail::parse_real(fields[yi], line_no, opts.y_column);
    if (opts.domain && (x < opts.domain->raw_min || x > opts.domain->raw_max))
      fail(ErrorCode::Domain, "row " + std::to_string(line_no) + ": x = " + fields[xi] +
                                  " lies outside the domain override");
    auto [it, inserted] = index.try_emplace(fields[ii], out.ids.size());
    if (inserted) {
      out.ids.push_back(fields[ii]);
      out.raw_x.emplace_back();
      ys.emplace_back();
    }
    out.raw_x[it->second].push_back(x);
    ys[it->second].push_back(y);
  }
  if (out.ids.empty()) fail(ErrorCode::EmptyDataset, "CSV input has no data rows");

  if (opts.domain) {
    out.domain = *opts.domain;
  } else {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& row : out.raw_x)
      for (double v : row) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    if (!(lo < hi)) fail(ErrorCode::Domain, "observed design points span a single value; pass --domain");
    out.domain = DomainMap(lo, hi);
  }

  std::vector<Subject> subjects(out.ids.size());
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    subjects[i].y = std::move(ys[i]);
    subjects[i].x.reserve(out.raw_x[i].size());
    for (double raw : out.raw_x[i])
      subjects[i].x.push_back(std::clamp(out.domain.to_unit(raw), 0.0, 1.0));
  }
  out.data = ObservationSet(std::move(subjects));
  return out;
}

inline IngestedData ingest_csv(const std::string& path, const IngestOptions& opts) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Parse, "cannot open '" + path + "' for reading");
  return ingest_csv_stream(in, opts);
}

/// Shortest round-trip text for a double; "nan" for NaN.
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// Columns x_raw, x_unit, mhat, lower, upper, scale; optional leading
/// comment line (e.g. the run manifest).
inline void write_band_csv(std::ostream& out, const BandResult& band, const DomainMap& domain,
                           const std::string& comment = {}) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "x_raw,x_unit,mhat,lower,upper,scale\n";
  for (std::size_t m = 0; m < band.grid.size(); ++m) {
    out << format_real(domain.to_raw(band.grid[m])) << ',' << format_real(band.grid[m]) << ','
        << format_real(band.mhat[m]) << ',' << format_real(band.lower[m]) << ','
        << format_real(band.upper[m]) << ',' << format_real(band.scale[m]) << '\n';
  }
}

/// Scatter of the raw data with the estimated mean and its band.
inline std::string render_band_svg(const BandResult& band, const DomainMap& domain,
                                   const IngestedData* data = nullptr,
                                   const std::string& title = {}) {
  constexpr double W = 800, H = 500, L = 70, R = 20, T = 40, B = 50;
  double ylo = std::numeric_limits<double>::infinity(), yhi = -ylo;
  for (std::size_t m = 0; m < band.grid.size(); ++m) {
    if (!band.defined[m]) continue;
    ylo = std::min(ylo, band.lower[m]);
    yhi = std::max(yhi, band.upper[m]);
  }
  if (data)
    for (const Subject& s : data->data.subjects())
      for (double y : s.y) {
        ylo = std::min(ylo, y);
        yhi = std::max(yhi, y);
      }
  if (!(ylo < yhi)) {
    ylo -= 1.0;
    yhi += 1.0;
  }
  const double pad = 0.05 * (yhi - ylo);
  ylo -= pad;
  yhi += pad;
  auto px = [&](double unit) { return L + unit * (W - L - R); };
  auto py = [&](double y) { return T + (yhi - y) / (yhi - ylo) * (H - T - B); };

  std::ostringstream svg;
  svg.setf(std::ios::fixed);
  svg.precision(2);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty())
    svg << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">"
        << title << "</text>\n";

  // axes and ticks
  svg << "<g stroke=\"black\" stroke-width=\"1\">\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\"/>\n";
  svg << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int k = 0; k <= 5; ++k) {
    const double u = k / 5.0;
    svg << "<text x=\"" << px(u) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
        << format_real(std::round(domain.to_raw(u) * 1000.0) / 1000.0) << "</text>\n";
    const double yv = ylo + u * (yhi - ylo);
    svg << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">"
        << format_real(std::round(yv * 100.0) / 100.0) << "</text>\n";
  }
  svg << "</g>\n";

  if (data) {
    svg << "<g fill=\"#999999\" fill-opacity=\"0.5\">\n";
    for (const Subject& s : data->data.subjects())
      for (std::size_t j = 0; j < s.size(); ++j)
        svg << "<circle cx=\"" << px(s.x[j]) << "\" cy=\"" << py(s.y[j]) << "\" r=\"1.5\"/>\n";
    svg << "</g>\n";
  }

  auto polyline = [&](const std::vector<double>& ys, const char* style) {
    svg << "<polyline fill=\"none\" " << style << " points=\"";
    for (std::size_t m = 0; m < band.grid.size(); ++m)
      if (band.defined[m]) svg << px(band.grid[m]) << ',' << py(ys[m]) << ' ';
    svg << "\"/>\n";
  };
  polyline(band.upper, "stroke=\"#1f4e9c\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"");
  polyline(band.lower, "stroke=\"#1f4e9c\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"");
  polyline(band.mhat, "stroke=\"#c0392b\" stroke-width=\"2\" stroke-dasharray=\"2,2\"");
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace scband
