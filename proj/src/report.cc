#include "embias/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "embias/errors.hpp"

namespace embias {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v, const char* spec = "%.2f") {
  char buf[40];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out;
}

}  // namespace

void write_records_csv(const ExperimentTable& table, std::ostream& out) {
  out << kRecordsHeader << '\n';
  for (const auto& rec : table.records) {
    const auto& c = rec.condition;
    const std::string direction = c.method == Method::kBaseline ? "none" : std::string(to_string(c.direction));
    for (std::size_t t = 0; t < table.test_names.size(); ++t) {
      const WeatResult* w = rec.ok && t < rec.weat.size() && rec.weat[t].ok ? &rec.weat[t] : nullptr;
      out << csv_field(c.id()) << ',' << to_string(c.method) << ',' << direction << ',' << num(c.strength) << ','
          << csv_field(table.test_names[t]) << ',' << (w ? num(w->effect_size) : "") << ','
          << (w ? opt(w->p_value) : "") << ',' << (rec.ok ? opt(rec.precision_gap) : "") << ','
          << (rec.ok ? opt(rec.recall_gap) : "") << ',' << (rec.ok ? num(rec.accuracy) : "") << ','
          << (rec.ok ? num(rec.f1) : "") << '\n';
    }
  }
}

void write_correlations_csv(const ExperimentTable& table, std::ostream& out) {
  out << kCorrelationsHeader << '\n';
  for (const auto& s : table.correlations) {
    out << csv_field(s.test_name) << ',' << s.gap_metric << ',' << s.method << ',' << s.n << ',' << opt(s.r)
        << ',' << opt(s.p_value) << ",permutation," << s.status << '\n';
  }
}

std::string render_scatter_svg(const std::vector<ScatterPoint>& points, const std::string& title,
                               const std::string& x_label, const std::string& y_label) {
  constexpr double W = 640, H = 480;
  constexpr double left = 70, right = 150, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;

  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  if (!points.empty()) {
    xmin = xmax = points[0].x;
    ymin = ymax = points[0].y;
    for (const auto& p : points) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  }
  const auto pad = [](double& lo, double& hi) {
    const double span = hi - lo;
    const double m = span > 0 ? span * 0.08 : std::max(std::abs(lo) * 0.1, 0.05);
    lo -= m;
    hi += m;
  };
  pad(xmin, xmax);
  pad(ymin, ymax);
  const auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  const auto sy = [&](double y) { return top + ph - (y - ymin) / (ymax - ymin) * ph; };

  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
  std::map<std::string, std::string> colors;
  std::vector<std::string> order;
  for (const auto& p : points) {
    if (colors.count(p.series)) continue;
    colors[p.series] = p.series == "baseline" ? "#000000" : palette[(order.size()) % 6];
    order.push_back(p.series);
  }

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\" "
       "font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"white\"/>\n";
  s << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
    << xml_escape(title) << "</text>\n";
  s << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw) << "\" height=\"" << fmt(ph)
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    s << "<line x1=\"" << fmt(sx(xv)) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(sx(xv)) << "\" y2=\""
      << fmt(top + ph + 5) << "\" stroke=\"#444\"/>\n";
    s << "<text x=\"" << fmt(sx(xv)) << "\" y=\"" << fmt(top + ph + 18) << "\" text-anchor=\"middle\">"
      << fmt(xv, "%.3g") << "</text>\n";
    s << "<line x1=\"" << fmt(left - 5) << "\" y1=\"" << fmt(sy(yv)) << "\" x2=\"" << fmt(left) << "\" y2=\""
      << fmt(sy(yv)) << "\" stroke=\"#444\"/>\n";
    s << "<text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(sy(yv) + 4) << "\" text-anchor=\"end\">"
      << fmt(yv, "%.3g") << "</text>\n";
  }
  s << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(H - 15) << "\" text-anchor=\"middle\">"
    << xml_escape(x_label) << "</text>\n";
  s << "<text x=\"18\" y=\"" << fmt(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << fmt(top + ph / 2) << ")\">" << xml_escape(y_label) << "</text>\n";

  for (const auto& p : points) {
    const bool base = p.series == "baseline";
    s << "<circle cx=\"" << fmt(sx(p.x)) << "\" cy=\"" << fmt(sy(p.y)) << "\" r=\"" << (base ? "6" : "4")
      << "\" fill=\"" << colors[p.series] << "\"" << (base ? " stroke=\"#000\" stroke-width=\"2\"" : "")
      << "><title>" << xml_escape(p.label) << "</title></circle>\n";
  }
  double ly = top + 10;
  for (const auto& name : order) {
    s << "<circle cx=\"" << fmt(W - right + 20) << "\" cy=\"" << fmt(ly) << "\" r=\"5\" fill=\"" << colors[name]
      << "\"/>\n";
    s << "<text x=\"" << fmt(W - right + 30) << "\" y=\"" << fmt(ly + 4) << "\">" << xml_escape(name)
      << "</text>\n";
    ly += 18;
  }
  s << "</svg>\n";
  return s.str();
}

void write_report(const ExperimentTable& table, const fs::path& outdir) {
  if (table.records.empty()) throw ValidationError("cannot write a report for an empty table");
  fs::create_directories(outdir);
  const auto open = [](const fs::path& p) {
    std::ofstream out(p, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
  };
  {
    auto out = open(outdir / "records.csv");
    write_records_csv(table, out);
    if (!out.flush()) throw IoError("write failed: records.csv");
  }
  {
    auto out = open(outdir / "correlations.csv");
    write_correlations_csv(table, out);
    if (!out.flush()) throw IoError("write failed: correlations.csv");
  }
  std::ostringstream failures;
  for (const auto& rec : table.records) {
    if (!rec.ok) failures << rec.condition.id() << '\t' << rec.error << '\n';
    for (const auto& w : rec.weat) {
      if (!w.ok) failures << rec.condition.id() << '\t' << w.test_name << '\t' << w.error << '\n';
    }
    if (rec.ok && !rec.gap_error.empty()) failures << rec.condition.id() << "\tgaps\t" << rec.gap_error << '\n';
  }
  const auto failures_path = outdir / "failures.txt";
  if (!failures.str().empty()) {
    auto out = open(failures_path);
    out << failures.str();
  } else {
    fs::remove(failures_path);
  }

  for (std::size_t t = 0; t < table.test_names.size(); ++t) {
    for (const std::string metric : {"precision_gap", "recall_gap"}) {
      std::vector<ScatterPoint> points;
      for (const auto& rec : table.records) {
        const auto& gap = metric == "precision_gap" ? rec.precision_gap : rec.recall_gap;
        if (!rec.ok || !gap || t >= rec.weat.size() || !rec.weat[t].ok) continue;
        const auto& c = rec.condition;
        const std::string series = c.method == Method::kBaseline
                                       ? "baseline"
                                       : std::string(to_string(c.method)) + " " + std::string(to_string(c.direction));
        points.push_back({*gap, rec.weat[t].effect_size, series, c.id()});
      }
      const auto svg = render_scatter_svg(points, table.test_names[t] + " vs " + metric,
                                          "performance gap (" + metric + ")", "WEAT effect size");
      auto out = open(outdir / ("scatter_" + safe_name(table.test_names[t]) + "_" + metric + ".svg"));
      out << svg;
    }
  }
}

}  // namespace embias
