#include "asym/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include "asym/errors.hpp"
#include "asym/rng.hpp"

namespace asym::report {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw FormatError("format_double failed");
  return std::string(buf, end);
}

namespace {

std::string fmt(double v) { return format_double(v); }

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string scan_csv(const ScanResult& r) {
  std::string s = "lambda,error,ce\n";
  for (const auto& p : r.points) s += fmt(p.lambda) + "," + fmt(p.error) + "," + fmt(p.ce) + "\n";
  return s;
}

std::string soup_csv(const SoupReport& r) {
  std::string s = "epoch,ssr_ia,ssr_ib,ssr_ab,gap\n";
  for (const auto& row : r.rows)
    s += std::to_string(row.epoch) + "," + fmt(row.ssr_ia) + "," + fmt(row.ssr_ib) + "," +
         fmt(row.ssr_ab) + "," + fmt(row.gap) + "\n";
  return s;
}

std::string softmax_metrics_csv(const std::vector<probes::SoftmaxMetricsRow>& rows) {
  std::string s = "lambda,error,ce,tr_p,tr_h,first_order,second_order\n";
  for (const auto& r : rows)
    s += fmt(r.lambda) + "," + fmt(r.error) + "," + fmt(r.ce) + "," + fmt(r.tr_p) + "," +
         fmt(r.tr_h) + "," + fmt(r.first_order) + "," + fmt(r.second_order) + "\n";
  return s;
}

std::string confusion_csv(const std::vector<std::pair<double, probes::ActivationConfusion>>& rows) {
  std::string s = "lambda,aa,ai,ia,ii,diag_sum\n";
  for (const auto& [lambda, c] : rows)
    s += fmt(lambda) + "," + std::to_string(c.aa) + "," + std::to_string(c.ai) + "," +
         std::to_string(c.ia) + "," + std::to_string(c.ii) + "," + fmt(c.diag_sum) + "\n";
  return s;
}

std::string rounds_csv(const std::vector<fed::RoundLog>& rounds) {
  std::string s = "round,acc,mean_ssr,selected_clients\n";
  for (const auto& r : rounds) {
    std::string sel;
    for (std::size_t i = 0; i < r.selected.size(); ++i) sel += (i ? ";" : "") + std::to_string(r.selected[i]);
    s += std::to_string(r.round) + "," + fmt(r.acc) + "," + fmt(r.mean_ssr) + "," + sel + "\n";
  }
  return s;
}

std::string compare_csv(const std::vector<fed::CompareRow>& rows) {
  std::string s = "method,alpha,gamma,prox_mu,seeds,acc_mean,acc_std,accuracies\n";
  for (const auto& r : rows) {
    std::string seeds, accs;
    for (std::size_t i = 0; i < r.seeds.size(); ++i) seeds += (i ? ";" : "") + std::to_string(r.seeds[i]);
    for (std::size_t i = 0; i < r.accuracies.size(); ++i) accs += (i ? ";" : "") + fmt(r.accuracies[i]);
    s += r.method + "," + fmt(r.alpha) + "," + fmt(r.gamma) + "," + fmt(r.prox_mu) + "," + seeds + "," +
         fmt(r.acc_mean) + "," + fmt(r.acc_std) + "," + accs + "\n";
  }
  return s;
}

std::string relu_summary_csv(const probes::ReluSimResult& r) {
  std::string s = "lambda,mean,std,active_fraction\n";
  for (const auto& row : r.rows)
    s += fmt(row.lambda) + "," + fmt(row.mean) + "," + fmt(row.std) + "," + fmt(row.active_fraction) + "\n";
  return s;
}

std::string relu_histogram_csv(const probes::ReluSimResult& r, std::size_t row) {
  const auto& counts = r.rows.at(row).counts;
  std::string s = "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < counts.size(); ++b)
    s += fmt(r.bin_edges[b]) + "," + fmt(r.bin_edges[b + 1]) + "," + std::to_string(counts[b]) + "\n";
  return s;
}

std::string group_stats_csv(const GroupStats& stats) {
  std::string s = "group,mean,std\n";
  for (const auto& label : report_labels()) {
    auto it = stats.find(label);
    if (it == stats.end()) continue;
    s += label + "," + fmt(it->second.mean) + "," + fmt(it->second.std) + "\n";
  }
  return s;
}

std::string render_svg(const std::vector<Curve>& curves, const SvgStyle& style) {
  if (curves.empty()) throw ConfigError("render_svg: no curves");
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& c : curves) {
    if (c.x.empty() || c.x.size() != c.y.size())
      throw ConfigError("render_svg: curve '" + c.label + "' is empty or has mismatched x/y");
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      if (!std::isfinite(c.x[i]) || !std::isfinite(c.y[i])) continue;
      x0 = std::min(x0, c.x[i]);
      x1 = std::max(x1, c.x[i]);
      y0 = std::min(y0, c.y[i]);
      y1 = std::max(y1, c.y[i]);
    }
  }
  if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  const double W = style.width, H = style.height;
  const double left = 60, right = 150, top = 30, bottom = 45;
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width << "\" height=\""
    << style.height << "\" viewBox=\"0 0 " << style.width << ' ' << style.height << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!style.title.empty())
    o << "<text x=\"" << fixed(left + pw / 2, 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
      << xml_escape(style.title) << "</text>\n";
  o << "<g stroke=\"black\" fill=\"none\">\n";
  o << "<line x1=\"" << fixed(left, 2) << "\" y1=\"" << fixed(top + ph, 2) << "\" x2=\"" << fixed(left + pw, 2)
    << "\" y2=\"" << fixed(top + ph, 2) << "\"/>\n";
  o << "<line x1=\"" << fixed(left, 2) << "\" y1=\"" << fixed(top, 2) << "\" x2=\"" << fixed(left, 2)
    << "\" y2=\"" << fixed(top + ph, 2) << "\"/>\n";
  o << "</g>\n<g font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
    o << "<text x=\"" << fixed(px(fx), 2) << "\" y=\"" << fixed(top + ph + 15, 2)
      << "\" text-anchor=\"middle\">" << fixed(fx, 3) << "</text>\n";
    o << "<text x=\"" << fixed(left - 5, 2) << "\" y=\"" << fixed(py(fy) + 4, 2)
      << "\" text-anchor=\"end\">" << fixed(fy, 3) << "</text>\n";
  }
  o << "<text x=\"" << fixed(left + pw / 2, 2) << "\" y=\"" << fixed(H - 8, 2) << "\" text-anchor=\"middle\">"
    << xml_escape(style.x_label) << "</text>\n";
  o << "<text x=\"14\" y=\"" << fixed(top + ph / 2, 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
    << fixed(top + ph / 2, 2) << ")\">" << xml_escape(style.y_label) << "</text>\n</g>\n";

  for (std::size_t c = 0; c < curves.size(); ++c) {
    const char* color = kColors[c % std::size(kColors)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < curves[c].x.size(); ++i) {
      const double y = std::isfinite(curves[c].y[i]) ? curves[c].y[i] : y1;
      o << (first ? "" : " ") << fixed(px(curves[c].x[i]), 2) << ',' << fixed(py(y), 2);
      first = false;
    }
    o << "\"/>\n";
  }
  o << "<g class=\"legend\" font-size=\"11\">\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const double ly = top + 10 + 16.0 * static_cast<double>(c);
    o << "<line x1=\"" << fixed(left + pw + 10, 2) << "\" y1=\"" << fixed(ly, 2) << "\" x2=\""
      << fixed(left + pw + 30, 2) << "\" y2=\"" << fixed(ly, 2) << "\" stroke=\""
      << kColors[c % std::size(kColors)] << "\"/>\n";
    o << "<text x=\"" << fixed(left + pw + 35, 2) << "\" y=\"" << fixed(ly + 4, 2) << "\">"
      << xml_escape(curves[c].label) << "</text>\n";
  }
  o << "</g>\n</svg>\n";
  return o.str();
}

std::string render_pgm(const std::vector<std::vector<double>>& tiles, std::size_t side) {
  if (tiles.empty() || side == 0) throw ConfigError("render_pgm: nothing to render");
  double m = 0.0;
  for (const auto& t : tiles) {
    if (t.size() != side * side)
      throw ShapeError("render_pgm: tile of " + std::to_string(t.size()) + " values, expected " +
                       std::to_string(side * side));
    for (double v : t) m = std::max(m, std::fabs(v));
  }
  if (m == 0.0) m = 1.0;
  const std::size_t gap = 1, width = tiles.size() * (side + gap) - gap;
  std::ostringstream o;
  o << "P2\n" << width << ' ' << side << "\n255\n";
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t t = 0; t < tiles.size(); ++t) {
      for (std::size_t c = 0; c < side; ++c) {
        const double v = tiles[t][r * side + c];
        o << (t || c ? " " : "") << std::lround(127.5 + 127.5 * v / m);
      }
      if (t + 1 < tiles.size()) o << " 255";
    }
    o << '\n';
  }
  return o.str();
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path.string() + " for writing");
  f << content;
  if (!f) throw FormatError("failed writing " + path.string());
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << fnv1a(bytes.data(), bytes.size());
  return o.str();
}

nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config,
                             const std::filesystem::path& out_dir,
                             const std::vector<std::string>& artifacts) {
  nlohmann::json m;
  m["tool"] = "asym";
  m["version"] = kToolVersion;
  m["command"] = command;
  m["config"] = config;
  nlohmann::json hashes = nlohmann::json::object();
  for (const auto& a : artifacts) hashes[a] = file_hash(out_dir / a);
  m["artifacts"] = hashes;
  return m;
}

void write_manifest(const std::filesystem::path& out_dir, const nlohmann::json& manifest) {
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace asym::report
