#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "asym/fed.hpp"
#include "asym/probes.hpp"
#include "asym/scan.hpp"

namespace asym::report {

inline constexpr const char* kToolVersion = "0.1.0";

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

std::string scan_csv(const ScanResult& r);                                // lambda,error,ce
std::string soup_csv(const SoupReport& r);                                // epoch,ssr_ia,ssr_ib,ssr_ab,gap
std::string softmax_metrics_csv(const std::vector<probes::SoftmaxMetricsRow>& rows);
std::string confusion_csv(const std::vector<std::pair<double, probes::ActivationConfusion>>& rows);
std::string rounds_csv(const std::vector<fed::RoundLog>& rounds);         // round,acc,mean_ssr,selected_clients
std::string compare_csv(const std::vector<fed::CompareRow>& rows);
std::string relu_summary_csv(const probes::ReluSimResult& r);            // lambda,mean,std,active_fraction
std::string relu_histogram_csv(const probes::ReluSimResult& r, std::size_t row);  // bin_lo,bin_hi,count
std::string group_stats_csv(const GroupStats& stats);                     // group,mean,std

struct Curve {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct SvgStyle {
  std::string title;
  std::string x_label = "lambda";
  std::string y_label;
  int width = 640;
  int height = 420;
};

// Axes, one polyline per curve, one legend entry per curve.
std::string render_svg(const std::vector<Curve>& curves, const SvgStyle& style = {});

// Grayscale plain PGM with the vectors tiled left to right as side x side images.
// Zero maps to mid gray; the color range is symmetric about zero.
std::string render_pgm(const std::vector<std::vector<double>>& tiles, std::size_t side);

void write_text(const std::filesystem::path& path, const std::string& content);
std::string file_hash(const std::filesystem::path& path);

// {"tool", "version", "command", "config", "artifacts": {name: hash}}
nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config,
                             const std::filesystem::path& out_dir,
                             const std::vector<std::string>& artifacts);
void write_manifest(const std::filesystem::path& out_dir, const nlohmann::json& manifest);

}  // namespace asym::report
