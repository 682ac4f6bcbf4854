#include "pmc/eval.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace pmc {
namespace {

double round4(double v) {
  const double r = std::round(v * 10000.0) / 10000.0;
  return r == 0.0 ? 0.0 : r;  // canonicalize -0
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", round4(v));
  return buf;
}

const char* csv_header =
    "metric,mse,ssim,vif,dist,seconds,bit7,bit6,bit5,bit4,bit3,bit2,bit1,bit0";

std::string emit_csv(const std::vector<ComparisonReport>& rows) {
  std::ostringstream out;
  out << csv_header << "\n";
  for (const ComparisonReport& r : rows) {
    out << to_string(r.metric_used) << "," << fixed4(r.frame_mse) << ","
        << fixed4(r.frame_ssim) << "," << fixed4(r.frame_vif) << ","
        << fixed4(r.bitplane.mean) << "," << fixed4(r.elapsed_seconds);
    for (double p : r.bitplane.per_plane) out << "," << fixed4(p);
    out << "\n";
  }
  return out.str();
}

std::string emit_json(const std::vector<ComparisonReport>& rows) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const ComparisonReport& r : rows) {
    nlohmann::ordered_json row;
    row["metric"] = to_string(r.metric_used);
    row["mse"] = round4(r.frame_mse);
    row["ssim"] = round4(r.frame_ssim);
    row["vif"] = round4(r.frame_vif);
    row["dist"] = round4(r.bitplane.mean);
    row["seconds"] = round4(r.elapsed_seconds);
    nlohmann::ordered_json planes = nlohmann::ordered_json::array();
    for (double p : r.bitplane.per_plane) planes.push_back(round4(p));
    row["bitplanes"] = planes;
    doc.push_back(row);
  }
  return doc.dump(2) + "\n";
}

std::string emit_table(const std::vector<ComparisonReport>& rows) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-8s %10s %8s %8s %8s %9s  %s\n", "metric",
                "mse", "ssim", "vif", "dist", "seconds", "bitplanes msb..lsb");
  out << line;
  for (const ComparisonReport& r : rows) {
    std::snprintf(line, sizeof(line), "%-8s %10.4f %8.4f %8.4f %8.4f %9.4f  [",
                  to_string(r.metric_used), round4(r.frame_mse),
                  round4(r.frame_ssim), round4(r.frame_vif),
                  round4(r.bitplane.mean), round4(r.elapsed_seconds));
    out << line;
    for (std::size_t i = 0; i < r.bitplane.per_plane.size(); ++i)
      out << (i == 0 ? "" : " ") << fixed4(r.bitplane.per_plane[i]);
    out << "]\n";
  }
  return out.str();
}

}  // namespace

BitplaneDistances bitplane_hamming(const LumaFrame& a, const LumaFrame& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidArgument("bitplane_hamming: dimension mismatch");
  std::array<std::int64_t, 8> flips{};
  const std::uint8_t* pa = a.data();
  const std::uint8_t* pb = b.data();
  const Eigen::Index n = a.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const unsigned diff = pa[i] ^ pb[i];
    for (int bit = 0; bit < 8; ++bit) flips[bit] += (diff >> (7 - bit)) & 1u;
  }
  BitplaneDistances out;
  double total = 0.0;
  for (int bit = 0; bit < 8; ++bit) {
    out.per_plane[bit] = static_cast<double>(flips[bit]) / static_cast<double>(n);
    total += out.per_plane[bit];
  }
  out.mean = total / 8.0;
  return out;
}

ComparisonReport compare_frames(const LumaFrame& target,
                                const LumaFrame& reconstructed,
                                double elapsed_seconds, MetricKind metric_used,
                                const MetricParams& params) {
  if (target.rows() != reconstructed.rows() ||
      target.cols() != reconstructed.cols())
    throw InvalidArgument("compare_frames: dimension mismatch");
  ComparisonReport report;
  report.metric_used = metric_used;
  report.elapsed_seconds = elapsed_seconds;
  report.frame_mse = mse(target, reconstructed);
  SsimParams frame_ssim = params.ssim;
  frame_ssim.window = SsimParams::Window::Sliding;
  frame_ssim.window_size = 8;
  frame_ssim.stride = 1;
  report.frame_ssim = ssim_score(target, reconstructed, frame_ssim);
  report.frame_vif = vif_score(target, reconstructed, params.vif);
  report.bitplane = bitplane_hamming(target, reconstructed);
  return report;
}

ReportFormat report_format_from_string(const std::string& name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  if (name == "table") return ReportFormat::Table;
  throw InvalidArgument("unknown report format '" + name + "'");
}

std::string emit_report(const std::vector<ComparisonReport>& rows,
                        ReportFormat format) {
  if (rows.empty()) throw InvalidArgument("emit_report: no rows");
  switch (format) {
    case ReportFormat::Csv: return emit_csv(rows);
    case ReportFormat::Json: return emit_json(rows);
    case ReportFormat::Table: return emit_table(rows);
  }
  throw InvalidArgument("unknown report format");
}

}  // namespace pmc
