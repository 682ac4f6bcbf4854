#pragma once

#include "pmc/metrics.hpp"
#include "pmc/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace pmc {

// Fraction of pixels whose bit differs, per bitplane, most significant first.
struct BitplaneDistances {
  std::array<double, 8> per_plane{};
  double mean = 0.0;
};

BitplaneDistances bitplane_hamming(const LumaFrame& a, const LumaFrame& b);

// One comparison row: how close a reconstruction is to the target frame.
struct ComparisonReport {
  MetricKind metric_used = MetricKind::Sad;
  double frame_mse = 0.0;
  double frame_ssim = 0.0;  // sliding 8x8 windows, stride 1, mean-aggregated
  double frame_vif = 0.0;   // target is the reference signal
  BitplaneDistances bitplane;
  double elapsed_seconds = 0.0;  // wall clock of the motion-estimation run
};

// Frame-level SSIM always uses the sliding scheme here regardless of
// params.ssim.window; that field configures block matching, not evaluation.
ComparisonReport compare_frames(const LumaFrame& target,
                                const LumaFrame& reconstructed,
                                double elapsed_seconds, MetricKind metric_used,
                                const MetricParams& params = {});

enum class ReportFormat { Csv, Json, Table };

ReportFormat report_format_from_string(const std::string& name);

// Deterministic serialization at 4 decimal places; csv and json round-trip
// losslessly at that precision.
std::string emit_report(const std::vector<ComparisonReport>& rows,
                        ReportFormat format);

}  // namespace pmc
