#pragma once

#include "pmc/metrics.hpp"
#include "pmc/types.hpp"

#include <iosfwd>

namespace pmc {

struct SearchConfig {
  int block_size = 16;     // 8 or 16
  int search_radius = 16;  // max displacement per axis; window side = size + 2r
  MetricKind metric = MetricKind::Sad;
  MetricParams params;
};

// Displacement from the target-block origin to the matched reference-block
// origin, in integer pixels.
struct MotionVector {
  int dx = 0;
  int dy = 0;
};

struct SearchResult {
  MotionVector mv;
  double score = 0.0;  // unified score of the winning candidate
};

// Inclusive displacement range keeping a block fully inside a frame. The
// window is clamped at frame borders; no candidate reads out of bounds.
struct DisplacementBounds {
  int min_dx = 0, max_dx = 0;
  int min_dy = 0, max_dy = 0;

  std::int64_t count() const {
    return static_cast<std::int64_t>(max_dx - min_dx + 1) * (max_dy - min_dy + 1);
  }
};

DisplacementBounds displacement_bounds(Eigen::Index frame_width,
                                       Eigen::Index frame_height,
                                       const BlockView& block, int radius);

// One per-block full search: evaluates the unified score at every candidate
// displacement and returns the maximizer. Ties break toward the smallest
// dx^2+dy^2, then the smallest dy, then the smallest dx.
SearchResult search_block(const LumaFrame& target, const BlockView& block,
                          const LumaFrame& reference, const SearchConfig& config);

struct MotionField {
  Eigen::Index frame_width = 0;
  Eigen::Index frame_height = 0;
  int block_size = 16;
  int search_radius = 16;
  MetricKind metric = MetricKind::Sad;
  // One entry per block, indexed (block_row, block_col).
  Eigen::ArrayXXi dx;
  Eigen::ArrayXXi dy;
  Eigen::ArrayXXd score;

  Eigen::Index block_rows() const { return dx.rows(); }
  Eigen::Index block_cols() const { return dx.cols(); }
};

// Tiles the target frame and runs search_block per tile against the
// reference. threads <= 0 picks the hardware count; results are bit-identical
// for every thread count.
MotionField estimate_motion_field(const LumaFrame& reference,
                                  const LumaFrame& target,
                                  const SearchConfig& config, int threads = 0);

// Predicted frame: for each block position, copies the reference block
// displaced by that block's vector. No residual is added.
LumaFrame compensate(const LumaFrame& reference, const MotionField& field);

// Text/CSV serialization: two header lines (geometry and column names per
// block row) and one row per block.
void write_motion_field(const MotionField& field, std::ostream& out);
MotionField read_motion_field(std::istream& in);

}  // namespace pmc
