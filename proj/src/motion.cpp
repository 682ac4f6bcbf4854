#include "pmc/motion.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>
#include <vector>

namespace pmc {
namespace {

void validate_config(const SearchConfig& config) {
  if (config.block_size != 8 && config.block_size != 16)
    throw InvalidArgument("search: block size must be 8 or 16");
  if (config.search_radius < 0)
    throw InvalidArgument("search: radius must be >= 0");
}

void validate_frame_pair(const LumaFrame& reference, const LumaFrame& target,
                         const SearchConfig& config) {
  if (reference.rows() != target.rows() || reference.cols() != target.cols())
    throw InvalidArgument("search: reference and target dimensions differ");
  if (target.rows() % config.block_size != 0 ||
      target.cols() % config.block_size != 0)
    throw InvalidArgument("search: frame dimensions must be divisible by the block size");
}

// Candidate comparison: maximize score; among ties minimize dx^2+dy^2; among
// remaining ties smallest dy, then smallest dx. Exact comparisons, no epsilon.
struct Best {
  double score = -std::numeric_limits<double>::infinity();
  int dx = 0, dy = 0;
  std::int64_t norm2 = std::numeric_limits<std::int64_t>::max();

  bool accept(double s, int cand_dx, int cand_dy) {
    const std::int64_t n2 = static_cast<std::int64_t>(cand_dx) * cand_dx +
                            static_cast<std::int64_t>(cand_dy) * cand_dy;
    const bool better =
        s > score ||
        (s == score &&
         (n2 < norm2 || (n2 == norm2 && (cand_dy < dy || (cand_dy == dy && cand_dx < dx)))));
    if (better) {
      score = s;
      dx = cand_dx;
      dy = cand_dy;
      norm2 = n2;
    }
    return better;
  }
};

SearchResult run_search(const LumaFrame& target, const BlockView& block,
                        const LumaFrame& reference, const SearchConfig& config,
                        BlockScorer& scorer) {
  if (!block.fits(target.cols(), target.rows()))
    throw InvalidArgument("search: target block out of bounds");
  scorer.set_target(ConstBlockU8(target.block(block.y, block.x, block.size, block.size)));
  const DisplacementBounds bounds = displacement_bounds(
      reference.cols(), reference.rows(), block, config.search_radius);
  Best best;
  for (int dv = bounds.min_dy; dv <= bounds.max_dy; ++dv) {
    for (int du = bounds.min_dx; du <= bounds.max_dx; ++du) {
      const double s = scorer.score(ConstBlockU8(reference.block(
          block.y + dv, block.x + du, block.size, block.size)));
      best.accept(s, du, dv);
    }
  }
  return {{best.dx, best.dy}, best.score};
}

}  // namespace

DisplacementBounds displacement_bounds(Eigen::Index frame_width,
                                       Eigen::Index frame_height,
                                       const BlockView& block, int radius) {
  DisplacementBounds b;
  b.min_dx = static_cast<int>(std::max<Eigen::Index>(-radius, -block.x));
  b.max_dx = static_cast<int>(
      std::min<Eigen::Index>(radius, frame_width - block.size - block.x));
  b.min_dy = static_cast<int>(std::max<Eigen::Index>(-radius, -block.y));
  b.max_dy = static_cast<int>(
      std::min<Eigen::Index>(radius, frame_height - block.size - block.y));
  return b;
}

SearchResult search_block(const LumaFrame& target, const BlockView& block,
                          const LumaFrame& reference, const SearchConfig& config) {
  validate_config(config);
  if (reference.rows() != target.rows() || reference.cols() != target.cols())
    throw InvalidArgument("search: reference and target dimensions differ");
  const auto scorer = make_block_scorer(config.metric, config.params);
  return run_search(target, block, reference, config, *scorer);
}

MotionField estimate_motion_field(const LumaFrame& reference,
                                  const LumaFrame& target,
                                  const SearchConfig& config, int threads) {
  validate_config(config);
  validate_frame_pair(reference, target, config);

  MotionField field;
  field.frame_width = target.cols();
  field.frame_height = target.rows();
  field.block_size = config.block_size;
  field.search_radius = config.search_radius;
  field.metric = config.metric;
  const Eigen::Index rows = target.rows() / config.block_size;
  const Eigen::Index cols = target.cols() / config.block_size;
  field.dx.setZero(rows, cols);
  field.dy.setZero(rows, cols);
  field.score.setZero(rows, cols);

  const Eigen::Index total = rows * cols;
  int worker_count = threads > 0
                         ? threads
                         : static_cast<int>(std::thread::hardware_concurrency());
  if (worker_count < 1) worker_count = 1;
  worker_count = static_cast<int>(
      std::min<Eigen::Index>(worker_count, total > 0 ? total : 1));

  const auto worker_body = [&](BlockScorer& scorer, Eigen::Index index) {
    const Eigen::Index br = index / cols;
    const Eigen::Index bc = index % cols;
    const BlockView view{bc * config.block_size, br * config.block_size,
                         config.block_size};
    const SearchResult result = run_search(target, view, reference, config, scorer);
    field.dx(br, bc) = result.mv.dx;
    field.dy(br, bc) = result.mv.dy;
    field.score(br, bc) = result.score;
  };

  if (worker_count == 1) {
    const auto scorer = make_block_scorer(config.metric, config.params);
    for (Eigen::Index i = 0; i < total; ++i) worker_body(*scorer, i);
    return field;
  }

  std::atomic<Eigen::Index> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> failures(worker_count);
  pool.reserve(worker_count);
  for (int t = 0; t < worker_count; ++t) {
    pool.emplace_back([&, t] {
      try {
        const auto scorer = make_block_scorer(config.metric, config.params);
        for (;;) {
          const Eigen::Index i = next.fetch_add(1, std::memory_order_relaxed);
          if (i >= total) break;
          worker_body(*scorer, i);
        }
      } catch (...) {
        failures[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& failure : failures)
    if (failure) std::rethrow_exception(failure);
  return field;
}

LumaFrame compensate(const LumaFrame& reference, const MotionField& field) {
  if (reference.cols() != field.frame_width ||
      reference.rows() != field.frame_height)
    throw InvalidArgument("compensate: field geometry does not match the reference frame");
  const int bs = field.block_size;
  if (bs <= 0 || field.frame_width % bs != 0 || field.frame_height % bs != 0 ||
      field.block_rows() != field.frame_height / bs ||
      field.block_cols() != field.frame_width / bs)
    throw InvalidArgument("compensate: inconsistent motion field grid");

  LumaFrame out(reference.rows(), reference.cols());
  for (Eigen::Index br = 0; br < field.block_rows(); ++br) {
    for (Eigen::Index bc = 0; bc < field.block_cols(); ++bc) {
      const Eigen::Index sx = bc * bs + field.dx(br, bc);
      const Eigen::Index sy = br * bs + field.dy(br, bc);
      if (sx < 0 || sy < 0 || sx + bs > reference.cols() ||
          sy + bs > reference.rows())
        throw InvalidArgument("compensate: vector leaves the reference frame at block (" +
                              std::to_string(br) + ", " + std::to_string(bc) + ")");
      out.block(br * bs, bc * bs, bs, bs) = reference.block(sy, sx, bs, bs);
    }
  }
  return out;
}

void write_motion_field(const MotionField& field, std::ostream& out) {
  out << "width,height,block_size,radius,metric\n";
  out << field.frame_width << "," << field.frame_height << ","
      << field.block_size << "," << field.search_radius << ","
      << to_string(field.metric) << "\n";
  out << "block_row,block_col,dx,dy,score\n";
  char line[128];
  for (Eigen::Index br = 0; br < field.block_rows(); ++br) {
    for (Eigen::Index bc = 0; bc < field.block_cols(); ++bc) {
      std::snprintf(line, sizeof(line), "%lld,%lld,%d,%d,%.6f\n",
                    static_cast<long long>(br), static_cast<long long>(bc),
                    field.dx(br, bc), field.dy(br, bc), field.score(br, bc));
      out << line;
    }
  }
  if (!out) throw IoError(IoError::Kind::WriteFailure, "motion field: write failed");
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string next_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line))
    throw IoError(IoError::Kind::TruncatedStream,
                  std::string("motion field: missing ") + what);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

long parse_long(const std::string& s, const char* what) {
  long value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw IoError(IoError::Kind::MalformedHeader,
                  std::string("motion field: bad ") + what + " '" + s + "'");
  return value;
}

}  // namespace

MotionField read_motion_field(std::istream& in) {
  if (next_line(in, "header") != "width,height,block_size,radius,metric")
    throw IoError(IoError::Kind::MalformedHeader, "motion field: bad header line");
  const auto geometry = split_csv(next_line(in, "geometry row"));
  if (geometry.size() != 5)
    throw IoError(IoError::Kind::MalformedHeader, "motion field: bad geometry row");

  MotionField field;
  field.frame_width = parse_long(geometry[0], "width");
  field.frame_height = parse_long(geometry[1], "height");
  field.block_size = static_cast<int>(parse_long(geometry[2], "block size"));
  field.search_radius = static_cast<int>(parse_long(geometry[3], "radius"));
  field.metric = metric_from_string(geometry[4]);
  if (field.block_size <= 0 || field.frame_width <= 0 || field.frame_height <= 0 ||
      field.frame_width % field.block_size != 0 ||
      field.frame_height % field.block_size != 0)
    throw IoError(IoError::Kind::MalformedHeader, "motion field: inconsistent geometry");

  if (next_line(in, "column header") != "block_row,block_col,dx,dy,score")
    throw IoError(IoError::Kind::MalformedHeader, "motion field: bad column header");

  const Eigen::Index rows = field.frame_height / field.block_size;
  const Eigen::Index cols = field.frame_width / field.block_size;
  field.dx.setZero(rows, cols);
  field.dy.setZero(rows, cols);
  field.score.setZero(rows, cols);
  for (Eigen::Index br = 0; br < rows; ++br) {
    for (Eigen::Index bc = 0; bc < cols; ++bc) {
      const auto fields = split_csv(next_line(in, "block row"));
      if (fields.size() != 5)
        throw IoError(IoError::Kind::MalformedHeader, "motion field: bad block row");
      if (parse_long(fields[0], "block row index") != br ||
          parse_long(fields[1], "block col index") != bc)
        throw IoError(IoError::Kind::MalformedHeader,
                      "motion field: rows out of order");
      field.dx(br, bc) = static_cast<int>(parse_long(fields[2], "dx"));
      field.dy(br, bc) = static_cast<int>(parse_long(fields[3], "dy"));
      field.score(br, bc) = std::strtod(fields[4].c_str(), nullptr);
    }
  }
  return field;
}

}  // namespace pmc
