#include "pmc/pyramid.hpp"

#include "pmc/fft.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <tuple>

namespace pmc {
namespace {

constexpr double pi = 3.14159265358979323846;

// Raised-cosine transitions in log2 radius, one octave wide. lowpass_gain is
// 1 through cutoff/2 and 0 from cutoff on; highpass_gain is the power
// complement, so lo^2 + hi^2 == 1 everywhere.
double lowpass_gain(double r, double cutoff) {
  if (r <= cutoff * 0.5) return 1.0;
  if (r >= cutoff) return 0.0;
  return std::cos(pi * 0.5 * (1.0 + std::log2(r / cutoff)));
}

double highpass_gain(double r, double cutoff) {
  if (r <= cutoff * 0.5) return 0.0;
  if (r >= cutoff) return 1.0;
  return std::sin(pi * 0.5 * (1.0 + std::log2(r / cutoff)));
}

// Band `level` passes the octave around pi/2^(level+1); its support is
// [pi/2^(level+2), pi/2^level], which fits the Nyquist of a grid downsampled
// by 2^level with nothing aliased.
double radial_band_gain(double r, int level) {
  const double peak = pi / static_cast<double>(Eigen::Index{2} << level);
  return highpass_gain(r, peak) * lowpass_gain(r, 2.0 * peak);
}

// Single-sided cos^(K-1) window (zero over the opposite half-plane), which is
// what makes the spatial coefficients complex analytic.
double angular_gain(double theta, int orientation, int orientations) {
  const double center = pi * orientation / orientations;
  double delta = std::fmod(theta - center, 2.0 * pi);
  if (delta > pi) delta -= 2.0 * pi;
  if (delta < -pi) delta += 2.0 * pi;
  if (std::abs(delta) >= pi * 0.5) return 0.0;
  double fact_k1 = 1.0;       // (K-1)!
  double fact_2k2 = 1.0;      // (2K-2)!
  for (int i = 2; i <= orientations - 1; ++i) fact_k1 *= i;
  for (int i = 2; i <= 2 * (orientations - 1); ++i) fact_2k2 *= i;
  const double amp = std::pow(2.0, orientations - 1) * fact_k1 /
                     std::sqrt(orientations * fact_2k2);
  return 2.0 * amp * std::pow(std::cos(delta), orientations - 1);
}

double signed_frequency(Eigen::Index index, Eigen::Index n) {
  return 2.0 * pi *
         static_cast<double>(index <= n / 2 ? index : index - n) /
         static_cast<double>(n);
}

// One filtered-and-downsampled grid: gather the (sparse) masked spectrum,
// inverse transform at the stored size, sample the original region. The
// inverse normalization is folded into the gains; the column pass only visits
// columns the mask occupies and the row pass only the rows that get sampled.
struct BandOp {
  Eigen::Index grid_rows = 0, grid_cols = 0;  // spectrum / inverse-FFT dims
  Eigen::Index take_rows = 0, take_cols = 0;  // extracted original-region dims
  Eigen::Index take_stride = 1;               // spatial sampling step
  std::vector<int> dst;
  std::vector<int> src;
  std::vector<double> gain;
  std::vector<int> occupied_cols;
};

struct Plan {
  Eigen::Index ext_rows = 0, ext_cols = 0;
  int levels = 0, orientations = 0;
  std::vector<BandOp> bands;  // level-major
  BandOp lowpass;
};

// Central frequency set of size m drawn from a full axis of size n,
// as (full index, small index) pairs.
std::vector<std::pair<int, int>> central_indices(Eigen::Index m, Eigen::Index n) {
  std::vector<std::pair<int, int>> map;
  map.reserve(m);
  const Eigen::Index lo = -(m / 2);
  const Eigen::Index hi = (m - 1) / 2;
  for (Eigen::Index f = lo; f <= hi; ++f) {
    const Eigen::Index full = f >= 0 ? f : n + f;
    const Eigen::Index small = f >= 0 ? f : m + f;
    map.emplace_back(static_cast<int>(full), static_cast<int>(small));
  }
  return map;
}

BandOp make_band_op(Eigen::Index ext_rows, Eigen::Index ext_cols,
                    Eigen::Index in_rows, Eigen::Index in_cols, int scale_log2,
                    const std::function<double(double, double)>& mask) {
  BandOp op;
  const Eigen::Index s = Eigen::Index{1} << scale_log2;
  const bool divisible = ext_rows % s == 0 && ext_cols % s == 0;
  op.take_rows = in_rows / s;
  op.take_cols = in_cols / s;
  if (divisible) {
    op.grid_rows = ext_rows / s;
    op.grid_cols = ext_cols / s;
    op.take_stride = 1;
  } else {
    op.grid_rows = ext_rows;
    op.grid_cols = ext_cols;
    op.take_stride = s;
  }
  const double crop_gain = (divisible ? 1.0 / static_cast<double>(s * s) : 1.0) /
                           static_cast<double>(op.grid_rows * op.grid_cols);
  const auto rows = central_indices(op.grid_rows, ext_rows);
  const auto cols = central_indices(op.grid_cols, ext_cols);
  std::vector<bool> col_used(op.grid_cols, false);
  for (const auto& [full_r, small_r] : rows) {
    const double wy = signed_frequency(full_r, ext_rows);
    for (const auto& [full_c, small_c] : cols) {
      const double wx = signed_frequency(full_c, ext_cols);
      const double r = std::hypot(wx, wy);
      const double theta = std::atan2(wy, wx);
      const double g = mask(r, theta);
      if (g == 0.0) continue;
      op.dst.push_back(small_r * static_cast<int>(op.grid_cols) + small_c);
      op.src.push_back(full_r * static_cast<int>(ext_cols) + full_c);
      op.gain.push_back(g * crop_gain);
      col_used[small_c] = true;
    }
  }
  for (Eigen::Index c = 0; c < op.grid_cols; ++c)
    if (col_used[c]) op.occupied_cols.push_back(static_cast<int>(c));
  return op;
}

const Plan& plan_for(Eigen::Index in_rows, Eigen::Index in_cols,
                     const PyramidConfig& config) {
  using Key = std::tuple<Eigen::Index, Eigen::Index, int, int>;
  thread_local std::map<Key, Plan> cache;
  const Key key{in_rows, in_cols, config.levels, config.orientations};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  Plan plan;
  plan.ext_rows = 2 * in_rows;
  plan.ext_cols = 2 * in_cols;
  plan.levels = config.levels;
  plan.orientations = config.orientations;
  for (int level = 0; level < config.levels; ++level) {
    for (int o = 0; o < config.orientations; ++o) {
      plan.bands.push_back(make_band_op(
          plan.ext_rows, plan.ext_cols, in_rows, in_cols, level,
          [&](double r, double theta) {
            return radial_band_gain(r, level) *
                   angular_gain(theta, o, config.orientations);
          }));
    }
  }
  const double low_cutoff = pi / static_cast<double>(Eigen::Index{1} << config.levels);
  plan.lowpass = make_band_op(plan.ext_rows, plan.ext_cols, in_rows, in_cols,
                              config.levels, [&](double r, double) {
                                return lowpass_gain(r, low_cutoff);
                              });
  return cache.emplace(key, std::move(plan)).first->second;
}

void validate(const PlaneD& image, const PyramidConfig& config) {
  if (config.levels < 1)
    throw InvalidArgument("pyramid: levels must be >= 1");
  if (config.orientations < 2)
    throw InvalidArgument("pyramid: orientations must be >= 2");
  const Eigen::Index min_side = std::min(image.rows(), image.cols());
  const Eigen::Index need = (Eigen::Index{1} << config.levels) * 4;
  if (min_side < need)
    throw InvalidArgument("pyramid: input side " + std::to_string(min_side) +
                          " is too small for " + std::to_string(config.levels) +
                          " levels (needs >= " + std::to_string(need) + ")");
}

// Applies one BandOp against the full spectrum and writes the sampled
// original-region coefficients into `out`. `grid` and `column` are reused
// scratch buffers.
void apply_band(const BandOp& op, const PlaneC& spectrum, PlaneC& grid,
                std::vector<std::complex<double>>& column, PlaneC& out) {
  grid.setZero(op.grid_rows, op.grid_cols);
  const std::complex<double>* f = spectrum.data();
  std::complex<double>* g = grid.data();
  for (std::size_t t = 0; t < op.dst.size(); ++t) {
    const std::complex<double> v = f[op.src[t]];
    g[op.dst[t]] = std::complex<double>(v.real() * op.gain[t], v.imag() * op.gain[t]);
  }
  const Eigen::Index rows = op.grid_rows;
  const Eigen::Index cols = op.grid_cols;
  if (column.size() < static_cast<std::size_t>(rows)) column.resize(rows);
  for (const int c : op.occupied_cols) {
    std::complex<double>* base = g + c;
    for (Eigen::Index r = 0; r < rows; ++r) column[r] = base[r * cols];
    fft::transform(column.data(), rows, true);
    for (Eigen::Index r = 0; r < rows; ++r) base[r * cols] = column[r];
  }
  out.resize(op.take_rows, op.take_cols);
  for (Eigen::Index i = 0; i < op.take_rows; ++i) {
    std::complex<double>* row = g + i * op.take_stride * cols;
    fft::transform(row, cols, true);
    for (Eigen::Index j = 0; j < op.take_cols; ++j)
      out(i, j) = row[j * op.take_stride];
  }
}

}  // namespace

int max_pyramid_levels(Eigen::Index width, Eigen::Index height) {
  const Eigen::Index min_side = std::min(width, height);
  int levels = 0;
  while ((Eigen::Index{1} << (levels + 1)) * 4 <= min_side) ++levels;
  return levels;
}

PyramidConfig clamp_levels(PyramidConfig config, Eigen::Index width,
                           Eigen::Index height) {
  config.levels = std::min(config.levels, max_pyramid_levels(width, height));
  return config;
}

PlaneD mirror_extend(const PlaneD& image) {
  const Eigen::Index h = image.rows();
  const Eigen::Index w = image.cols();
  PlaneD out(2 * h, 2 * w);
  out.topLeftCorner(h, w) = image;
  out.topRightCorner(h, w) = image.rowwise().reverse();
  out.bottomLeftCorner(h, w) = image.colwise().reverse();
  out.bottomRightCorner(h, w) = image.reverse();
  return out;
}

void decompose_into(const PlaneD& image, const PyramidConfig& config,
                    ComplexPyramid& pyr) {
  validate(image, config);
  const Plan& plan = plan_for(image.rows(), image.cols(), config);

  pyr.levels = config.levels;
  pyr.orientations = config.orientations;
  pyr.input_rows = image.rows();
  pyr.input_cols = image.cols();
  pyr.subbands.resize(plan.bands.size());

  thread_local PlaneC spectrum;
  const Eigen::Index h = image.rows();
  const Eigen::Index w = image.cols();
  spectrum.resize(2 * h, 2 * w);
  for (Eigen::Index r = 0; r < h; ++r) {
    const double* src = image.data() + r * w;
    std::complex<double>* top = spectrum.data() + r * 2 * w;
    std::complex<double>* bottom = spectrum.data() + (2 * h - 1 - r) * 2 * w;
    for (Eigen::Index c = 0; c < w; ++c) {
      const std::complex<double> v(src[c], 0.0);
      top[c] = v;
      top[2 * w - 1 - c] = v;
      bottom[c] = v;
      bottom[2 * w - 1 - c] = v;
    }
  }
  fft::forward2d(spectrum);

  thread_local PlaneC grid;
  thread_local std::vector<std::complex<double>> column;
  for (std::size_t i = 0; i < plan.bands.size(); ++i)
    apply_band(plan.bands[i], spectrum, grid, column, pyr.subbands[i]);
  thread_local PlaneC low;
  apply_band(plan.lowpass, spectrum, grid, column, low);
  pyr.residual_lowpass = low.real();
}

ComplexPyramid decompose(const PlaneD& image, const PyramidConfig& config) {
  ComplexPyramid pyr;
  decompose_into(image, config, pyr);
  return pyr;
}

void decompose_into(const ConstBlockU8& image, const PyramidConfig& config,
                    ComplexPyramid& pyr) {
  thread_local PlaneD buffer;
  buffer = image.cast<double>();
  decompose_into(buffer, config, pyr);
}

ComplexPyramid decompose(const ConstBlockU8& image, const PyramidConfig& config) {
  ComplexPyramid pyr;
  decompose_into(image, config, pyr);
  return pyr;
}

PlaneD band_transfer(Eigen::Index rows, Eigen::Index cols, int level,
                     int orientation, const PyramidConfig& config) {
  PlaneD mask(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double wy = signed_frequency(i, rows);
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double wx = signed_frequency(j, cols);
      mask(i, j) = radial_band_gain(std::hypot(wx, wy), level) *
                   angular_gain(std::atan2(wy, wx), orientation,
                                config.orientations);
    }
  }
  return mask;
}

PlaneD lowpass_transfer(Eigen::Index rows, Eigen::Index cols,
                        const PyramidConfig& config) {
  const double cutoff = pi / static_cast<double>(Eigen::Index{1} << config.levels);
  PlaneD mask(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double wy = signed_frequency(i, rows);
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double wx = signed_frequency(j, cols);
      mask(i, j) = lowpass_gain(std::hypot(wx, wy), cutoff);
    }
  }
  return mask;
}

}  // namespace pmc
