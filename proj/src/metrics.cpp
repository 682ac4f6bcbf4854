#include "pmc/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace pmc {
namespace {

using C = std::complex<double>;

// Patch variances at or below this level are indistinguishable from transform
// arithmetic noise (8-bit content either produces exact zeros plus rounding
// dust below ~1e-20 or genuine structure above ~1e-4). A flat reference patch
// carries no information, so it contributes to neither information sum;
// without this cut, spurious small-sample regressions against an active
// distorted patch inflate the numerator with no denominator weight.
constexpr double flat_variance = 1e-8;

// Guards the gain estimate on degenerate patches.
constexpr double gain_regularizer = 1e-10;

void require_same_shape(const ConstBlockU8& a, const ConstBlockU8& b,
                        const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidArgument(std::string(op) + ": shape mismatch (" +
                          std::to_string(a.cols()) + "x" + std::to_string(a.rows()) +
                          " vs " + std::to_string(b.cols()) + "x" +
                          std::to_string(b.rows()) + ")");
}

std::int64_t abs_diff_sum(const ConstBlockU8& a, const ConstBlockU8& b) {
  std::int64_t acc = 0;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const std::uint8_t* pa = a.data() + r * a.outerStride();
    const std::uint8_t* pb = b.data() + r * b.outerStride();
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      acc += std::abs(static_cast<int>(pa[c]) - static_cast<int>(pb[c]));
  }
  return acc;
}

std::int64_t sq_diff_sum(const ConstBlockU8& a, const ConstBlockU8& b) {
  std::int64_t acc = 0;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const std::uint8_t* pa = a.data() + r * a.outerStride();
    const std::uint8_t* pb = b.data() + r * b.outerStride();
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      const int d = static_cast<int>(pa[c]) - static_cast<int>(pb[c]);
      acc += d * d;
    }
  }
  return acc;
}

// Integer raw sums; exact, so results are independent of traversal order.
struct RawSums {
  std::int64_t count = 0;
  std::int64_t sum = 0;
  std::int64_t sum_sq = 0;
};

RawSums block_sums(const ConstBlockU8& x) {
  RawSums s;
  s.count = x.size();
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const std::uint8_t* p = x.data() + r * x.outerStride();
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const std::int64_t v = p[c];
      s.sum += v;
      s.sum_sq += v * v;
    }
  }
  return s;
}

std::int64_t cross_sum(const ConstBlockU8& a, const ConstBlockU8& b) {
  std::int64_t acc = 0;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const std::uint8_t* pa = a.data() + r * a.outerStride();
    const std::uint8_t* pb = b.data() + r * b.outerStride();
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      acc += static_cast<std::int64_t>(pa[c]) * pb[c];
  }
  return acc;
}

// Luminance * contrast * structure from one statistics window. sigma_x*sigma_y
// is evaluated as sqrt(var_x*var_y), which keeps the score of identical
// inputs at exactly 1.
double ssim_from_sums(const RawSums& a, const RawSums& b, std::int64_t cross,
                      const SsimParams& p) {
  const double n = static_cast<double>(a.count);
  const double mu_x = static_cast<double>(a.sum) / n;
  const double mu_y = static_cast<double>(b.sum) / n;
  const double var_x = std::max(0.0, static_cast<double>(a.sum_sq) / n - mu_x * mu_x);
  const double var_y = std::max(0.0, static_cast<double>(b.sum_sq) / n - mu_y * mu_y);
  const double cov = static_cast<double>(cross) / n - mu_x * mu_y;
  const double sigma_xy = std::sqrt(var_x * var_y);
  const double c1 = p.c1();
  const double c2 = p.c2();
  const double c3 = p.c3();
  const double luminance = (2.0 * mu_x * mu_y + c1) / (mu_x * mu_x + mu_y * mu_y + c1);
  const double contrast = (2.0 * sigma_xy + c2) / (var_x + var_y + c2);
  const double structure = (cov + c3) / (sigma_xy + c3);
  return luminance * contrast * structure;
}

double ssim_whole_block(const ConstBlockU8& a, const ConstBlockU8& b,
                        const SsimParams& p) {
  if (a.size() < 2)
    throw InvalidArgument("ssim: whole-block statistics need at least 2 samples");
  return ssim_from_sums(block_sums(a), block_sums(b), cross_sum(a, b), p);
}

// Summed-area table with a zero top row and left column. All entries are
// exact integers well below 2^53.
PlaneD integral_table(const ConstBlockU8& x, bool squared) {
  PlaneD s(x.rows() + 1, x.cols() + 1);
  s.row(0).setZero();
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const std::uint8_t* p = x.data() + r * x.outerStride();
    s(r + 1, 0) = 0.0;
    double row_acc = 0.0;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double v = static_cast<double>(p[c]);
      row_acc += squared ? v * v : v;
      s(r + 1, c + 1) = s(r, c + 1) + row_acc;
    }
  }
  return s;
}

PlaneD integral_cross_table(const ConstBlockU8& a, const ConstBlockU8& b) {
  PlaneD s(a.rows() + 1, a.cols() + 1);
  s.row(0).setZero();
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const std::uint8_t* pa = a.data() + r * a.outerStride();
    const std::uint8_t* pb = b.data() + r * b.outerStride();
    s(r + 1, 0) = 0.0;
    double row_acc = 0.0;
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      row_acc += static_cast<double>(pa[c]) * pb[c];
      s(r + 1, c + 1) = s(r, c + 1) + row_acc;
    }
  }
  return s;
}

std::int64_t window_sum(const PlaneD& table, Eigen::Index y, Eigen::Index x,
                        Eigen::Index w) {
  const double v = table(y + w, x + w) - table(y, x + w) - table(y + w, x) + table(y, x);
  return static_cast<std::int64_t>(v);
}

double ssim_sliding(const ConstBlockU8& a, const ConstBlockU8& b,
                    const SsimParams& p) {
  const Eigen::Index w = p.window_size;
  if (w < 2) throw InvalidArgument("ssim: sliding window must be >= 2");
  if (p.stride < 1) throw InvalidArgument("ssim: stride must be >= 1");
  if (a.rows() < w || a.cols() < w)
    throw InvalidArgument("ssim: window larger than input");
  const PlaneD sx = integral_table(a, false);
  const PlaneD sy = integral_table(b, false);
  const PlaneD sxx = integral_table(a, true);
  const PlaneD syy = integral_table(b, true);
  const PlaneD sxy = integral_cross_table(a, b);
  double acc = 0.0;
  std::int64_t windows = 0;
  for (Eigen::Index y = 0; y + w <= a.rows(); y += p.stride) {
    for (Eigen::Index x = 0; x + w <= a.cols(); x += p.stride) {
      RawSums ra{w * w, window_sum(sx, y, x, w), window_sum(sxx, y, x, w)};
      RawSums rb{w * w, window_sum(sy, y, x, w), window_sum(syy, y, x, w)};
      acc += ssim_from_sums(ra, rb, window_sum(sxy, y, x, w), p);
      ++windows;
    }
  }
  return acc / static_cast<double>(windows);
}

double abs_c(const C& z) {
  return std::sqrt(z.real() * z.real() + z.imag() * z.imag());
}

double cw_ssim_from_pyramids(const ComplexPyramid& pa, const ComplexPyramid& pb,
                             double k_stab) {
  double total = 0.0;
  const std::size_t bands = pa.subbands.size();
  for (std::size_t i = 0; i < bands; ++i) {
    const PlaneC& ca = pa.subbands[i];
    const PlaneC& cb = pb.subbands[i];
    double mag_cross = 0.0;   // sum |c_a| |c_b|, equals sum |c_a conj(c_b)|
    double mag_energy = 0.0;  // sum |c_a|^2 + |c_b|^2
    double cross_re = 0.0;    // sum c_a conj(c_b)
    double cross_im = 0.0;
    const C* va = ca.data();
    const C* vb = cb.data();
    const Eigen::Index count = ca.size();
    for (Eigen::Index j = 0; j < count; ++j) {
      const double ar = va[j].real(), ai = va[j].imag();
      const double br = vb[j].real(), bi = vb[j].imag();
      const double na = ar * ar + ai * ai;
      const double nb = br * br + bi * bi;
      mag_cross += std::sqrt(na * nb);
      mag_energy += na + nb;
      cross_re += ar * br + ai * bi;
      cross_im += ai * br - ar * bi;
    }
    const double magnitude_term = (2.0 * mag_cross + k_stab) / (mag_energy + k_stab);
    const double phase_term =
        (2.0 * std::sqrt(cross_re * cross_re + cross_im * cross_im) + k_stab) /
        (2.0 * mag_cross + k_stab);
    total += magnitude_term * phase_term;
  }
  return total / static_cast<double>(bands);
}

PyramidConfig pyramid_config_for(const PyramidConfig& requested,
                                 const ConstBlockU8& x, const char* op) {
  if (max_pyramid_levels(x.cols(), x.rows()) < 1)
    throw InvalidArgument(std::string(op) +
                          ": input too small for any pyramid level (needs >= 8 "
                          "samples per side)");
  return clamp_levels(requested, x.cols(), x.rows());
}

// Reference-side state of the information-fidelity measure: per overlapping
// patch of each oriented band, the mean, the (clamped) variance, and the
// reference-channel information term. Patches slide with unit stride, which
// keeps the small-sample statistics from deciding matches on their own.
struct VifReference {
  struct Patch {
    double mean = 0.0;
    double variance = 0.0;
    double den_term = 0.0;
    bool flat = false;
  };
  std::vector<PlaneD> re;  // real parts of the oriented bands, level-major
  std::vector<std::vector<Patch>> patches;
  int patch_size = 3;
  double sigma_n_sq = 0.4;
};

VifReference make_vif_reference(const ComplexPyramid& pyr, const VifParams& p) {
  VifReference ref;
  ref.patch_size = p.patch_size;
  ref.sigma_n_sq = p.sigma_n_sq;
  const Eigen::Index ps = p.patch_size;
  const double n = static_cast<double>(ps * ps);
  for (const PlaneC& band : pyr.subbands) {
    PlaneD re = band.real();
    std::vector<VifReference::Patch> stats;
    const Eigen::Index tiles_y = re.rows() - ps + 1;
    const Eigen::Index tiles_x = re.cols() - ps + 1;
    stats.reserve(std::max<Eigen::Index>(tiles_y * tiles_x, 0));
    for (Eigen::Index ty = 0; ty < tiles_y; ++ty) {
      for (Eigen::Index tx = 0; tx < tiles_x; ++tx) {
        double sx = 0.0, sxx = 0.0;
        for (Eigen::Index r = 0; r < ps; ++r)
          for (Eigen::Index c = 0; c < ps; ++c) {
            const double v = re(ty + r, tx + c);
            sx += v;
            sxx += v * v;
          }
        VifReference::Patch patch;
        patch.mean = sx / n;
        patch.variance = std::max(0.0, sxx / n - patch.mean * patch.mean);
        patch.flat = patch.variance <= flat_variance;
        patch.den_term =
            patch.flat ? 0.0 : std::log2(1.0 + patch.variance / p.sigma_n_sq);
        stats.push_back(patch);
      }
    }
    ref.re.push_back(std::move(re));
    ref.patches.push_back(std::move(stats));
  }
  return ref;
}

double vif_against(const VifReference& ref, const ComplexPyramid& dist) {
  const Eigen::Index ps = ref.patch_size;
  const double n = static_cast<double>(ps * ps);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t b = 0; b < ref.re.size(); ++b) {
    const PlaneD& x = ref.re[b];
    const PlaneC& y = dist.subbands[b];
    const Eigen::Index cols = x.cols();
    const Eigen::Index tiles_y = x.rows() - ps + 1;
    const Eigen::Index tiles_x = cols - ps + 1;
    std::size_t t = 0;
    for (Eigen::Index ty = 0; ty < tiles_y; ++ty) {
      for (Eigen::Index tx = 0; tx < tiles_x; ++tx, ++t) {
        const VifReference::Patch& px = ref.patches[b][t];
        if (px.flat) continue;
        double sy = 0.0, syy = 0.0, sxy = 0.0;
        for (Eigen::Index r = 0; r < ps; ++r) {
          const double* xr = x.data() + (ty + r) * cols + tx;
          const C* yr = y.data() + (ty + r) * cols + tx;
          for (Eigen::Index c = 0; c < ps; ++c) {
            const double xv = xr[c];
            const double yv = yr[c].real();
            sy += yv;
            syy += yv * yv;
            sxy += xv * yv;
          }
        }
        const double mu_y = sy / n;
        const double var_y = std::max(0.0, syy / n - mu_y * mu_y);
        const double cov = sxy / n - px.mean * mu_y;
        // An anti-correlated patch transmits nothing through the gain
        // channel; without the clamp, small-sample regressions against an
        // unrelated signal leak spurious information into the numerator.
        double gain = cov / (px.variance + gain_regularizer);
        double sv_sq;
        if (gain < 0.0) {
          gain = 0.0;
          sv_sq = var_y;
        } else {
          sv_sq = std::max(var_y - gain * cov, 0.0);
        }
        num += std::log2(1.0 + gain * gain * px.variance /
                                   (sv_sq + ref.sigma_n_sq));
        den += px.den_term;
      }
    }
  }
  if (den == 0.0) return 1.0;  // blank reference: nothing to lose, nothing lost
  return num / den;
}

class SadScorer final : public BlockScorer {
 public:
  MetricKind kind() const override { return MetricKind::Sad; }
  void set_target(const ConstBlockU8& target) override { target_ = target; }
  double score(const ConstBlockU8& candidate) const override {
    require_same_shape(target_, candidate, "sad");
    return -static_cast<double>(abs_diff_sum(target_, candidate));
  }

 private:
  PlaneU8 target_;
};

class MseScorer final : public BlockScorer {
 public:
  MetricKind kind() const override { return MetricKind::Mse; }
  void set_target(const ConstBlockU8& target) override { target_ = target; }
  double score(const ConstBlockU8& candidate) const override {
    require_same_shape(target_, candidate, "mse");
    return -(static_cast<double>(sq_diff_sum(target_, candidate)) /
             static_cast<double>(target_.size()));
  }

 private:
  PlaneU8 target_;
};

class SsimScorer final : public BlockScorer {
 public:
  explicit SsimScorer(const SsimParams& params) : params_(params) {}
  MetricKind kind() const override { return MetricKind::Ssim; }
  void set_target(const ConstBlockU8& target) override {
    target_ = target;
    if (params_.window == SsimParams::Window::WholeBlock) {
      if (target_.size() < 2)
        throw InvalidArgument("ssim: whole-block statistics need at least 2 samples");
      sums_ = block_sums(target_);
    }
  }
  double score(const ConstBlockU8& candidate) const override {
    require_same_shape(target_, candidate, "ssim");
    if (params_.window == SsimParams::Window::Sliding)
      return ssim_sliding(target_, candidate, params_);
    return ssim_from_sums(sums_, block_sums(candidate),
                          cross_sum(target_, candidate), params_);
  }

 private:
  SsimParams params_;
  PlaneU8 target_;
  RawSums sums_;
};

class CwSsimScorer final : public BlockScorer {
 public:
  explicit CwSsimScorer(const CwSsimParams& params) : params_(params) {}
  MetricKind kind() const override { return MetricKind::CwSsim; }
  void set_target(const ConstBlockU8& target) override {
    rows_ = target.rows();
    cols_ = target.cols();
    config_ = pyramid_config_for(params_.pyramid, target, "cw-ssim");
    pyramid_ = decompose(target, config_);
  }
  double score(const ConstBlockU8& candidate) const override {
    if (candidate.rows() != rows_ || candidate.cols() != cols_)
      throw InvalidArgument("cw-ssim: shape mismatch");
    decompose_into(candidate, config_, scratch_);
    return cw_ssim_from_pyramids(pyramid_, scratch_, params_.stabilizer);
  }

 private:
  CwSsimParams params_;
  Eigen::Index rows_ = 0, cols_ = 0;
  PyramidConfig config_;
  ComplexPyramid pyramid_;
  mutable ComplexPyramid scratch_;
};

// Matching orientation for the information ratio: a candidate that amplifies
// contrast can push the raw ratio above 1 and outrank the true match, so
// excess is folded back as the reciprocal. 1 remains the unique best value,
// attained exactly on identical inputs.
double fold_excess(double vif) { return vif <= 1.0 ? vif : 1.0 / vif; }

class VifScorer final : public BlockScorer {
 public:
  explicit VifScorer(const VifParams& params) : params_(params) {}
  MetricKind kind() const override { return MetricKind::Vif; }
  void set_target(const ConstBlockU8& target) override {
    rows_ = target.rows();
    cols_ = target.cols();
    config_ = pyramid_config_for(params_.pyramid, target, "vif");
    reference_ = make_vif_reference(decompose(target, config_), params_);
  }
  double score(const ConstBlockU8& candidate) const override {
    if (candidate.rows() != rows_ || candidate.cols() != cols_)
      throw InvalidArgument("vif: shape mismatch");
    decompose_into(candidate, config_, scratch_);
    return fold_excess(vif_against(reference_, scratch_));
  }

 private:
  VifParams params_;
  Eigen::Index rows_ = 0, cols_ = 0;
  PyramidConfig config_;
  VifReference reference_;
  mutable ComplexPyramid scratch_;
};

}  // namespace

const char* to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::Sad: return "sad";
    case MetricKind::Mse: return "mse";
    case MetricKind::Ssim: return "ssim";
    case MetricKind::CwSsim: return "cwssim";
    case MetricKind::Vif: return "vif";
  }
  return "?";
}

MetricKind metric_from_string(const std::string& name) {
  if (name == "sad") return MetricKind::Sad;
  if (name == "mse") return MetricKind::Mse;
  if (name == "ssim") return MetricKind::Ssim;
  if (name == "cwssim") return MetricKind::CwSsim;
  if (name == "vif") return MetricKind::Vif;
  throw InvalidArgument("unknown metric '" + name + "'");
}

bool is_distortion(MetricKind kind) {
  return kind == MetricKind::Sad || kind == MetricKind::Mse;
}

double sad(const ConstBlockU8& a, const ConstBlockU8& b) {
  require_same_shape(a, b, "sad");
  return static_cast<double>(abs_diff_sum(a, b));
}

double mse(const ConstBlockU8& a, const ConstBlockU8& b) {
  require_same_shape(a, b, "mse");
  return static_cast<double>(sq_diff_sum(a, b)) / static_cast<double>(a.size());
}

double psnr(const ConstBlockU8& a, const ConstBlockU8& b) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / m);
}

double ssim_score(const ConstBlockU8& a, const ConstBlockU8& b,
                  const SsimParams& params) {
  require_same_shape(a, b, "ssim");
  if (params.window == SsimParams::Window::Sliding)
    return ssim_sliding(a, b, params);
  return ssim_whole_block(a, b, params);
}

double cw_ssim_score(const ConstBlockU8& a, const ConstBlockU8& b,
                     const CwSsimParams& params) {
  require_same_shape(a, b, "cw-ssim");
  const PyramidConfig config = pyramid_config_for(params.pyramid, a, "cw-ssim");
  return cw_ssim_from_pyramids(decompose(a, config), decompose(b, config),
                               params.stabilizer);
}

double vif_score(const ConstBlockU8& reference, const ConstBlockU8& distorted,
                 const VifParams& params) {
  require_same_shape(reference, distorted, "vif");
  const PyramidConfig config = pyramid_config_for(params.pyramid, reference, "vif");
  return vif_against(make_vif_reference(decompose(reference, config), params),
                     decompose(distorted, config));
}

double unified_score(MetricKind kind, const MetricParams& params,
                     const ConstBlockU8& a, const ConstBlockU8& b) {
  const auto scorer = make_block_scorer(kind, params);
  scorer->set_target(a);
  return scorer->score(b);
}

std::unique_ptr<BlockScorer> make_block_scorer(MetricKind kind,
                                               const MetricParams& params) {
  switch (kind) {
    case MetricKind::Sad: return std::make_unique<SadScorer>();
    case MetricKind::Mse: return std::make_unique<MseScorer>();
    case MetricKind::Ssim: return std::make_unique<SsimScorer>(params.ssim);
    case MetricKind::CwSsim: return std::make_unique<CwSsimScorer>(params.cwssim);
    case MetricKind::Vif: return std::make_unique<VifScorer>(params.vif);
  }
  throw InvalidArgument("unknown metric kind");
}

}  // namespace pmc
