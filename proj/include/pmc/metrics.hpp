#pragma once

#include "pmc/pyramid.hpp"
#include "pmc/types.hpp"

#include <memory>
#include <string>

namespace pmc {

// SAD and MSE are distortions (lower is better); SSIM, CW-SSIM and VIF are
// similarities (higher is better). unified_score negates the distortions so
// "maximize score" holds for every kind.
enum class MetricKind { Sad, Mse, Ssim, CwSsim, Vif };

const char* to_string(MetricKind kind);
MetricKind metric_from_string(const std::string& name);
bool is_distortion(MetricKind kind);

struct SsimParams {
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;

  // whole_block puts one statistics window over the whole input; sliding
  // averages the local score over every window placement.
  enum class Window { WholeBlock, Sliding };
  Window window = Window::WholeBlock;
  int window_size = 8;
  int stride = 1;

  double c1() const { return k1 * dynamic_range * k1 * dynamic_range; }
  double c2() const { return k2 * dynamic_range * k2 * dynamic_range; }
  double c3() const { return c2() / 2.0; }
};

struct CwSsimParams {
  double stabilizer = 0.01;  // K, in coefficient-magnitude units
  PyramidConfig pyramid{3, 6};
};

struct VifParams {
  double sigma_n_sq = 0.4;  // HVS noise variance, wavelet-coefficient units
  int patch_size = 3;       // local patch side for the scale-mixture statistics
  PyramidConfig pyramid{3, 6};
};

struct MetricParams {
  SsimParams ssim;
  CwSsimParams cwssim;
  VifParams vif;
};

// Sum of absolute differences. Exact (integer-valued) result.
double sad(const ConstBlockU8& a, const ConstBlockU8& b);

// Mean squared difference and 10*log10(255^2 / MSE). Identical inputs give
// MSE 0 and a +infinity PSNR sentinel.
double mse(const ConstBlockU8& a, const ConstBlockU8& b);
double psnr(const ConstBlockU8& a, const ConstBlockU8& b);

// Product of luminance, contrast and structure terms with C1, C2, C3 = C2/2
// stabilizers; biased (divide-by-N) sample statistics throughout.
double ssim_score(const ConstBlockU8& a, const ConstBlockU8& b,
                  const SsimParams& params);

// Magnitude and phase-consistency terms over corresponding complex subband
// coefficients, evaluated per subband and averaged across subbands. The
// pyramid level count is clamped to what the input size supports.
double cw_ssim_score(const ConstBlockU8& a, const ConstBlockU8& b,
                     const CwSsimParams& params);

// Ratio of summed distorted-channel over reference-channel information,
// accumulated over local patches of every oriented subband. Asymmetric: the
// first argument is the reference signal being approximated. 1.0 on identical
// inputs; a blank reference scores 1.0 by convention; contrast amplification
// may exceed 1.
double vif_score(const ConstBlockU8& reference, const ConstBlockU8& distorted,
                 const VifParams& params);

// Similarity orientation for all kinds: higher is better, and the best value
// is attained exactly on identical inputs. Distortions are negated; a raw VIF
// above 1 (contrast amplification) folds to its reciprocal so identity stays
// the unique optimum. `a` is the signal being approximated, `b` the
// approximation (only VIF is direction-sensitive).
double unified_score(MetricKind kind, const MetricParams& params,
                     const ConstBlockU8& a, const ConstBlockU8& b);

// Repeated scoring of candidates against one target block. set_target caches
// the target-side work (statistics, pyramid decomposition); score is pure and
// bit-identical to unified_score(kind, params, target, candidate).
class BlockScorer {
 public:
  virtual ~BlockScorer() = default;
  virtual MetricKind kind() const = 0;
  virtual void set_target(const ConstBlockU8& target) = 0;
  virtual double score(const ConstBlockU8& candidate) const = 0;
};

std::unique_ptr<BlockScorer> make_block_scorer(MetricKind kind,
                                               const MetricParams& params);

}  // namespace pmc
