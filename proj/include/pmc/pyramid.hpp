#pragma once

#include "pmc/types.hpp"

#include <vector>

namespace pmc {

// Complex oriented band-pass decomposition: polar-separable band-pass filters
// with angular cos-power windows, applied in the frequency domain of the
// mirror-extended input. Analysis only; there is no synthesis path.
struct PyramidConfig {
  int levels = 3;
  int orientations = 6;
  enum class Boundary { Mirror };
  Boundary boundary = Boundary::Mirror;
};

// Largest level count whose coarsest grid still holds at least 4x4 samples.
int max_pyramid_levels(Eigen::Index width, Eigen::Index height);

// Same config with levels reduced to what the given geometry supports.
PyramidConfig clamp_levels(PyramidConfig config, Eigen::Index width,
                           Eigen::Index height);

struct ComplexPyramid {
  int levels = 0;
  int orientations = 0;
  Eigen::Index input_rows = 0;
  Eigen::Index input_cols = 0;
  // Level-major: band(level, orientation) = subbands[level * orientations + o].
  // Grid dimensions halve (rounding down) per level.
  std::vector<PlaneC> subbands;
  PlaneD residual_lowpass;

  const PlaneC& band(int level, int orientation) const {
    return subbands[static_cast<std::size_t>(level) * orientations + orientation];
  }
};

// Deterministic and linear in the input. Throws InvalidArgument when the
// image is too small for the requested level count.
ComplexPyramid decompose(const PlaneD& image, const PyramidConfig& config);
ComplexPyramid decompose(const ConstBlockU8& image, const PyramidConfig& config);

// Same, but reuses the allocations already held by `out`; the form repeated
// scoring loops want.
void decompose_into(const PlaneD& image, const PyramidConfig& config,
                    ComplexPyramid& out);
void decompose_into(const ConstBlockU8& image, const PyramidConfig& config,
                    ComplexPyramid& out);

// Reflects the image across its right and bottom edges, doubling each
// dimension; the result is an even-symmetric period of the input.
PlaneD mirror_extend(const PlaneD& image);

// Frequency response of one oriented band (or of the residual lowpass) over
// a rows x cols extended grid, DC at (0, 0). These are the exact transfer
// functions the decomposition applies before downsampling; exposed so
// analyses and tests can reproduce the filtering independently.
PlaneD band_transfer(Eigen::Index rows, Eigen::Index cols, int level,
                     int orientation, const PyramidConfig& config);
PlaneD lowpass_transfer(Eigen::Index rows, Eigen::Index cols,
                        const PyramidConfig& config);

}  // namespace pmc
