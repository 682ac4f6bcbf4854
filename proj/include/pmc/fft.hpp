#pragma once

#include "pmc/types.hpp"

namespace pmc::fft {

// Unnormalized in-place DFT of contiguous data. inverse=true conjugates the
// twiddles but applies no 1/n scale. Any n >= 1; power-of-two sizes take a
// fast iterative path, other sizes a mixed-radix one.
void transform(std::complex<double>* data, Eigen::Index n, bool inverse);

// 2-D DFT over all rows, then all columns, DC at index (0, 0).
void forward2d(PlaneC& grid);
PlaneC forward2d(const PlaneD& real_input);

// Full normalization lives on the inverse: inverse2d(forward2d(x)) == x.
void inverse2d(PlaneC& grid);

}  // namespace pmc::fft
