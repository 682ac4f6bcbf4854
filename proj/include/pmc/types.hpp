#pragma once

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pmc {

// Dense pixel/coefficient grids. Row-major so that sample (x, y) lives at
// (row y, col x) and scanlines are contiguous, matching raster file layouts.
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using PlaneU8 = Plane<std::uint8_t>;
using PlaneD = Plane<double>;
using PlaneC = Plane<std::complex<double>>;

// 8-bit grayscale raster; the unit of ingestion and comparison.
// width = cols(), height = rows(), every sample is in [0, 255] by type.
using LumaFrame = PlaneU8;

// Read-only view of a rectangular region of a Plane. Binds to .block(...) of a
// row-major plane without copying (rows contiguous, dynamic outer stride).
template <typename Scalar>
using ConstBlock = Eigen::Ref<const Plane<Scalar>, 0, Eigen::OuterStride<>>;

using ConstBlockU8 = ConstBlock<std::uint8_t>;
using ConstBlockD = ConstBlock<double>;

// Square region of a frame, identified by its top-left corner.
// x is the column, y the row of the corner; size is the side length.
struct BlockView {
  Eigen::Index x = 0;
  Eigen::Index y = 0;
  Eigen::Index size = 0;

  bool fits(Eigen::Index frame_width, Eigen::Index frame_height) const {
    return x >= 0 && y >= 0 && size > 0 && x + size <= frame_width &&
           y + size <= frame_height;
  }
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Contract violations: shape mismatches, out-of-bounds views, bad geometry.
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(what) {}
};

// Stream-level failures, each kind reported distinctly.
class IoError : public Error {
 public:
  enum class Kind {
    OpenFailure,
    MalformedHeader,
    TruncatedStream,
    FrameIndexOutOfRange,
    WriteFailure,
  };

  IoError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline PlaneD to_double(const ConstBlockU8& p) { return p.cast<double>(); }

}  // namespace pmc
