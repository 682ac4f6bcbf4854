#pragma once

#include "pmc/types.hpp"

#include <iosfwd>
#include <string>

namespace pmc {

enum class SourceFormat { RawYuv, Y4m, Pgm };

// Chroma subsampling of a planar source. Only the luma plane is ever kept;
// the layout is needed to know how many chroma bytes each frame carries.
enum class ChromaLayout { C420, C422, C444, Mono };

struct LoadRequest {
  SourceFormat format = SourceFormat::Y4m;
  int width = 0;    // raw only; Y4M and PGM carry their own geometry
  int height = 0;   // raw only
  ChromaLayout chroma = ChromaLayout::C420;  // raw only
  int frame_index = 0;
};

// Reads the indexed frame's luma plane; chroma is skipped over and discarded.
// Throws IoError with a distinct kind for a malformed header, a truncated
// stream, and a frame index beyond the stream length.
LumaFrame load_frame(std::istream& in, const LoadRequest& req);
LumaFrame load_frame_file(const std::string& path, const LoadRequest& req);

// Copies the view's size x size samples row-major. The view must lie fully
// inside the frame; there is no implicit padding.
PlaneU8 extract_block(const LumaFrame& frame, const BlockView& view);

// Binary 8-bit PGM (P5, maxval 255). Round-trips bit-exactly through
// load_frame. Degenerate geometry is rejected.
void save_pgm(const LumaFrame& frame, std::ostream& out);
void save_pgm_file(const LumaFrame& frame, const std::string& path);

const char* to_string(SourceFormat format);
const char* to_string(ChromaLayout chroma);

}  // namespace pmc
