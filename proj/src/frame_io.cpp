#include "pmc/frame_io.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace pmc {
namespace {

std::size_t chroma_bytes(ChromaLayout layout, Eigen::Index w, Eigen::Index h) {
  const std::size_t half_w = static_cast<std::size_t>((w + 1) / 2);
  const std::size_t half_h = static_cast<std::size_t>((h + 1) / 2);
  switch (layout) {
    case ChromaLayout::C420:
      return 2 * half_w * half_h;
    case ChromaLayout::C422:
      return 2 * half_w * static_cast<std::size_t>(h);
    case ChromaLayout::C444:
      return 2 * static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    case ChromaLayout::Mono:
      return 0;
  }
  return 0;
}

// Reads exactly n bytes into dst (or discards them when dst is null).
// Returns the number of bytes actually read.
std::size_t read_bytes(std::istream& in, char* dst, std::size_t n) {
  if (dst != nullptr) {
    in.read(dst, static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in.gcount());
  }
  std::size_t total = 0;
  char sink[4096];
  while (total < n) {
    const std::size_t chunk = std::min(n - total, sizeof(sink));
    in.read(sink, static_cast<std::streamsize>(chunk));
    const std::size_t got = static_cast<std::size_t>(in.gcount());
    total += got;
    if (got < chunk) break;
  }
  return total;
}

// Skips whitespace and '#' comment lines between PGM header fields.
void skip_pgm_separators(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
    } else if (c != EOF && std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

long parse_pgm_number(std::istream& in, const char* field) {
  skip_pgm_separators(in);
  long value = 0;
  bool any = false;
  while (std::isdigit(in.peek())) {
    value = value * 10 + (in.get() - '0');
    any = true;
    if (value > 1 << 30)
      throw IoError(IoError::Kind::MalformedHeader,
                    std::string("pgm: implausible ") + field);
  }
  if (!any)
    throw IoError(IoError::Kind::MalformedHeader,
                  std::string("pgm: missing ") + field);
  return value;
}

LumaFrame load_pgm(std::istream& in, const LoadRequest& req) {
  char magic[2] = {0, 0};
  if (read_bytes(in, magic, 2) != 2 || magic[0] != 'P' || magic[1] != '5')
    throw IoError(IoError::Kind::MalformedHeader, "pgm: not a P5 file");
  const long w = parse_pgm_number(in, "width");
  const long h = parse_pgm_number(in, "height");
  const long maxval = parse_pgm_number(in, "maxval");
  if (w <= 0 || h <= 0)
    throw IoError(IoError::Kind::MalformedHeader, "pgm: degenerate geometry");
  if (maxval < 1 || maxval > 255)
    throw IoError(IoError::Kind::MalformedHeader,
                  "pgm: maxval outside 8-bit range");
  if (req.frame_index != 0)
    throw IoError(IoError::Kind::FrameIndexOutOfRange,
                  "pgm: single-frame format, frame index must be 0");
  in.get();  // single whitespace byte after maxval
  LumaFrame frame(h, w);
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (read_bytes(in, reinterpret_cast<char*>(frame.data()), need) != need)
    throw IoError(IoError::Kind::TruncatedStream, "pgm: truncated pixel data");
  return frame;
}

// Reads one frame's luma into `frame` when non-null, otherwise skips the
// whole frame. `index` only labels error messages.
void read_or_skip_frame(std::istream& in, LumaFrame* frame, Eigen::Index w,
                        Eigen::Index h, ChromaLayout layout, int index) {
  const std::size_t luma = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  char* dst = frame != nullptr ? reinterpret_cast<char*>(frame->data()) : nullptr;
  const std::size_t got = read_bytes(in, dst, luma);
  if (got == 0)
    throw IoError(IoError::Kind::FrameIndexOutOfRange,
                  "frame index " + std::to_string(index) +
                      " is beyond the stream length");
  if (got < luma)
    throw IoError(IoError::Kind::TruncatedStream,
                  "stream ends inside the luma plane of frame " +
                      std::to_string(index));
  const std::size_t chroma = chroma_bytes(layout, w, h);
  if (read_bytes(in, nullptr, chroma) < chroma)
    throw IoError(IoError::Kind::TruncatedStream,
                  "stream ends inside the chroma planes of frame " +
                      std::to_string(index));
}

LumaFrame load_raw(std::istream& in, const LoadRequest& req) {
  if (req.width <= 0 || req.height <= 0)
    throw InvalidArgument("raw yuv input requires explicit positive geometry");
  LumaFrame frame(req.height, req.width);
  for (int i = 0; i < req.frame_index; ++i)
    read_or_skip_frame(in, nullptr, req.width, req.height, req.chroma, i);
  read_or_skip_frame(in, &frame, req.width, req.height, req.chroma,
                     req.frame_index);
  return frame;
}

ChromaLayout y4m_chroma(const std::string& tag) {
  if (tag == "420" || tag == "420jpeg" || tag == "420paldv" || tag == "420mpeg2")
    return ChromaLayout::C420;
  if (tag == "422") return ChromaLayout::C422;
  if (tag == "444") return ChromaLayout::C444;
  if (tag == "mono") return ChromaLayout::Mono;
  throw IoError(IoError::Kind::MalformedHeader,
                "y4m: unsupported colorspace C" + tag);
}

// Reads characters up to '\n' with a sanity bound; EOF before the newline is
// a malformed header.
std::string read_line(std::istream& in, const char* what) {
  std::string line;
  for (;;) {
    const int c = in.get();
    if (c == EOF)
      throw IoError(IoError::Kind::MalformedHeader,
                    std::string("y4m: unterminated ") + what);
    if (c == '\n') return line;
    line.push_back(static_cast<char>(c));
    if (line.size() > 2048)
      throw IoError(IoError::Kind::MalformedHeader,
                    std::string("y4m: implausibly long ") + what);
  }
}

LumaFrame load_y4m(std::istream& in, const LoadRequest& req) {
  const std::string header = read_line(in, "stream header");
  std::istringstream tokens(header);
  std::string magic;
  tokens >> magic;
  if (magic != "YUV4MPEG2")
    throw IoError(IoError::Kind::MalformedHeader, "y4m: missing YUV4MPEG2 magic");
  Eigen::Index w = 0;
  Eigen::Index h = 0;
  ChromaLayout layout = ChromaLayout::C420;
  std::string token;
  while (tokens >> token) {
    if (token.empty()) continue;
    const std::string value = token.substr(1);
    switch (token[0]) {
      case 'W':
        w = std::atol(value.c_str());
        break;
      case 'H':
        h = std::atol(value.c_str());
        break;
      case 'C':
        layout = y4m_chroma(value);
        break;
      default:
        break;  // frame rate, aspect, interlacing: irrelevant to the luma plane
    }
  }
  if (w <= 0 || h <= 0)
    throw IoError(IoError::Kind::MalformedHeader,
                  "y4m: header lacks positive W and H");
  LumaFrame frame(h, w);
  for (int i = 0; i <= req.frame_index; ++i) {
    if (in.peek() == EOF)
      throw IoError(IoError::Kind::FrameIndexOutOfRange,
                    "y4m: frame index " + std::to_string(req.frame_index) +
                        " is beyond the stream length (" + std::to_string(i) +
                        " frames present)");
    const std::string marker = read_line(in, "frame marker");
    if (marker.rfind("FRAME", 0) != 0)
      throw IoError(IoError::Kind::MalformedHeader,
                    "y4m: expected FRAME marker before frame " +
                        std::to_string(i));
    const bool keep = i == req.frame_index;
    const std::size_t luma = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    char* dst = keep ? reinterpret_cast<char*>(frame.data()) : nullptr;
    if (read_bytes(in, dst, luma) < luma)
      throw IoError(IoError::Kind::TruncatedStream,
                    "y4m: stream ends inside the luma plane of frame " +
                        std::to_string(i));
    const std::size_t chroma = chroma_bytes(layout, w, h);
    if (read_bytes(in, nullptr, chroma) < chroma)
      throw IoError(IoError::Kind::TruncatedStream,
                    "y4m: stream ends inside the chroma planes of frame " +
                        std::to_string(i));
  }
  return frame;
}

}  // namespace

LumaFrame load_frame(std::istream& in, const LoadRequest& req) {
  if (req.frame_index < 0) throw InvalidArgument("frame index must be >= 0");
  switch (req.format) {
    case SourceFormat::Pgm:
      return load_pgm(in, req);
    case SourceFormat::RawYuv:
      return load_raw(in, req);
    case SourceFormat::Y4m:
      return load_y4m(in, req);
  }
  throw InvalidArgument("unknown source format");
}

LumaFrame load_frame_file(const std::string& path, const LoadRequest& req) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError(IoError::Kind::OpenFailure, "cannot open " + path);
  return load_frame(in, req);
}

PlaneU8 extract_block(const LumaFrame& frame, const BlockView& view) {
  if (!view.fits(frame.cols(), frame.rows()))
    throw InvalidArgument(
        "block view (" + std::to_string(view.x) + ", " + std::to_string(view.y) +
        ", size " + std::to_string(view.size) + ") does not fit a " +
        std::to_string(frame.cols()) + "x" + std::to_string(frame.rows()) +
        " frame");
  return frame.block(view.y, view.x, view.size, view.size);
}

void save_pgm(const LumaFrame& frame, std::ostream& out) {
  if (frame.rows() <= 0 || frame.cols() <= 0)
    throw InvalidArgument("cannot save a frame with degenerate geometry");
  out << "P5\n" << frame.cols() << " " << frame.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(frame.data()),
            static_cast<std::streamsize>(frame.size()));
  if (!out) throw IoError(IoError::Kind::WriteFailure, "pgm: write failed");
}

void save_pgm_file(const LumaFrame& frame, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError(IoError::Kind::OpenFailure, "cannot open " + path + " for writing");
  save_pgm(frame, out);
  out.flush();
  if (!out) throw IoError(IoError::Kind::WriteFailure, "pgm: write failed");
}

const char* to_string(SourceFormat format) {
  switch (format) {
    case SourceFormat::RawYuv: return "raw";
    case SourceFormat::Y4m: return "y4m";
    case SourceFormat::Pgm: return "pgm";
  }
  return "?";
}

const char* to_string(ChromaLayout chroma) {
  switch (chroma) {
    case ChromaLayout::C420: return "420";
    case ChromaLayout::C422: return "422";
    case ChromaLayout::C444: return "444";
    case ChromaLayout::Mono: return "mono";
  }
  return "?";
}

}  // namespace pmc
