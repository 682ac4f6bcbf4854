#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pmc/eval.hpp"
#include "pmc/frame_io.hpp"
#include "pmc/metrics.hpp"
#include "pmc/motion.hpp"
#include "foreman_pair.hpp"
#include "test_support.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

using namespace pmc;
using pmc::test::foreman_pair;

namespace {

constexpr MetricKind all_metrics[] = {MetricKind::Sad, MetricKind::Mse,
                                      MetricKind::Ssim, MetricKind::CwSsim,
                                      MetricKind::Vif};

void report_line(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", criterion, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// The 20 structured blocks of criterion 1: constants, ramps, edges, periodic
// patterns, and a few composites.
std::vector<PlaneU8> structured_blocks() {
  std::vector<PlaneU8> blocks;
  for (std::uint8_t v : {0, 128, 255})
    blocks.push_back(PlaneU8::Constant(16, 16, v));
  for (int kind = 0; kind < 3; ++kind) {  // horizontal/vertical/diagonal ramps
    PlaneU8 b(16, 16);
    for (Eigen::Index y = 0; y < 16; ++y)
      for (Eigen::Index x = 0; x < 16; ++x) {
        const double t = kind == 0 ? x / 15.0 : kind == 1 ? y / 15.0 : (x + y) / 30.0;
        b(y, x) = static_cast<std::uint8_t>(std::lround(255.0 * t));
      }
    blocks.push_back(b);
  }
  for (int half : {4, 8, 12}) {  // vertical step edges
    PlaneU8 b(16, 16);
    for (Eigen::Index y = 0; y < 16; ++y)
      for (Eigen::Index x = 0; x < 16; ++x) b(y, x) = x < half ? 60 : 190;
    blocks.push_back(b);
  }
  for (int period : {2, 4, 8}) {  // checkerboards
    PlaneU8 b(16, 16);
    for (Eigen::Index y = 0; y < 16; ++y)
      for (Eigen::Index x = 0; x < 16; ++x)
        b(y, x) = ((x / period + y / period) % 2) ? 200 : 55;
    blocks.push_back(b);
  }
  {
    PlaneU8 b(16, 16);  // filled disk
    for (Eigen::Index y = 0; y < 16; ++y)
      for (Eigen::Index x = 0; x < 16; ++x) {
        const double r = std::hypot(x - 7.5, y - 7.5);
        b(y, x) = r < 5.5 ? 210 : 70;
      }
    blocks.push_back(b);
  }
  for (int i = 0; blocks.size() < 20; ++i)
    blocks.push_back(pmc::test::textured_frame(16, 16, 7700 + i));
  return blocks;
}

// Independent full-search oracle: enumerates every in-bounds displacement
// with its own clamping, scores through the public one-shot entry point, and
// applies the documented tie-break.
SearchResult oracle_search(const LumaFrame& target, const BlockView& block,
                           const LumaFrame& reference, const SearchConfig& cfg) {
  SearchResult best;
  best.score = -std::numeric_limits<double>::infinity();
  std::int64_t best_norm = std::numeric_limits<std::int64_t>::max();
  const PlaneU8 tb = target.block(block.y, block.x, block.size, block.size);
  for (int dy = -cfg.search_radius; dy <= cfg.search_radius; ++dy) {
    for (int dx = -cfg.search_radius; dx <= cfg.search_radius; ++dx) {
      const Eigen::Index cx = block.x + dx;
      const Eigen::Index cy = block.y + dy;
      if (cx < 0 || cy < 0 || cx + block.size > reference.cols() ||
          cy + block.size > reference.rows())
        continue;
      const PlaneU8 cb = reference.block(cy, cx, block.size, block.size);
      const double s = unified_score(cfg.metric, cfg.params, tb, cb);
      const std::int64_t norm =
          static_cast<std::int64_t>(dx) * dx + static_cast<std::int64_t>(dy) * dy;
      const bool better =
          s > best.score ||
          (s == best.score &&
           (norm < best_norm ||
            (norm == best_norm &&
             (dy < best.mv.dy || (dy == best.mv.dy && dx < best.mv.dx)))));
      if (better) {
        best.score = s;
        best.mv = {dx, dy};
        best_norm = norm;
      }
    }
  }
  return best;
}

struct ForemanRun {
  std::vector<ComparisonReport> rows;  // sad, mse, ssim, cwssim, vif
  double block8_frame_ssim = 0.0;
};

// One full evaluation of the pinned pair at the paper's setup (block 16,
// radius 16), plus the block-8 SAD row. Shared by criteria 4, 5, 6 and 8.
const ForemanRun& foreman_run() {
  static const ForemanRun run = [] {
    ForemanRun out;
    const auto& pair = foreman_pair();
    for (MetricKind kind : all_metrics) {
      SearchConfig cfg;
      cfg.metric = kind;
      const auto t0 = std::chrono::steady_clock::now();
      const MotionField field =
          estimate_motion_field(pair.reference, pair.target, cfg);
      const double elapsed = seconds_since(t0);
      const LumaFrame recon = compensate(pair.reference, field);
      out.rows.push_back(compare_frames(pair.target, recon, elapsed, kind));
    }
    SearchConfig cfg8;
    cfg8.metric = MetricKind::Sad;
    cfg8.block_size = 8;
    const MotionField field8 =
        estimate_motion_field(pair.reference, pair.target, cfg8);
    const LumaFrame recon8 = compensate(pair.reference, field8);
    out.block8_frame_ssim =
        compare_frames(pair.target, recon8, 0.0, MetricKind::Sad).frame_ssim;
    return out;
  }();
  return run;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(PMC_CLI_PATH) + " " + args +
                                  " > /dev/null 2>&1")
                                     .c_str());
  return status == -1 ? -1 : WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string drop_seconds_column(const std::string& csv) {
  std::istringstream lines(csv);
  std::string line, out;
  while (std::getline(lines, line)) {
    std::vector<std::string> fields;
    std::string f;
    std::istringstream split(line);
    while (std::getline(split, f, ',')) fields.push_back(f);
    if (fields.size() > 5) fields[5] = "-";
    for (std::size_t i = 0; i < fields.size(); ++i)
      out += (i == 0 ? "" : ",") + fields[i];
    out += "\n";
  }
  return out;
}

}  // namespace

TEST_CASE("criterion 1: metric identities") {
  const auto t0 = std::chrono::steady_clock::now();
  const MetricParams params;
  std::vector<PlaneU8> blocks;
  for (int i = 0; i < 200; ++i)
    blocks.push_back(pmc::test::random_frame(16, 16, 140000 + i));
  for (PlaneU8& b : structured_blocks()) blocks.push_back(std::move(b));

  bool pass = true;
  double worst = 0.0;
  for (const PlaneU8& x : blocks) {
    const double s1 = sad(x, x);
    const double s2 = mse(x, x);
    const double s3 = ssim_score(x, x, params.ssim);
    const double s4 = cw_ssim_score(x, x, params.cwssim);
    const double s5 = vif_score(x, x, params.vif);
    const double err = std::max({std::abs(s1), std::abs(s2), std::abs(s3 - 1.0),
                                 std::abs(s4 - 1.0), std::abs(s5 - 1.0)});
    worst = std::max(worst, err);
    if (s1 != 0.0 || s2 != 0.0 || std::abs(s3 - 1.0) > 1e-9 ||
        std::abs(s4 - 1.0) > 1e-9 || std::abs(s5 - 1.0) > 1e-9)
      pass = false;
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= 10.0) pass = false;
  char msg[160];
  std::snprintf(msg, sizeof(msg),
                "(220 blocks, worst identity deviation %.2e, %.1fs < 10s)",
                worst, elapsed);
  report_line(1, pass, msg);
  CHECK(pass);
}

TEST_CASE("criterion 2: oracle equivalence on random frame pairs") {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  for (int trial = 0; trial < 25 && pass; ++trial) {
    const LumaFrame ref = pmc::test::textured_frame(64, 64, 150000 + trial);
    const LumaFrame tgt = pmc::test::textured_frame(64, 64, 160000 + trial);
    for (MetricKind kind : all_metrics) {
      SearchConfig cfg;
      cfg.metric = kind;
      cfg.search_radius = 4;
      const MotionField got = estimate_motion_field(ref, tgt, cfg, 1);
      for (Eigen::Index br = 0; br < got.block_rows() && pass; ++br) {
        for (Eigen::Index bc = 0; bc < got.block_cols() && pass; ++bc) {
          const SearchResult want =
              oracle_search(tgt, {bc * 16, br * 16, 16}, ref, cfg);
          if (got.dx(br, bc) != want.mv.dx || got.dy(br, bc) != want.mv.dy ||
              got.score(br, bc) != want.score)
            pass = false;
        }
      }
    }
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= 120.0) pass = false;
  char msg[128];
  std::snprintf(msg, sizeof(msg),
                "(25 pairs x 5 metrics, bit-identical fields, %.0fs < 120s)",
                elapsed);
  report_line(2, pass, msg);
  CHECK(pass);
}

TEST_CASE("criterion 3: global shift recovery and exact compensation") {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  int checked_blocks = 0;
  for (int dy = -5; dy <= 5 && pass; ++dy) {
    for (int dx = -5; dx <= 5 && pass; ++dx) {
      const auto pair = pmc::test::shifted_pair(128, 128, dx, dy,
                                                170000 + (dx + 5) * 11 + dy + 5);
      for (MetricKind kind : all_metrics) {
        SearchConfig cfg;
        cfg.metric = kind;
        cfg.search_radius = 5;
        const MotionField field =
            estimate_motion_field(pair.reference, pair.target, cfg, 1);
        const LumaFrame recon = compensate(pair.reference, field);
        for (Eigen::Index br = 0; br < field.block_rows(); ++br) {
          for (Eigen::Index bc = 0; bc < field.block_cols(); ++bc) {
            const Eigen::Index x = bc * 16, y = br * 16;
            const bool interior = x + dx >= 0 && y + dy >= 0 &&
                                  x + dx + 16 <= 128 && y + dy + 16 <= 128;
            if (!interior) continue;
            ++checked_blocks;
            if (field.dx(br, bc) != dx || field.dy(br, bc) != dy) pass = false;
            if (!(recon.block(y, x, 16, 16) == pair.target.block(y, x, 16, 16))
                     .all())
              pass = false;
          }
        }
        if (!pass) break;
      }
    }
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= 300.0) pass = false;
  char msg[160];
  std::snprintf(msg, sizeof(msg),
                "(121 shifts x 5 metrics, %d interior blocks exact, %.0fs < 300s)",
                checked_blocks, elapsed);
  report_line(3, pass, msg);
  CHECK(pass);
}

TEST_CASE("criterion 4: frame-quality trend across matching metrics") {
  const auto& run = foreman_run();
  const auto& r = run.rows;  // sad, mse, ssim, cwssim, vif
  const double base_ssim = std::max(r[0].frame_ssim, r[1].frame_ssim);
  const double base_vif = std::max(r[0].frame_vif, r[1].frame_vif);
  bool pass = true;
  for (int i = 2; i < 5; ++i) {
    if (r[i].frame_ssim < base_ssim + 0.05) pass = false;
    if (r[i].frame_vif < base_vif + 0.05) pass = false;
  }
  const double top_vif =
      std::max({r[0].frame_vif, r[1].frame_vif, r[2].frame_vif, r[3].frame_vif});
  if (r[4].frame_vif <= top_vif) pass = false;
  char msg[256];
  std::snprintf(msg, sizeof(msg),
                "(frame-SSIM margins ssim %+.3f cw %+.3f vif %+.3f; frame-VIF "
                "margins %+.3f %+.3f %+.3f; vif-matched top frame-VIF: %s)",
                r[2].frame_ssim - base_ssim - 0.05, r[3].frame_ssim - base_ssim - 0.05,
                r[4].frame_ssim - base_ssim - 0.05, r[2].frame_vif - base_vif - 0.05,
                r[3].frame_vif - base_vif - 0.05, r[4].frame_vif - base_vif - 0.05,
                r[4].frame_vif > top_vif ? "yes" : "no");
  report_line(4, pass, msg);
  CHECK(pass);
}

TEST_CASE("criterion 5: bitplane trend across matching metrics") {
  const auto& run = foreman_run();
  const auto& r = run.rows;
  const double sad_msb = r[0].bitplane.per_plane[0];
  bool pass = true;
  for (int i = 2; i < 5; ++i)
    if (r[i].bitplane.per_plane[0] > 0.5 * sad_msb) pass = false;
  const double dist_base = std::min(r[0].bitplane.mean, r[1].bitplane.mean);
  for (int i = 2; i < 5; ++i)
    if (r[i].bitplane.mean >= dist_base) pass = false;
  char msg[224];
  std::snprintf(msg, sizeof(msg),
                "(MSB sad %.4f vs ssim %.4f cw %.4f vif %.4f, need <= %.4f; "
                "dist sad %.4f mse %.4f vs ssim %.4f cw %.4f vif %.4f)",
                sad_msb, r[2].bitplane.per_plane[0], r[3].bitplane.per_plane[0],
                r[4].bitplane.per_plane[0], 0.5 * sad_msb, r[0].bitplane.mean,
                r[1].bitplane.mean, r[2].bitplane.mean, r[3].bitplane.mean,
                r[4].bitplane.mean);
  report_line(5, pass, msg);
  CHECK(pass);
}

TEST_CASE("criterion 6: timing ordering") {
  const auto& r = foreman_run().rows;
  const double t_sad = r[0].elapsed_seconds, t_mse = r[1].elapsed_seconds;
  const double t_ssim = r[2].elapsed_seconds, t_cw = r[3].elapsed_seconds;
  const double t_vif = r[4].elapsed_seconds;
  bool pass = true;
  if (!(t_sad <= 1.25 * t_mse)) pass = false;  // sad <= mse, approximately
  if (!(t_mse <= 2.0 * t_sad)) pass = false;   // and mse stays close to sad
  if (!(t_ssim > t_mse)) pass = false;
  if (!(std::max(t_cw, t_vif) > t_ssim)) pass = false;
  char msg[160];
  std::snprintf(msg, sizeof(msg), "(sad %.2fs mse %.2fs ssim %.2fs cw %.1fs vif %.1fs)",
                t_sad, t_mse, t_ssim, t_cw, t_vif);
  report_line(6, pass, msg);
  CHECK(pass);
}

TEST_CASE("criterion 7: translation tolerance of the wavelet metric") {
  int wins = 0;
  for (int t = 0; t < 50; ++t) {
    const LumaFrame tex = pmc::test::textured_frame(24, 24, 180000 + t);
    const PlaneU8 a = tex.block(4, 4, 16, 16);
    const PlaneU8 b = tex.block(4, 5, 16, 16);
    if (cw_ssim_score(a, b, {}) > ssim_score(a, b, {})) ++wins;
  }
  const bool pass = wins >= 45;
  char msg[96];
  std::snprintf(msg, sizeof(msg), "(cw-ssim beats ssim on %d/50 translated blocks)",
                wins);
  report_line(7, pass, msg);
  CHECK(pass);
}

TEST_CASE("criterion 8: block-size-8 degradation") {
  const auto& run = foreman_run();
  const double ssim16 = run.rows[0].frame_ssim;
  const double ssim8 = run.block8_frame_ssim;
  const bool pass = ssim8 <= ssim16;
  char msg[128];
  std::snprintf(msg, sizeof(msg), "(sad block-8 frame-SSIM %.4f vs block-16 %.4f)",
                ssim8, ssim16);
  report_line(8, pass, msg);
  CHECK(pass);
}

TEST_CASE("criterion 9: determinism of report runs") {
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() / ("pmc_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto pair = pmc::test::shifted_pair(64, 64, 2, -1, 190001);
  {
    std::ofstream out(dir / "in.y4m", std::ios::binary);
    pmc::test::write_y4m({&pair.reference, &pair.target}, out);
  }
  const std::string base = "report --input " + (dir / "in.y4m").string() +
                           " --metric all --search-radius 4 --report-format csv";
  const std::string field_base = " --out-field " + (dir / "f.csv").string();
  bool pass = true;
  pass &= run_cli(base + " --threads 1 --out-report " + (dir / "r1.csv").string() +
                  field_base) == 0;
  pass &= run_cli(base + " --threads 1 --out-report " + (dir / "r2.csv").string()) == 0;
  pass &= run_cli(base + " --threads 4 --out-report " + (dir / "r3.csv").string() +
                  " --out-field " + (dir / "g.csv").string()) == 0;
  const std::string r1 = slurp((dir / "r1.csv").string());
  const std::string r2 = slurp((dir / "r2.csv").string());
  const std::string r3 = slurp((dir / "r3.csv").string());
  if (r1.empty() || drop_seconds_column(r1) != drop_seconds_column(r2) ||
      drop_seconds_column(r1) != drop_seconds_column(r3))
    pass = false;
  for (const char* metric : {"sad", "mse", "ssim", "cwssim", "vif"}) {
    const std::string a = slurp((dir / ("f." + std::string(metric) + ".csv")).string());
    const std::string b = slurp((dir / ("g." + std::string(metric) + ".csv")).string());
    if (a.empty() || a != b) pass = false;
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  report_line(9, pass,
              "(repeated runs identical modulo seconds; threads 1 vs 4 fields "
              "byte-identical)");
  CHECK(pass);
}
