#include <CLI11.hpp>

#include "pmc/eval.hpp"
#include "pmc/frame_io.hpp"
#include "pmc/metrics.hpp"
#include "pmc/motion.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct RunSpec {
  std::vector<std::string> inputs;
  std::string format = "y4m";
  int width = 0;
  int height = 0;
  std::string chroma = "420";
  int ref_index = 0;
  int target_index = 1;
  std::vector<std::string> metrics;
  int block_size = 16;
  int search_radius = 16;
  std::string ssim_window = "block";
  double vif_sigma_nsq = 0.4;
  int pyramid_levels = 3;
  int pyramid_orients = 6;
  std::string field_path;
  std::string out_field;
  std::string out_frame;
  std::string out_report;
  std::string report_format = "table";
  int threads = 0;
};

void add_input_options(CLI::App& cmd, RunSpec& spec) {
  cmd.add_option("--input", spec.inputs,
                 "Input file; may be given twice for PGM (reference, target)")
      ->required()
      ->expected(1, 2);
  cmd.add_option("--format", spec.format, "Input format")
      ->check(CLI::IsMember({"y4m", "raw", "pgm"}))
      ->capture_default_str();
  cmd.add_option("--width", spec.width, "Frame width (raw input only)");
  cmd.add_option("--height", spec.height, "Frame height (raw input only)");
  cmd.add_option("--chroma", spec.chroma, "Chroma subsampling of raw input")
      ->check(CLI::IsMember({"420", "422", "444", "mono"}))
      ->capture_default_str();
  cmd.add_option("--ref-index", spec.ref_index, "Reference frame index")
      ->capture_default_str();
  cmd.add_option("--target-index", spec.target_index, "Target frame index")
      ->capture_default_str();
}

void add_search_options(CLI::App& cmd, RunSpec& spec) {
  cmd.add_option("--metric", spec.metrics,
                 "Matching metric: sad, mse, ssim, cwssim, vif, or all; may repeat");
  cmd.add_option("--block-size", spec.block_size, "Macroblock side (8 or 16)")
      ->check(CLI::IsMember({8, 16}))
      ->capture_default_str();
  cmd.add_option("--search-radius", spec.search_radius,
                 "Max displacement per axis")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd.add_option("--ssim-window", spec.ssim_window,
                 "SSIM window for matching: 'block' or 'sliding:N'")
      ->capture_default_str();
  cmd.add_option("--vif-sigma-nsq", spec.vif_sigma_nsq,
                 "VIF noise variance sigma_n^2")
      ->capture_default_str();
  cmd.add_option("--pyramid-levels", spec.pyramid_levels,
                 "Pyramid levels for CW-SSIM/VIF (clamped to the input size)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--pyramid-orients", spec.pyramid_orients,
                 "Pyramid orientations for CW-SSIM/VIF")
      ->check(CLI::Range(2, 32))
      ->capture_default_str();
  cmd.add_option("--threads", spec.threads,
                 "Worker threads for the block search (0 = auto)")
      ->capture_default_str();
}

template <class F>
auto stage(const std::string& name, F&& body) {
  try {
    return body();
  } catch (const pmc::Error& e) {
    throw pmc::Error(name + ": " + e.what());
  }
}

pmc::LoadRequest base_request(const RunSpec& spec) {
  pmc::LoadRequest req;
  if (spec.format == "y4m") req.format = pmc::SourceFormat::Y4m;
  else if (spec.format == "raw") req.format = pmc::SourceFormat::RawYuv;
  else req.format = pmc::SourceFormat::Pgm;
  req.width = spec.width;
  req.height = spec.height;
  if (spec.chroma == "420") req.chroma = pmc::ChromaLayout::C420;
  else if (spec.chroma == "422") req.chroma = pmc::ChromaLayout::C422;
  else if (spec.chroma == "444") req.chroma = pmc::ChromaLayout::C444;
  else req.chroma = pmc::ChromaLayout::Mono;
  return req;
}

pmc::LumaFrame load_one(const RunSpec& spec, const std::string& path, int index) {
  pmc::LoadRequest req = base_request(spec);
  req.frame_index = index;
  return pmc::load_frame_file(path, req);
}

pmc::LumaFrame load_reference(const RunSpec& spec) {
  return stage("loading reference frame", [&] {
    if (spec.inputs.size() == 2) return load_one(spec, spec.inputs[0], 0);
    return load_one(spec, spec.inputs[0], spec.ref_index);
  });
}

pmc::LumaFrame load_target(const RunSpec& spec) {
  return stage("loading target frame", [&] {
    if (spec.inputs.size() == 2) return load_one(spec, spec.inputs[1], 0);
    if (spec.ref_index == spec.target_index)
      throw pmc::InvalidArgument("reference and target frame indices must differ");
    return load_one(spec, spec.inputs[0], spec.target_index);
  });
}

std::vector<pmc::MetricKind> resolve_metrics(const RunSpec& spec,
                                             const char* fallback) {
  std::vector<std::string> names = spec.metrics;
  if (names.empty()) names.push_back(fallback);
  std::vector<pmc::MetricKind> kinds;
  for (const std::string& name : names) {
    if (name == "all")
      return {pmc::MetricKind::Sad, pmc::MetricKind::Mse, pmc::MetricKind::Ssim,
              pmc::MetricKind::CwSsim, pmc::MetricKind::Vif};
    kinds.push_back(pmc::metric_from_string(name));
  }
  return kinds;
}

pmc::MetricParams build_params(const RunSpec& spec) {
  pmc::MetricParams params;
  if (spec.ssim_window == "block") {
    params.ssim.window = pmc::SsimParams::Window::WholeBlock;
  } else if (spec.ssim_window.rfind("sliding", 0) == 0) {
    params.ssim.window = pmc::SsimParams::Window::Sliding;
    const std::size_t colon = spec.ssim_window.find(':');
    if (colon != std::string::npos) {
      const int size = std::atoi(spec.ssim_window.c_str() + colon + 1);
      if (size < 2) throw pmc::InvalidArgument("bad --ssim-window size");
      params.ssim.window_size = size;
    }
    params.ssim.stride = 1;
  } else {
    throw pmc::InvalidArgument("bad --ssim-window value '" + spec.ssim_window +
                               "' (expected 'block' or 'sliding:N')");
  }
  params.vif.sigma_n_sq = spec.vif_sigma_nsq;
  params.cwssim.pyramid = {spec.pyramid_levels, spec.pyramid_orients};
  params.vif.pyramid = {spec.pyramid_levels, spec.pyramid_orients};
  return params;
}

pmc::SearchConfig build_config(const RunSpec& spec, pmc::MetricKind metric) {
  pmc::SearchConfig config;
  config.block_size = spec.block_size;
  config.search_radius = spec.search_radius;
  config.metric = metric;
  config.params = build_params(spec);
  return config;
}

// Multi-metric runs insert the metric name before the extension:
// field.csv -> field.sad.csv.
std::string metric_path(const std::string& base, pmc::MetricKind metric,
                        bool multi) {
  if (!multi) return base;
  const std::size_t slash = base.find_last_of('/');
  const std::size_t dot = base.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return base + "." + pmc::to_string(metric);
  return base.substr(0, dot) + "." + pmc::to_string(metric) + base.substr(dot);
}

void write_text_file(const std::string& path, const std::string& body,
                     const char* what) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw pmc::IoError(pmc::IoError::Kind::OpenFailure,
                       std::string("cannot open ") + path + " for writing");
  out << body;
  out.flush();
  if (!out)
    throw pmc::IoError(pmc::IoError::Kind::WriteFailure,
                       std::string(what) + ": write to " + path + " failed");
}

void write_field_file(const pmc::MotionField& field, const std::string& path) {
  std::ostringstream body;
  pmc::write_motion_field(field, body);
  write_text_file(path, body.str(), "motion field");
}

int cmd_estimate(const RunSpec& spec) {
  const auto metrics = resolve_metrics(spec, "sad");
  const pmc::LumaFrame reference = load_reference(spec);
  const pmc::LumaFrame target = load_target(spec);
  const bool multi = metrics.size() > 1;
  for (pmc::MetricKind metric : metrics) {
    const pmc::MotionField field = stage("estimating motion field", [&] {
      return pmc::estimate_motion_field(reference, target,
                                        build_config(spec, metric), spec.threads);
    });
    stage("writing motion field", [&] {
      write_field_file(field, metric_path(spec.out_field, metric, multi));
      return 0;
    });
  }
  return 0;
}

int cmd_reconstruct(const RunSpec& spec) {
  const pmc::LumaFrame reference = load_reference(spec);
  const pmc::MotionField field = stage("reading motion field", [&] {
    std::ifstream in(spec.field_path, std::ios::binary);
    if (!in)
      throw pmc::IoError(pmc::IoError::Kind::OpenFailure,
                         "cannot open " + spec.field_path);
    return pmc::read_motion_field(in);
  });
  const pmc::LumaFrame prediction = stage("compensating", [&] {
    return pmc::compensate(reference, field);
  });
  stage("writing frame", [&] {
    pmc::save_pgm_file(prediction, spec.out_frame);
    return 0;
  });
  return 0;
}

int cmd_report(const RunSpec& spec) {
  const auto metrics = resolve_metrics(spec, "all");
  const pmc::LumaFrame reference = load_reference(spec);
  const pmc::LumaFrame target = load_target(spec);
  const bool multi = metrics.size() > 1;
  const pmc::MetricParams params = build_params(spec);

  std::vector<pmc::ComparisonReport> rows;
  for (pmc::MetricKind metric : metrics) {
    const pmc::SearchConfig config = build_config(spec, metric);
    const auto start = std::chrono::steady_clock::now();
    const pmc::MotionField field = stage("estimating motion field", [&] {
      return pmc::estimate_motion_field(reference, target, config, spec.threads);
    });
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    const pmc::LumaFrame prediction = stage("compensating", [&] {
      return pmc::compensate(reference, field);
    });
    rows.push_back(stage("comparing frames", [&] {
      return pmc::compare_frames(target, prediction, elapsed, metric, params);
    }));
    if (!spec.out_field.empty()) {
      stage("writing motion field", [&] {
        write_field_file(field, metric_path(spec.out_field, metric, multi));
        return 0;
      });
    }
    if (!spec.out_frame.empty()) {
      stage("writing frame", [&] {
        pmc::save_pgm_file(prediction, metric_path(spec.out_frame, metric, multi));
        return 0;
      });
    }
  }

  const std::string body = stage("emitting report", [&] {
    return pmc::emit_report(rows,
                            pmc::report_format_from_string(spec.report_format));
  });
  if (spec.out_report.empty()) {
    std::cout << body;
  } else {
    stage("writing report", [&] {
      write_text_file(spec.out_report, body, "report");
      return 0;
    });
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Block-matching motion estimation, compensation and evaluation with "
      "pluggable similarity metrics (SAD, MSE, SSIM, CW-SSIM, VIF)"};
  app.require_subcommand(1);
  RunSpec spec;

  CLI::App* estimate =
      app.add_subcommand("estimate", "Estimate motion fields, one CSV per metric");
  add_input_options(*estimate, spec);
  add_search_options(*estimate, spec);
  estimate->add_option("--out-field", spec.out_field, "Output motion-field CSV")
      ->required();

  CLI::App* reconstruct = app.add_subcommand(
      "reconstruct", "Rebuild the predicted frame from a motion field");
  add_input_options(*reconstruct, spec);
  reconstruct->add_option("--field", spec.field_path, "Motion-field CSV")
      ->required();
  reconstruct->add_option("--out-frame", spec.out_frame, "Output PGM path")
      ->required();

  CLI::App* report = app.add_subcommand(
      "report", "Estimate, compensate and compare per metric; emit one row each");
  add_input_options(*report, spec);
  add_search_options(*report, spec);
  report->add_option("--out-field", spec.out_field,
                     "Also write the motion field(s)");
  report->add_option("--out-frame", spec.out_frame,
                     "Also write the reconstruction(s) as PGM");
  report->add_option("--out-report", spec.out_report,
                     "Report path (stdout when omitted)");
  report->add_option("--report-format", spec.report_format, "csv, json or table")
      ->check(CLI::IsMember({"csv", "json", "table"}))
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (estimate->parsed()) return cmd_estimate(spec);
    if (reconstruct->parsed()) return cmd_reconstruct(spec);
    return cmd_report(spec);
  } catch (const std::exception& e) {
    std::cerr << "pmc " << name << ": " << e.what() << "\n";
    return 1;
  }
}
