#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "meshfit/config.hpp"
#include "meshfit/decoder.hpp"
#include "meshfit/inversion.hpp"

namespace meshfit {

DecoderDims dims_from(const Config& cfg);
DecoderWeights decoder_from(const Config& cfg);
InversionConfig inversion_from(const Config& cfg);
CameraPose camera_from(const Config& cfg);
RenderConfig render_from(const Config& cfg);

struct InvertMetrics {
  double iou2d = 0.0;
  double tex_mae = 1.0;
};

struct InvertOutcome {
  InversionResult result;
  InvertMetrics metrics;
};

// Runs one inversion and writes mesh.obj/material.mtl/texture.png,
// recon.png, novel_00..11.png, trace.csv and summary.json into out_dir.
InvertOutcome run_invert_single(const Config& cfg, const std::string& out_dir);

struct SyntheticTruth {
  std::vector<double> z;
  CameraPose pose_true;
  CameraPose pose_init;
};

// Ground-truth factory: renders a decoded sample, writes image.png,
// mask.png, truth.miv1, truth.json and a ready-to-run target.cfg.
SyntheticTruth make_synthetic_bundle(const Config& cfg,
                                     const std::string& out_dir);

struct SlopeRow {
  std::string loss;
  double decade_lo = 0.0, decade_hi = 0.0;
  int n_rows = 0;
  int n_zero = 0;
  double slope = 0.0;
};

struct SensitivityResult {
  std::vector<SlopeRow> slopes;
  int window_rows = 0;       // rows with cd3d in [1e-6, 1e-2]
  int window_zero_iou = 0;   // of those, rows with iou loss exactly 0
  int window_zero_l1 = 0;
};

SensitivityResult run_sensitivity(const Config& cfg,
                                  const std::string& out_dir);

struct GradSuiteRow {
  std::string check;
  int config_index = 0;
  GradReport report;
  double threshold = 0.0;
  bool pass = false;
};

std::vector<GradSuiteRow> run_gradient_suite(std::uint64_t seed);

int cmd_invert(const Config& cfg, const std::vector<std::string>& overrides,
               const std::string& out_dir);
int cmd_sensitivity(const Config& cfg, const std::string& out_dir);
int cmd_eps_sweep(const Config& cfg, const std::string& out_dir);
int cmd_make_synthetic(const Config& cfg, const std::string& out_dir);
int cmd_render(const Config& cfg, const std::string& out_dir);
int cmd_grad_check(const Config& cfg, const std::string& out_dir);

}  // namespace meshfit
