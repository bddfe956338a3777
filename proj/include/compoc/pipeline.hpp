#pragma once

#include <string>
#include <vector>

#include "compoc/serialize.hpp"

namespace compoc {

struct PipelineConfig {
  OcpInstance instance;
  std::uint64_t seed = 1;
  std::vector<double> epsilons;
  int certify_samples = 64;
  int constant_samples = 64;
  int eval_starts = 33;
  int delta_samples = 64;
  int max_refits = 3;
  double calibration_margin = 1.25;
  int omega_samples = 33;
  bool plan_only = false;
};

// base_dir resolves a string-valued "instance" field; the COMP_OC_SEED
// environment variable, when set, wins over both the file and any flag.
PipelineConfig config_from_json(const json& j, const std::string& base_dir);
PipelineConfig load_config(const std::string& path);
void apply_env_seed(PipelineConfig& cfg);

// Output of the preparatory stages shared by every subcommand: certificate,
// calibrated instances and the constant ledger. When the certificate fails,
// `certified` is false and the remaining fields echo the uncalibrated input.
struct PipelineStages {
  bool certified = false;
  ConvexityCertificate cert;
  OcpInstance orig;  // calibrated original
  OcpInstance ext;   // extension rebuilt on the calibrated box
  ConstantLedger lc;
  json report_head;  // config, instance, certificate, calibration, constants
};

PipelineStages prepare_stages(const PipelineConfig& cfg);

// Full staged run: certify, extend, calibrate, re-extend with the calibrated
// box, estimate constants, then plan / build / evaluate per target accuracy.
// Typed errors propagate; a failed certificate returns a report with
// status "not_certified" instead of throwing.
json run_pipeline(const PipelineConfig& cfg);

// FNV-1a over the canonical dump with the volatile fields removed.
std::string report_content_hash(json report);

// One row per target accuracy; plan-only rows leave the measured columns
// empty.
std::string report_to_csv(const json& report);

int exit_code_for_report(const json& report);

}  // namespace compoc
