#pragma once

#include <span>
#include <string>
#include <vector>

#include "ipm/geometry.hpp"
#include "ipm/pmcore.hpp"
#include "ipm/render.hpp"

namespace ipm {

/// Inclusive grid start..stop with positive step; a single value is
/// start == stop (any step).
struct Range {
  double start{}, stop{}, step{1.0};
  bool fixed() const { return stop <= start; }
  int count() const;
  double at(int i) const { return start + step * i; }
};

struct OutputFlags {
  bool csv = true;
  bool json = false;
  bool image = false;
  bool frames = false;
};

/// Parameter-sweep description; angles in degrees at this boundary.
struct SweepSpec {
  std::string crystal_name = "BBO";
  double lambda4_nm = 349.0;
  double lambda5_nm = 1047.0;
  double theta5_ext_deg = -34.8;
  Range alpha_deg{34.0, 34.0, 0.05};
  Range lambda1_nm{632.8, 632.8, 1.0};
  LabConfig lab{};
  OutputFlags outputs{};
  CanvasSpec canvas{};
};

struct SweepDiagnostics {
  long long queries = 0;
  long long infeasible = 0;  // queries with an empty solution set
  long long solutions = 0;
  void merge(const SweepDiagnostics& o) {
    queries += o.queries;
    infeasible += o.infeasible;
    solutions += o.solutions;
  }
};

struct FrameResult {
  double alpha_deg{};
  std::vector<ScreenSpot> spots;  // deterministic order
  SweepDiagnostics diagnostics;
};

/// Solve every lambda1 grid point at the frame's fixed alpha and project
/// fields 1, 2, 3 of every branch to the screen. Infeasible points only
/// count in the diagnostics.
FrameResult sweep_lambda1(const CrystalDefd& crystal, const SweepSpec& spec,
                          double alpha_deg);

inline FrameResult sweep_lambda1(const CrystalDefd& crystal, const SweepSpec& spec) {
  return sweep_lambda1(crystal, spec, spec.alpha_deg.start);
}

/// One frame per alpha grid point, computed in parallel over `threads`
/// workers (0 = hardware default) and returned in ascending alpha order;
/// the result is identical to a serial run.
std::vector<FrameResult> sweep_alpha(const CrystalDefd& crystal,
                                     const SweepSpec& spec, int threads = 0);

/// CSV view of a spot list (9 significant digits). Columns:
/// alpha_deg,lambda1_nm,field,branch_root,branch_mirror,lambda_nm,
/// theta_ext_deg,beta_ext_deg,x_mm,y_mm
std::string spots_csv(std::span<const FrameResult> frames);
std::string spots_csv(const FrameResult& frame);

/// JSON view: array of frame objects mirroring the CSV rows plus the
/// diagnostics counters.
std::string frames_json(std::span<const FrameResult> frames);

/// Parse rows in the spots_csv schema (header required).
std::vector<ScreenSpot> parse_spots_csv(const std::string& text);

}  // namespace ipm
