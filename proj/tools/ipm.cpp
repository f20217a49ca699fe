// ipm - interlinked phase-matching calculator for type-I uniaxial crystals.
// Subcommands: solve, cone, sweep, render, correlate.
// Exit codes: 0 success, 2 usage/config error, 3 no solution.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ipm/crystal_db.hpp"
#include "ipm/geometry.hpp"
#include "ipm/pmcore.hpp"
#include "ipm/render.hpp"
#include "ipm/sweep.hpp"
#include "ipm/tripletstats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNoSolution = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ipm::CrystalDefd lookup_crystal(const std::string& db_path, const std::string& name) {
  const auto db = ipm::load_crystal_db(db_path);
  const auto it = db.find(name);
  if (it == db.end()) {
    std::string names;
    for (const auto& [k, v] : db) names += (names.empty() ? "" : ", ") + k;
    throw UsageError("unknown crystal \"" + name + "\" in " + db_path +
                     " (available: " + names + ")");
  }
  return it->second;
}

json solution_json(const ipm::PMSolutiond& s) {
  return json{{"lambda1_nm", s.lambda1_nm},
              {"lambda2_nm", s.lambda2_nm},
              {"lambda3_nm", s.lambda3_nm},
              {"alpha_deg", ipm::rad_to_deg(s.alpha)},
              {"theta5_int_deg", ipm::rad_to_deg(s.theta5)},
              {"branch_root", ipm::to_string(s.branch.root)},
              {"branch_mirror", ipm::to_string(s.branch.mirror)},
              {"theta_int_deg",
               {{"1", ipm::rad_to_deg(s.theta1)},
                {"2", ipm::rad_to_deg(s.theta2)},
                {"3", ipm::rad_to_deg(s.theta3)}}},
              {"beta_int_deg",
               {{"1", ipm::rad_to_deg(s.beta1)},
                {"2", ipm::rad_to_deg(s.beta2)},
                {"3", ipm::rad_to_deg(s.beta3)}}},
              {"k_rad_per_um", {s.k1, s.k2, s.k3, s.k4, s.k5}},
              {"phi_deg", ipm::rad_to_deg(s.phi)},
              {"max_residual", s.max_residual()},
              {"grazing", s.grazing}};
}

// shared pump/solve options
struct SolveOptions {
  std::string crystal_db = "data/crystals.json";
  std::string crystal = "BBO";
  double lambda4_nm = 349.0;
  double lambda5_nm = 1047.0;
  double lambda1_nm = 632.8;
  double alpha_deg = 34.0;
  double theta5_ext_deg = -34.8;
  double screen_mm = 100.0;
  bool tilted = false;
};

void add_config_option(CLI::App* cmd, std::string& config_path) {
  cmd->add_option("--config", config_path,
                  "JSON config file; explicit flags override its fields");
}

template <typename T>
void from_config(const json& cfg, const char* key, CLI::App* cmd,
                 const std::string& flag, T& value) {
  if (cfg.contains(key) && cmd->count(flag) == 0) value = cfg.at(key).get<T>();
}

void add_solve_options(CLI::App* cmd, SolveOptions& o) {
  cmd->add_option("--crystal-db", o.crystal_db, "crystal database JSON");
  cmd->add_option("--crystal", o.crystal, "crystal record name");
  cmd->add_option("--lambda4-nm", o.lambda4_nm, "downconversion pump wavelength");
  cmd->add_option("--lambda5-nm", o.lambda5_nm, "upconversion pump wavelength");
  cmd->add_option("--lambda1-nm", o.lambda1_nm, "free field-1 wavelength");
  cmd->add_option("--alpha-deg", o.alpha_deg, "pump-4 to optical-axis angle");
  cmd->add_option("--theta5-ext-deg", o.theta5_ext_deg,
                  "external pump separation angle");
  cmd->add_option("--screen-mm", o.screen_mm, "exit face to screen distance");
  cmd->add_flag("--tilted", o.tilted,
                "rotate the crystal so the external pump separation is kept "
                "while alpha is tuned");
}

void apply_solve_config(const json& cfg, CLI::App* cmd, SolveOptions& o) {
  from_config(cfg, "crystal_db", cmd, "--crystal-db", o.crystal_db);
  from_config(cfg, "crystal", cmd, "--crystal", o.crystal);
  from_config(cfg, "lambda4_nm", cmd, "--lambda4-nm", o.lambda4_nm);
  from_config(cfg, "lambda5_nm", cmd, "--lambda5-nm", o.lambda5_nm);
  from_config(cfg, "lambda1_nm", cmd, "--lambda1-nm", o.lambda1_nm);
  from_config(cfg, "alpha_deg", cmd, "--alpha-deg", o.alpha_deg);
  from_config(cfg, "theta5_ext_deg", cmd, "--theta5-ext-deg", o.theta5_ext_deg);
  from_config(cfg, "screen_mm", cmd, "--screen-mm", o.screen_mm);
  if (cfg.contains("tilted") && cmd->count("--tilted") == 0)
    o.tilted = cfg.at("tilted").get<bool>();
}

double theta5_internal(const ipm::CrystalDefd& crystal, const SolveOptions& o) {
  const double n5 = ipm::n_ordinary(crystal, o.lambda5_nm);
  const double ext = ipm::deg_to_rad(o.theta5_ext_deg);
  if (!o.tilted) return ipm::refract_in_ordinary(n5, ext);
  const double alpha = ipm::deg_to_rad(o.alpha_deg);
  const double t4 = crystal.cut_angle - alpha;
  const double rho = ipm::pump4_rotation_for_alpha(crystal, o.lambda4_nm, alpha);
  return ipm::refract_in_ordinary(n5, ext + rho) - t4;
}

int cmd_solve(const SolveOptions& o, bool as_json) {
  const auto crystal = lookup_crystal(o.crystal_db, o.crystal);
  ipm::PMQueryd q{crystal, o.lambda4_nm, o.lambda5_nm, ipm::deg_to_rad(o.alpha_deg),
                  theta5_internal(crystal, o), o.lambda1_nm};
  const auto res = ipm::solve_interlinked(q);
  const ipm::RotationMode mode =
      o.tilted ? ipm::RotationMode::tilted : ipm::RotationMode::normal_incidence;

  if (as_json) {
    json out;
    out["query"] = {{"crystal", o.crystal},
                    {"lambda4_nm", o.lambda4_nm},
                    {"lambda5_nm", o.lambda5_nm},
                    {"lambda1_nm", o.lambda1_nm},
                    {"alpha_deg", o.alpha_deg},
                    {"theta5_ext_deg", o.theta5_ext_deg},
                    {"theta5_int_deg", ipm::rad_to_deg(q.theta5)},
                    {"tilted", o.tilted}};
    out["diagnostics"] = {{"summary", res.diagnostics.summary()},
                          {"degenerate", res.diagnostics.degenerate_configuration},
                          {"no_real_roots", res.diagnostics.no_real_roots},
                          {"domain_rejected", res.diagnostics.domain_rejected},
                          {"residual_rejected", res.diagnostics.residual_rejected}};
    out["solutions"] = json::array();
    for (const auto& s : res.solutions) {
      json js = solution_json(s);
      const auto ext = ipm::solution_externals(crystal, s, mode);
      json jext;
      for (const auto& f : ext)
        jext[std::to_string(f.field)] = {{"theta_ext_deg", ipm::rad_to_deg(f.theta_ext)},
                                         {"beta_ext_deg", ipm::rad_to_deg(f.beta_ext)}};
      js["external"] = jext;
      out["solutions"].push_back(js);
    }
    std::cout << out.dump(2) << "\n";
    return res.solutions.empty() ? kExitNoSolution : kExitOk;
  }

  if (res.solutions.empty()) {
    std::cout << "no solution (" << res.diagnostics.summary() << ")\n";
    return kExitNoSolution;
  }
  std::printf("lambda1 = %.6g nm  lambda2 = %.6g nm  lambda3 = %.6g nm\n",
              res.solutions.front().lambda1_nm, res.solutions.front().lambda2_nm,
              res.solutions.front().lambda3_nm);
  std::printf("alpha = %.6g deg  theta5_int = %.6g deg  (%s)\n\n", o.alpha_deg,
              ipm::rad_to_deg(q.theta5), o.tilted ? "tilted" : "normal incidence");
  for (const auto& s : res.solutions) {
    std::printf("branch %s/%s   phi = %.4f deg   max residual = %.2e%s\n",
                ipm::to_string(s.branch.root), ipm::to_string(s.branch.mirror),
                ipm::rad_to_deg(s.phi), s.max_residual(),
                s.grazing ? "   [grazing]" : "");
    std::printf("  %-6s %12s %14s %13s %14s %13s\n", "field", "lambda(nm)",
                "theta_int(deg)", "beta_int(deg)", "theta_ext(deg)",
                "beta_ext(deg)");
    const auto ext = ipm::solution_externals(crystal, s, mode);
    const double li[3] = {s.lambda1_nm, s.lambda2_nm, s.lambda3_nm};
    const double ti[3] = {s.theta1, s.theta2, s.theta3};
    const double bi[3] = {s.beta1, s.beta2, s.beta3};
    for (int f = 0; f < 3; ++f)
      std::printf("  %-6d %12.4f %14.5f %13.5f %14.5f %13.5f\n", f + 1,
                  li[f], ipm::rad_to_deg(ti[f]), ipm::rad_to_deg(bi[f]),
                  ipm::rad_to_deg(ext[static_cast<std::size_t>(f)].theta_ext),
                  ipm::rad_to_deg(ext[static_cast<std::size_t>(f)].beta_ext));
    std::printf("\n");
  }
  return kExitOk;
}

int cmd_cone(const SolveOptions& o, int samples, const std::string& out_path) {
  const auto crystal = lookup_crystal(o.crystal_db, o.crystal);
  const auto cone = ipm::downconversion_cone(
      crystal, o.lambda4_nm, ipm::deg_to_rad(o.alpha_deg), o.lambda1_nm, samples);
  if (cone.infeasible) {
    std::cout << cone.diagnostic() << "\n";
    return kExitNoSolution;
  }
  const double lambda3 =
      1.0 / (1.0 / o.lambda4_nm - 1.0 / o.lambda1_nm);
  const double n1 = ipm::n_ordinary(crystal, o.lambda1_nm);
  const double n3 = ipm::n_ordinary(crystal, lambda3);
  std::string csv =
      "psi_rad,theta1_int_deg,beta1_int_deg,theta3_int_deg,beta3_int_deg,"
      "theta1_ext_deg,beta1_ext_deg,theta3_ext_deg,beta3_ext_deg,x1_mm,y1_mm,"
      "x3_mm,y3_mm\n";
  ipm::LabConfig lab{o.screen_mm, ipm::RotationMode::normal_incidence};
  char buf[320];
  for (const auto& p : cone.points) {
    const auto e1 = ipm::refract_out(n1, p.beta1, p.theta1, "field 1");
    const auto e3 = ipm::refract_out(n3, p.beta3, p.theta3, "field 3");
    const auto s1 = ipm::project_to_screen(e1.beta, e1.theta, lab, o.lambda1_nm, 1, {});
    const auto s3 = ipm::project_to_screen(e3.beta, e3.theta, lab, lambda3, 3, {});
    std::snprintf(buf, sizeof buf,
                  "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                  p.psi, ipm::rad_to_deg(p.theta1), ipm::rad_to_deg(p.beta1),
                  ipm::rad_to_deg(p.theta3), ipm::rad_to_deg(p.beta3),
                  ipm::rad_to_deg(e1.theta), ipm::rad_to_deg(e1.beta),
                  ipm::rad_to_deg(e3.theta), ipm::rad_to_deg(e3.beta), s1.x_mm,
                  s1.y_mm, s3.x_mm, s3.y_mm);
    csv += buf;
  }
  if (out_path.empty() || out_path == "-")
    std::cout << csv;
  else
    write_file(out_path, csv);
  std::fprintf(stderr, "cone half-angle (internal): %.6f deg, %d points\n",
               ipm::rad_to_deg(cone.half_angle), samples);
  return kExitOk;
}

struct SweepCli {
  SolveOptions base;
  std::vector<double> alpha_range;    // start stop step (deg)
  std::vector<double> lambda1_range;  // start stop step (nm)
  std::string out_dir = "out";
  bool emit_csv = true, emit_json = false, emit_image = false, emit_frames = false;
  int width = 480, height = 360;
  double mm_per_px = 0.25;
  int threads = 0;
};

ipm::SweepSpec make_spec(const SweepCli& c) {
  ipm::SweepSpec spec;
  spec.crystal_name = c.base.crystal;
  spec.lambda4_nm = c.base.lambda4_nm;
  spec.lambda5_nm = c.base.lambda5_nm;
  spec.theta5_ext_deg = c.base.theta5_ext_deg;
  spec.lab.screen_distance_mm = c.base.screen_mm;
  spec.lab.mode = c.base.tilted ? ipm::RotationMode::tilted
                                : ipm::RotationMode::normal_incidence;
  auto to_range = [](const std::vector<double>& v, double fallback) {
    if (v.empty()) return ipm::Range{fallback, fallback, 1.0};
    if (v.size() == 1) return ipm::Range{v[0], v[0], 1.0};
    if (v.size() == 3) {
      if (v[2] <= 0.0) throw UsageError("range step must be > 0");
      if (v[1] < v[0]) throw UsageError("range stop must be >= start");
      return ipm::Range{v[0], v[1], v[2]};
    }
    throw UsageError("ranges take one value or start stop step");
  };
  spec.alpha_deg = to_range(c.alpha_range, c.base.alpha_deg);
  spec.lambda1_nm = to_range(c.lambda1_range, c.base.lambda1_nm);
  spec.outputs = {c.emit_csv, c.emit_json, c.emit_image, c.emit_frames};
  spec.canvas.width = c.width;
  spec.canvas.height = c.height;
  spec.canvas.mm_per_px = c.mm_per_px;
  return spec;
}

int cmd_sweep(const SweepCli& c) {
  const auto crystal = lookup_crystal(c.base.crystal_db, c.base.crystal);
  const ipm::SweepSpec spec = make_spec(c);
  fs::create_directories(c.out_dir);
  const auto frames = ipm::sweep_alpha(crystal, spec, c.threads);

  long long spot_count = 0;
  for (const auto& f : frames) spot_count += static_cast<long long>(f.spots.size());

  if (spec.outputs.csv)
    write_file(c.out_dir + "/sweep.csv", ipm::spots_csv(frames));
  if (spec.outputs.json)
    write_file(c.out_dir + "/sweep.json", ipm::frames_json(frames));
  if (spec.outputs.image) {
    std::vector<ipm::ScreenSpot> all;
    for (const auto& f : frames) all.insert(all.end(), f.spots.begin(), f.spots.end());
    ipm::Image img;
    ipm::render_map(all, spec.canvas, img);
    img.write_ppm(c.out_dir + "/sweep.ppm");
  }
  if (spec.outputs.frames) {
    char name[32];
    for (std::size_t i = 0; i < frames.size(); ++i) {
      std::snprintf(name, sizeof name, "/frame_%04zu.ppm", i);
      ipm::Image img;
      ipm::render_map(frames[i].spots, spec.canvas, img);
      img.write_ppm(c.out_dir + name);
    }
  }
  std::fprintf(stderr, "%zu frame(s), %lld spot(s) -> %s\n", frames.size(),
               spot_count, c.out_dir.c_str());
  return kExitOk;
}

int cmd_render(const std::string& in_csv, const std::string& out_ppm, int width,
               int height, double mm_per_px) {
  const auto spots = ipm::parse_spots_csv(read_file(in_csv));
  ipm::CanvasSpec canvas;
  canvas.width = width;
  canvas.height = height;
  canvas.mm_per_px = mm_per_px;
  ipm::Image img;
  const auto stats = ipm::render_map(spots, canvas, img);
  img.write_ppm(out_ppm);
  std::fprintf(stderr, "%d drawn, %d clipped -> %s\n", stats.drawn, stats.clipped,
               out_ppm.c_str());
  return kExitOk;
}

struct CorrelateCli {
  std::string in_csv;
  bool simulate = false;
  double mean_pairs = 1e4;
  std::string statistics = "thermal";
  int modes = 1;
  double conversion_prob = 0.02;
  std::vector<double> eta{1.0, 1.0, 1.0};
  std::vector<double> bg{0.0, 0.0, 0.0};
  long long shots = 10000;
  std::uint64_t seed = 1;
  long long max_lag = 10;
  std::string records_out;
};

int cmd_correlate(const CorrelateCli& c) {
  std::vector<ipm::TripletRecord> records;
  if (c.simulate) {
    ipm::TripletModel model;
    model.mean_pairs = c.mean_pairs;
    model.statistics = ipm::pair_statistics_from_string(c.statistics);
    model.modes = c.modes;
    model.conversion_prob = c.conversion_prob;
    if (c.eta.size() != 3 || c.bg.size() != 3)
      throw UsageError("--eta and --bg take exactly three values");
    model.efficiency = {c.eta[0], c.eta[1], c.eta[2]};
    model.background = {c.bg[0], c.bg[1], c.bg[2]};
    records = ipm::simulate(model, c.shots, c.seed);
    if (!c.records_out.empty()) write_file(c.records_out, ipm::records_csv(records));
  } else {
    if (c.in_csv.empty())
      throw UsageError("correlate needs --in records.csv or --simulate");
    records = ipm::parse_records_csv(read_file(c.in_csv));
  }
  std::string out = "k,gamma\n";
  char buf[64];
  for (long long k = 0; k <= c.max_lag; ++k) {
    if (static_cast<long long>(records.size()) - k < 2) break;
    std::snprintf(buf, sizeof buf, "%lld,%.9g\n", k,
                  ipm::gamma_correlation(records, k));
    out += buf;
  }
  std::cout << out;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"interlinked phase-matching calculator (type-I uniaxial crystals)"};
  app.require_subcommand(1);

  // solve
  SolveOptions so;
  bool solve_json = false;
  std::string solve_config;
  auto* solve = app.add_subcommand("solve", "solve one pump configuration");
  add_solve_options(solve, so);
  add_config_option(solve, solve_config);
  solve->add_flag("--json", solve_json, "JSON output");

  // cone
  SolveOptions co;
  int cone_samples = 256;
  std::string cone_out;
  auto* cone = app.add_subcommand("cone", "downconversion-only cone directions");
  add_solve_options(cone, co);
  cone->add_option("--samples", cone_samples, "azimuth samples")
      ->check(CLI::PositiveNumber);
  cone->add_option("--out", cone_out, "output CSV path ('-' for stdout)");

  // sweep
  SweepCli sw;
  std::string sweep_config;
  auto* sweep = app.add_subcommand("sweep", "parameter sweep with file outputs");
  add_solve_options(sweep, sw.base);
  add_config_option(sweep, sweep_config);
  sweep->add_option("--alpha-range-deg", sw.alpha_range,
                    "alpha sweep: start stop step")
      ->expected(3);
  sweep->add_option("--lambda1-range-nm", sw.lambda1_range,
                    "lambda1 sweep: start stop step")
      ->expected(3);
  sweep->add_option("--out", sw.out_dir, "output directory");
  sweep->add_flag("--csv,!--no-csv", sw.emit_csv, "write sweep.csv");
  sweep->add_flag("--json", sw.emit_json, "write sweep.json");
  sweep->add_flag("--image", sw.emit_image, "write sweep.ppm");
  sweep->add_flag("--frames", sw.emit_frames, "write frame_NNNN.ppm per alpha");
  sweep->add_option("--width", sw.width, "canvas width px");
  sweep->add_option("--height", sw.height, "canvas height px");
  sweep->add_option("--mm-per-px", sw.mm_per_px, "canvas scale");
  sweep->add_option("--threads", sw.threads, "worker threads (0 = auto)");

  // render
  std::string render_in, render_out = "render.ppm";
  int render_w = 480, render_h = 360;
  double render_scale = 0.25;
  auto* render = app.add_subcommand("render", "render a spots CSV to a PPM image");
  render->add_option("--in", render_in, "spots CSV")->required();
  render->add_option("--out", render_out, "output PPM path");
  render->add_option("--width", render_w, "canvas width px");
  render->add_option("--height", render_h, "canvas height px");
  render->add_option("--mm-per-px", render_scale, "canvas scale");

  // correlate
  CorrelateCli cc;
  auto* corr = app.add_subcommand(
      "correlate", "shot-lagged intensity correlation of triplet records");
  corr->add_option("--in", cc.in_csv, "records CSV (shot,m1,m2,m3)");
  corr->add_flag("--simulate", cc.simulate, "simulate records instead of reading");
  corr->add_option("--mean-pairs", cc.mean_pairs, "mean primary pairs per shot");
  corr->add_option("--statistics", cc.statistics,
                   "poisson | thermal | multithermal");
  corr->add_option("--modes", cc.modes, "multithermal mode count");
  corr->add_option("--conversion-prob", cc.conversion_prob,
                   "field-3 upconversion probability");
  corr->add_option("--eta", cc.eta, "detection efficiencies eta1 eta2 eta3")
      ->expected(3);
  corr->add_option("--bg", cc.bg, "mean background counts b1 b2 b3")->expected(3);
  corr->add_option("--shots", cc.shots, "number of shots");
  corr->add_option("--seed", cc.seed, "RNG seed");
  corr->add_option("--max-lag", cc.max_lag, "largest lag k to print");
  corr->add_option("--records-out", cc.records_out, "also write the records CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (solve->parsed()) {
      if (!solve_config.empty())
        apply_solve_config(json::parse(read_file(solve_config)), solve, so);
      return cmd_solve(so, solve_json);
    }
    if (cone->parsed()) return cmd_cone(co, cone_samples, cone_out);
    if (sweep->parsed()) {
      if (!sweep_config.empty()) {
        const json cfg = json::parse(read_file(sweep_config));
        apply_solve_config(cfg, sweep, sw.base);
        auto range_from = [&](const char* key, const std::string& flag,
                              std::vector<double>& dst) {
          if (cfg.contains(key) && sweep->count(flag) == 0)
            dst = cfg.at(key).get<std::vector<double>>();
        };
        range_from("alpha_range_deg", "--alpha-range-deg", sw.alpha_range);
        range_from("lambda1_range_nm", "--lambda1-range-nm", sw.lambda1_range);
        from_config(cfg, "out", sweep, "--out", sw.out_dir);
        from_config(cfg, "csv", sweep, "--csv", sw.emit_csv);
        from_config(cfg, "json", sweep, "--json", sw.emit_json);
        from_config(cfg, "image", sweep, "--image", sw.emit_image);
        from_config(cfg, "frames", sweep, "--frames", sw.emit_frames);
        from_config(cfg, "width", sweep, "--width", sw.width);
        from_config(cfg, "height", sweep, "--height", sw.height);
        from_config(cfg, "mm_per_px", sweep, "--mm-per-px", sw.mm_per_px);
      }
      return cmd_sweep(sw);
    }
    if (render->parsed())
      return cmd_render(render_in, render_out, render_w, render_h, render_scale);
    if (corr->parsed()) return cmd_correlate(cc);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ipm::CrystalDbError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ipm::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}
