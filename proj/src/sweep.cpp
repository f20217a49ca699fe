#include "ipm/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace ipm {

int Range::count() const {
  if (fixed()) return 1;
  if (!(step > 0.0))
    throw std::invalid_argument("range step must be > 0 when stop > start");
  return static_cast<int>(std::floor((stop - start) / step + 1e-9)) + 1;
}

namespace {

// zero-normalized %.9g
std::string fmt9(double v) {
  if (v == 0.0) v = 0.0;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

struct FrameGeometry {
  double alpha{};       // rad
  double theta5_int{};  // rad, pump-4 frame
};

FrameGeometry frame_geometry(const CrystalDefd& crystal, const SweepSpec& spec,
                             double alpha_deg) {
  FrameGeometry g;
  g.alpha = deg_to_rad(alpha_deg);
  const double n5 = n_ordinary(crystal, spec.lambda5_nm);
  const double theta5_ext = deg_to_rad(spec.theta5_ext_deg);
  if (spec.lab.mode == RotationMode::tilted) {
    const double t4 = crystal.cut_angle - g.alpha;
    const double rho = pump4_rotation_for_alpha(crystal, spec.lambda4_nm, g.alpha);
    g.theta5_int = refract_in_ordinary(n5, theta5_ext + rho) - t4;
  } else {
    g.theta5_int = refract_in_ordinary(n5, theta5_ext);
  }
  return g;
}

bool spot_order(const ScreenSpot& a, const ScreenSpot& b) {
  if (a.alpha_deg != b.alpha_deg) return a.alpha_deg < b.alpha_deg;
  if (a.lambda1_nm != b.lambda1_nm) return a.lambda1_nm < b.lambda1_nm;
  const int ra = static_cast<int>(a.branch.root), rb = static_cast<int>(b.branch.root);
  if (ra != rb) return ra < rb;
  const int ma = static_cast<int>(a.branch.mirror), mb = static_cast<int>(b.branch.mirror);
  if (ma != mb) return ma < mb;
  return a.field < b.field;
}

}  // namespace

FrameResult sweep_lambda1(const CrystalDefd& crystal, const SweepSpec& spec,
                          double alpha_deg) {
  FrameResult frame;
  frame.alpha_deg = alpha_deg;
  FrameGeometry g;
  try {
    g = frame_geometry(crystal, spec, alpha_deg);
  } catch (const DomainError&) {
    // frame geometry unrealizable (e.g. tilt beyond total reflection):
    // every grid point counts as infeasible
    frame.diagnostics.queries = spec.lambda1_nm.count();
    frame.diagnostics.infeasible = frame.diagnostics.queries;
    return frame;
  }

  const int n = spec.lambda1_nm.count();
  for (int i = 0; i < n; ++i) {
    const double lambda1 = spec.lambda1_nm.at(i);
    PMQueryd q{crystal, spec.lambda4_nm, spec.lambda5_nm, g.alpha, g.theta5_int,
               lambda1};
    ++frame.diagnostics.queries;
    SolveResult<double> res;
    try {
      res = solve_interlinked(q);
    } catch (const DomainError&) {
      // grid point outside the validity domain (a derived wavelength left
      // the transparency range); skip it like any other infeasible point
      ++frame.diagnostics.infeasible;
      continue;
    }
    if (res.solutions.empty()) {
      ++frame.diagnostics.infeasible;
      continue;
    }
    frame.diagnostics.solutions += static_cast<long long>(res.solutions.size());
    for (const auto& sol : res.solutions) {
      const auto ext = solution_externals(crystal, sol, spec.lab.mode);
      for (const auto& f : ext) {
        ScreenSpot s = project_to_screen(f.beta_ext, f.theta_ext, spec.lab,
                                         f.lambda_nm, f.field, sol.branch);
        s.alpha_deg = alpha_deg;
        s.lambda1_nm = lambda1;
        frame.spots.push_back(s);
      }
    }
  }
  std::sort(frame.spots.begin(), frame.spots.end(), spot_order);
  return frame;
}

std::vector<FrameResult> sweep_alpha(const CrystalDefd& crystal,
                                     const SweepSpec& spec, int threads) {
  const int n = spec.alpha_deg.count();
  std::vector<FrameResult> frames(static_cast<std::size_t>(n));
  unsigned workers = threads > 0 ? static_cast<unsigned>(threads)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(n));

  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1))
      frames[static_cast<std::size_t>(i)] =
          sweep_lambda1(crystal, spec, spec.alpha_deg.at(i));
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return frames;
}

std::string spots_csv(std::span<const FrameResult> frames) {
  std::string out =
      "alpha_deg,lambda1_nm,field,branch_root,branch_mirror,lambda_nm,"
      "theta_ext_deg,beta_ext_deg,x_mm,y_mm\n";
  for (const auto& fr : frames)
    for (const auto& s : fr.spots) {
      out += fmt9(s.alpha_deg);
      out += ',';
      out += fmt9(s.lambda1_nm);
      out += ',';
      out += std::to_string(s.field);
      out += ',';
      out += to_string(s.branch.root);
      out += ',';
      out += to_string(s.branch.mirror);
      out += ',';
      out += fmt9(s.lambda_nm);
      out += ',';
      out += fmt9(s.theta_ext_deg);
      out += ',';
      out += fmt9(s.beta_ext_deg);
      out += ',';
      out += fmt9(s.x_mm);
      out += ',';
      out += fmt9(s.y_mm);
      out += '\n';
    }
  return out;
}

std::string spots_csv(const FrameResult& frame) {
  return spots_csv(std::span<const FrameResult>{&frame, 1});
}

std::string frames_json(std::span<const FrameResult> frames) {
  nlohmann::ordered_json root = nlohmann::ordered_json::array();
  for (const auto& fr : frames) {
    nlohmann::ordered_json jf;
    jf["alpha_deg"] = fr.alpha_deg;
    jf["diagnostics"] = {{"queries", fr.diagnostics.queries},
                         {"infeasible", fr.diagnostics.infeasible},
                         {"solutions", fr.diagnostics.solutions}};
    auto& rows = jf["spots"] = nlohmann::ordered_json::array();
    for (const auto& s : fr.spots) {
      rows.push_back({{"alpha_deg", s.alpha_deg},
                      {"lambda1_nm", s.lambda1_nm},
                      {"field", s.field},
                      {"branch_root", to_string(s.branch.root)},
                      {"branch_mirror", to_string(s.branch.mirror)},
                      {"lambda_nm", s.lambda_nm},
                      {"theta_ext_deg", s.theta_ext_deg},
                      {"beta_ext_deg", s.beta_ext_deg},
                      {"x_mm", s.x_mm},
                      {"y_mm", s.y_mm}});
    }
    root.push_back(std::move(jf));
  }
  return root.dump(2) + "\n";
}

std::vector<ScreenSpot> parse_spots_csv(const std::string& text) {
  std::vector<ScreenSpot> spots;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::array<std::string, 10> cols;
    std::size_t pos = 0;
    for (int c = 0; c < 10; ++c) {
      const std::size_t comma = line.find(',', pos);
      cols[static_cast<std::size_t>(c)] =
          line.substr(pos, comma == std::string::npos ? comma : comma - pos);
      if (comma == std::string::npos && c < 9)
        throw std::runtime_error("malformed spots CSV row: " + line);
      pos = comma + 1;
    }
    ScreenSpot s;
    s.alpha_deg = std::stod(cols[0]);
    s.lambda1_nm = std::stod(cols[1]);
    s.field = std::stoi(cols[2]);
    s.branch.root = cols[3] == "plus" ? RootBranch::plus : RootBranch::minus;
    s.branch.mirror = cols[4] == "up" ? MirrorBranch::up : MirrorBranch::down;
    s.lambda_nm = std::stod(cols[5]);
    s.theta_ext_deg = std::stod(cols[6]);
    s.beta_ext_deg = std::stod(cols[7]);
    s.x_mm = std::stod(cols[8]);
    s.y_mm = std::stod(cols[9]);
    spots.push_back(s);
  }
  return spots;
}

}  // namespace ipm
