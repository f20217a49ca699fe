#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
  const fs::path tmp =
      fs::temp_directory_path() / ("ipm_cli_out_" + std::to_string(::getpid()));
  const std::string cmd = std::string("cd ") + IPM_SOURCE_DIR + " && " +
                          IPM_CLI_BIN + " " + args + " > " + tmp.string() +
                          " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(tmp);
  std::ostringstream buf;
  buf << in.rdbuf();
  fs::remove(tmp);
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, buf.str()};
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const std::string kPaperFlags =
    "--lambda1-nm 632.8 --lambda4-nm 349 --lambda5-nm 1047 "
    "--theta5-ext-deg -34.8 --alpha-deg 33.85";

}  // namespace

TEST_CASE("cli solve") {
  SUBCASE("paper configuration prints the derived wavelengths") {
    const auto r = run_cli("solve " + kPaperFlags);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("446.396") != std::string::npos);
    CHECK(r.output.find("778.179") != std::string::npos);
    CHECK(r.output.find("branch minus/up") != std::string::npos);
  }

  SUBCASE("json output re-parses and round-trips the angles") {
    const auto r = run_cli("solve " + kPaperFlags + " --json");
    CHECK(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.output);
    REQUIRE(j.at("solutions").size() == 2);
    const auto& s = j.at("solutions")[0];
    CHECK(s.at("lambda2_nm").get<double>() == doctest::Approx(446.396).epsilon(1e-4));
    CHECK(s.at("external").contains("2"));
    CHECK(s.at("max_residual").get<double>() < 1e-10);
  }

  SUBCASE("infeasible query exits 3 with a diagnostic") {
    const auto r = run_cli("solve --lambda1-nm 698 --alpha-deg 30");
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("no solution") != std::string::npos);
  }

  SUBCASE("unknown crystal exits 2") {
    const auto r = run_cli("solve --crystal KTP " + kPaperFlags);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("KTP") != std::string::npos);
  }

  SUBCASE("unknown flag exits 2") {
    CHECK(run_cli("solve --definitely-not-a-flag 1").exit_code == 2);
  }

  SUBCASE("config file supplies defaults, flags override") {
    const fs::path cfg = fs::temp_directory_path() / "ipm_solve_cfg.json";
    std::ofstream(cfg) << R"({"lambda1_nm": 698.0, "alpha_deg": 33.85,
                             "theta5_ext_deg": -34.8})";
    const auto r =
        run_cli("solve --config " + cfg.string() + " --lambda1-nm 632.8 --json");
    fs::remove(cfg);
    CHECK(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.output);
    CHECK(j.at("query").at("lambda1_nm").get<double>() == 632.8);
    CHECK(j.at("query").at("alpha_deg").get<double>() == 33.85);
  }
}

TEST_CASE("cli help") {
  for (const char* sub : {"", "solve", "cone", "sweep", "render", "correlate"}) {
    const auto r = run_cli(std::string(sub) + " --help");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("--") != std::string::npos);
  }
}

TEST_CASE("cli cone emits the csv") {
  const auto r = run_cli("cone --lambda1-nm 632.8 --alpha-deg 34 --samples 16 --out -");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("psi_rad") != std::string::npos);
  const auto infeasible = run_cli("cone --lambda1-nm 698 --alpha-deg 20 --out -");
  CHECK(infeasible.exit_code == 3);
}

TEST_CASE("cli sweep reproduces the shipped goldens and is idempotent") {
  const fs::path out1 = fs::temp_directory_path() / "ipm_sweep_run1";
  const fs::path out2 = fs::temp_directory_path() / "ipm_sweep_run2";
  fs::remove_all(out1);
  fs::remove_all(out2);
  const std::string cfg = std::string(IPM_SOURCE_DIR) + "/configs/halfmoon_sweep.json";
  const auto r1 = run_cli("sweep --config " + cfg + " --out " + out1.string());
  const auto r2 = run_cli("sweep --config " + cfg + " --out " + out2.string());
  REQUIRE(r1.exit_code == 0);
  REQUIRE(r2.exit_code == 0);
  const std::string golden_dir = std::string(IPM_SOURCE_DIR) + "/tests/golden";
  CHECK(read_file(out1 / "sweep.csv") == read_file(golden_dir + "/halfmoon_sweep.csv"));
  CHECK(read_file(out1 / "sweep.ppm") == read_file(golden_dir + "/halfmoon_sweep.ppm"));
  CHECK(read_file(out1 / "sweep.csv") == read_file(out2 / "sweep.csv"));
  CHECK(read_file(out1 / "sweep.ppm") == read_file(out2 / "sweep.ppm"));
  fs::remove_all(out1);
  fs::remove_all(out2);
}

TEST_CASE("cli sweep emits the movie frame files byte-for-byte") {
  const fs::path out = fs::temp_directory_path() / "ipm_sweep_movie";
  fs::remove_all(out);
  const std::string cfg = std::string(IPM_SOURCE_DIR) + "/configs/movie_sweep.json";
  const auto r = run_cli("sweep --config " + cfg + " --out " + out.string());
  REQUIRE(r.exit_code == 0);
  const std::string golden_dir = std::string(IPM_SOURCE_DIR) + "/tests/golden";
  CHECK(read_file(out / "sweep.csv") == read_file(golden_dir + "/movie_sweep.csv"));
  CHECK(read_file(out / "frame_0000.ppm") == read_file(golden_dir + "/frame_0000.ppm"));
  CHECK(read_file(out / "frame_0001.ppm") == read_file(golden_dir + "/frame_0001.ppm"));
  fs::remove_all(out);
}

TEST_CASE("cli render on an empty csv produces the blank canvas, exit 0") {
  const fs::path csv = fs::temp_directory_path() / "ipm_empty.csv";
  const fs::path ppm = fs::temp_directory_path() / "ipm_empty.ppm";
  std::ofstream(csv) << "alpha_deg,lambda1_nm,field,branch_root,branch_mirror,"
                        "lambda_nm,theta_ext_deg,beta_ext_deg,x_mm,y_mm\n";
  const auto r = run_cli("render --in " + csv.string() + " --out " + ppm.string() +
                         " --width 120 --height 90");
  CHECK(r.exit_code == 0);
  const std::string bytes = read_file(ppm);
  const std::string header = "P6\n120 90\n255\n";
  CHECK(bytes.rfind(header, 0) == 0);
  CHECK(bytes.size() == header.size() + 3u * 120 * 90);
  fs::remove(csv);
  fs::remove(ppm);
}

TEST_CASE("cli correlate on ideal simulated records prints epsilon 1") {
  const auto r = run_cli(
      "correlate --simulate --statistics thermal --mean-pairs 10000 "
      "--conversion-prob 0.02 --eta 1 1 1 --bg 0 0 0 --shots 3000 --seed 5 "
      "--max-lag 2");
  CHECK(r.exit_code == 0);
  std::istringstream in(r.output);
  std::string line;
  std::getline(in, line);
  CHECK(line == "k,gamma");
  std::getline(in, line);
  const double g0 = std::stod(line.substr(2));
  CHECK(std::abs(g0 - 1.0) < 1e-12);
}
