#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "optoact/discord.hpp"
#include "optoact/io.hpp"

using namespace optoact;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

/// Runs the CLI with `args`, capturing stdout; stderr is discarded.
Result run(const std::string& args) {
  const std::string cmd = std::string(OPTOACT_CLI) + " " + args + " 2>/dev/null";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, p)) > 0;) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch() {
  const auto dir = fs::temp_directory_path() / "optoact_test_cli";
  fs::create_directories(dir);
  return dir;
}

std::string write_file(const std::string& name, const std::string& text) {
  const auto path = scratch() / name;
  std::ofstream(path) << text;
  return path.string();
}

std::string short_config() {
  return write_file("short.ini",
                    "[mech_init]\ntype = separable_discorded\ntarget_occupation = 12\n"
                    "[integrator]\nt_end_s = 5e-7\nwindow = full\n");
}

}  // namespace

TEST_CASE("discord and logneg match the library") {
  const auto v = two_mode_squeezed_vacuum(0.6);
  std::ostringstream os;
  write_cm(os, v);
  const auto path = write_file("tmsv.cm", os.str());

  auto r = run("discord --cm " + path);
  CHECK(r.code == 0);
  CHECK(r.out == format_double(gaussian_discord(v, 1)) + "\n");
  r = run("discord --cm " + path + " --measured-mode 0");
  CHECK(r.out == format_double(gaussian_discord(v, 0)) + "\n");

  r = run("logneg --cm " + path + " --partition 1");
  CHECK(r.code == 0);
  CHECK(r.out == format_double(log_negativity(v, {1})) + "\n");
}

TEST_CASE("invalid input exits with code 2") {
  const auto bad = write_file("bad.cm", "1\n0.3 0\n0 0.3\n");
  CHECK(run("discord --cm " + bad).code == 2);
  CHECK(run("discord --cm " + bad + " --force").code == 2);
  const auto skew = write_file("skew.cm", "2\n1 0 1e-6 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n");
  CHECK(run("discord --cm " + skew).code == 2);
  CHECK(run("discord --cm " + skew + " --force").code == 0);
  CHECK(run("discord --cm /nonexistent/file.cm").code == 2);
  CHECK(run("no-such-command").code == 2);
  CHECK(run("demon-sample -n 1").code == 2);
  CHECK(run("steady-state --config " + write_file("unknown.ini", "[unit1]\nmass_kg = 1\n")).code == 2);
  CHECK(run("evolve --plot").code == 2);
}

TEST_CASE("numerical failure exits with code 3") {
  const auto cfg = write_file("multistable.ini",
                              "[common]\ndetuning_mode = self_consistent\nbare_detuning_khz_over_2pi = -947\n");
  CHECK(run("steady-state --config " + cfg).code == 3);
}

TEST_CASE("demon sampling is reproducible") {
  const auto cfg = short_config();
  const auto a = run("demon-sample --config " + cfg + " --seed 5 -n 2");
  const auto b = run("demon-sample --config " + cfg + " --seed 5 -n 2");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("# seed=5") != std::string::npos);
  CHECK(a.out.find("sample,E_max,t_star_s,theta1_rad,theta2_rad") != std::string::npos);
  const auto c = run("demon-sample --config " + cfg + " --seed 6 -n 2");
  CHECK(c.out != a.out);
}

TEST_CASE("activate and evolve write CSV files and plots") {
  const auto cfg = short_config();
  const auto out = (scratch() / "act.csv").string();
  fs::remove(out);
  fs::remove(scratch() / "act.svg");
  CHECK(run("activate --config " + cfg + " --out " + out + " --plot").code == 0);
  std::ifstream f(out);
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(ss.str().find("run,t_s,E_mirrors_vs_fields") != std::string::npos);
  CHECK(fs::exists(scratch() / "act.svg"));

  const auto r = run("evolve --config " + cfg);
  CHECK(r.code == 0);
  CHECK(r.out.rfind("# optoact 0.1.0 config_hash=", 0) == 0);
  CHECK(r.out.find("t_s,E_pair1,E_pair2,E_mirrors_vs_fields,D_mech,nu_min") != std::string::npos);
}
