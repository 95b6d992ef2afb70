#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(EIT_BIN) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::string out;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string cfg(const std::string& name) { return std::string(CONFIG_DIR) + "/" + name; }

fs::path scratch(const std::string& tag) {
  const fs::path d = fs::temp_directory_path() / ("multistab_cli_" + tag + "_" + std::to_string(getpid()));
  fs::remove_all(d);
  return d;
}

std::vector<std::string> lines(const fs::path& f) {
  std::ifstream in(f);
  std::vector<std::string> v;
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

std::vector<std::string> data_rows(const fs::path& f) {
  std::vector<std::string> v;
  for (auto& l : lines(f))
    if (!l.empty() && l[0] != '#') v.push_back(l);
  return v;
}

bool has_line(const std::vector<std::string>& v, const std::string& prefix) {
  for (const auto& l : v)
    if (l.rfind(prefix, 0) == 0) return true;
  return false;
}

}  // namespace

TEST_CASE("solve writes one row per steady state") {
  const fs::path d = scratch("solve");
  Run r = run("solve --config " + cfg("paper_defaults.cfg") + " --delta0 -5 --out " + d.string());
  REQUIRE(r.code == 0);
  auto rows = data_rows(d / "solve.csv");
  REQUIRE(rows.size() == 5);  // header + four branches
  CHECK(rows[0].rfind("branch_index,delta_ps,x_s", 0) == 0);

  const auto all = lines(d / "solve.csv");
  CHECK(has_line(all, "# multistab-eit"));
  CHECK(has_line(all, "# subcommand: solve"));
  CHECK(has_line(all, "# units:"));
  CHECK(has_line(all, "# flags:"));
  CHECK(has_line(all, "#   kappa"));

  r = run("solve --config " + cfg("paper_defaults.cfg") + " --delta0 10 --out " + d.string());
  CHECK(r.code == 0);
  CHECK(data_rows(d / "solve.csv").size() == 3);

  r = run("solve --config " + cfg("paper_defaults.cfg") + " --delta0 30 --out " + d.string());
  CHECK(r.code == 2);
  fs::remove_all(d);
}

TEST_CASE("sweep output does not depend on the thread count") {
  const fs::path a = scratch("sweep1"), b = scratch("sweep4");
  const std::string base = "sweep --config " + cfg("paper_defaults.cfg") + " --delta0-min -6 --delta0-max 30 --steps 301";
  REQUIRE(run(base + " --threads 1 --out " + a.string()).code == 0);
  REQUIRE(run(base + " --threads 4 --out " + b.string()).code == 0);
  for (const char* f : {"sweep_delta_ps.csv", "sweep_x_s.csv", "sweep_stability.csv"}) {
    CAPTURE(f);
    const auto ra = data_rows(a / f), rb = data_rows(b / f);
    CHECK(ra.size() == 302);
    CHECK(ra == rb);
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("thresholds and kappa bound") {
  const fs::path d = scratch("th");
  Run r = run("thresholds --config " + cfg("kappa_1e4.cfg") + " --out " + d.string());
  REQUIRE(r.code == 0);
  const auto rows = data_rows(d / "thresholds.csv");
  CHECK(rows.size() == 4);
  CHECK(fs::exists(d / "regions.csv"));

  r = run("thresholds --config " + cfg("paper_defaults.cfg") + " --delta0-min 100 --delta0-max 200 --out " +
          d.string());
  CHECK(r.code == 3);

  r = run("kappa-bound --config " + cfg("paper_defaults.cfg") + " --kappa-min 10 --kappa-max 100 --out " +
          d.string());
  CHECK(r.code == 3);
  fs::remove_all(d);
}

TEST_CASE("chi writes both stability classes") {
  const fs::path d = scratch("chi");
  const Run r = run("chi --config " + cfg("paper_defaults.cfg") + " --delta0-min -6 --delta0-max 6 --steps 241 --out " +
                    d.string());
  REQUIRE(r.code == 0);
  CHECK(data_rows(d / "chi_stable.csv").size() == 242);
  CHECK(data_rows(d / "chi_unstable.csv").size() == 242);
  CHECK(r.out.find("center") != std::string::npos);
  fs::remove_all(d);
}

TEST_CASE("evolve footer and exit codes") {
  const fs::path d = scratch("evolve");
  Run r = run("evolve --config " + cfg("stiffness_reduced.cfg") + " --delta0 -5 --branch 3 --out " + d.string());
  REQUIRE(r.code == 0);
  auto all = lines(d / "evolve.csv");
  CHECK(has_line(all, "# converged=true"));
  CHECK(has_line(all, "# initial_stability=stable"));
  CHECK(has_line(all, "# arrived_at_branch="));
  CHECK(data_rows(d / "evolve.csv").size() > 10);

  r = run("evolve --config " + cfg("stiffness_reduced.cfg") + " --delta0 -5 --branch 1 --out " + d.string());
  REQUIRE(r.code == 0);
  CHECK(has_line(lines(d / "evolve.csv"), "# converged=false"));

  // No such branch.
  r = run("evolve --config " + cfg("stiffness_reduced.cfg") + " --delta0 5 --branch 4 --out " + d.string());
  CHECK(r.code == 2);

  // Twelve decades between the fastest and slowest rates.
  r = run("evolve --config " + cfg("paper_defaults.cfg") + " --delta0 -5 --branch 3 --out " + d.string());
  CHECK(r.code == 4);
  CHECK(r.out.find("stiffness_reduced") != std::string::npos);
  fs::remove_all(d);
}

TEST_CASE("bad input") {
  const fs::path d = scratch("bad");
  fs::create_directories(d);
  CHECK(run("solve --config /nonexistent.cfg --delta0 0").code == 1);
  CHECK(run("frobnicate").code == 1);
  {
    std::ofstream(d / "neg.cfg") << "gamma1 = -1\n";
  }
  CHECK(run("solve --config " + (d / "neg.cfg").string() + " --delta0 0 --out " + d.string()).code == 1);
  {
    std::ofstream(d / "typo.cfg") << "gama1 = 1\n";
  }
  CHECK(run("solve --config " + (d / "typo.cfg").string() + " --delta0 0 --out " + d.string()).code == 1);
  fs::remove_all(d);
}
