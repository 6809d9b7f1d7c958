#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "blfem/cli.hpp"

using namespace blfem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

int count_lines(const std::string& s, bool skip_comments) {
  std::istringstream in(s);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    if (skip_comments && !line.empty() && line[0] == '#') continue;
    ++n;
  }
  return n;
}

std::string temp_path(const std::string& name) { return "blfem_cli_test_" + name; }

}  // namespace

TEST_CASE("invalid input exits with code 2") {
  CHECK(cli({"mesh", "--boundary-nodes", "7"}).code == kExitInvalidInput);
  CHECK(cli({"solve", "--problem", "exact1d", "--dt", "0.3"}).code == kExitInvalidInput);
  CHECK(cli({"solve", "--epsilon", "-1"}).code == kExitInvalidInput);
  CHECK(cli({"solve", "--no-such-flag"}).code == kExitInvalidInput);
  CHECK(cli({"solve", "--problem", "nope"}).code == kExitInvalidInput);
  CHECK(cli({"corrector", "--t", "0"}).code == kExitInvalidInput);
  CHECK(cli({"converge", "--problem", "smooth1d", "--levels", "10,20"}).code == kExitInvalidInput);
  CHECK(cli({"solve", "--mesh", "/nonexistent/mesh.txt"}).code == kExitInvalidInput);
}

TEST_CASE("mesh output") {
  const Run r = cli({"mesh", "--boundary-nodes", "16"});
  REQUIRE(r.code == kExitOk);
  std::istringstream in(r.out);
  std::string line;
  int boundary = 0;
  while (std::getline(in, line)) {
    if (line.rfind("b ", 0) == 0) ++boundary;
  }
  CHECK(boundary == 16);
}

TEST_CASE("solve reports the effective configuration and metrics") {
  const Run r = cli({"solve", "--problem", "exact1d", "--n", "20", "--dt", "0.1"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("# problem = exact1d") != std::string::npos);
  CHECK(r.out.find("# n = 20") != std::string::npos);
  CHECK(r.out.find("# timings = false") != std::string::npos);
  CHECK(r.out.find("rel_l2 = ") != std::string::npos);
  CHECK(r.out.find("osc_index = ") != std::string::npos);
  CHECK(r.out.find("T_times_epsilon = ") != std::string::npos);
  CHECK(r.out.find("runtime_s") == std::string::npos);
}

TEST_CASE("zero data reports an undefined relative error") {
  const Run r = cli({"solve", "--problem", "zero1d", "--n", "10", "--dt", "0.1"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("rel_l2 = undefined") != std::string::npos);
  CHECK(r.out.find("abs_l2 = 0") != std::string::npos);
}

TEST_CASE("command-line flags override the config file") {
  const std::string path = temp_path("config.txt");
  {
    std::ofstream f(path);
    f << "# comment\nproblem = smooth1d\nn = 12\ndt = 0.1\ntimings = true\n";
  }
  const Run r = cli({"solve", "--config", path, "--n", "16"});
  std::remove(path.c_str());
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("# problem = smooth1d") != std::string::npos);
  CHECK(r.out.find("# n = 16") != std::string::npos);
  CHECK(r.out.find("# dt = 0.1") != std::string::npos);
  CHECK(r.out.find("# timings = true") != std::string::npos);
  CHECK(r.out.find("runtime_s = ") != std::string::npos);
  CHECK(r.out.find("# config") == std::string::npos);

  CHECK(cli({"solve", "--config", "/nonexistent/config.txt"}).code == kExitInvalidInput);
}

TEST_CASE("corrector samples") {
  const Run r = cli({"corrector", "--points", "20"});
  REQUIRE(r.code == kExitOk);
  std::istringstream in(r.out);
  std::string line;
  do {
    std::getline(in, line);
  } while (!line.empty() && line[0] == '#');
  CHECK(line == "xi,phi0,phi0_tilde,phi_m1,phi_m1_lin");
  std::getline(in, line);
  CHECK(line.rfind("0,", 0) == 0);
  CHECK(count_lines(r.out, true) == 22);
}

TEST_CASE("converge writes one row per scheme and level") {
  const std::vector<std::string> args = {"converge", "--problem", "smooth1d", "--levels", "10,20,40,80", "--dt", "0.1"};
  const Run a = cli(args);
  REQUIRE(a.code == kExitOk);
  CHECK(count_lines(a.out, true) == 9);  // header + 8 rows
  CHECK(a.err.find("slope") != std::string::npos);
  const Run b = cli(args);
  CHECK(a.out == b.out);
}

TEST_CASE("repeated runs write byte-identical files") {
  const std::string path = temp_path("field.csv");
  auto slurp = [](const std::string& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  std::vector<std::string> contents;
  for (int k = 0; k < 2; ++k) {
    REQUIRE(cli({"solve", "--problem", "exact2d", "--boundary-nodes", "16", "--epsilon", "1e-4", "--dt", "0.25",
                 "--field", path})
                .code == kExitOk);
    contents.push_back(slurp(path));
  }
  std::remove(path.c_str());
  CHECK_FALSE(contents[0].empty());
  CHECK(contents[0] == contents[1]);
}
