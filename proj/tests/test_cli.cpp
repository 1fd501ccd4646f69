#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "steinops/cli_app.hpp"

namespace fs = std::filesystem;
using Catch::Approx;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           fs::path("steinops_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"steinops"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return steinops::cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("kernel command reproduces the binomial table row") {
  TempDir tmp;
  const auto out = (tmp.path / "kernel.csv").string();
  REQUIRE(run_cli({"kernel", "--family", "binomial", "--params", "3,0.5",
                   "--ell", "+1", "--output", out}) == 0);
  const auto lines = split_lines(slurp(out));
  REQUIRE(lines[0] == "x,tau,tau_closed,abs_diff");
  bool found_x2 = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].rfind("2,", 0) == 0) {
      found_x2 = true;
      double x, tau, closed, diff;
      REQUIRE(std::sscanf(lines[i].c_str(), "%lf,%lf,%lf,%lf", &x, &tau,
                          &closed, &diff) == 4);
      REQUIRE(tau == Approx(1.0).margin(1e-12));
      REQUIRE(diff <= 1e-12);
    }
  }
  REQUIRE(found_x2);
}

TEST_CASE("curves command emits the diagonal value at x'") {
  TempDir tmp;
  const auto out = (tmp.path / "curves.csv").string();
  REQUIRE(run_cli({"curves", "--family", "normal", "--params", "0,1",
                   "--xprime", "0", "--grid", "1e-6,1-1e-6,64", "--output",
                   out}) == 0);
  const auto lines = split_lines(slurp(out));
  REQUIRE(lines[0] == "x,xprime,k_over_p");
  bool found = false;
  for (const auto& line : lines) {
    if (line.rfind("0,0,", 0) == 0) {
      found = true;
      const double v = std::stod(line.substr(4));
      REQUIRE(v == Approx(0.6266570686577501).margin(1e-6));
    }
  }
  REQUIRE(found);
}

TEST_CASE("identical invocations are byte-identical") {
  TempDir tmp;
  const auto out1 = (tmp.path / "a.csv").string();
  const auto out2 = (tmp.path / "b.csv").string();
  const std::vector<std::string> args{"curves",  "--family", "normal",
                                      "--params", "0,1",      "--xprime",
                                      "0,1",      "--grid",   "1e-6,1-1e-6,128"};
  auto with_output = [&](const std::string& o) {
    auto a = args;
    a.push_back("--output");
    a.push_back(o);
    return a;
  };
  REQUIRE(run_cli(with_output(out1)) == 0);
  REQUIRE(run_cli(with_output(out2)) == 0);
  const auto c1 = slurp(out1), c2 = slurp(out2);
  REQUIRE(!c1.empty());
  REQUIRE(c1 == c2);
  // no stray temp file left behind
  REQUIRE_FALSE(fs::exists(out1 + ".tmp"));
}

TEST_CASE("bounds command emits the report schema") {
  TempDir tmp;
  const auto out = (tmp.path / "bounds.json").string();
  REQUIRE(run_cli({"bounds", "--family", "normal", "--params", "0,1", "--g",
                   "square", "--h", "neg-id", "--output", out}) == 0);
  const auto j = nlohmann::json::parse(slurp(out));
  REQUIRE(j["lower"].get<double>() == Approx(0.0).margin(1e-8));
  REQUIRE(j["center"].get<double>() == Approx(2.0).margin(1e-8));
  REQUIRE(j["upper"].get<double>() == Approx(4.0).margin(1e-8));
  REQUIRE(j["weight_provenance"] == "closed-form");
  REQUIRE(j["boundary_status"] == "pass");
}

TEST_CASE("table and eigen commands") {
  TempDir tmp;
  const auto table_out = (tmp.path / "table.csv").string();
  REQUIRE(run_cli({"table", "--family", "poisson", "--params", "2",
                   "--output", table_out}) == 0);
  const auto lines = split_lines(slurp(table_out));
  REQUIRE(lines[0] == "family,ell,g,lower,var,upper,weight");
  REQUIRE(lines.size() > 4);  // both lattices, several g

  const auto eigen_out = (tmp.path / "eigen.csv").string();
  REQUIRE(run_cli({"eigen", "--family", "binomial", "--params", "5,0.3",
                   "--ell", "+1", "--output", eigen_out}) == 0);
  const auto elines = split_lines(slurp(eigen_out));
  REQUIRE(elines[0] == "k,eigenvalue,weight_constant,weight_residual");
  REQUIRE(elines.size() == 7);

  SECTION("eigen on infinite support is a numeric failure") {
    REQUIRE(run_cli({"eigen", "--family", "poisson", "--params", "2"}) == 1);
  }
}

TEST_CASE("verify command gates on the suite") {
  TempDir tmp;
  const auto out = (tmp.path / "verify.json").string();
  REQUIRE(run_cli({"verify", "--scope", "binomial,poisson", "--seed", "7",
                   "--output", out}) == 0);
  const auto j = nlohmann::json::parse(slurp(out));
  REQUIRE(j["all_pass"].get<bool>());
  REQUIRE(j["failures"].get<int>() == 0);
  REQUIRE(j["cases"].is_array());
  REQUIRE(j["cases"].size() > 10);
}

TEST_CASE("usage errors exit with code 2") {
  REQUIRE(run_cli({"kernel"}) == 2);                       // missing family
  REQUIRE(run_cli({"kernel", "--family", "cauchy", "--params", "1"}) == 2);
  REQUIRE(run_cli({"kernel", "--family", "normal", "--params", "0,1", "--ell",
                   "+1"}) == 2);                            // incompatible ell
  REQUIRE(run_cli({"bounds", "--family", "normal", "--params", "0,1", "--g",
                   "nosuchfn"}) == 2);
  REQUIRE(run_cli({}) == 2);                                // no subcommand
}
