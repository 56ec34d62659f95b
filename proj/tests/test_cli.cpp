#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

namespace {

std::string model(const std::string& name) { return std::string(LATSPEC_MODELS) + "/" + name; }

int run(const std::string& args) {
  const std::string command = std::string(LATSPEC_CLI) + " " + args + " 2> cli_stderr.txt";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("classify") {
  SUBCASE("free model is Case I") {
    CHECK(run("classify --model " + model("std_laplacian_mu0.json") + " --schedule 8,12,16 --out free.json") == 0);
    CHECK(nlohmann::json::parse(slurp("free.json"))["case"] == "I");
  }
  SUBCASE("coexistence model is Case IV") {
    CHECK(run("classify --model " + model("coexistence.json") + " --schedule 8,12,16 --out coexist.json") == 0);
    const auto j = nlohmann::json::parse(slurp("coexist.json"));
    CHECK(j["case"] == "IV");
    CHECK(j["eigenvalues"].size() >= 4);
  }
  SUBCASE("broken hermiticity exits 1 with a located diagnostic") {
    CHECK(run("classify --model " + model("broken_hermiticity.json")) == 1);
    CHECK(slurp("cli_stderr.txt").find("broken_hermiticity.json") != std::string::npos);
  }
  SUBCASE("malformed file exits 1 with a line number") {
    std::ofstream("malformed.json") << "{\n  \"hopping\": [\n    {\"s\": [0,0,0] \"re\": 6}\n  ]\n}\n";
    CHECK(run("classify --model malformed.json") == 1);
    CHECK(slurp("cli_stderr.txt").find("malformed.json:3:") != std::string::npos);
  }
  SUBCASE("non-increasing schedule exits 1") {
    CHECK(run("classify --model " + model("coexistence.json") + " --schedule 12,8") == 1);
  }
}

TEST_CASE("fiber-scan") {
  SUBCASE("free model has no discrete spectrum") {
    CHECK(run("fiber-scan --model " + model("std_laplacian_mu0.json") + " --grid-n 8 --k-grid 3x3x3 --out free.csv") == 0);
    const auto rows = read_csv("free.csv");
    REQUIRE(rows.size() == 28);
    CHECK(rows[0] == std::vector<std::string>{"k1", "k2", "k3", "e_min", "e_max", "p_k1", "p_k2", "p_k3", "m_k",
                                              "gap", "n_below", "gamma"});
    for (std::size_t i = 1; i < rows.size(); ++i) {
      REQUIRE(rows[i].size() == 12);
      CHECK(rows[i][10] == "0");
      CHECK(rows[i][11] == "nan");
    }
  }
  SUBCASE("coexistence pair model over 26 nonzero k") {
    CHECK(run("fiber-scan --model " + model("coexistence_pair.json") +
              " --grid-n 12 --k-grid 3x3x3 --jobs 2 --out pair.csv") == 0);
    const auto rows = read_csv("pair.csv");
    REQUIRE(rows.size() == 28);
    int nonzero = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const bool zero = std::stod(rows[i][0]) == 0.0 && std::stod(rows[i][1]) == 0.0 && std::stod(rows[i][2]) == 0.0;
      const double gamma = std::stod(rows[i][11]);
      if (zero) {
        CHECK(std::abs(gamma) < 1e-10);
      } else {
        ++nonzero;
        CHECK(std::stoi(rows[i][10]) >= 1);
        CHECK(gamma < 0.0);
      }
    }
    CHECK(nonzero == 26);
    CHECK(slurp("cli_stderr.txt").find("27 k-points") != std::string::npos);
  }
  SUBCASE("explicit k list keeps input order") {
    CHECK(run("fiber-scan --model " + model("deep_attraction.json") +
              " --grid-n 8 --k 1,0,0 --k=-pi/4,0,pi --k 0,0,0 --out list.csv") == 0);
    const auto rows = read_csv("list.csv");
    REQUIRE(rows.size() == 4);
    CHECK(std::stod(rows[1][0]) == 1.0);
    CHECK(std::stod(rows[2][0]) == doctest::Approx(-0.785398163397));
    CHECK(std::stod(rows[2][2]) == doctest::Approx(3.14159265359));
    CHECK(std::stod(rows[3][0]) == 0.0);
  }
  SUBCASE("invalid input exits 1") {
    CHECK(run("fiber-scan --model " + model("deep_attraction.json") + " --grid-n 8 --k 4,0,0") == 1);
    CHECK(run("fiber-scan --model " + model("deep_attraction.json") + " --grid-n 7 --k 1,0,0") == 1);
    CHECK(run("fiber-scan --model " + model("deep_attraction.json") + " --grid-n 8") == 1);
  }
  SUBCASE("identical inputs give identical bytes") {
    const std::string args = "fiber-scan --model " + model("coexistence_pair.json") + " --grid-n 8 --k-grid 2x2x3";
    REQUIRE(run(args + " --jobs 3 --out first.csv") == 0);
    REQUIRE(run(args + " --jobs 1 --out second.csv") == 0);
    CHECK(slurp("first.csv") == slurp("second.csv"));
  }
}

TEST_CASE("appendix-b") {
  SUBCASE("coarse schedule still passes") {
    CHECK(run("appendix-b --schedule 64,128 --grid-n 16 --out coarse.json") == 0);
    const auto j = nlohmann::json::parse(slurp("coarse.json"));
    CHECK(j["success"] == true);
    CHECK(j["constants"].contains("a"));
    CHECK(j["identities"]["residuals"].contains("a-c-1/6"));
  }
  SUBCASE("absurdly coarse grids fail") {
    CHECK(run("appendix-b --max-n 8 --out tiny.json") == 1);
  }
}

TEST_CASE("usage errors") {
  CHECK(run("") == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("--help > /dev/null") == 0);
}
