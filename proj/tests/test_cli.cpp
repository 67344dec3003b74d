#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

std::string binary_path() {
  const char* env = std::getenv("INTERVALQ_BIN");
  REQUIRE_MESSAGE(env != nullptr, "INTERVALQ_BIN must point at the CLI binary");
  return env;
}

fs::path work_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "intervalq_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = "'" + binary_path() + "' " + args + " 2>" +
                          (work_dir() / "stderr.txt").string();
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  REQUIRE(out.good());
  out << content;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE_MESSAGE(in.good(), ("missing expected output file " + p.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

std::vector<double> split_csv_row(const std::string& line) {
  std::vector<double> vals;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
  return vals;
}

fs::path make_plain_intervals() {
  const fs::path p = work_dir() / "plain.csv";
  std::ostringstream out;
  out << "lower,upper\n";
  char buf[64];
  for (int i = 0; i < 50; ++i) {
    const double v = (i + 0.5) / 50.0;
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f\n", v, v + 1.0);
    out << buf;
  }
  write_file(p, out.str());
  return p;
}

fs::path make_regression_intervals() {
  const fs::path p = work_dir() / "reg.csv";
  std::ostringstream out;
  out << "lower,upper,c,x\n";
  char buf[96];
  for (int i = 0; i < 30; ++i) {
    const double x = i / 29.0;
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,1,%.6f\n", 0.3 + x, 2.7 + x, x);
    out << buf;
  }
  write_file(p, out.str());
  return p;
}

}  // namespace

TEST_CASE("qset emits the estimate with its covariance") {
  const fs::path data = make_plain_intervals();
  const fs::path out = work_dir() / "qset.json";
  const int rc = run("qset --input '" + data.string() + "' --tau 0.5 --out '" + out.string() + "'");
  REQUIRE(rc == 0);
  const nlohmann::json j = nlohmann::json::parse(read_file(out));
  CHECK(j.at("tau").get<double>() == 0.5);
  const double lo = j.at("lower").get<double>();
  const double hi = j.at("upper").get<double>();
  CHECK(lo < hi);
  CHECK(lo == doctest::Approx(0.5).epsilon(0.1));
  CHECK(hi == doctest::Approx(1.5).epsilon(0.1));
  REQUIRE(j.at("sigma").size() == 2);
  CHECK(j["sigma"][0][0].get<double>() > 0.0);
  CHECK(j["sigma"][1][1].get<double>() > 0.0);
}

TEST_CASE("qset runs a hypothesis test when endpoints are given") {
  const fs::path data = make_plain_intervals();
  const fs::path out = work_dir() / "qset_test.json";
  const int rc = run("qset --input '" + data.string() +
                     "' --tau 0.5 --hypo-lower 0.49 --hypo-upper 1.49 --draws 5000 --seed 3 --out '" +
                     out.string() + "'");
  REQUIRE(rc == 0);
  const nlohmann::json j = nlohmann::json::parse(read_file(out));
  CHECK(j.contains("statistic"));
  CHECK(j.contains("critical_value"));
  CHECK(j.at("reject").is_boolean());
  CHECK(j.at("critical_value").get<double>() > 0.0);
}

TEST_CASE("exit codes distinguish contract violations from I/O failures") {
  const fs::path data = make_plain_intervals();
  CHECK(run("qset --input '" + data.string() + "' --tau 1.5") == 2);
  CHECK(run("qset --input '" + (work_dir() / "absent.csv").string() + "' --tau 0.5") == 3);
  CHECK(run("mc --config '" + (work_dir() / "absent.cfg").string() + "'") == 3);

  const fs::path bad = work_dir() / "bad.csv";
  write_file(bad, "lower,upper\n0.1,0.9\n0.5,abc\n0.3,1.2\n0.5,1.5\n");
  CHECK(run("qset --input '" + bad.string() + "' --tau 0.5") == 3);
  const fs::path out = work_dir() / "skipped.json";
  CHECK(run("qset --input '" + bad.string() + "' --tau 0.5 --skip-malformed --out '" +
            out.string() + "'") == 0);
  const nlohmann::json j = nlohmann::json::parse(read_file(out));
  CHECK(j.at("lower").get<double>() <= j.at("upper").get<double>());
}

TEST_CASE("functionals writes monotone curves on a uniform grid") {
  const fs::path data = make_plain_intervals();
  const fs::path out = work_dir() / "curves.csv";
  const int rc = run("functionals --input '" + data.string() +
                     "' --grid-min 0 --grid-max 3 --grid-count 7 --out '" + out.string() + "'");
  REQUIRE(rc == 0);
  const std::vector<std::string> lines = lines_of(read_file(out));
  REQUIRE(lines.size() == 8);
  CHECK(lines[0] == "t,containment,capacity");
  double prev_cont = -1.0, prev_cap = -1.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::vector<double> row = split_csv_row(lines[i]);
    REQUIRE(row.size() == 3);
    CHECK(row[1] >= 0.0);
    CHECK(row[2] <= 1.0);
    CHECK(row[1] <= row[2] + 1e-12);  // containment never exceeds capacity
    CHECK(row[1] >= prev_cont);
    CHECK(row[2] >= prev_cap);
    prev_cont = row[1];
    prev_cap = row[2];
  }
}

TEST_CASE("cqset reports local fits at several covariate points") {
  const fs::path data = work_dir() / "cond.csv";
  {
    std::ostringstream out;
    out << "lower,upper,x\n";
    char buf[96];
    for (int i = 0; i < 200; ++i) {
      const double x = (i % 20) / 10.0 - 1.0 + 0.003 * (i / 20);
      std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f\n", x + 0.1 * (i % 7) / 7.0,
                    x + 1.0 + 0.1 * (i % 5) / 5.0, x);
      out << buf;
    }
    write_file(data, out.str());
  }
  const fs::path out = work_dir() / "cq.json";
  const int rc = run("cqset --input '" + data.string() + "' --x-cols x --tau 0.5 --xstar -0.5,0.5 --out '" +
                     out.string() + "'");
  REQUIRE(rc == 0);
  const nlohmann::json arr = nlohmann::json::parse(read_file(out));
  REQUIRE(arr.is_array());
  REQUIRE(arr.size() == 2);
  for (const auto& j : arr) {
    CHECK_FALSE(j.contains("error"));
    CHECK(j.at("lower").get<double>() <= j.at("upper").get<double>());
    CHECK(j.at("local_n").get<int>() >= 1);
    CHECK(j.at("bandwidths").size() == 1);
    CHECK(j["bandwidths"][0].get<double>() > 0.0);
  }
  CHECK(arr[0]["x_star"][0].get<double>() == -0.5);
  CHECK(arr[1]["x_star"][0].get<double>() == 0.5);
}

TEST_CASE("mitest scans a parameter grid to CSV") {
  const fs::path data = make_regression_intervals();
  const fs::path grid = work_dir() / "grid.csv";
  write_file(grid, "theta1,theta2\n1.5,1.0\n1.5,-3.0\n");
  const fs::path out = work_dir() / "mitest.csv";
  const int rc = run("mitest --input '" + data.string() + "' --x-cols c,x --tau 0.5 --grid-file '" +
                     grid.string() + "' --bootstrap 100 --seed 4 --out '" + out.string() + "'");
  REQUIRE(rc == 0);
  const std::vector<std::string> lines = lines_of(read_file(out));
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "theta1,theta2,statistic,critical,accepted");
  const std::vector<double> accept_row = split_csv_row(lines[1]);
  const std::vector<double> reject_row = split_csv_row(lines[2]);
  REQUIRE(accept_row.size() == 5);
  CHECK(accept_row[4] == 1.0);
  CHECK(reject_row[4] == 0.0);
  CHECK(reject_row[2] > accept_row[2]);
}

TEST_CASE("setblp lattice oracle lists the attained coefficients") {
  const fs::path data = work_dir() / "tiny.csv";
  write_file(data, "lower,upper,c\n0,0,1\n0,1,1\n1,1,1\n");
  const fs::path out = work_dir() / "lattice.csv";
  const int rc = run("setblp --input '" + data.string() + "' --x-cols c --tau 0.5 --lattice 5 --out '" +
                     out.string() + "'");
  REQUIRE(rc == 0);
  const std::vector<std::string> lines = lines_of(read_file(out));
  REQUIRE(lines.size() == 6);
  CHECK(lines[0] == "beta1");
  std::vector<double> vals;
  for (std::size_t i = 1; i < lines.size(); ++i) vals.push_back(std::stod(lines[i]));
  std::sort(vals.begin(), vals.end());
  for (int i = 0; i < 5; ++i) {
    CHECK(vals[static_cast<std::size_t>(i)] == doctest::Approx(0.25 * i).epsilon(1e-9));
  }
}

TEST_CASE("setblp enumerates cells with their affine maps") {
  const fs::path data = work_dir() / "tiny2.csv";
  write_file(data, "lower,upper,c\n0,1,1\n0,1,1\n0,1,1\n");
  const fs::path out = work_dir() / "cells.json";
  const fs::path betas = work_dir() / "betas.csv";
  const int rc = run("setblp --input '" + data.string() + "' --x-cols c --tau 0.5 --betas-out '" +
                     betas.string() + "' --out '" + out.string() + "'");
  REQUIRE(rc == 0);
  const nlohmann::json j = nlohmann::json::parse(read_file(out));
  CHECK(j.at("status").get<std::string>() == "ok");
  CHECK(j.at("coverage").get<double>() >= 0.999);
  REQUIRE(j.at("cells").size() >= 1);
  const auto& cell = j["cells"][0];
  CHECK(cell.at("basis").size() == 2);  // n - p basic columns
  REQUIRE(cell.at("beta_map").size() == 1);
  CHECK(cell["beta_map"][0].size() == 3);
  CHECK(cell.at("rhs_map").size() == 2);
  CHECK(cell.at("witness").size() == 3);

  const std::vector<std::string> blines = lines_of(read_file(betas));
  REQUIRE(blines.size() >= 2);
  CHECK(blines[0] == "beta1");
  double lo = 1e9, hi = -1e9;
  for (std::size_t i = 1; i < blines.size(); ++i) {
    const double v = std::stod(blines[i]);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    CHECK(v >= -1e-9);
    CHECK(v <= 1.0 + 1e-9);
  }
  CHECK(lo <= 0.02);
  CHECK(hi >= 0.98);
}

TEST_CASE("mc writes deterministic reports from config plus flag overrides") {
  const fs::path cfg = work_dir() / "mc.cfg";
  write_file(cfg, "design = table2\nreplications = 5000\nseed = 5\n");
  const fs::path dir1 = work_dir() / "mc1";
  const fs::path dir2 = work_dir() / "mc2";
  fs::create_directories(dir1);
  fs::create_directories(dir2);

  const int rc1 = run("mc --config '" + cfg.string() + "' --reps 100 --out '" + dir1.string() +
                      "' >'" + (work_dir() / "mc1.log").string() + "'");
  REQUIRE(rc1 == 0);
  const int rc2 = run("mc --config '" + cfg.string() + "' --reps 100 --out '" + dir2.string() +
                      "' >'" + (work_dir() / "mc2.log").string() + "'");
  REQUIRE(rc2 == 0);

  const std::string csv1 = read_file(dir1 / "table2.csv");
  const std::string csv2 = read_file(dir2 / "table2.csv");
  CHECK(csv1 == csv2);
  CHECK(lines_of(csv1).size() == 1 + 3 * 4 * 6);  // header + tau x n x delta grid

  const nlohmann::json j = nlohmann::json::parse(read_file(dir1 / "table2.json"));
  CHECK(j.at("design").get<std::string>() == "table2");
  CHECK(j.at("seed").get<int>() == 5);
  CHECK(j.at("replications").get<int>() == 100);
  CHECK(j.at("cells").size() == 3 * 4 * 6);
  CHECK(lines_of(read_file(work_dir() / "mc1.log"))[0].rfind("table2:", 0) == 0);
}
