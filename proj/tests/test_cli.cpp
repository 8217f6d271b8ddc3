#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>

#include "doctest.h"

#include "arealmix/cli.hpp"
#include "arealmix/io.hpp"

using namespace arealmix;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
  const char* env = std::getenv("AREALMIX_TEST_TMP");
  const fs::path dir = env ? fs::path(env) : fs::temp_directory_path() / "arealmix_cli_tmp";
  fs::create_directories(dir);
  return dir;
}

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "arealmix");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string write(const std::string& name, const std::string& text) {
  const auto path = work_dir() / name;
  write_file_atomic(path.string(), text);
  return path.string();
}

// 10x10 lattice edge list and a Poisson dataset around E = 20.
void write_lattice_inputs() {
  std::ostringstream edges;
  edges << "n 100\n";
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 10; ++c) {
      const int i = r * 10 + c + 1;
      if (c + 1 < 10) edges << i << ' ' << i + 1 << '\n';
      if (r + 1 < 10) edges << i << ' ' << i + 10 << '\n';
    }
  write("lattice.txt", edges.str());
  std::mt19937_64 rng(4);
  std::poisson_distribution<int> count(20.0);
  std::ostringstream data;
  data << "id,y,E\n";
  for (int i = 1; i <= 100; ++i) data << i << ',' << (i == 45 ? 90 : count(rng)) << ",20\n";
  write("lattice.csv", data.str());
}

std::vector<std::string> fit_args(const std::string& model, const std::string& out) {
  return {"fit", "--model", model, "--graph", (work_dir() / "lattice.txt").string(), "--data",
          (work_dir() / "lattice.csv").string(), "--iters", "1000", "--warmup", "500", "--thin", "1",
          "--out-dir", (work_dir() / out).string()};
}

}  // namespace

TEST_CASE("scaling-factor") {
  auto r = run({"scaling-factor", "--graph", write("path2.txt", "n 2\n1 2\n")});
  CHECK(r.code == kExitOk);
  CHECK(r.out == "0.25\n");
  r = run({"scaling-factor", "--graph", write("path3.txt", "n 3\n1 2\n2 3\n"), "--diag-out",
           (work_dir() / "diag.csv").string()});
  CHECK(r.code == kExitOk);
  CHECK(std::stod(r.out) == doctest::Approx(std::cbrt(50.0 / 729)).epsilon(1e-12));
  const auto diag = parse_csv(read_text_file((work_dir() / "diag.csv").string()));
  CHECK(diag.rows.size() == 3);

  r = run({"scaling-factor", "--graph", write("split.txt", "n 4\n1 2\n3 4\n")});
  CHECK(r.code == kExitInputError);
  CHECK(r.err.find("disconnected") != std::string::npos);
  CHECK(run({"scaling-factor", "--graph", (work_dir() / "nope.txt").string()}).code == kExitInputError);
  CHECK(run({"scaling-factor"}).code == kExitInputError);
  CHECK(run({"frobnicate"}).code == kExitInputError);
}

TEST_CASE("fit") {
  write_lattice_inputs();
  SUBCASE("bym2 has no outliers table") {
    const auto r = run(fit_args("bym2", "fit-bym2"));
    CHECK((r.code == kExitOk || r.code == kExitNotConverged));
    const auto dir = work_dir() / "fit-bym2";
    for (const char* f : {"draws.csv", "loglik.csv", "summary.csv", "latent.csv", "report.txt"})
      CHECK(fs::exists(dir / f));
    CHECK_FALSE(fs::exists(dir / "outliers.csv"));
    const auto report = read_text_file((dir / "report.txt").string());
    CHECK(report.find("waic = ") != std::string::npos);
    // WAIC recomputed from the written log-likelihood matches the report.
    const auto pos = report.find("waic = ") + 7;
    const double reported = std::stod(report.substr(pos, report.find('\n', pos) - pos));
    const double again = waic(parse_loglik_csv(read_text_file((dir / "loglik.csv").string()))).waic;
    CHECK(std::abs(reported - again) < 1e-10);
  }
  SUBCASE("bym2-gamma echoes the default priors") {
    const auto r = run(fit_args("bym2-gamma", "fit-gamma"));
    CHECK((r.code == kExitOk || r.code == kExitNotConverged));
    const auto report = read_text_file((work_dir() / "fit-gamma" / "report.txt").string());
    CHECK(report.find("prior.beta = normal(0, 10)") != std::string::npos);
    CHECK(report.find("prior.sigma = half-normal(0, 1)") != std::string::npos);
    CHECK(report.find("prior.nu = exponential(mean 4)") != std::string::npos);
    CHECK(report.find("seed = 20152016") != std::string::npos);
    CHECK(fs::exists(work_dir() / "fit-gamma" / "outliers.csv"));
  }
  SUBCASE("congdon writes outliers") {
    auto args = fit_args("congdon", "fit-congdon");
    args[8] = "300";   // iters
    args[10] = "150";  // warmup
    const auto r = run(args);
    CHECK((r.code == kExitOk || r.code == kExitNotConverged));
    const auto t = parse_csv(read_text_file((work_dir() / "fit-congdon" / "outliers.csv").string()));
    CHECK(t.header == std::vector<std::string>{"id", "kappa_upper", "outlier"});
    CHECK(t.rows.size() == 100);
  }
  SUBCASE("input errors") {
    auto args = fit_args("bym3", "fit-bad");
    CHECK(run(args).code == kExitInputError);
    args = fit_args("bym2", "fit-bad");
    args[10] = "5000";  // warmup beyond iterations
    CHECK(run(args).code == kExitInputError);
    args = fit_args("bym2", "fit-bad");
    args[6] = write("short.csv", "id,y,E\n1,1,1\n");
    CHECK(run(args).code == kExitInputError);
  }
}

TEST_CASE("study") {
  const auto cfg = write("study.ini",
                         "[study]\nprotocol = NO_OUTLIERS\nreplicates = 1\nmodels = bym2-gamma\n"
                         "[graph]\nlattice_rows = 4\nlattice_cols = 4\n"
                         "[sampler]\niterations = 400\nwarmup = 200\nthin = 2\n");
  const auto out = work_dir() / "study-out";
  const auto r = run({"study", "--config", cfg, "--out-dir", out.string()});
  CHECK(r.code == kExitOk);
  const auto waic_rows = parse_csv(read_text_file((out / "study_waic.csv").string()));
  CHECK(waic_rows.rows.size() == 1);
  const auto detection = parse_csv(read_text_file((out / "study_detection.csv").string()));
  CHECK(detection.rows.size() == 16);
  CHECK(detection.header.back() == "bym2-gamma");
  CHECK(fs::exists(out / "study_coverage.csv"));
  const auto text = read_text_file((out / "study_report.txt").string());
  CHECK(text.find("protocol = NO_OUTLIERS") != std::string::npos);

  CHECK(run({"study", "--config", write("bad.ini", "[study]\nreplicates = 1\n")}).code == kExitInputError);
}

TEST_CASE("render") {
  const auto polys = write("polys.json", R"({"1": [[[0,0],[1,0],[1,1],[0,1]]], "2": [[[1,0],[2,0],[2,1],[1,1]]]})");
  const auto values = write("values.csv", "id,value,flag\n1,0.5,0\n2,1.5,1\n");
  const auto svg = work_dir() / "map.svg";
  auto r = run({"render", "--values", values, "--polygons", polys, "--out", svg.string(), "--flag-column", "flag",
                "--midpoint", "1"});
  CHECK(r.code == kExitOk);
  const auto text = read_text_file(svg.string());
  CHECK(text.find("class=\"star\"") != std::string::npos);
  r = run({"render", "--values", write("values3.csv", "id,value\n1,1\n9,2\n"), "--polygons", polys, "--out",
           svg.string()});
  CHECK(r.code == kExitInputError);
  CHECK(r.err.find("9") != std::string::npos);
}
