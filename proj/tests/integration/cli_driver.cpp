// End-to-end checks of the command line tool: runs the real binary through every
// subcommand in a temp directory, then verifies exit codes, output files, numeric
// reproducibility and the spatial-vs-regression prediction ordering.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "compolattice/composition.hpp"
#include "compolattice/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int failures = 0;

void expect(bool ok, const std::string& what) {
  std::printf("%s %s\n", ok ? "[ok]  " : "[FAIL]", what.c_str());
  if (!ok) ++failures;
}

int run(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double mean_acd_to_truth(const std::string& pred_csv, const json& truth) {
  const compolattice::CsvTable table = compolattice::read_csv(pred_csv);
  double total = 0.0;
  int count = 0;
  for (const auto& row : table.rows) {
    const int node = count;  // rows follow node order
    Eigen::VectorXd pred(3), tz(3);
    for (int k = 0; k < 3; ++k) {
      pred[k] = std::stod(row[static_cast<size_t>(3 + k)]);
      tz[k] = truth["z_true"][static_cast<size_t>(node)][static_cast<size_t>(k)].get<double>();
    }
    total += compolattice::acd(compolattice::Composition(pred), compolattice::Composition(tz));
    ++count;
  }
  return total / count;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: cli_driver <path-to-compolattice>\n");
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path work = fs::temp_directory_path() / "compolattice_cli_it";
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string w = work.string();

  // ---- simulate ----------------------------------------------------------
  expect(run(cli + " simulate --out " + w + "/sim --rows 9 --cols 9 --n-obs 32 --seed 4242") == 0,
         "simulate exits 0");
  expect(fs::exists(work / "sim/grid.csv") && fs::exists(work / "sim/observations.csv") &&
             fs::exists(work / "sim/covariates.csv") && fs::exists(work / "sim/truth.json"),
         "simulate writes all four files");
  json truth;
  {
    std::ifstream in(work / "sim/truth.json");
    in >> truth;
  }
  expect(truth.contains("z_true") && truth["z_true"].size() == 81, "truth has z at every node");

  const std::string files = " --grid " + w + "/sim/grid.csv --obs " + w +
                            "/sim/observations.csv --cov " + w + "/sim/covariates.csv";

  // ---- fit: full and regression-only ------------------------------------
  const std::string chain = " --iters 3000 --burn-in 1000 --thin 4 --seed 7";
  expect(run(cli + " fit" + files + " --out " + w + "/fit_a" + chain) == 0, "fit exits 0");
  expect(fs::exists(work / "fit_a/trace.bin") && fs::exists(work / "fit_a/params.csv") &&
             fs::exists(work / "fit_a/summary.csv"),
         "fit writes trace, params and summary");

  expect(run(cli + " fit" + files + " --out " + w + "/fit_b" + chain) == 0, "fit re-run exits 0");
  expect(slurp(work / "fit_a/params.csv") == slurp(work / "fit_b/params.csv"),
         "identical seeds give byte-identical params.csv");
  expect(slurp(work / "fit_a/trace.bin") == slurp(work / "fit_b/trace.bin"),
         "identical seeds give byte-identical traces");

  expect(run(cli + " fit" + files + " --out " + w + "/fit_rm --variant rm" + chain) == 0,
         "regression-only fit exits 0");

  // ---- predict ------------------------------------------------------------
  expect(run(cli + " predict" + files + " --trace " + w + "/fit_a/trace.bin --out " + w +
             "/pred_full") == 0,
         "predict exits 0");
  expect(run(cli + " predict" + files + " --trace " + w + "/fit_rm/trace.bin --out " + w +
             "/pred_rm") == 0,
         "predict (rm trace) exits 0");

  {
    const compolattice::CsvTable table =
        compolattice::read_csv((work / "pred_full/predictions.csv").string());
    expect(table.rows.size() == 81, "predictions cover every node");
    bool sums_ok = true;
    for (const auto& row : table.rows) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += std::stod(row[static_cast<size_t>(3 + k)]);
      if (std::abs(s - 1.0) > 1e-9) sums_ok = false;
    }
    expect(sums_ok, "predicted compositions sum to 1");
  }

  const double err_full = mean_acd_to_truth((work / "pred_full/predictions.csv").string(), truth);
  const double err_rm = mean_acd_to_truth((work / "pred_rm/predictions.csv").string(), truth);
  std::printf("       mean ACD to truth: full=%.4f rm=%.4f\n", err_full, err_rm);
  expect(err_full < err_rm, "spatial fit predicts truth better than the no-spatial baseline");

  // ---- regions -------------------------------------------------------------
  expect(run(cli + " regions" + files + " --trace " + w + "/fit_a/trace.bin --out " + w +
             "/reg --level 0.95") == 0,
         "regions exits 0");
  {
    json doc;
    std::ifstream in(work / "reg/regions_confidence.json");
    in >> doc;
    expect(doc["regions"].size() == 81, "confidence regions cover every node");
    bool bracket_ok = true;
    for (const auto& rec : doc["regions"]) {
      for (int k = 0; k < 3; ++k) {
        const double mean = rec["mean_composition"][static_cast<size_t>(k)].get<double>();
        const double lo = rec["ternary_bounds"]["lower"][static_cast<size_t>(k)].get<double>();
        const double hi = rec["ternary_bounds"]["upper"][static_cast<size_t>(k)].get<double>();
        if (!(lo <= mean && mean <= hi)) bracket_ok = false;
      }
    }
    expect(bracket_ok, "ternary bounds bracket the posterior mean everywhere");
  }

  // ---- cv -------------------------------------------------------------------
  expect(run(cli + " cv" + files + " --out " + w +
             "/cv --variant both --folds 4 --repeats 2 --iters 600 --burn-in 200 --thin 4 "
             "--seed 11") == 0,
         "cv exits 0");
  {
    json doc;
    std::ifstream in(work / "cv/cv_report.json");
    in >> doc;
    expect(doc["variants"].size() == 2, "cv reports both variants");
  }

  // ---- error paths ------------------------------------------------------------
  expect(run(cli + " fit --grid missing.csv --obs missing.csv --cov missing.csv --out " + w +
             "/x" + chain) == 3,
         "missing input file exits 3");
  expect(run(cli + " fit" + files + " --out " + w + "/x --variant bogus" + chain) == 2,
         "bad variant exits 2");
  expect(run(cli + " --definitely-not-a-flag") == 2, "unknown flag exits 2");
  {
    std::ofstream bad(work / "bad_obs.csv");
    bad << "cell_id,y_1,y_2,y_3\n0,0.2,0.2,0.2\n";
  }
  expect(run(cli + " fit --grid " + w + "/sim/grid.csv --obs " + w + "/bad_obs.csv --cov " + w +
             "/sim/covariates.csv --out " + w + "/x" + chain) == 3,
         "non-normalized observation exits 3");

  std::printf("%s\n", failures == 0 ? "cli integration: all checks passed"
                                    : "cli integration: FAILURES");
  return failures == 0 ? 0 : 1;
}
