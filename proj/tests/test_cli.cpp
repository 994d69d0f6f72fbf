#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dichot/csv.hpp"
#include "dichot/datagen.hpp"
#include "test_helpers.hpp"

using namespace dichot;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(DICHOT_CLI_PATH) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) {
    r.out.append(buf.data(), n);
    if (n < buf.size()) break;
  }
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::filesystem::path work_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "dichot_cli";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("truth subcommand reproduces the closed-form values") {
  const std::string config =
      std::string(DICHOT_CONFIG_DIR) + "/normal_mcar.json";
  const RunResult r = run_cli("truth --config " + config);
  REQUIRE(r.exit_code == 0);
  // second line: p0,p1,rd,log_or,visit
  std::istringstream lines(r.out);
  std::string header, values;
  std::getline(lines, header);
  std::getline(lines, values);
  std::vector<double> v;
  std::istringstream vs(values);
  std::string f;
  while (std::getline(vs, f, ',')) v.push_back(std::stod(f));
  REQUIRE(v.size() == 5);
  CHECK(v[2] == doctest::Approx(0.12528804445482819).epsilon(1e-10));
  CHECK(v[3] == doctest::Approx(0.50468989861482453).epsilon(1e-10));
  CHECK(v[4] == 6);
}

TEST_CASE("truth subcommand for t3 and lognormal") {
  for (const auto& [name, rd] :
       std::vector<std::pair<std::string, double>>{
           {"t3_mar.json", 0.19673914930906752},
           {"lognormal_mcar.json", 0.12799935989278244}}) {
    const RunResult r = run_cli("truth --config " +
                                std::string(DICHOT_CONFIG_DIR) + "/" + name);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("rd") != std::string::npos);
    std::istringstream lines(r.out);
    std::string header, values;
    std::getline(lines, header);
    std::getline(lines, values);
    std::vector<double> v;
    std::istringstream vs(values);
    std::string f;
    while (std::getline(vs, f, ',')) v.push_back(std::stod(f));
    CHECK(v[2] == doctest::Approx(rd).epsilon(1e-9));
  }
}

TEST_CASE("simulate: deterministic outputs, exit codes") {
  const auto dir = work_dir();
  const std::string config =
      std::string(DICHOT_CONFIG_DIR) + "/normal_mcar.json";

  SUBCASE("same seed twice gives identical files") {
    const std::string out1 = (dir / "sim1").string();
    const std::string out2 = (dir / "sim2").string();
    const RunResult r1 = run_cli("simulate --config " + config + " --out " +
                                 out1 + " --replicates 8 --seed 7");
    REQUIRE(r1.exit_code == 0);
    const RunResult r2 = run_cli("simulate --config " + config + " --out " +
                                 out2 + " --replicates 8 --seed 7 --threads 2");
    REQUIRE(r2.exit_code == 0);
    CHECK(slurp(dir / "sim1" / "normal_mcar_summary.csv") ==
          slurp(dir / "sim2" / "normal_mcar_summary.csv"));
    CHECK(slurp(dir / "sim1" / "normal_mcar_summary.json") ==
          slurp(dir / "sim2" / "normal_mcar_summary.json"));
  }
  SUBCASE("replicates 0 is a config error") {
    const RunResult r = run_cli("simulate --config " + config +
                                " --replicates 0 --out " + dir.string());
    CHECK(r.exit_code == 2);
  }
  SUBCASE("malformed config exits 2") {
    const auto bad = dir / "bad.json";
    std::ofstream(bad) << "{ not json";
    const RunResult r =
        run_cli("simulate --config " + bad.string() + " --out " + dir.string());
    CHECK(r.exit_code == 2);
  }
  SUBCASE("unknown config key exits 2 and names the key") {
    const auto bad = dir / "unknown.json";
    std::ofstream(bad) << R"({
      "scenario": {
        "family": "mvnormal",
        "mu0": [8.0, 7.0], "mu1": [8.0, 7.0], "sigma": [1.0, 1.0],
        "n_per_arm": 20,
        "threshold": {"lambda": 7.0},
        "missingness": {"mechanism": "none"}
      },
      "n_replicates": 2, "master_seed": 1, "bogus_key": true
    })";
    const RunResult r =
        run_cli("simulate --config " + bad.string() + " --out " + dir.string());
    CHECK(r.exit_code == 2);
    CHECK(r.out.find("bogus_key") != std::string::npos);
  }
  SUBCASE("missing config file exits 2") {
    const RunResult r = run_cli("simulate --config /nonexistent.json");
    CHECK(r.exit_code == 2);
  }
}

TEST_CASE("analyze subcommand") {
  const auto dir = work_dir();
  const auto spec = dichot::testing::benchmark_scenario(Family::mvnormal,
                                                        Mechanism::none, 120);
  Rng rng(31415);
  const TrialDataset trial = sample_parametric_trial(spec, rng);
  const auto csv_path = dir / "trial.csv";
  write_wide_csv(trial, csv_path);

  SUBCASE("both methods on complete data agree within joint error") {
    const RunResult r = run_cli("analyze --data " + csv_path.string() +
                                " --lambda 7 --method both --seed 5");
    REQUIRE(r.exit_code == 0);
    // parse rows: method,estimand,estimate,variance,...
    double glmm_rd = 0, mi_rd = 0, glmm_var = 0, mi_var = 0;
    std::istringstream lines(r.out);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.rfind("glmm,rd,", 0) == 0 || line.rfind("mi,rd,", 0) == 0) {
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) f.push_back(field);
        if (f[0] == "glmm") {
          glmm_rd = std::stod(f[2]);
          glmm_var = std::stod(f[3]);
        } else {
          mi_rd = std::stod(f[2]);
          mi_var = std::stod(f[3]);
        }
      }
    }
    CHECK(glmm_var > 0);
    CHECK(mi_var > 0);
    CHECK(std::abs(glmm_rd - mi_rd) <
          2.0 * std::sqrt(glmm_var + mi_var));
  }
  SUBCASE("repeated mi runs with the same seed are identical") {
    const std::string cmd = "analyze --data " + csv_path.string() +
                            " --lambda 7 --method mi --m 10 --seed 1";
    const RunResult a = run_cli(cmd);
    const RunResult b = run_cli(cmd);
    REQUIRE(a.exit_code == 0);
    CHECK(a.out == b.out);
  }
  SUBCASE("imputation dump writes m completed csv files") {
    // give the data something to impute
    TrialDataset partial = trial;
    {
      auto subjects = partial.subjects();
      for (std::size_t i = 0; i < subjects.size(); i += 7) {
        subjects[i].outcomes[5].reset();
      }
      partial = TrialDataset(std::move(subjects), partial.n_visits());
    }
    const auto partial_path = dir / "partial.csv";
    write_wide_csv(partial, partial_path);
    const auto dump_dir = dir / "imputations";
    std::filesystem::remove_all(dump_dir);
    const RunResult r = run_cli("analyze --data " + partial_path.string() +
                                " --lambda 7 --method mi --m 4 --seed 2 " +
                                "--dump-imputations " + dump_dir.string());
    REQUIRE(r.exit_code == 0);
    std::size_t n_files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dump_dir)) {
      ++n_files;
      const TrialDataset copy = read_wide_csv(entry.path());
      CHECK(copy.complete());
      CHECK(copy.n_subjects() == partial.n_subjects());
    }
    CHECK(n_files == 4);
  }
  SUBCASE("single-arm dataset exits 2") {
    std::vector<SubjectRecord> controls;
    for (const auto& s : trial.subjects()) {
      if (s.arm == 0) controls.push_back(s);
    }
    TrialDataset only_controls(std::move(controls), trial.n_visits());
    const auto path = dir / "onearm.csv";
    write_wide_csv(only_controls, path);
    const RunResult r =
        run_cli("analyze --data " + path.string() + " --lambda 7");
    CHECK(r.exit_code == 2);
  }
  SUBCASE("validation failure names the subject") {
    const auto path = dir / "invalid.csv";
    std::ofstream(path) << "subject_id,trt,y1,y2,y3\n"
                           "s7,0,8.0,,7.1\n";
    const RunResult r =
        run_cli("analyze --data " + path.string() + " --lambda 7");
    CHECK(r.exit_code == 2);
    CHECK(r.out.find("s7") != std::string::npos);
  }
}

TEST_CASE("compare subcommand") {
  const auto dir = work_dir();
  const std::string config =
      std::string(DICHOT_CONFIG_DIR) + "/normal_mcar.json";
  const std::string out = (dir / "cmp").string();
  REQUIRE(run_cli("simulate --config " + config + " --out " + out +
                  " --replicates 25 --seed 11")
              .exit_code == 0);
  const std::string summary = out + "/normal_mcar_summary.json";

  SUBCASE("two summaries produce a report with slope lines") {
    const RunResult r = run_cli("compare " + summary + " " + summary);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("slope_rd,0") != std::string::npos);
    CHECK(r.out.find("ratio_rd") != std::string::npos);
  }
  SUBCASE("one summary is an error") {
    const RunResult r = run_cli("compare " + summary);
    CHECK(r.exit_code == 2);  // CLI11 rejects fewer than 2 positionals
  }
}
