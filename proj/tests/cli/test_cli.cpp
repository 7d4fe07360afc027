#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "raschkit/io.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path err_file = dir / "stderr.txt";
  const std::string cmd =
      std::string(RASCHKIT_CLI_PATH) + " " + args + " 2>" + err_file.string();
  std::array<char, 4096> buf{};
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  const int status = pclose(pipe);
  std::ifstream err_in(err_file);
  std::string err((std::istreambuf_iterator<char>(err_in)),
                  std::istreambuf_iterator<char>());
  return {WEXITSTATUS(status), out, err};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

class Workspace {
 public:
  Workspace() : dir_(fs::current_path() / "tmp_cli") {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Workspace() { fs::remove_all(dir_); }
  fs::path operator/(const std::string& name) const { return dir_ / name; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
};

}  // namespace

TEST_CASE("usage errors exit with 2", "[cli]") {
  Workspace ws;
  CHECK(run_cli("", ws.dir()).code == 2);
  CHECK(run_cli("frobnicate", ws.dir()).code == 2);
  CHECK(run_cli("simulate --subjects 5", ws.dir()).code == 2);  // missing required flags
  CHECK(run_cli("--help", ws.dir()).code == 0);
}

TEST_CASE("missing input files exit with 1 and name the path", "[cli]") {
  Workspace ws;
  const auto res = run_cli("fit --matrix " + (ws / "absent.csv").string() +
                               " --estimator mml --out-items " + (ws / "b.csv").string() +
                               " --out-subjects " + (ws / "t.csv").string(),
                           ws.dir());
  CHECK(res.code == 1);
  CHECK(res.err.find("absent.csv") != std::string::npos);
}

TEST_CASE("simulate writes deterministic files with tool headers", "[cli]") {
  Workspace ws;
  const std::string args = "simulate --subjects 30 --items 10 --seed 7 --out ";
  const auto r1 = run_cli(args + (ws / "m1.csv").string(), ws.dir());
  REQUIRE(r1.code == 0);
  const auto summary = nlohmann::json::parse(r1.out);
  CHECK(summary["subcommand"] == "simulate");
  CHECK(summary["subjects"] == 30);

  const auto r2 = run_cli(args + (ws / "m2.csv").string(), ws.dir());
  REQUIRE(r2.code == 0);
  const auto c1 = slurp(ws / "m1.csv");
  CHECK(c1 == slurp(ws / "m2.csv"));
  CHECK(c1.rfind("# raschkit 0.1.0 simulate", 0) == 0);

  // a different seed changes the data
  const auto r3 =
      run_cli("simulate --subjects 30 --items 10 --seed 8 --out " + (ws / "m3.csv").string(),
              ws.dir());
  REQUIRE(r3.code == 0);
  CHECK(slurp(ws / "m3.csv") != c1);
}

TEST_CASE("fit, score and compare round trip", "[cli]") {
  Workspace ws;
  REQUIRE(run_cli("simulate --subjects 150 --items 15 --seed 3 --out " +
                      (ws / "m.csv").string() + " --b-out " + (ws / "b_true.csv").string(),
                  ws.dir())
              .code == 0);

  const auto fit = run_cli(
      "fit --matrix " + (ws / "m.csv").string() + " --estimator mml --out-items " +
          (ws / "b.csv").string() + " --out-subjects " + (ws / "t.csv").string() +
          " --out-trace " + (ws / "trace.csv").string(),
      ws.dir());
  REQUIRE(fit.code == 0);
  const auto fit_summary = nlohmann::json::parse(fit.out);
  CHECK(fit_summary["converged"] == true);
  CHECK(fs::exists(ws / "trace.csv"));

  const auto cmp = run_cli("compare --left " + (ws / "b_true.csv").string() + " --right " +
                               (ws / "b.csv").string(),
                           ws.dir());
  REQUIRE(cmp.code == 0);
  const auto cmp_summary = nlohmann::json::parse(cmp.out);
  CHECK(cmp_summary["n"] == 15);
  CHECK(cmp_summary["spearman"].get<double>() > 0.8);

  const auto score = run_cli("score --matrix " + (ws / "m.csv").string() + " --items " +
                                 (ws / "b.csv").string() + " --out " + (ws / "t2.csv").string(),
                             ws.dir());
  REQUIRE(score.code == 0);
  const auto t1 = raschkit::load_params_csv(ws / "t.csv");
  const auto t2 = raschkit::load_params_csv(ws / "t2.csv");
  REQUIRE(t1.ids == t2.ids);
  for (std::size_t k = 0; k < t1.ids.size(); ++k)
    CHECK_THAT(t2.columns[0][k], Catch::Matchers::WithinAbs(t1.columns[0][k], 1e-9));
}

TEST_CASE("vi fit requires a seed and writes posterior files", "[cli]") {
  Workspace ws;
  REQUIRE(run_cli("simulate --subjects 40 --items 8 --seed 5 --out " +
                      (ws / "m.csv").string(),
                  ws.dir())
              .code == 0);
  const std::string base =
      "fit --matrix " + (ws / "m.csv").string() + " --estimator vi --out-items " +
      (ws / "b.csv").string() + " --out-subjects " + (ws / "t.csv").string() +
      " --max-steps 150 --elbo-window 50";
  CHECK(run_cli(base, ws.dir()).code == 2);  // no seed

  const auto res = run_cli(base + " --seed 11 --out-posterior-items " +
                               (ws / "bp.csv").string() + " --out-trace " +
                               (ws / "elbo.csv").string(),
                           ws.dir());
  REQUIRE(res.code == 0);
  const auto table = raschkit::load_params_csv(ws / "bp.csv");
  CHECK(table.column_names ==
        std::vector<std::string>{"item_id", "b_mean", "b_std"});
  for (double sd : table.column("b_std")) CHECK(sd > 0.0);
  const auto trace = slurp(ws / "elbo.csv");
  CHECK(trace.find("step,elbo") != std::string::npos);
}

TEST_CASE("grade builds a matrix from labeled outputs", "[cli]") {
  Workspace ws;
  {
    std::ofstream gold(ws / "gold.jsonl");
    gold << R"({"item":"q1","gold":"yes"})" << "\n"
         << R"({"item":"q2","gold":"no"})" << "\n";
    std::ofstream preds(ws / "preds.jsonl");
    preds << R"({"subject":"m1","item":"q1","label":"yes"})" << "\n"
          << R"({"subject":"m1","item":"q2","label":"yes"})" << "\n"
          << R"({"subject":"m2","item":"q1","label":"no"})" << "\n";
  }
  const auto res = run_cli("grade --predictions " + (ws / "preds.jsonl").string() +
                               " --gold " + (ws / "gold.jsonl").string() + " --out " +
                               (ws / "m.csv").string(),
                           ws.dir());
  REQUIRE(res.code == 0);
  const auto m = raschkit::load_matrix(ws / "m.csv", raschkit::MatrixFormat::dense_csv);
  CHECK(m.n_subjects() == 2);
  CHECK(m.correct(0, 0));
  CHECK(!m.correct(0, 1));
  CHECK(m.missing(1, 1));
}

TEST_CASE("filter and sweep work from values and from matrices", "[cli]") {
  Workspace ws;
  raschkit::save_params_csv(ws / "b.csv", {"item_id", "b"},
                            {"i1", "i2", "i3", "i4", "i5"}, {{-2, -1, 0, 1, 2}});
  const auto res = run_cli("filter --values " + (ws / "b.csv").string() +
                               " --strategy AVI --threshold 1.5 --out " +
                               (ws / "report.csv").string(),
                           ws.dir());
  REQUIRE(res.code == 0);
  CHECK(nlohmann::json::parse(res.out)["retained"] == 3);
  const auto report = slurp(ws / "report.csv");
  CHECK(report.find("i1,-2,0") != std::string::npos);
  CHECK(report.find("i3,0,1") != std::string::npos);

  // strict boundary: threshold 2 keeps |b|<2 only
  const auto strict = run_cli("filter --values " + (ws / "b.csv").string() +
                                  " --strategy AVI --threshold 2 --out " +
                                  (ws / "r2.csv").string(),
                              ws.dir());
  CHECK(nlohmann::json::parse(strict.out)["retained"] == 3);

  const auto sweep = run_cli("sweep --values " + (ws / "b.csv").string() +
                                 " --strategy UB --target-fraction 0.4",
                             ws.dir());
  REQUIRE(sweep.code == 0);
  const auto sj = nlohmann::json::parse(sweep.out);
  CHECK(sj["retained"] == 2);
  CHECK(sj["retained_fraction"].get<double>() <= 0.4);

  // percent-correct strategies straight from a matrix
  REQUIRE(run_cli("simulate --subjects 20 --items 6 --seed 2 --out " +
                      (ws / "m.csv").string(),
                  ws.dir())
              .code == 0);
  const auto pc = run_cli("filter --matrix " + (ws / "m.csv").string() +
                              " --strategy PCLB --threshold 0.5 --out " +
                              (ws / "pcr.csv").string(),
                          ws.dir());
  REQUIRE(pc.code == 0);
  // but difficulty strategies cannot come from a bare matrix
  const auto bad = run_cli("filter --matrix " + (ws / "m.csv").string() +
                               " --strategy AVI --threshold 0.5 --out " +
                               (ws / "x.csv").string(),
                           ws.dir());
  CHECK(bad.code == 1);
}

TEST_CASE("split-half partitions and stays loadable", "[cli]") {
  Workspace ws;
  REQUIRE(run_cli("simulate --subjects 21 --items 4 --seed 9 --out " +
                      (ws / "m.csv").string(),
                  ws.dir())
              .code == 0);
  const auto res = run_cli("split-half --matrix " + (ws / "m.csv").string() +
                               " --seed 3 --out-a " + (ws / "a.csv").string() +
                               " --out-b " + (ws / "b.csv").string(),
                           ws.dir());
  REQUIRE(res.code == 0);
  const auto a = raschkit::load_matrix(ws / "a.csv", raschkit::MatrixFormat::dense_csv);
  const auto b = raschkit::load_matrix(ws / "b.csv", raschkit::MatrixFormat::dense_csv);
  CHECK(a.n_subjects() == 11);
  CHECK(b.n_subjects() == 10);
  CHECK(a.item_ids() == b.item_ids());
}

TEST_CASE("reproduce emits a deterministic report", "[cli]") {
  Workspace ws;
  const std::string base = "reproduce --seed 7 --subjects 60 --items 10 --max-steps 300 "
                           "--elbo-window 50 --out-dir ";
  const auto r1 = run_cli(base + (ws / "run1").string(), ws.dir());
  REQUIRE(r1.code == 0);
  const auto report = nlohmann::json::parse(r1.out);
  CHECK(report["agreement"]["rmsd_b"].is_number());
  CHECK(report["split_half"]["spearman_b"].is_number());
  CHECK(fs::exists(ws / "run1" / "report.json"));

  const auto r2 = run_cli(base + (ws / "run2").string(), ws.dir());
  REQUIRE(r2.code == 0);
  CHECK(r1.out == r2.out);
  CHECK(slurp(ws / "run1" / "report.json") == slurp(ws / "run2" / "report.json"));
  CHECK(slurp(ws / "run1" / "matrix.csv") == slurp(ws / "run2" / "matrix.csv"));
  CHECK(slurp(ws / "run1" / "vi_items.csv") == slurp(ws / "run2" / "vi_items.csv"));
}
