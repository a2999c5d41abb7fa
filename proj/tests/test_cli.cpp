#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(ORBITSIG_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[512];
  while (std::fgets(buf, sizeof buf, p)) r.output += buf;
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Value of `metric` in a metric,value CSV.
std::string metric(const fs::path& p, const std::string& name) {
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(name + ",", 0) == 0) return line.substr(name.size() + 1);
  }
  return "";
}

// Field `col` of the row starting with `rep` in the pipeline metrics CSV.
std::string pipeline_field(const fs::path& p, const std::string& rep, int col) {
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(rep + ",", 0) != 0) continue;
    std::istringstream cells(line);
    std::string cell;
    for (int i = 0; i <= col; ++i) std::getline(cells, cell, ',');
    return cell;
  }
  return "";
}

struct Workspace {
  fs::path dir = fs::temp_directory_path() / "orbitsig_cli_test";
  fs::path config = dir / "exp.cfg";
  Workspace() {
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(config) << "classes = iy, aa, uw\nn_train = 10\nn_test = 4\nn_pool = 5\n"
                             "lambda_grid = 1e-4, 1e-2, 1\nfractions = 1, 0.5\nseeds = 2\n";
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string p(const std::string& rel) const { return (dir / rel).string(); }
};

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(cli("--help").code == 0);
  for (const char* sub : {"synth", "features", "store", "sign", "train", "eval", "sweep", "run"}) {
    const Run r = cli(std::string(sub) + " --help");
    CHECK(r.code == 0);
    CHECK(r.output.find("--out") != std::string::npos);
  }
  CHECK(cli("").code == 1);
  CHECK(cli("frobnicate").code == 1);
  CHECK(cli("train").code == 1);
}

TEST_CASE("staged commands reproduce the one-shot pipeline exactly") {
  Workspace w;
  const std::string cfg = " --config " + w.config.string();
  REQUIRE(cli("synth" + cfg + " --out " + w.p("corpus")).code == 0);
  REQUIRE(fs::exists(w.dir / "corpus" / "metadata.txt"));

  const Run feat = cli("features" + cfg + " --corpus " + w.p("corpus") + " --out " + w.p("feat") +
                       " --frames " + w.p("frames.csv"));
  REQUIRE(feat.code == 0);
  CHECK(slurp(w.dir / "frames.csv").rfind("utterance,frame,c0", 0) == 0);
  REQUIRE(cli("store" + cfg + " --pool " + w.p("feat/pool.csv") + " --out " + w.p("store.txt")).code == 0);
  REQUIRE(cli("sign" + cfg + " --store " + w.p("store.txt") + " --train " + w.p("feat/train.csv") + " --out " +
              w.p("sig") + " " + w.p("feat/train.csv") + " " + w.p("feat/test.csv"))
              .code == 0);

  // Invariant representation.
  const Run tr = cli("train" + cfg + " --features " + w.p("sig/train.sig.csv") + " --out " + w.p("model_invr"));
  REQUIRE(tr.code == 0);
  CHECK(tr.output.find("selected lambda") != std::string::npos);
  REQUIRE(cli("eval --model " + w.p("model_invr/model.txt") + " --features " + w.p("sig/test.sig.csv") +
              " --out " + w.p("eval_invr"))
              .code == 0);
  // Base representation.
  REQUIRE(cli("train" + cfg + " --features " + w.p("feat/train.csv") + " --out " + w.p("model_base")).code == 0);
  REQUIRE(cli("eval --model " + w.p("model_base/model.txt") + " --features " + w.p("feat/test.csv") + " --out " +
              w.p("eval_base"))
              .code == 0);

  // One shot from the same corpus.
  REQUIRE(cli("run" + cfg + " --corpus " + w.p("corpus") + " --out " + w.p("run")).code == 0);
  const fs::path m = w.dir / "run" / "metrics.csv";
  CHECK(metric(w.dir / "eval_invr" / "metrics.csv", "error_rate") == pipeline_field(m, "invr", 3));
  CHECK(metric(w.dir / "eval_invr" / "metrics.csv", "balanced_error_rate") == pipeline_field(m, "invr", 4));
  CHECK(metric(w.dir / "eval_base" / "metrics.csv", "error_rate") == pipeline_field(m, "base", 3));
  CHECK(slurp(w.dir / "eval_invr" / "confusion.csv").size() > 0);

  // The synthesized corpus and the on-disk corpus give the same run.
  REQUIRE(cli("run" + cfg + " --out " + w.p("run_synth")).code == 0);
  CHECK(slurp(w.dir / "run_synth" / "metrics.csv") == slurp(m));

  // Fixed lambda skips selection.
  const Run fixed = cli("train --lambda 0.01 --features " + w.p("feat/train.csv") + " --out " + w.p("model_fixed"));
  CHECK(fixed.code == 0);
  CHECK(fixed.output.find("selected lambda") == std::string::npos);
}

TEST_CASE("data errors exit with code 2 and name the problem") {
  Workspace w;
  const std::string cfg = " --config " + w.config.string();
  REQUIRE(cli("features" + cfg + " --out " + w.p("plp")).code == 0);
  REQUIRE(cli("features" + cfg + " --kind MFC --out " + w.p("mfc")).code == 0);
  REQUIRE(cli("store --pool " + w.p("plp/pool.csv") + " --out " + w.p("store.txt")).code == 0);
  const Run r = cli("sign --store " + w.p("store.txt") + " --train " + w.p("mfc/train.csv") + " --out " + w.p("sig") +
                    " " + w.p("mfc/test.csv"));
  CHECK(r.code == 2);
  CHECK(r.output.find("PLP") != std::string::npos);
  CHECK(r.output.find("MFC") != std::string::npos);

  std::ofstream(w.dir / "broken.txt") << "ORBITSTORE v7\n";
  CHECK(cli("sign --store " + w.p("broken.txt") + " --train " + w.p("plp/train.csv") + " --out " + w.p("s2") + " " +
            w.p("plp/test.csv"))
            .code == 2);
  std::ofstream(w.dir / "bad.cfg") << "fractions = 2\n";
  CHECK(cli("sweep --config " + w.p("bad.cfg") + " --out " + w.p("sw")).code == 2);
}

TEST_CASE("sweep writes CSV, plot and manifest") {
  Workspace w;
  const Run r = cli("sweep --config " + w.config.string() + " --jobs 1 --out " + w.p("sweep"));
  REQUIRE(r.code == 0);
  CHECK(fs::exists(w.dir / "sweep" / "sweep.csv"));
  CHECK(fs::exists(w.dir / "sweep" / "sweep.svg"));
  CHECK(fs::exists(w.dir / "sweep" / "manifest.json"));
  const std::string csv = slurp(w.dir / "sweep" / "sweep.csv");
  int lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 1 + 4);
}
