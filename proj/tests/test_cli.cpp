#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>

#include "machash/experiment.hpp"
#include "oracles.hpp"

using namespace machash;
using nlohmann::json;

namespace {

/// Runs the CLI with `args`, capturing stdout and stderr into `dir`.
int run_cli(const std::string& args, const std::filesystem::path& dir) {
  const std::string cmd = std::string("\"") + MACHASH_CLI_PATH + "\" " + args + " >\"" + (dir / "stdout").string() +
                          "\" 2>\"" + (dir / "stderr").string() + "\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

void write_config(const std::filesystem::path& path, const std::filesystem::path& out, json extra = json::object()) {
  json j = json::parse(R"({
    "seed": 5,
    "dataset": {"synthetic": {"classes": 3, "points_per_class": 25, "dim": 4, "separation": 3.0}},
    "split": {"train": 45, "validation": 10, "test": 20},
    "loss": {"kind": "ksh", "bits": 4},
    "affinity": {"mode": "supervised", "positives": 5, "negatives": 10},
    "mac": {"solver": "cut", "max_iterations": 6},
    "eval": {"k_grid": [1, 5, 10], "validation_k": 10}
  })");
  j["output"] = out.string();
  j.merge_patch(extra);
  oracle::write_file(path, j.dump(1));
}

}  // namespace

TEST_CASE("gen and affinity write their files") {
  const auto dir = oracle::scratch_dir("cli-gen");
  CHECK(run_cli("gen --classes 2 --points 10 --dim 3 --seed 4 -o " + q(dir / "d.csv"), dir) == 0);
  const Dataset d = load_dataset(dir / "d.csv", DataFormat::csv, true);
  CHECK(d.size() == 20);
  CHECK(d.dim() == 3);
  SyntheticSpec s;
  s.classes = 2;
  s.points_per_class = 10;
  s.dim = 3;
  s.seed = 4;
  CHECK(d.features == gen_synthetic(s).features);

  CHECK(run_cli("gen --classes 2 --points 10 --dim 3 --format dense-binary -o " + q(dir / "d.bin"), dir) == 0);
  CHECK(load_dataset(dir / "d.bin", DataFormat::dense_binary).size() == 20);

  CHECK(run_cli("affinity --data " + q(dir / "d.csv") + " --label-column 1 --positives 3 --negatives 4 -o " +
                    q(dir / "g.csv"),
                dir) == 0);
  const AffinityGraph g = load_affinities(dir / "g.csv", 20);
  CHECK(g.pairs.size() == 20 * 7);

  CHECK(run_cli("affinity --data " + q(dir / "d.csv") + " --label-column 1 --mode pseudolabel --positives 30 -o " +
                    q(dir / "p.csv"),
                dir) == 1);
  CHECK(oracle::read_file(dir / "stderr").find("must be smaller than N") != std::string::npos);
}

TEST_CASE("train, eval and compare run end to end") {
  const auto dir = oracle::scratch_dir("cli-train");
  write_config(dir / "c.json", dir / "out");
  REQUIRE(run_cli("train " + q(dir / "c.json"), dir) == 0);
  const std::string out = oracle::read_file(dir / "stdout");
  CHECK(out.find("two_step: L = ") != std::string::npos);
  CHECK(out.find("mac: L = ") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "out" / "mac" / "model.json"));

  CHECK(run_cli("compare " + q(dir / "out" / "two_step") + " " + q(dir / "out" / "mac") + " -o " +
                    q(dir / "cmp.json"),
                dir) == 0);
  const json cmp = json::parse(oracle::read_file(dir / "cmp.json"));
  CHECK(cmp.contains("delta_loss"));

  CHECK(run_cli("gen --classes 3 --points 25 --dim 4 --separation 3 --seed 9 -o " + q(dir / "q.csv"), dir) == 0);
  CHECK(run_cli("eval --model " + q(dir / "out" / "mac" / "model.json") + " --base " + q(dir / "q.csv") +
                    " --queries " + q(dir / "q.csv") + " --k-grid 1 5",
                dir) == 0);
  const RetrievalReport r = report_from_json(oracle::read_file(dir / "stdout"));
  CHECK(r.k_grid == std::vector<std::size_t>{1, 5});
  CHECK(r.bits == 4);

  CHECK(run_cli("train " + q(dir / "c.json") + " --arm mac -o " + q(dir / "only"), dir) == 0);
  CHECK(std::filesystem::exists(dir / "only" / "mac" / "trace.csv"));
  CHECK_FALSE(std::filesystem::exists(dir / "only" / "two_step"));
}

TEST_CASE("a bad config exits with status 2 and lists every problem") {
  const auto dir = oracle::scratch_dir("cli-bad");
  write_config(dir / "c.json", dir / "out", {{"loss", {{"bits", 99}}}, {"mac", {{"alpah", 1.2}}}});
  CHECK(run_cli("train " + q(dir / "c.json"), dir) == 2);
  const std::string err = oracle::read_file(dir / "stderr");
  CHECK(err.find("loss.bits") != std::string::npos);
  CHECK(err.find("mac.alpah: unknown key") != std::string::npos);
}

TEST_CASE("runtime failures exit with status 1") {
  const auto dir = oracle::scratch_dir("cli-fail");
  std::filesystem::create_directories(dir / "a");
  CHECK(run_cli("compare " + q(dir / "a") + " " + q(dir / "a"), dir) == 1);
  CHECK(oracle::read_file(dir / "stderr").find("missing manifest") != std::string::npos);
  oracle::write_file(dir / "bad.csv", "1,2\n3\n");
  CHECK(run_cli("affinity --data " + q(dir / "bad.csv") + " -o " + q(dir / "g.csv"), dir) == 1);
  CHECK(run_cli("frobnicate", dir) != 0);
}
