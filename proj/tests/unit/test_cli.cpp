#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kTmp = fs::temp_directory_path() / "fairhc_cli_test";

int run(const std::string& cmd) {
  const int status = std::system((cmd + " 2>/dev/null").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fixture(const std::string& name) { return std::string(FIXTURE_DIR) + "/" + name; }

struct TmpDir {
  TmpDir() { fs::create_directories(kTmp); }
  ~TmpDir() { fs::remove_all(kTmp); }
};

}  // namespace

TEST_CASE("experiment run output is byte identical across reruns") {
  TmpDir tmp;
  const std::string base = std::string(FAIRDENDRO_BIN) + " run --config " + fixture("exp.json");
  REQUIRE(run(base + " --threads 3 --out " + (kTmp / "a.jsonl").string()) == 0);
  REQUIRE(run(base + " --threads 1 --out " + (kTmp / "b.jsonl").string() + " --table " +
              (kTmp / "t.csv").string()) == 0);
  const auto a = slurp(kTmp / "a.jsonl");
  CHECK(!a.empty());
  CHECK(a == slurp(kTmp / "b.jsonl"));
  std::istringstream lines(a);
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    if (count == 0) CHECK(j.contains("config"));
    ++count;
  }
  CHECK(count == 5);
  CHECK(slurp(kTmp / "t.csv").find("±") != std::string::npos);

  REQUIRE(run(base + " --seed 99 --out " + (kTmp / "c.jsonl").string()) == 0);
  CHECK(slurp(kTmp / "c.jsonl") != a);
}

TEST_CASE("build on a CSV") {
  TmpDir tmp;
  const std::string cmd = std::string(FAIRDENDRO_BIN) + " build --input " + fixture("tiny.csv") +
                          " --color-column group --objective revenue --alpha 1/2 --dump-tree " +
                          (kTmp / "tree.json").string() + " > " + (kTmp / "out.json").string();
  REQUIRE(run(cmd) == 0);
  const auto summary = nlohmann::json::parse(slurp(kTmp / "out.json"));
  CHECK(summary["n"] == 8);
  CHECK(summary["colors"] == 2);
  CHECK(summary["fair"] == true);
  CHECK(summary["value"].get<double>() <= summary["upper_bound"].get<double>() + 1e-9);
  const auto tree = nlohmann::json::parse(slurp(kTmp / "tree.json"));
  CHECK(!tree.empty());

  CHECK(run(std::string(FAIRDENDRO_BIN) + " build --input " + fixture("missing.csv")) != 0);
  CHECK(run(std::string(FAIRDENDRO_BIN) + " build --input " + fixture("tiny.csv") + " --color-column nope") != 0);
  CHECK(run(std::string(FAIRDENDRO_BIN)) != 0);
}

TEST_CASE("synth then faircost") {
  TmpDir tmp;
  const auto csv = (kTmp / "pts.csv").string();
  REQUIRE(run(std::string(FAIRDENDRO_BIN) + " synth --n 240 --dim 3 --ratio 1,1 --seed 2 --out " + csv) == 0);
  const auto out = (kTmp / "fc.json").string();
  REQUIRE(run(std::string(FAIRCOST_BIN) + " --input " + csv + " --t 8 --ell 3 --relaxed --seed 1 --out " + out) == 0);
  const auto j = nlohmann::json::parse(slurp(out));
  CHECK(j["report"]["fair"] == true);
  std::size_t total = 0;
  for (const auto& c : j["clusters"]) total += c.size();
  CHECK(total == 240);

  const auto out2 = (kTmp / "fc2.json").string();
  REQUIRE(run(std::string(FAIRCOST_BIN) + " --input " + csv + " --t 8 --ell 3 --relaxed --seed 1 --out " + out2) == 0);
  CHECK(slurp(out) == slurp(out2));

  // default t and ell need more points than this
  CHECK(run(std::string(FAIRCOST_BIN) + " --input " + csv + " --out " + out) == 1);
  const auto uneven = (kTmp / "uneven.csv").string();
  REQUIRE(run(std::string(FAIRDENDRO_BIN) + " synth --n 60 --ratio 1,2 --out " + uneven) == 0);
  CHECK(run(std::string(FAIRCOST_BIN) + " --input " + uneven + " --t 4 --ell 2 --relaxed") == 1);
}

TEST_CASE("trace and timing subcommands") {
  TmpDir tmp;
  const std::string base = std::string(FAIRDENDRO_BIN);
  const auto trace = (kTmp / "trace.csv").string();
  REQUIRE(run(base + " trace --config " + fixture("exp.json") + " --every 5 --out " + trace) == 0);
  CHECK(slurp(trace).rfind("swap_index", 0) == 0);
  const auto timing = (kTmp / "timing.csv").string();
  REQUIRE(run(base + " timing --config " + fixture("exp.json") + " --out " + timing) == 0);
  CHECK(!slurp(timing).empty());
}
