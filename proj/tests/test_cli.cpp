#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

const std::string kBin = GMIX_CLI_PATH;
const std::string kData = GMIX_DATA_DIR;
const std::string kScratch = "cli_scratch";

int run(const std::string& args, const std::string& stdout_file = "",
        const std::string& stderr_file = "") {
  std::string cmd = "\"" + kBin + "\" " + args;
  cmd += " >" + (stdout_file.empty() ? std::string("/dev/null") : stdout_file);
  cmd += " 2>" + (stderr_file.empty() ? std::string("/dev/null") : stderr_file);
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Json slurp_json(const std::string& path) { return Json::parse(slurp(path)); }

std::string at(const std::string& name) { return kScratch + "/" + name; }

// benchmark rows with the wall-clock column blanked, for comparisons
std::string mask_wall(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    std::size_t start = 0;
    int field = 0;
    std::string kept;
    while (start <= line.size()) {
      std::size_t end = line.find(',', start);
      if (end == std::string::npos) end = line.size();
      if (field > 0) kept += ',';
      kept += (field == 8) ? std::string("_")
                           : line.substr(start, end - start);
      ++field;
      start = end + 1;
      if (end == line.size()) break;
    }
    out << kept << '\n';
  }
  return out.str();
}

struct ScratchDir {
  ScratchDir() {
    fs::remove_all(kScratch);
    fs::create_directories(kScratch);
  }
};

const ScratchDir scratch_guard;

}  // namespace

TEST_CASE("version and usage") {
  CHECK(run("--version") == 0);
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("fit") == 2);  // missing data file
}

TEST_CASE("fit recovers the shipped two cluster fixture") {
  const std::string fixture = kData + "/two_clusters.csv";
  const std::string out = at("fit_fixture.json");
  CHECK(run("fit " + fixture + " --model gmm --k 2 --method em --label-col 2 --out " + out) == 0);
  const Json doc = slurp_json(out);
  CHECK(doc.at("metrics").at("ari").get<double>() == 1.0);
  CHECK(doc.at("fit").at("converged").get<bool>());
  CHECK(doc.at("params").at("weights").size() == 2);
  CHECK(doc.at("params").at("means").size() == 2);
  CHECK(doc.at("params").at("covariances").at(0).size() == 2);
  CHECK(doc.at("trajectory").size() ==
        static_cast<std::size_t>(doc.at("fit").at("iters").get<int>()) + 1);
  CHECK(doc.at("labels").size() == 200);
  CHECK(doc.at("responsibilities").size() == 200);
  CHECK(doc.at("manifest").at("command") == "fit");

  SUBCASE("gradient methods land on the same clustering") {
    const std::string out2 = at("fit_newton.json");
    CHECK(run("fit " + fixture +
              " --k 2 --method newton_cg --max-iter 200 --label-col 2 --out " +
              out2) == 0);
    CHECK(slurp_json(out2).at("metrics").at("ari").get<double>() == 1.0);
  }
}

TEST_CASE("mclust constraint flag") {
  const std::string fixture = kData + "/two_clusters.csv";
  const std::string out = at("fit_vvv.json");
  CHECK(run("fit " + fixture +
            " --model mclust --constraint VVV --k 2 --method newton_cg"
            " --max-iter 200 --label-col 2 --out " + out) == 0);
  const Json doc = slurp_json(out);
  CHECK(doc.at("metrics").at("ari").get<double>() == 1.0);
  CHECK(doc.at("model").at("constraint") == "VVV");
}

TEST_CASE("validation failures exit 2") {
  const std::string fixture = kData + "/two_clusters.csv";
  CHECK(run("fit " + fixture + " --k 0") == 2);
  CHECK(run("fit " + fixture + " --model mclust --k 2") == 2);  // no constraint
  CHECK(run("fit " + fixture + " --model gmm --k 2 --q 1") == 2);
  CHECK(run("fit " + fixture + " --model tmm --k 2 --method em") == 2);
  CHECK(run("fit " + fixture + " --k 2 --method warp") == 2);
  CHECK(run("fit " + fixture + " --k 2 --label-col 9") == 2);
  CHECK(run("fit nope.csv --k 2") == 2);
}

TEST_CASE("csv parse errors name the line and column") {
  const std::string bad = at("bad.csv");
  std::ofstream(bad) << "1.0,2.0\n3.0,oops\n";
  const std::string err = at("bad.err");
  CHECK(run("fit " + bad + " --k 1", "", err) == 2);
  const std::string msg = slurp(err);
  CHECK(msg.find("line 2") != std::string::npos);
  CHECK(msg.find("column 2") != std::string::npos);

  const std::string ragged = at("ragged.csv");
  std::ofstream(ragged) << "1.0,2.0\n3.0\n";
  CHECK(run("fit " + ragged + " --k 1", "", err) == 2);
  CHECK(slurp(err).find("expected 2 fields") != std::string::npos);
}

TEST_CASE("header rows are skipped on request") {
  const std::string csv = at("headered.csv");
  std::ofstream(csv) << "x,y\n1.0,2.0\n1.1,2.1\n0.9,1.9\n";
  CHECK(run("fit " + csv + " --k 1") == 2);  // header parsed as data
  const std::string out = at("headered.json");
  CHECK(run("fit " + csv + " --header --k 1 --out " + out) == 0);
  CHECK(slurp_json(out).at("labels").size() == 3);
}

TEST_CASE("simulate is deterministic and shapes follow the flags") {
  CHECK(run("simulate --n 50 --p 2 --k 2 --seed 7 --out " + at("s1")) == 0);
  CHECK(run("simulate --n 50 --p 2 --k 2 --seed 7 --out " + at("s2")) == 0);
  CHECK(slurp(at("s1.csv")) == slurp(at("s2.csv")));
  const Json t1 = slurp_json(at("s1.truth.json"));
  const Json t2 = slurp_json(at("s2.truth.json"));
  CHECK(t1.at("weights") == t2.at("weights"));
  CHECK(t1.at("covariances") == t2.at("covariances"));

  SUBCASE("noise features add columns") {
    CHECK(run("simulate --n 20 --p 2 --k 2 --noise-features 3 --out " +
              at("sn")) == 0);
    std::istringstream first(slurp(at("sn.csv")));
    std::string line;
    std::getline(first, line);
    CHECK(std::count(line.begin(), line.end(), ',') == 5);  // 5 features + label
  }

  SUBCASE("eei truth shares one covariance") {
    CHECK(run("simulate --n 20 --p 3 --k 3 --cov eei --out " + at("se")) == 0);
    const Json t = slurp_json(at("se.truth.json"));
    CHECK(t.at("covariances").at(0) == t.at("covariances").at(1));
    CHECK(t.at("covariances").at(1) == t.at("covariances").at(2));
  }

  SUBCASE("invalid spec exits 2") {
    CHECK(run("simulate --n 1 --k 2 --out " + at("sbad")) == 2);
    CHECK(run("simulate --cov diag --out " + at("sbad")) == 2);
  }
}

TEST_CASE("benchmark emits rows summary and manifest") {
  const std::string prefix = at("b1");
  CHECK(run("benchmark --n 64 --p 2 --k 2 --seeds 2 --methods adam,em"
            " --max-iter 100 --out " + prefix) == 0);
  const std::string csv = slurp(prefix + ".csv");
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "n,p,K,seed,method,loglik,ari,iters,wall_ms,converged");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 4);

  const std::string sum = slurp(prefix + ".summary.csv");
  CHECK(sum.find("p,K,n,method,") == 0);
  CHECK(std::count(sum.begin(), sum.end(), '\n') == 3);  // header + 2 methods

  const Json manifest = slurp_json(prefix + ".manifest.json");
  CHECK(manifest.at("command") == "benchmark");
  CHECK(manifest.at("seeds") == 2);

  SUBCASE("job count does not change results") {
    CHECK(run("benchmark --n 64 --p 2 --k 2 --seeds 2 --methods adam,em"
              " --max-iter 100 --jobs 4 --out " + at("b4")) == 0);
    CHECK(mask_wall(slurp(at("b4") + ".csv")) == mask_wall(csv));
    CHECK(slurp(at("b4") + ".summary.csv") == sum);
  }
}

TEST_CASE("replay reproduces outputs byte for byte") {
  const std::string fixture = kData + "/two_clusters.csv";
  const std::string out = at("r1.json");
  CHECK(run("fit " + fixture + " --k 2 --method em --label-col 2 --out " +
            out) == 0);
  CHECK(run("replay " + out + " --out " + at("r2.json")) == 0);
  CHECK(slurp(out) == slurp(at("r2.json")));

  CHECK(run("simulate --n 30 --p 2 --k 2 --seed 3 --out " + at("rs1")) == 0);
  CHECK(run("replay " + at("rs1.truth.json") + " --out " + at("rs2")) == 0);
  CHECK(slurp(at("rs1.csv")) == slurp(at("rs2.csv")));
  CHECK(slurp(at("rs1.truth.json")) == slurp(at("rs2.truth.json")));

  SUBCASE("junk manifests exit 2") {
    const std::string junk = at("junk.json");
    std::ofstream(junk) << "{\"command\": \"warp\"}";
    CHECK(run("replay " + junk) == 2);
    std::ofstream(junk, std::ios::trunc) << "not json";
    CHECK(run("replay " + junk) == 2);
    CHECK(run("replay missing.json") == 2);
  }
}

TEST_CASE("divergence exits 3 and still writes the document") {
  const std::string fixture = kData + "/two_clusters.csv";
  const std::string out = at("div.json");
  CHECK(run("fit " + fixture +
            " --model mclust --constraint EII --k 2 --method gd --lr 1e6"
            " --max-iter 50 --out " + out) == 3);
  const Json doc = slurp_json(out);
  CHECK(doc.at("fit").at("diverged").get<bool>());
  CHECK(doc.at("manifest").at("command") == "fit");
}

TEST_CASE("adbench demos") {
  const std::string out = at("logistic.csv");
  CHECK(run("adbench --demo logistic --out " + out) == 0);
  const std::string text = slurp(out);
  CHECK(text.find("max_abs_err,0\n") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 18);  // header + 16 + max

  CHECK(run("adbench --demo gradcheck --cases 25 --seed 3") == 0);
  CHECK(run("adbench --demo nonsense") == 2);

  const std::string chain = at("chain.csv");
  CHECK(run("adbench --demo sigmoid-chain --reps 5 --out " + chain) == 0);
  std::istringstream lines(slurp(chain));
  std::string line;
  std::getline(lines, line);
  CHECK(line == "n,mean_us,nodes");
  int rows = 0;
  bool saw_ratio = false;
  while (std::getline(lines, line)) {
    if (line.rfind("ratio_", 0) == 0) {
      saw_ratio = true;
    } else {
      ++rows;
    }
  }
  CHECK(rows == 6);
  CHECK(saw_ratio);
}
