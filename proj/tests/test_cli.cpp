#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

#include "json.hpp"

namespace {

const std::string kCli = DTPERC_CLI;
const std::string kSamples = DTPERC_SAMPLES;

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  Result r;
  std::string cmd = kCli + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

nlohmann::json parse(const Result& r) { return nlohmann::json::parse(r.out); }

TEST(Cli, ListsChecks) {
  auto r = run("checks");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("hk_tree"), std::string::npos);
  EXPECT_NE(r.out.find("lambda_monotone"), std::string::npos);
}

TEST(Cli, ExactCheckReportsJson) {
  auto r = run("check planar_dv2 --graph " + kSamples + "/triangle.graph");
  ASSERT_EQ(r.code, 0);
  auto j = parse(r);
  ASSERT_TRUE(j.is_array());
  EXPECT_EQ(j[0]["check_id"], "planar_dv2");
  EXPECT_EQ(j[0]["graph"], "triangle");
  EXPECT_DOUBLE_EQ(j[0]["lhs"].get<double>(), 0.25);
  EXPECT_DOUBLE_EQ(j[0]["rhs"].get<double>(), 0.48828125);
  EXPECT_EQ(j[0]["verdict"], "holds");
  EXPECT_TRUE(j[0]["runtime_ms"].is_number());
}

TEST(Cli, CsvCarriesTheSameNumbers) {
  std::string base = "check q2 --graph " + kSamples + "/triangle.graph --no-timing";
  auto j = parse(run(base));
  auto c = run(base + " --out csv");
  ASSERT_EQ(c.code, 0);
  auto line2 = c.out.substr(c.out.find('\n') + 1);
  EXPECT_EQ(line2.substr(0, line2.find('\n')), "q2,triangle,exact,0.0625,0.375,0.3125,holds,1e-12,,,,,theorem");
  EXPECT_DOUBLE_EQ(j[0]["slack"].get<double>(), 0.3125);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("check no_such_check --graph " + kSamples + "/triangle.graph").code, 2);
  EXPECT_EQ(run("check dv8 --graph " + kSamples + "/bad.graph").code, 2);
  EXPECT_EQ(run("check dv8 --graph family:grid:3,3,p=0.5 --method mc").code, 2);
  EXPECT_EQ(run("check planar_dv2 --graph family:complete:4,p=0.5").code, 2);
  EXPECT_EQ(run("check hk_tree --graph family:grid:5,5,p=0.5").code, 3);
  EXPECT_EQ(run("estimate --graph family:cycle:3,p=0.5 --event 'a,'").code, 2);
  EXPECT_EQ(run("zipper --preset strongbk_literal --p 0.5 --graph family:path:2,p=0.5 --predicate bowtie --events a,b a")
                .code,
            1);
  EXPECT_EQ(run("zipper --preset strongbk --p 0.5 --graph family:path:2,p=0.5 --predicate bowtie --events a,b a").code,
            0);
}

TEST(Cli, SeededMonteCarloIsByteIdenticalAcrossThreads) {
  std::string base = "check dv8 --graph family:grid:4,4,p=0.5 --method mc --samples 40000 --seed 17 --no-timing";
  auto one = run(base + " --threads 1");
  auto again = run(base + " --threads 1");
  auto four = run(base + " --threads 4");
  ASSERT_EQ(one.code, 0);
  EXPECT_EQ(one.out, again.out);
  EXPECT_EQ(one.out, four.out);
  auto other = run("check dv8 --graph family:grid:4,4,p=0.5 --method mc --samples 40000 --seed 18 --no-timing");
  EXPECT_NE(one.out, other.out);
  auto j = parse(one);
  EXPECT_EQ(j[0]["seed"], 17);
  EXPECT_EQ(j[0]["samples"], 40000);
}

TEST(Cli, EstimateExactAndMonteCarlo) {
  auto ex = run("estimate --graph family:parallel:2,q=0.5 --event 'npaths(a,b,2)' --lambda 2");
  ASSERT_EQ(ex.code, 0);
  auto j = parse(ex);
  EXPECT_DOUBLE_EQ(j["probability"].get<double>(), 0.25);
  EXPECT_TRUE(j["lambda"].is_number());
  auto mc = run("estimate --graph family:cycle:3,p=0.5 --event a,b --method mc --samples 100000 --seed 3");
  ASSERT_EQ(mc.code, 0);
  auto m = parse(mc);
  EXPECT_NEAR(m["probability"].get<double>(), 0.625, 5 * m["se"].get<double>());
  EXPECT_EQ(m["ci95"].size(), 2u);
}

TEST(Cli, CorpusWritesOneFilePerCheckAndGraph) {
  auto dir = std::filesystem::temp_directory_path() / ("dtperc_cli_test_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  auto r = run("corpus run --filter 'q2*' --no-timing --out " + dir.string());
  ASSERT_EQ(r.code, 0);
  ASSERT_TRUE(std::filesystem::exists(dir / "summary.json"));
  int reports = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    auto name = entry.path().filename().string();
    EXPECT_EQ(name.find(".tmp"), std::string::npos);
    if (name == "summary.json") continue;
    EXPECT_TRUE(name.rfind("q2__", 0) == 0 || name.rfind("q2_swapped__", 0) == 0) << name;
    ++reports;
  }
  EXPECT_GT(reports, 0);
  auto first = run("corpus run --filter 'q2*' --no-timing --threads 1");
  auto second = run("corpus run --filter 'q2*' --no-timing --threads 3");
  EXPECT_EQ(first.out, second.out);
  EXPECT_EQ(run("corpus run --filter 'zzz*'").code, 2);
  std::filesystem::remove_all(dir);
}

}  // namespace
