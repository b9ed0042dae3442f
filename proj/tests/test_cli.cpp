#include "mubsearch/cli.hpp"
#include "mubsearch/distance.hpp"
#include "mubsearch/family.hpp"
#include "mubsearch/serialize.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace mub;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("mubsearch_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST(Csv, QuotingRoundTrip) {
  EXPECT_EQ(io::csv_field("plain"), "plain");
  EXPECT_EQ(io::csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(io::csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  const std::string line = io::csv_field("x,y") + "," + io::csv_field("q\"") + ",3";
  const auto f = io::parse_csv_line(line);
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(f[0], "x,y");
  EXPECT_EQ(f[1], "q\"");
  EXPECT_EQ(f[2], "3");
}

TEST(Csv, FormatDoubleRoundTrips) {
  for (double v : {1.0 / 3.0, -2.5e-17, 0.9982916927001237, 123456789.0}) {
    EXPECT_EQ(std::stod(io::format_double(v)), v);
  }
}

TEST(Serialize, BasisSetJsonAndCsvRoundTrip) {
  Rng rng = make_rng(Seed{9});
  const BasisSet s = random_basis_set(4, 3, rng);
  const BasisSet j = io::basis_set_from_json(io::Json::parse(io::basis_set_to_json(s).dump()));
  std::stringstream ss;
  io::write_basis_set_csv(ss, s);
  const BasisSet c = io::read_basis_set_csv(ss);
  for (int b = 0; b < 3; ++b) {
    EXPECT_EQ(max_abs_diff(j[b].matrix(), s[b].matrix()), 0.0);
    EXPECT_EQ(max_abs_diff(c[b].matrix(), s[b].matrix()), 0.0);
  }
}

TEST(Serialize, CsvReaderRejectsBadInput) {
  std::istringstream bad_header("a,b,c\n");
  EXPECT_THROW(io::read_basis_set_csv(bad_header), std::runtime_error);
  std::istringstream missing("basis,row,col,re,im\n0,0,0,1,0\n0,1,1,1,0\n");
  EXPECT_THROW(io::read_basis_set_csv(missing), std::runtime_error);
}

TEST(Exit, NoCommandIsInvalid) {
  const Result r = run({});
  EXPECT_EQ(r.code, cli::kInvalidUsage);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Exit, MalformedFlagsAreInvalid) {
  EXPECT_EQ(run({"search", "--dim", "2"}).code, cli::kInvalidUsage);
  EXPECT_EQ(run({"search", "--dim", "two", "--bases", "3"}).code, cli::kInvalidUsage);
  EXPECT_EQ(run({"search", "--dim", "2", "--bases", "3", "--retraction", "newton"}).code, cli::kInvalidUsage);
  EXPECT_EQ(run({"search", "--dim", "2", "--bases", "1"}).code, cli::kInvalidUsage);
  EXPECT_EQ(run({"search", "--dim", "2", "--bases", "3", "--grad-tol", "-1"}).code, cli::kInvalidUsage);
  EXPECT_EQ(run({"contour"}).code, cli::kInvalidUsage);
  EXPECT_EQ(run({"contour", "--grid", "10by10"}).code, cli::kInvalidUsage);
  EXPECT_EQ(run({"contour", "--grid", "1x10"}).code, cli::kInvalidUsage);
  EXPECT_EQ(run({"bogus"}).code, cli::kInvalidUsage);
  const Result r = run({"search", "--dim", "2", "--bases", "3", "--format", "csv"});
  EXPECT_EQ(r.code, cli::kInvalidUsage);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Exit, HelpIsOk) { EXPECT_EQ(run({"--help"}).code, cli::kOk); }

TEST(Exit, UnwritableOutputIsIoFailure) {
  const Result r = run({"family-optimum", "--out", "/nonexistent_dir_for_mubsearch/x.json"});
  EXPECT_EQ(r.code, cli::kIoFailure);
}

TEST(Verify, DefaultRunPasses) {
  const Result r = run({"verify"});
  EXPECT_EQ(r.code, cli::kOk) << r.out;
  EXPECT_NE(r.out.find("asd = 0.9983"), std::string::npos);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(Verify, PerturbationFails) {
  const Result r = run({"verify", "--perturb", "1e-3"});
  EXPECT_EQ(r.code, cli::kVerifyFailed);
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
}

TEST(Verify, SinglePoint) {
  EXPECT_EQ(run({"verify", "--theta-x", "1.3", "--theta-t", "0.4"}).code, cli::kOk);
  EXPECT_EQ(run({"verify", "--theta-x", "1.3"}).code, cli::kInvalidUsage);
}

TEST(FamilyCommands, OptimumAndEval) {
  const Result o = run({"family-optimum"});
  ASSERT_EQ(o.code, cli::kOk);
  const io::Json j = io::Json::parse(o.out);
  EXPECT_EQ(j.at("schema").get<int>(), 1);
  EXPECT_NEAR(j.at("asd_max").get<double>(), 0.9983, 5e-5);
  EXPECT_EQ(j.at("optima").size(), 8u);

  const Result e = run({"family-eval", "--theta-x", "0", "--theta-t", "1"});
  ASSERT_EQ(e.code, cli::kOk);
  const io::Json k = io::Json::parse(e.out);
  EXPECT_NEAR(k.at("asd").get<double>(), 17.0 / 18.0, 1e-14);
  EXPECT_TRUE(k.at("fame_residual").is_null());
}

TEST_F(CliTest, ContourCsvRowsAndFameFile) {
  const std::string out = path("grid.csv");
  ASSERT_EQ(run({"contour", "--grid", "10x10", "--format", "csv", "--out", out}).code, cli::kOk);
  const auto rows = lines(slurp(out));
  ASSERT_EQ(rows.size(), 101u);
  EXPECT_EQ(rows[0], "theta_x,theta_t,asd");
  const auto fame = lines(slurp(path("grid_fame.csv")));
  ASSERT_GT(fame.size(), 1u);
  EXPECT_EQ(fame[0], "theta_x,theta_t,asd");
  for (std::size_t i = 1; i < fame.size(); ++i) {
    const auto f = io::parse_csv_line(fame[i]);
    ASSERT_EQ(f.size(), 3u);
    EXPECT_LT(family::fame_residual(family::FamilyParams(std::stod(f[0]), std::stod(f[1]))), 1e-12);
  }
  const std::string first = slurp(out);
  ASSERT_EQ(run({"contour", "--grid", "10x10", "--format", "csv", "--out", out}).code, cli::kOk);
  EXPECT_EQ(slurp(out), first);
}

TEST_F(CliTest, SearchJsonDeterministic) {
  const std::vector<std::string> base{"search", "--dim", "3", "--bases", "3", "--runs", "4", "--seed", "17"};
  auto a = base;
  a.insert(a.end(), {"--out", path("a.json"), "--jobs", "1"});
  auto b = base;
  b.insert(b.end(), {"--out", path("b.json"), "--jobs", "2"});
  ASSERT_EQ(run(a).code, cli::kOk);
  ASSERT_EQ(run(b).code, cli::kOk);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  const io::Json j = io::Json::parse(slurp(path("a.json")));
  EXPECT_EQ(j.at("schema").get<int>(), 1);
  EXPECT_EQ(j.at("records").size(), 4u);
  const BasisSet best = io::basis_set_from_json(j.at("best_set"));
  EXPECT_NEAR(average_distance_sq(best).asd, j.at("summary").at("best_asd").get<double>(), 1e-12);
}

TEST_F(CliTest, SearchCsvRoundTrip) {
  const std::string out = path("runs.csv");
  ASSERT_EQ(run({"search", "--dim", "4", "--bases", "3", "--runs", "3", "--format", "csv", "--out", out}).code,
            cli::kOk);
  const auto rows = lines(slurp(out));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], "run,seed,final_asd,iterations,final_grad_norm,status");
  double best = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) best = std::max(best, std::stod(io::parse_csv_line(rows[i])[2]));
  std::ifstream f(path("runs_bases.csv"));
  const BasisSet set = io::read_basis_set_csv(f);
  EXPECT_EQ(set.size(), 3);
  EXPECT_EQ(set.dim(), 4);
  EXPECT_NEAR(average_distance_sq(set).asd, best, 1e-12);
  const auto hist = lines(slurp(path("runs_histogram.csv")));
  EXPECT_EQ(hist[0], "center,frequency,fraction");
}

TEST(Search, QubitTetrahedron) {
  const Result r = run({"search", "--dim", "2", "--bases", "4", "--runs", "50"});
  ASSERT_EQ(r.code, cli::kOk);
  const io::Json j = io::Json::parse(r.out);
  EXPECT_NEAR(j.at("summary").at("best_asd").get<double>(), 8.0 / 9.0, 1e-9);
  EXPECT_NEAR(j.at("summary").at("success_rate").get<double>(), 1.0, 1e-15);
}

TEST(Search, QutritMub) {
  const Result r = run({"search", "--dim", "3", "--bases", "4", "--runs", "20"});
  ASSERT_EQ(r.code, cli::kOk);
  EXPECT_NEAR(io::Json::parse(r.out).at("summary").at("best_asd").get<double>(), 1.0, 1e-9);
}

TEST(Histogram, CsvToStdout) {
  const Result r = run({"histogram", "--dim", "2", "--bases", "3", "--runs", "5", "--format", "csv"});
  ASSERT_EQ(r.code, cli::kOk);
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].rfind("1,5,1", 0), 0u);
}

TEST_F(CliTest, Table1FiftyRunsPerCell) {
  const std::string out = path("table1.json");
  const Result r = run({"table1", "--runs", "50", "--out", out});
  ASSERT_EQ(r.code, cli::kOk);
  const io::Json j = io::Json::parse(slurp(out));
  ASSERT_EQ(j.at("cells").size(), 9u);
  auto best = [&](int d, int k) {
    for (const auto& c : j.at("cells")) {
      if (c.at("d").get<int>() == d && c.at("k").get<int>() == k) return c.at("best_asd").get<double>();
    }
    ADD_FAILURE() << "missing cell " << d << "," << k;
    return 0.0;
  };
  EXPECT_NEAR(best(2, 4), 8.0 / 9.0, 1e-9);
  EXPECT_NEAR(best(4, 5), 1.0, 1e-9);
  EXPECT_NEAR(best(6, 4), 0.9983, 1e-4);
  EXPECT_NEAR(best(6, 7), 0.9849, 5e-4);
  EXPECT_EQ(slurp(out).find("cpu"), std::string::npos);
}
