#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace {

struct CmdResult {
  int code = -1;
  std::string out;  // stdout and stderr interleaved
};

CmdResult run_cli(const std::string& args) {
  const char* bin = std::getenv("RBOX_CLI");
  EXPECT_NE(bin, nullptr) << "RBOX_CLI must point at the built binary";
  const std::string cmd = std::string(bin ? bin : "rbox") + " " + args +
                          " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  CmdResult res;
  if (!pipe) return res;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) res.out += buf;
  const int status = pclose(pipe);
  if (WIFEXITED(status)) res.code = WEXITSTATUS(status);
  return res;
}

std::string temp_path(const std::string& name) {
  return testing::TempDir() + name;
}

std::string box_json(double x, double y, double w, double h, double theta) {
  std::ostringstream out;
  out.precision(17);
  out << "'{\"x\":" << x << ",\"y\":" << y << ",\"w\":" << w << ",\"h\":" << h
      << ",\"theta\":" << theta << "}'";
  return out.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

TEST(Cli, HelpListsSubcommandsAndExitsClean) {
  const CmdResult res = run_cli("--help");
  EXPECT_EQ(res.code, 0);
  EXPECT_NE(res.out.find("distance"), std::string::npos);
  EXPECT_NE(res.out.find("landscape"), std::string::npos);
  EXPECT_NE(res.out.find("selftest"), std::string::npos);
}

TEST(Cli, MissingSubcommandIsUsageError) {
  EXPECT_EQ(run_cli("").code, 2);
  EXPECT_EQ(run_cli("teleport").code, 2);
}

TEST(Cli, IouPinnedRotatedSquare) {
  const CmdResult res = run_cli("iou " + box_json(0, 0, 1, 1, 0) + " " +
                                box_json(0, 0, 1, 1, 0.78539816339744831));
  EXPECT_EQ(res.code, 0);
  EXPECT_EQ(res.out.substr(0, 14), "0.707106781187");
}

TEST(Cli, DistanceInlinePairAndIdenticalZero) {
  const CmdResult res = run_cli("distance " + box_json(0, 0, 2, 2, 0) + " " +
                                box_json(0, 0, 4, 4, 0));
  EXPECT_EQ(res.code, 0);
  const auto rows = parse_csv(res.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0][0], "id_a");
  ASSERT_EQ(rows[1].size(), 4u);
  EXPECT_EQ(rows[1][0], "a");
  EXPECT_EQ(rows[1][2], "kld_forward");
  EXPECT_EQ(rows[1][3].substr(0, 8), "0.636294");

  const CmdResult same = run_cli("distance --kind jeffreys " +
                                 box_json(1, 2, 3, 5, 0.4) + " " +
                                 box_json(1, 2, 3, 5, 0.4));
  const auto srows = parse_csv(same.out);
  ASSERT_EQ(srows.size(), 2u);
  EXPECT_EQ(srows[1][3], "0");
}

TEST(Cli, DistancePairsFileWithIds) {
  const std::string path = temp_path("pairs_ok.jsonl");
  std::ofstream(path) << R"({"a":{"id":"p1","x":0,"y":0,"w":2,"h":2,"theta":0},)"
                      << R"("b":{"id":"t1","x":0,"y":0,"w":4,"h":4,"theta":0}})"
                      << "\n\n"
                      << R"({"a":{"x":0,"y":0,"w":1,"h":1,"theta":0},)"
                      << R"("b":{"x":0,"y":0,"w":1,"h":1,"theta":0}})"
                      << "\n";
  const CmdResult res = run_cli("distance --pairs " + path);
  EXPECT_EQ(res.code, 0);
  const auto rows = parse_csv(res.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][0], "p1");
  EXPECT_EQ(rows[1][1], "t1");
  EXPECT_EQ(rows[2][3], "0");
}

TEST(Cli, MalformedPairsLineReportsLineNumber) {
  const std::string path = temp_path("pairs_bad.jsonl");
  std::ofstream(path) << R"({"a":{"x":0,"y":0,"w":1,"h":1,"theta":0},)"
                      << R"("b":{"x":0,"y":0,"w":1,"h":1,"theta":0}})"
                      << "\n{not json}\n";
  const CmdResult res = run_cli("distance --pairs " + path);
  EXPECT_EQ(res.code, 2);
  EXPECT_NE(res.out.find("line 2"), std::string::npos) << res.out;
}

TEST(Cli, DegenerateBoxIsDomainError) {
  const CmdResult res = run_cli("iou " + box_json(0, 0, 0, 1, 0) + " " +
                                box_json(0, 0, 1, 1, 0));
  EXPECT_EQ(res.code, 3);
  EXPECT_NE(res.out.find("error:"), std::string::npos);
}

TEST(Cli, UnknownBoxFieldIsUsageError) {
  const CmdResult res = run_cli(
      R"(iou '{"x":0,"y":0,"w":1,"h":1,"theta":0,"spin":3}' )" +
      box_json(0, 0, 1, 1, 0));
  EXPECT_EQ(res.code, 2);
}

TEST(Cli, DegreeAngleUnitOnRecords) {
  // 90 deg swaps the sides, so the two records describe the same box
  const CmdResult res = run_cli(
      R"(iou '{"x":0,"y":0,"w":2,"h":6,"theta":90,"angle_unit":"deg"}' )" +
      box_json(0, 0, 6, 2, 0));
  EXPECT_EQ(res.code, 0);
  EXPECT_EQ(res.out.substr(0, 2), "1\n");
}

TEST(Cli, LandscapeJointScaleFixture) {
  const std::string path = temp_path("figure_ls.csv");
  const CmdResult res = run_cli(
      "landscape --figure-ls --range 0.5:8 --steps 16 "
      "--kinds kld_forward,gwd --out " + path);
  EXPECT_EQ(res.code, 0) << res.out;
  const auto rows = parse_csv(read_file(path));
  ASSERT_EQ(rows.size(), 17u);
  ASSERT_EQ(rows[0].size(), 3u);
  EXPECT_EQ(rows[0][0], "scale");
  EXPECT_EQ(rows[0][1], "kld_forward");
  EXPECT_EQ(rows[0][2], "gwd");
  const double kld_base = std::stod(rows[1][1]);
  double prev_gwd = -1;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_NEAR(std::stod(rows[i][1]), kld_base, 1e-9 * kld_base) << i;
    const double g = std::stod(rows[i][2]);
    EXPECT_GT(g, prev_gwd) << i;
    prev_gwd = g;
  }
}

TEST(Cli, LandscapeThetaSweepIsFlatForSquares) {
  const std::string path = temp_path("square_theta.csv");
  const CmdResult res = run_cli(
      "landscape --target " + box_json(0, 0, 3, 3, 0) +
      " --sweep theta --range -1.5:1.5 --steps 21 --kinds kld_forward,js "
      "--out " + path);
  EXPECT_EQ(res.code, 0) << res.out;
  const auto rows = parse_csv(read_file(path));
  ASSERT_EQ(rows.size(), 22u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(std::stod(rows[i][1]), 1e-9);
    EXPECT_LT(std::stod(rows[i][2]), 1e-9);
  }
}

TEST(Cli, LandscapeAspectFamilySteepensWithAspect) {
  // at a fixed small tilt the distance grows with the target aspect ratio
  const std::string path = temp_path("figure_pr.csv");
  const CmdResult res = run_cli(
      "landscape --figure-pr --sweep theta --range -0.5:0.5 --steps 11 "
      "--kinds kld_forward --out " + path);
  EXPECT_EQ(res.code, 0) << res.out;
  const auto rows = parse_csv(read_file(path));
  ASSERT_EQ(rows.size(), 12u);
  ASSERT_EQ(rows[0].size(), 5u);
  EXPECT_EQ(rows[0][1], "kld_forward_ar1");
  EXPECT_EQ(rows[0][4], "kld_forward_ar4");
  // first sweep row is theta = -0.5, far from every target angle
  double prev = -1;
  for (int c = 1; c <= 4; ++c) {
    const double v = std::stod(rows[1][c]);
    EXPECT_GT(v, prev) << "aspect column " << c;
    prev = v;
  }
}

TEST(Cli, LandscapeScaleSweepRejectsNonPositiveRange) {
  const CmdResult res = run_cli("landscape --figure-ls --range -1:4");
  EXPECT_EQ(res.code, 2);
  EXPECT_NE(res.out.find("positive"), std::string::npos);
}

TEST(Cli, LandscapeOutputIsByteStable) {
  const std::string pa = temp_path("land_a.csv");
  const std::string pb = temp_path("land_b.csv");
  const std::string args =
      "landscape --target " + box_json(0, 0, 1, 4, 0.2) + " --pred " +
      box_json(0.3, -0.1, 1.2, 3.5, 0.1) +
      " --sweep x --range -1:1 --steps 33 --out ";
  EXPECT_EQ(run_cli(args + pa).code, 0);
  EXPECT_EQ(run_cli(args + pb).code, 0);
  const std::string a = read_file(pa);
  EXPECT_EQ(a, read_file(pb));
  EXPECT_FALSE(a.empty());
}

TEST(Cli, LandscapeSvgChart) {
  const std::string path = temp_path("land.svg");
  const CmdResult res = run_cli(
      "landscape --target " + box_json(0, 0, 1, 4, 0) +
      " --sweep theta --range -1:1 --steps 9 --kinds kld_forward,gwd --svg " +
      path + " --out " + temp_path("land_svg.csv"));
  EXPECT_EQ(res.code, 0) << res.out;
  const std::string svg = read_file(path);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("kld_forward"), std::string::npos);
  EXPECT_NE(svg.find("polyline"), std::string::npos);
}

TEST(Cli, GradcheckPassesAtDefaultToleranceFailsAtAbsurdOne) {
  const CmdResult ok = run_cli("gradcheck --kind gwd --trials 50");
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_NE(ok.out.find("kind=gwd"), std::string::npos);
  EXPECT_NE(ok.out.find("failures=0"), std::string::npos);

  const CmdResult bad =
      run_cli("gradcheck --kind kld_forward --trials 20 --tol 1e-16");
  EXPECT_EQ(bad.code, 1);
}

TEST(Cli, GradcheckRejectsUnknownKind) {
  EXPECT_EQ(run_cli("gradcheck --kind chamfer --trials 5").code, 2);
}

TEST(Cli, FitEasyPairConvergesAndWritesTrace) {
  const std::string path = temp_path("fit_trace.csv");
  const CmdResult res = run_cli("fit --init " + box_json(0.3, 0, 1, 1, 0) +
                                " --target " + box_json(0, 0, 1, 1, 0) +
                                " --out " + path);
  EXPECT_EQ(res.code, 0) << res.out;
  EXPECT_EQ(res.out.substr(0, 21), "fit: status=converged");
  const auto rows = parse_csv(read_file(path));
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(rows[0][0], "step");
  EXPECT_EQ(rows[1][0], "0");
}

TEST(Cli, FitReadsLossConfigFile) {
  const std::string cfg = temp_path("loss.cfg");
  std::ofstream(cfg) << "# fitting objective\nkind=gwd\ntransform=sqrt\n"
                     << "tau=2\n";
  const CmdResult res = run_cli("fit --init " + box_json(0.4, 0, 2, 2, 0) +
                                " --target " + box_json(0, 0, 2, 2, 0) +
                                " --config " + cfg);
  EXPECT_EQ(res.code, 0) << res.out;
  EXPECT_EQ(res.out.substr(0, 12), "fit: status=");
}

TEST(Cli, FitRejectsBadConfig) {
  const std::string cfg = temp_path("loss_bad.cfg");
  std::ofstream(cfg) << "tau=0.2\n";
  const CmdResult res = run_cli("fit --init " + box_json(0.4, 0, 2, 2, 0) +
                                " --target " + box_json(0, 0, 2, 2, 0) +
                                " --config " + cfg);
  EXPECT_EQ(res.code, 2);
}

TEST(Cli, SelftestBreakHookFailsOnTheExpectedProperty) {
  const CmdResult res = run_cli("selftest --break-sigma");
  EXPECT_EQ(res.code, 1);
  EXPECT_NE(res.out.find("FAIL expansion-equivalence"), std::string::npos)
      << res.out;
  EXPECT_NE(res.out.find("selftest: FAILED at expansion-equivalence"),
            std::string::npos);
}

}  // namespace
