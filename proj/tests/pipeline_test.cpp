#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <gtest/gtest.h>

#include "exwkb/pipeline.hpp"

namespace {

namespace fs = std::filesystem;

std::string config(const std::string& name) { return std::string(EXWKB_CONFIG_DIR) + "/" + name; }

exwkb::run_config cfg_for(const std::string& name, double w) {
  exwkb::run_config c;
  c.input = config(name);
  c.truncation = w;
  return c;
}

fs::path scratch(const std::string& tag) {
  auto p = fs::temp_directory_path() / ("exwkb_pipeline_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// viewBox as parsed from well-formed XML
std::vector<double> view_box(const std::string& text) {
  std::istringstream in(text);
  boost::property_tree::ptree t;
  boost::property_tree::read_xml(in, t);
  std::istringstream vb(t.get<std::string>("svg.<xmlattr>.viewBox"));
  std::vector<double> v(4);
  for (auto& x : v) vb >> x;
  return v;
}

void expect_covers(const std::vector<double>& vb, double R) {
  ASSERT_EQ(vb.size(), 4u);
  EXPECT_LE(vb[0], -R);
  EXPECT_LE(vb[1], -R);
  EXPECT_GE(vb[0] + vb[2], R);
  EXPECT_GE(vb[1] + vb[3], R);
}

TEST(Pipeline, AiryThreeRaysNoCollisions) {
  const auto r = exwkb::run_pipeline(cfg_for("airy.json", 5.0));
  EXPECT_FALSE(r.degeneracy);
  EXPECT_EQ(r.diagram["walls"].size(), 3u);
  EXPECT_TRUE(r.diagram["collisions"].empty());
  EXPECT_EQ(r.diagram["generations"], 0);
  expect_covers(view_box(r.svg), r.diagram["window"].get<double>());
}

TEST(Pipeline, BnrAddsBornWalls) {
  const auto r = exwkb::run_pipeline(cfg_for("bnr.json", 17.2));
  EXPECT_EQ(r.diagram["turning_points"].size(), 2u);
  EXPECT_EQ(r.diagram["collisions"].size(), 2u);
  int initial = 0, born = 0;
  for (const auto& w : r.diagram["walls"]) (w["generation"] == 0 ? initial : born)++;
  EXPECT_EQ(initial, 6);
  EXPECT_GT(born, 0);
  EXPECT_EQ(r.quantization["loops"].size(), 2u);
  expect_covers(view_box(r.svg), r.diagram["window"].get<double>());
}

TEST(Pipeline, ArtifactsAreByteIdentical) {
  const auto a = scratch("a"), b = scratch("b");
  exwkb::write_artifacts(exwkb::run_pipeline(cfg_for("bnr.json", 17.2)), a.string());
  exwkb::write_artifacts(exwkb::run_pipeline(cfg_for("bnr.json", 17.2)), b.string());
  for (const char* f : {"diagram.json", "quantization.json", "monodromy.json", "graph.svg"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Pipeline, SweepFlagsSegmentPhase) {
  auto c = cfg_for("quadratic.json", 5.0);
  c.sweep = {0.0, M_PI / 2.0};
  const auto r = exwkb::run_pipeline(c);
  ASSERT_EQ(r.sweep.size(), 2u);
  EXPECT_FALSE(r.sweep[0]["degenerate"].get<bool>());
  EXPECT_TRUE(r.sweep[1]["degenerate"].get<bool>());
  EXPECT_FALSE(r.sweep[1]["segments"].empty());
  ASSERT_EQ(r.sweep_svgs.size(), 2u);
  for (const auto& [name, text] : r.sweep_svgs) expect_covers(view_box(text), r.diagram["window"].get<double>());
}

TEST(Pipeline, EmptySweepHasNoFrames) {
  const auto r = exwkb::run_pipeline(cfg_for("quadratic.json", 5.0));
  EXPECT_TRUE(r.sweep.empty());
  EXPECT_TRUE(r.sweep_svgs.empty());
}

TEST(Pipeline, SegmentPhaseIsDegenerate) {
  auto c = cfg_for("quadratic.json", 5.0);
  c.hbar_arg = M_PI / 2.0;
  const auto r = exwkb::run_pipeline(c);
  EXPECT_TRUE(r.degeneracy.has_value());
}

TEST(Pipeline, MicrolocalSignsAreTwisted) {
  auto c = cfg_for("quadratic.json", 5.0);
  c.hbar_order = 2;
  const auto r = exwkb::run_pipeline(c);
  ASSERT_EQ(r.monodromy["cycles"].size(), 3u);
  for (const auto& m : r.monodromy["cycles"]) EXPECT_EQ(m["twisted_sign"], 1);
  EXPECT_EQ(r.monodromy["cycles"][0]["raw_sign"], -1);
}

TEST(Pipeline, BadInputsAreInputErrors) {
  const auto dir = scratch("bad");
  fs::create_directories(dir);
  std::ofstream(dir / "broken.json") << "{\"rank\": 2, \"coeffs\": [";
  exwkb::run_config c;
  c.input = (dir / "broken.json").string();
  try {
    exwkb::run_pipeline(c);
    FAIL() << "no error";
  } catch (const exwkb::stage_error& e) {
    EXPECT_EQ(e.cls(), exwkb::failure_class::input);
    EXPECT_EQ(e.stage(), "input");
  }
  c = cfg_for("airy.json", -1.0);
  EXPECT_THROW(exwkb::run_pipeline(c), exwkb::stage_error);
  fs::remove_all(dir);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(EXWKB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  fs::create_directories(dir);
  std::ofstream(dir / "broken.json") << "not json";
  const std::string out = " --out " + (dir / "out").string();
  EXPECT_EQ(run_cli("--input " + config("airy.json") + " --truncation 3" + out), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "graph.svg"));
  EXPECT_EQ(run_cli("--input " + (dir / "broken.json").string() + out), 2);
  EXPECT_EQ(run_cli("--input " + config("airy.json") + " --truncation -2" + out), 2);
  EXPECT_EQ(run_cli("--input " + config("airy.json") + " --normalization wild" + out), 2);
  EXPECT_EQ(run_cli("--input " + config("quadratic.json") + " --hbar-arg 1.5707963267948966" + out), 1);
  fs::remove_all(dir);
}

}  // namespace
