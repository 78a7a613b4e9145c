#include <gtest/gtest.h>

#include <filesystem>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "neurostrike/cli.hpp"

using namespace neurostrike;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::initializer_list<std::string> args) {
  std::vector<std::string> storage{"neurostrike"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : storage) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(Cli, HelpExitsZero) {
  const auto r = invoke({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("grid"), std::string::npos);
}

TEST(Cli, MissingSubcommandIsUsageError) { EXPECT_EQ(invoke({}).code, kExitConfig); }

TEST(Cli, BadFlagValuesAreConfigErrors) {
  const auto out = (fs::temp_directory_path() / "neurostrike_cli_bad").string();
  EXPECT_EQ(invoke({"run", "--scale", "0.001", "--attack", "FLO", "--t-attack", "625.1", "--out", out}).code,
            kExitConfig);
  EXPECT_EQ(invoke({"run", "--scale", "0.001", "--attack", "JAM", "--out", out}).code, kExitConfig);
  EXPECT_EQ(invoke({"run", "--scale", "0.001", "--stimulus", "noise", "--out", out}).code, kExitConfig);
  EXPECT_EQ(invoke({"run", "--scale", "2", "--out", out}).code, kExitConfig);
}

TEST(Cli, MissingExperimentIsConfigError) {
  const auto r = invoke({"report", (fs::temp_directory_path() / "neurostrike_cli_missing").string()});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("manifest.json"), std::string::npos);
}

TEST(Cli, RunThenReportWithReplay) {
  const auto out = fs::temp_directory_path() / "neurostrike_cli_run";
  fs::remove_all(out);
  const auto r = invoke({"run", "--scale", "0.001", "--attack", "FLO", "--t-attack", "625", "--fraction",
                         "0.5", "--reps", "2", "--out", out.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto dir = out / "flash_FLO_625_f50";
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  const auto rep = invoke({"report", dir.string(), "--replay"});
  EXPECT_EQ(rep.code, kExitOk) << rep.err;
  EXPECT_NE(rep.out.find("3/3 spike files byte-identical"), std::string::npos) << rep.out;
  fs::remove_all(out);
}

TEST(Cli, TopologyBuild) {
  const auto out = fs::temp_directory_path() / "neurostrike_cli_topo";
  fs::remove_all(out);
  const auto r = invoke({"topology", "build", "--neurons", "120", "--out", out.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(out / "synapses.csv"));
  fs::remove_all(out);
}
