#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

#include "beatfcos/cli.hpp"
#include "beatfcos/io.hpp"
#include "beatfcos/toy.hpp"
#include "test_util.hpp"

namespace bf = beatfcos;
using bf::testing::TempDir;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "beatfcos");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = bf::cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_grid(const std::filesystem::path& p, double period, double offset, int n) {
  std::vector<double> t;
  std::vector<int> pos;
  for (int i = 0; i < n; ++i) {
    t.push_back(offset + period * i);
    pos.push_back(i % 4 + 1);
  }
  bf::write_beats(p, bf::BeatSequence::with_positions(t, pos), "");
}

// Small, fast training corpus for end-to-end runs.
const std::vector<std::string> kTiny{"--epochs", "2", "--passes", "1", "--train-tracks", "4",
                                     "--val-tracks", "2", "--test-tracks", "2"};

std::vector<std::string> with_tiny(std::vector<std::string> args) {
  args.insert(args.end(), kTiny.begin(), kTiny.end());
  return args;
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, bf::cli::kExitUsage);
  const auto r = run({"eval", "--bogus"});
  EXPECT_EQ(r.code, bf::cli::kExitUsage);
  EXPECT_NE(r.err.find("--est"), std::string::npos);  // usage follows the error
  EXPECT_EQ(run({"frobnicate"}).code, bf::cli::kExitUsage);
  EXPECT_EQ(run({"decode", "--nms", "fuzzy", "--heads", "x.json"}).code, bf::cli::kExitUsage);
  const auto h = run({"--help"});
  EXPECT_EQ(h.code, 0);
  EXPECT_NE(h.out.find("train-toy"), std::string::npos);
  EXPECT_EQ(run({"--version"}).code, 0);
}

TEST(Cli, DataErrors) {
  TempDir dir;
  EXPECT_EQ(run({"eval", "--est", (dir / "none.beats").string(), "--ref", (dir / "none.beats").string()}).code,
            bf::cli::kExitData);
  std::ofstream(dir / "bad.beats") << "1.0\n0.5\n";
  const auto r = run({"targets", (dir / "bad.beats").string()});
  EXPECT_EQ(r.code, bf::cli::kExitData);
  EXPECT_NE(r.err.find("line 2"), std::string::npos);
}

TEST(Cli, EvalTableAndCsv) {
  TempDir dir;
  std::filesystem::create_directories(dir / "ref");
  std::filesystem::create_directories(dir / "est");
  write_grid(dir / "ref" / "a.beats", 0.5, 0.0, 40);
  write_grid(dir / "est" / "a.beats", 0.5, 0.01, 40);
  write_grid(dir / "ref" / "b.beats", 0.6, 0.2, 30);
  write_grid(dir / "est" / "b.beats", 0.6, 0.2, 30);
  const auto r = run({"eval", "--est", (dir / "est").string(), "--ref", (dir / "ref").string(), "--csv",
                      (dir / "t.csv").string(), "--summary-csv", (dir / "s.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("2 tracks"), std::string::npos);
  EXPECT_NE(r.out.find("F1 / CMLt / AMLt"), std::string::npos);
  EXPECT_NE(r.out.find("1.000 / 1.000 / 1.000"), std::string::npos);
  const auto per_track = slurp(dir / "t.csv");
  EXPECT_NE(per_track.find("track,class,f1,cmlc,cmlt,amlc,amlt"), std::string::npos);
  EXPECT_NE(slurp(dir / "s.csv").find("class,f1,cmlc,cmlt,amlc,amlt"), std::string::npos);
}

TEST(Cli, FitLevelsAndTargets) {
  TempDir dir;
  write_grid(dir / "a.beats", 0.5, 0.0, 40);
  write_grid(dir / "b.beats", 0.8, 0.1, 40);
  write_grid(dir / "c.beats", 0.35, 0.3, 60);
  auto r = run({"fit-levels", (dir / "a.beats").string(), (dir / "b.beats").string(),
                (dir / "c.beats").string(), "-k", "3", "--classes", "beat", "-o", (dir / "lv.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lv = nlohmann::json::parse(slurp(dir / "lv.json"));
  EXPECT_EQ(lv["boundaries"].size(), 4u);
  EXPECT_EQ(lv["schema_version"], "1");
  EXPECT_EQ(lv["provenance"]["command"], "fit-levels");
  r = run({"targets", (dir / "a.beats").string(), "--duration", "22", "--levels", (dir / "lv.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = nlohmann::json::parse(r.out);
  EXPECT_EQ(t["levels"].size(), 3u);
  EXPECT_GT(t["num_positive"].get<int>(), 0);
}

TEST(Cli, TrainDecodeAnalyzeRoundTrip) {
  TempDir dir;
  const auto ckpt = (dir / "heads.json").string();
  auto r = run(with_tiny({"train-toy", "-o", ckpt, "--log", (dir / "log.csv").string()}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("held-out (2 tracks)"), std::string::npos);
  const auto log = slurp(dir / "log.csv");
  EXPECT_EQ(log.rfind("# beatfcos ", 0), 0u);
  EXPECT_NE(log.find("\nepoch,cls,reg,lft,total"), std::string::npos);

  bf::toy::SynthSpec s;
  s.seed = 9;
  bf::write_wav(dir / "clicks.wav", bf::toy::synth_track(s).audio);
  const auto out = (dir / "pred.beats").string();
  r = run({"decode", "--model", ckpt, "--wav", (dir / "clicks.wav").string(), "-o", out, "--heads-out",
           (dir / "ho.json").string(), "--nms", "hard"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto text = slurp(out);
  EXPECT_EQ(text.rfind("# beatfcos ", 0), 0u);  // provenance first
  EXPECT_NE(text.find("command=decode"), std::string::npos);
  EXPECT_NO_THROW(bf::parse_beats(out));

  // decoding the saved head outputs gives the same beats
  const auto out2 = (dir / "pred2.beats").string();
  r = run({"decode", "--heads", (dir / "ho.json").string(), "-o", out2, "--nms", "hard"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(bf::parse_beats(out).times(), bf::parse_beats(out2).times());

  EXPECT_EQ(run({"decode", "--model", ckpt}).code, bf::cli::kExitUsage);  // needs --wav
  EXPECT_EQ(run({"decode", "--model", ckpt, "--heads", "x", "--wav", "y"}).code, bf::cli::kExitUsage);

  r = run({"analyze-iou", "--heads", (dir / "ho.json").string(), "--csv", (dir / "h.csv").string(), "--svg",
           (dir / "h.svg").string()});
  // a tiny model may or may not separate; both outcomes are reported cleanly
  EXPECT_TRUE(r.code == 0 || r.code == bf::cli::kExitData) << r.err;
  EXPECT_EQ(slurp(dir / "h.csv").find("# beatfcos"), 0u);
  EXPECT_NE(slurp(dir / "h.svg").find("<svg"), std::string::npos);
}

TEST(Cli, AblateGrid) {
  TempDir dir;
  const auto r = run(with_tiny({"ablate", "-o", (dir / "ab.csv").string()}));
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(slurp(dir / "ab.csv"));
  std::string line;
  int rows = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("quality,nms,", 0) == 0) {
      header = true;
      continue;
    }
    ++rows;
  }
  EXPECT_TRUE(header);
  EXPECT_EQ(rows, 4);
}

TEST(Cli, ConfigPrecedence) {
  TempDir dir;
  std::ofstream(dir / "c.json") << R"({"decode": {"nms": "hard"}, "seed": 3})";
  write_grid(dir / "a.beats", 0.5, 0.0, 40);
  // a bad config file is part of the invocation: usage error
  std::ofstream(dir / "bad.json") << R"({"nope": 1})";
  const auto bad = run({"targets", (dir / "a.beats").string(), "--config", (dir / "bad.json").string()});
  EXPECT_EQ(bad.code, bf::cli::kExitUsage);
  EXPECT_NE(bad.err.find("nope"), std::string::npos);
  auto r = run({"targets", (dir / "a.beats").string(), "--config", (dir / "c.json").string(), "--seed", "8"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["provenance"]["seed"], 8);
  EXPECT_EQ(j["provenance"]["config"]["decode"]["nms"], "hard");
}
