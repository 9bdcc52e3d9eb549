#include <gtest/gtest.h>

#include <fstream>

#include <json.hpp>

#include "process.hpp"
#include "ragcap/pipeline.hpp"
#include "stub_server.hpp"
#include "test_support.hpp"

namespace ragcap {
namespace {

using testing::run_process;
using testing::split_lines;

const std::string kCli = RAGCAP_CLI_PATH;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto data = testing::data_dir();
    for (const char* which : {"a", "b"}) {
      const auto base = (dir_ / (std::string("store_") + which)).string();
      const auto r = run({"build-datastore", "--captions",
                          (data / (std::string("captions_") + which + ".tsv")).string(),
                          "--vectors", (data / (std::string("vectors_") + which + ".txt")).string(),
                          "--out", base});
      ASSERT_EQ(r.exit_code, 0) << r.err;
    }
  }

  testing::ProcessResult run(std::vector<std::string> args) {
    args.insert(args.begin(), kCli);
    return run_process(args);
  }

  std::string store(const char* which) const { return (dir_ / (std::string("store_") + which)).string(); }
  std::string audio() const { return (testing::data_dir() / "audio_a.tsv").string(); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  testing::TempDir dir_{"cli"};
};

TEST_F(Cli, BuildWritesLoadableStore) {
  const auto loaded = load_store(StorePaths::from_base(store("a")));
  EXPECT_EQ(loaded, testing::fixture_store("a"));
  const auto r = run({"build-support", "--captions", (testing::data_dir() / "captions_a.tsv").string(),
                      "--vectors", (testing::data_dir() / "vectors_a.txt").string(), "--out",
                      path("s")});
  ASSERT_EQ(r.exit_code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["count"], 50);
  EXPECT_EQ(j["dim"], 32);
}

TEST_F(Cli, CaptionMatchesLibraryCall) {
  const auto r = run({"caption", "--support", store("a"), "--datastore", store("a"), "--queries",
                      audio()});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto lines = split_lines(r.out);
  ASSERT_EQ(lines.size(), 50u);

  const auto sa = load_store(StorePaths::from_base(store("a")));
  const auto profile = make_profile(sa, sa, "store_a");
  const auto queries = read_queries(audio());
  MockBackend mock;
  const auto outcomes =
      caption_batch(queries, profile, LinearMapper::identity(sa.dim()), CaptionSettings{}, mock);
  for (std::size_t i = 0; i < outcomes.size(); ++i) EXPECT_EQ(lines[i], to_json_line(outcomes[i]));
}

TEST_F(Cli, CaptionIsReproducibleAcrossRunsAndParallelism) {
  const std::vector<std::string> base{"caption", "--support", store("a"), "--datastore",
                                      store("a"), "--queries", audio()};
  const auto first = run(base);
  const auto second = run(base);
  auto parallel_args = base;
  parallel_args.insert(parallel_args.end(), {"--parallelism", "8"});
  const auto parallel = run(parallel_args);
  EXPECT_EQ(first.out, second.out);
  EXPECT_EQ(first.out, parallel.out);
}

TEST_F(Cli, RetrieveRejectsInvertedWindow) {
  const auto r = run({"retrieve", "--datastore", store("a"), "--queries", audio(), "--mode",
                      "training", "--seed", "1", "--s-min", "0.9", "--s-max", "0.8"});
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_TRUE(r.out.empty());
  EXPECT_NE(r.err.find("similarity range"), std::string::npos) << r.err;
}

TEST_F(Cli, RetrieveTopKOutput) {
  const auto r = run({"retrieve", "--datastore", store("a"), "--queries", audio(), "--k", "2"});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto lines = split_lines(r.out);
  ASSERT_EQ(lines.size(), 50u);
  const auto j = nlohmann::json::parse(lines[0]);
  EXPECT_EQ(j["id"], "a00");
  EXPECT_EQ(j["hits"].size(), 2u);
  EXPECT_EQ(j["hits"][0]["id"], "c00");
  const auto training = run({"retrieve", "--datastore", store("a"), "--queries", audio(), "--mode",
                             "training"});
  EXPECT_EQ(training.exit_code, 1);
  EXPECT_NE(training.err.find("--seed"), std::string::npos);
}

TEST_F(Cli, MakeTrainDataIsDeterministicAndNeedsSeed) {
  const std::vector<std::string> args{"make-train-data", "--corpus", store("a"), "--datastore",
                                      store("a"), "--seed", "7"};
  auto a = args;
  a.insert(a.end(), {"--out", path("t1.jsonl")});
  auto b = args;
  b.insert(b.end(), {"--out", path("t2.jsonl")});
  ASSERT_EQ(run(a).exit_code, 0);
  ASSERT_EQ(run(b).exit_code, 0);
  std::ifstream f1(path("t1.jsonl"), std::ios::binary), f2(path("t2.jsonl"), std::ios::binary);
  const std::string s1((std::istreambuf_iterator<char>(f1)), {});
  const std::string s2((std::istreambuf_iterator<char>(f2)), {});
  EXPECT_EQ(split_lines(s1).size(), 50u);
  EXPECT_EQ(s1, s2);

  const auto missing = run({"make-train-data", "--corpus", store("a"), "--datastore", store("a")});
  EXPECT_EQ(missing.exit_code, 1);
  EXPECT_NE(missing.err.find("--seed"), std::string::npos);
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  {
    std::ofstream cfg(path("run.toml"));
    cfg << "[caption]\n"
        << "support = \"" << store("a") << "\"\n"
        << "datastore = \"" << store("a") << "\"\n"
        << "queries = \"" << audio() << "\"\n"
        << "k = 5\n";
  }
  const auto from_file = run({"--config", path("run.toml"), "caption"});
  ASSERT_EQ(from_file.exit_code, 0) << from_file.err;
  EXPECT_EQ(nlohmann::json::parse(split_lines(from_file.out)[0])["retrieved"].size(), 5u);
  const auto overridden = run({"--config", path("run.toml"), "caption", "--k", "2"});
  ASSERT_EQ(overridden.exit_code, 0) << overridden.err;
  EXPECT_EQ(nlohmann::json::parse(split_lines(overridden.out)[0])["retrieved"].size(), 2u);
}

TEST_F(Cli, BackendFailureExitsWithTwo) {
  const auto r = run({"caption", "--support", store("a"), "--queries", audio(), "--backend", "http",
                      "--endpoint", "http://127.0.0.1:1/v1/generate", "--max-retries", "0"});
  EXPECT_EQ(r.exit_code, 2);
  const auto lines = split_lines(r.out);
  ASSERT_EQ(lines.size(), 50u);
  EXPECT_EQ(nlohmann::json::parse(lines[0])["error"]["code"], "BackendUnavailable");
}

TEST_F(Cli, HttpRecordThenReplayOffline) {
  std::string live;
  {
    testing::StubServer server([](int, const nlohmann::json& body) {
      return testing::StubServer::text("heard " + body["request_id"].get<std::string>());
    });
    const auto r = run({"caption", "--support", store("a"), "--datastore", store("a"), "--queries",
                        audio(), "--backend", "http", "--endpoint", server.endpoint(), "--record",
                        path("t.jsonl"), "--parallelism", "4"});
    ASSERT_EQ(r.exit_code, 0) << r.err;
    live = r.out;
    EXPECT_EQ(server.requests(), 50);
  }
  const auto replay = run({"caption", "--support", store("a"), "--datastore", store("a"),
                           "--queries", audio(), "--backend", "replay", "--transcript",
                           path("t.jsonl")});
  ASSERT_EQ(replay.exit_code, 0) << replay.err;
  EXPECT_EQ(replay.out, live);
  EXPECT_NE(live.find("\"caption\":\"heard a07\""), std::string::npos);
}

TEST_F(Cli, MergeFilterAdapt) {
  const auto merged = run({"merge", "--a", store("a"), "--b", store("b"), "--out", path("m"),
                           "--dedup"});
  ASSERT_EQ(merged.exit_code, 0) << merged.err;
  auto j = nlohmann::json::parse(merged.out);
  EXPECT_EQ(j["count"], 73);
  EXPECT_EQ(j["dropped_duplicates"], 7);

  const auto filtered = run({"filter", "--store", path("m"), "--exclude-source", "clotho",
                             "--exclude-source", "audiocaps", "--out", path("f")});
  ASSERT_EQ(filtered.exit_code, 0) << filtered.err;
  j = nlohmann::json::parse(filtered.out);
  EXPECT_EQ(j["removed"], 40);
  EXPECT_EQ(j["count"], 33);

  const auto adapted = run({"adapt", "--support", store("a"), "--datastore", store("a"),
                            "--new-support", store("b"), "--new-datastore", store("b"), "--mode",
                            "augment", "--out-support", path("as"), "--out-datastore",
                            path("ad")});
  ASSERT_EQ(adapted.exit_code, 0) << adapted.err;
  j = nlohmann::json::parse(adapted.out);
  EXPECT_EQ(j["support"]["count"], 73);
}

TEST_F(Cli, ProjectGapStatsRoundtripSynth) {
  const auto projected = run({"project", "--support", store("a"), "--queries", audio(),
                              "--temperature", "0.05", "--out", path("p.tsv")});
  ASSERT_EQ(projected.exit_code, 0) << projected.err;
  EXPECT_EQ(split_lines(projected.out).size(), 50u);
  EXPECT_EQ(read_queries(path("p.tsv")).size(), 50u);

  const auto gap = run({"gap-stats", "--audio", audio(), "--text", store("a")});
  ASSERT_EQ(gap.exit_code, 0) << gap.err;
  const auto g = nlohmann::json::parse(gap.out);
  EXPECT_GT(g["mean_paired_cosine"].get<double>(), g["mean_unpaired_cosine"].get<double>());

  EXPECT_EQ(run({"gap-stats", "--synth"}).exit_code, 1);
  const auto synth = run({"synth", "--seed", "3", "--pairs", "20", "--out-text", path("st"),
                          "--out-audio", path("sa.tsv")});
  ASSERT_EQ(synth.exit_code, 0) << synth.err;
  const auto rt = run({"roundtrip", "--store", path("st"), "--temperatures", "1e-6,1e6"});
  ASSERT_EQ(rt.exit_code, 0) << rt.err;
  const auto rows = split_lines(rt.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(nlohmann::json::parse(rows[0])["rate"], 1.0);
}

TEST_F(Cli, UsageErrorsAndHelp) {
  const auto bad = run({"retrieve", "--datastore", store("a"), "--queries", audio(), "--k", "abc"});
  EXPECT_EQ(bad.exit_code, 1);
  EXPECT_NE(bad.err.find("--k"), std::string::npos);
  EXPECT_EQ(run({"bogus"}).exit_code, 1);
  EXPECT_EQ(run({}).exit_code, 1);
  for (const char* sub : {"build-support", "build-datastore", "merge", "filter", "retrieve",
                          "project", "make-train-data", "caption", "adapt", "gap-stats",
                          "roundtrip", "synth"}) {
    const auto help = run({sub, "--help"});
    EXPECT_EQ(help.exit_code, 0) << sub;
    EXPECT_NE(help.out.find("Usage"), std::string::npos) << sub;
  }
  const auto missing = run({"caption", "--support", path("nope"), "--queries", audio()});
  EXPECT_EQ(missing.exit_code, 1);
  EXPECT_NE(missing.err.find("IoError"), std::string::npos) << missing.err;
}

}  // namespace
}  // namespace ragcap
