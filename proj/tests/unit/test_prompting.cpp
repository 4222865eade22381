#include "rhetoric/prompting.hpp"

#include <random>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "rhetoric/prompt_asset.hpp"
#include "test_util.hpp"

using namespace rhetoric;

namespace {

std::vector<Instance> load_train() {
  return load_dataset(testutil::data_path("train_internal.jsonl"), DatasetFormat::Internal);
}

// A group with unit vectors so the cosine ordering is transparent.
DemoGroup axis_group() {
  DemoGroup g;
  g.name = "all";
  auto axis = [](std::size_t i) {
    std::vector<float> v(4, 0.0f);
    v[i] = 1.0f;
    return v;
  };
  // cosines against the query below: A 0.9, B 0.5, C 0.7
  const std::vector<float> a = {0.9f, 0.435889894f, 0.0f, 0.0f};
  const std::vector<float> b = {0.5f, 0.866025404f, 0.0f, 0.0f};
  const std::vector<float> c = {0.7f, 0.714142843f, 0.0f, 0.0f};
  g.entries.push_back({"A", "docA", a, "[]"});
  g.entries.push_back({"B", "docB", b, "[]"});
  g.entries.push_back({"C", "docC", c, "[]"});
  (void)axis;
  return g;
}

const std::vector<float> kQuery = {1.0f, 0.0f, 0.0f, 0.0f};

}  // namespace

TEST_CASE("hash embedder is deterministic, normalized, seed-sensitive") {
  HashEmbedder e1(0), e2(0), other(7);
  const std::vector<std::string> texts = {"庄稼汉们站在地头", "时间就是金钱。"};
  const auto v1 = e1.embed(texts);
  const auto v2 = e2.embed(texts);
  CHECK(v1 == v2);
  CHECK(v1[0] != other.embed(texts)[0]);
  CHECK(v1[0].size() == 64);
  double norm = 0;
  for (const float x : v1[0]) norm += static_cast<double>(x) * x;
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(e1.id() == "hash64-v1-seed0");
}

TEST_CASE("select_demos returns top-k ascending, most similar last") {
  const DemoGroup g = axis_group();
  const auto picked = select_demos(g, kQuery, 2);
  REQUIRE(picked.size() == 2);
  CHECK(picked[0]->doc_id == "C");
  CHECK(picked[1]->doc_id == "A");

  CHECK(select_demos(g, kQuery, 0).empty());

  const auto all = select_demos(g, kQuery, 3);
  REQUIRE(all.size() == 3);
  CHECK(all[0]->doc_id == "B");
  CHECK(all[1]->doc_id == "C");
  CHECK(all[2]->doc_id == "A");
}

TEST_CASE("select_demos tie-break is lexicographic by doc_id") {
  DemoGroup g;
  g.name = "all";
  const std::vector<float> same = {1.0f, 0.0f};
  g.entries.push_back({"z", "dz", same, "[]"});
  g.entries.push_back({"a", "da", same, "[]"});
  g.entries.push_back({"m", "dm", same, "[]"});
  const auto picked = select_demos(g, {2.0f, 0.0f}, 2);
  REQUIRE(picked.size() == 2);
  CHECK(picked[0]->doc_id == "a");
  CHECK(picked[1]->doc_id == "m");
}

TEST_CASE("select_demos error cases") {
  const DemoGroup g = axis_group();
  CHECK_THROWS(select_demos(g, kQuery, 4));                     // k > store size
  CHECK_THROWS(select_demos(g, {1.0f, 0.0f}, 1));               // dimension mismatch
  CHECK_THROWS(select_demos(g, {0.0f, 0.0f, 0.0f, 0.0f}, 1));   // zero-norm query
}

TEST_CASE("ordering property holds for random stores") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (int it = 0; it < 50; ++it) {
    DemoGroup g;
    g.name = "all";
    for (int i = 0; i < 12; ++i) {
      std::vector<float> v(8);
      for (auto& x : v) x = dist(rng);
      if (std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; })) v[0] = 1.0f;
      g.entries.push_back({"d" + std::to_string(i), "t", v, "[]"});
    }
    std::vector<float> q(8);
    for (auto& x : q) x = dist(rng);
    q[0] += 2.0f;  // keep the norm away from zero
    const std::size_t k = static_cast<std::size_t>(it % 13);
    const auto picked = select_demos(g, q, k);
    REQUIRE(picked.size() == k);
    for (std::size_t i = 1; i < picked.size(); ++i) {
      CHECK(cosine_similarity(picked[i - 1]->embedding, q) <=
            cosine_similarity(picked[i]->embedding, q) + 1e-12);
    }
    // determinism
    const auto again = select_demos(g, q, k);
    for (std::size_t i = 0; i < picked.size(); ++i) {
      CHECK(picked[i]->doc_id == again[i]->doc_id);
    }
  }
}

TEST_CASE("build_messages shapes") {
  RunPolicy policy;
  const std::string sys = "SYS";

  SUBCASE("zero-shot is a single-turn dialogue") {
    const auto messages = build_messages(policy, sys, {}, "测试文档");
    REQUIRE(messages.size() == 2);
    CHECK(messages[0] == Message{"system", "SYS"});
    CHECK(messages[1] == Message{"user", "测试文档"});
  }

  SUBCASE("demos interleave user/assistant in given order") {
    DemoEntry c{"C", "docC", {}, "[C]"};
    DemoEntry a{"A", "docA", {}, "[A]"};
    const auto messages = build_messages(policy, sys, {&c, &a}, "测试文档");
    REQUIRE(messages.size() == 6);
    CHECK(messages[1] == Message{"user", "docC"});
    CHECK(messages[2] == Message{"assistant", "[C]"});
    CHECK(messages[3] == Message{"user", "docA"});
    CHECK(messages[4] == Message{"assistant", "[A]"});
    CHECK(messages[5] == Message{"user", "测试文档"});
  }

  SUBCASE("instruct text is appended to the test turn") {
    policy.instruct = "请输出JSON。";
    const auto messages = build_messages(policy, sys, {}, "测试文档");
    CHECK(messages.back().content == "测试文档\n请输出JSON。");
  }
}

TEST_CASE("message roles alternate and end with a user turn") {
  RunPolicy policy;
  DemoEntry d1{"1", "u1", {}, "a1"}, d2{"2", "u2", {}, "a2"}, d3{"3", "u3", {}, "a3"};
  for (const auto& demos : std::vector<std::vector<const DemoEntry*>>{
           {}, {&d1}, {&d1, &d2}, {&d1, &d2, &d3}}) {
    const auto messages = build_messages(policy, "SYS", demos, "T");
    CHECK(messages.front().role == "system");
    CHECK(messages.back().role == "user");
    for (std::size_t i = 1; i < messages.size(); ++i) {
      CHECK(messages[i].role == ((i % 2 == 1) ? "user" : "assistant"));
    }
  }
}

TEST_CASE("partition_types") {
  const auto& tax = Taxonomy::instance();
  const auto join = partition_types(tax, Partition::Join);
  REQUIRE(join.size() == 1);
  CHECK(join[0].coarse_types.size() == 8);

  const auto sepa = partition_types(tax, Partition::Sepa);
  REQUIRE(sepa.size() == 2);
  CHECK(sepa[0].coarse_types == std::vector<std::string>{"比喻", "比拟", "夸张", "排比"});
  CHECK(sepa[1].coarse_types == std::vector<std::string>{"反复", "设问", "反问", "摹状"});

  // the two groups partition the gold items: together they cover each
  // item exactly once
  const auto train = load_train();
  for (const auto& inst : train) {
    const auto records = annotation_to_records(inst);
    std::size_t total = 0;
    for (const auto& group : sepa) {
      total += filter_records(records, group.coarse_types).size();
    }
    CHECK(total == records.size());
  }
}

TEST_CASE("demo store groups carry group-filtered records") {
  const auto train = load_train();
  HashEmbedder embedder(0);
  const DemoStore store = build_demo_store(train, embedder);
  REQUIRE(store.groups.size() == 3);
  CHECK(store.dimension == 64);
  CHECK(store.stats.instances == 14);

  const DemoGroup* shared = store.group("shared");
  const DemoGroup* t1only = store.group("track1_only");
  REQUIRE(shared != nullptr);
  REQUIRE(t1only != nullptr);
  REQUIRE(shared->entries.size() == 14);

  // d12 has one sensory item and one simile item: the simile goes to the
  // shared group, the sensory one to the track-1-only group
  const auto& shared_d12 = shared->entries[11];
  const auto& t1_d12 = t1only->entries[11];
  CHECK(shared_d12.doc_id == "d12");
  CHECK(shared_d12.records_json.find("比喻") != std::string::npos);
  CHECK(shared_d12.records_json.find("摹状") == std::string::npos);
  CHECK(t1_d12.records_json.find("摹状") != std::string::npos);
  CHECK(t1_d12.records_json.find("比喻") == std::string::npos);

  // no-rhetoric doc serializes to an empty array in every group
  CHECK(store.group("all")->entries[13].records_json == "[]");
}

TEST_CASE("demo store save/load round trip") {
  const auto train = load_train();
  HashEmbedder embedder(0);
  const DemoStore store = build_demo_store(train, embedder);
  const auto dir = testutil::make_temp_dir("store");
  const auto path = (dir / "store.json").string();
  save_demo_store(store, path);
  const DemoStore again = load_demo_store(path);
  CHECK(again.embedder_id == store.embedder_id);
  CHECK(again.dimension == store.dimension);
  CHECK(again.stats.instances == store.stats.instances);
  REQUIRE(again.groups.size() == store.groups.size());
  for (std::size_t g = 0; g < store.groups.size(); ++g) {
    REQUIRE(again.groups[g].entries.size() == store.groups[g].entries.size());
    for (std::size_t i = 0; i < store.groups[g].entries.size(); ++i) {
      CHECK(again.groups[g].entries[i].doc_id == store.groups[g].entries[i].doc_id);
      CHECK(again.groups[g].entries[i].embedding == store.groups[g].entries[i].embedding);
      CHECK(again.groups[g].entries[i].records_json ==
            store.groups[g].entries[i].records_json);
    }
  }
}

TEST_CASE("http embedder follows the endpoint contract") {
  httplib::Server server;
  server.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    CHECK(body["model"] == "text-embedding-v3");
    REQUIRE(body["texts"].is_array());
    nlohmann::json vectors = nlohmann::json::array();
    for (std::size_t i = 0; i < body["texts"].size(); ++i) {
      vectors.push_back({1.0f, 0.0f, static_cast<float>(i)});
    }
    res.set_content(nlohmann::json{{"vectors", vectors}}.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpEmbedder embedder("http://127.0.0.1:" + std::to_string(port) + "/embed",
                        "text-embedding-v3", 3, "");
  const auto vecs = embedder.embed({"甲", "乙"});
  REQUIRE(vecs.size() == 2);
  CHECK(vecs[0] == std::vector<float>{1.0f, 0.0f, 0.0f});
  CHECK(vecs[1] == std::vector<float>{1.0f, 0.0f, 1.0f});
  CHECK(embedder.id() == "http:text-embedding-v3");

  server.stop();
  server_thread.join();
}

TEST_CASE("http embedder requires its credential variable when configured") {
  HttpEmbedder embedder("http://127.0.0.1:1/embed", "m", 4,
                        "RHETORIC_TEST_MISSING_EMBED_KEY");
  CHECK_THROWS_WITH_AS(embedder.embed({"x"}),
                       doctest::Contains("RHETORIC_TEST_MISSING_EMBED_KEY"),
                       std::runtime_error);
}

TEST_CASE("embedding cache serves repeat lookups") {
  const auto dir = testutil::make_temp_dir("embcache");
  EmbeddingCache cache(dir.string());
  HashEmbedder embedder(0);
  const std::vector<std::string> texts = {"甲", "乙"};
  const auto first = embed_cached(embedder, texts, &cache);
  CHECK(cache.lookup(embedder.id(), "甲").has_value());
  const auto second = embed_cached(embedder, texts, &cache);
  CHECK(first == second);
  // a different embedder id misses
  CHECK_FALSE(cache.lookup("other-embedder", "甲").has_value());
}

TEST_CASE("system prompt assembly") {
  const auto& tax = Taxonomy::instance();
  const std::string full = build_system_prompt("v1", tax.coarse_names());
  CHECK(full.find("8种修辞类型定义") != std::string::npos);
  CHECK(full.find("1. 比喻") != std::string::npos);
  CHECK(full.find("8. 摹状") != std::string::npos);
  CHECK(full.find("9. 没有修辞") != std::string::npos);
  CHECK(full.find("语文老师") != std::string::npos);

  const std::string shared = build_system_prompt("v1", tax.shared_coarse());
  CHECK(shared.find("4种修辞类型定义") != std::string::npos);
  CHECK(shared.find("1. 比喻") != std::string::npos);
  CHECK(shared.find("5. 没有修辞") != std::string::npos);
  CHECK(shared.find("反问") == std::string::npos);
  CHECK(shared.size() < full.size());

  CHECK_THROWS(build_system_prompt("v999", tax.coarse_names()));
}

TEST_CASE("export_training_jsonl writes single-turn dialogues plus the recipe") {
  const auto train = load_train();
  const auto dir = testutil::make_temp_dir("train");
  const auto path = (dir / "train.jsonl").string();
  export_training_jsonl(train, "SYS", path);

  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    const auto j = nlohmann::json::parse(line);
    REQUIRE(j["messages"].size() == 3);
    CHECK(j["messages"][0]["role"] == "system");
    CHECK(j["messages"][0]["content"] == "SYS");
    CHECK(j["messages"][1]["role"] == "user");
    CHECK(j["messages"][2]["role"] == "assistant");
    if (lines == 1) {
      CHECK(j["messages"][2]["content"] ==
            "[{\"内容片段\": \"庄稼汉们站在地头，望着这片黄澄澄像狗尾巴的稻谷。\", "
            "\"修辞手法\": \"比喻\", \"形式上的细粒度修辞分类\": \"明喻\", "
            "\"内容上的细粒度修辞分类\": \"实在物\", \"喻词\": \"像\", \"本体\": "
            "\"稻谷\", \"喻体\": \"狗尾巴\"}]");
    }
  }
  CHECK(lines == 14);

  const std::string recipe = testutil::read_file(path + ".recipe");
  CHECK(recipe.find("epochs=24") != std::string::npos);
  CHECK(recipe.find("batch_size=16") != std::string::npos);
  CHECK(recipe.find("peak_learning_rate=0.0003") != std::string::npos);
  CHECK(recipe.find("warmup_ratio=0.05") != std::string::npos);
  CHECK(recipe.find("weight_decay=0.01") != std::string::npos);
  CHECK(recipe.find("lora_rank=8") != std::string::npos);
  CHECK(recipe.find("lora_alpha=32") != std::string::npos);
  CHECK(recipe.find("lora_dropout=0.1") != std::string::npos);
}

TEST_CASE("export with empty instance list leaves an empty file and a recipe") {
  const auto dir = testutil::make_temp_dir("train");
  const auto path = (dir / "empty.jsonl").string();
  export_training_jsonl({}, "SYS", path);
  CHECK(testutil::read_file(path).empty());
  CHECK_FALSE(testutil::read_file(path + ".recipe").empty());
}
