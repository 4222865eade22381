#include <benchmark/benchmark.h>

#include <random>

#include "rhetoric/corpus.hpp"
#include "rhetoric/postprocess.hpp"
#include "rhetoric/prompting.hpp"
#include "rhetoric/schema.hpp"
#include "rhetoric/text.hpp"

using namespace rhetoric;

namespace {

std::u32string random_text(std::mt19937& rng, std::size_t len) {
  const std::u32string pool = U"春夏秋冬雨雪风霜山川河流花草树木日月星辰像就是有的人";
  std::u32string out;
  for (std::size_t i = 0; i < len; ++i) {
    out.push_back(pool[rng() % pool.size()]);
  }
  return out;
}

const char* kReply =
    "[{\"内容片段\": \"庄稼汉们站在地头，望着这片黄澄澄像狗尾巴的稻谷。\", "
    "\"修辞手法\": \"比喻\", \"形式上的细粒度修辞分类\": \"明喻\", "
    "\"内容上的细粒度修辞分类\": \"实在物\", \"喻词\": \"像\", \"本体\": \"稻谷\", "
    "\"喻体\": \"狗尾巴\"}]";

void BM_LcsLength(benchmark::State& state) {
  std::mt19937 rng(1);
  const auto a = random_text(rng, static_cast<std::size_t>(state.range(0)));
  const auto b = random_text(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(lcs_length(std::u32string_view(a), std::u32string_view(b)));
  }
}
BENCHMARK(BM_LcsLength)->Arg(16)->Arg(64)->Arg(256);

void BM_LongestCommonSubstring(benchmark::State& state) {
  std::mt19937 rng(2);
  const auto a = random_text(rng, static_cast<std::size_t>(state.range(0)));
  const auto b = random_text(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(longest_common_substring(a, b));
  }
}
BENCHMARK(BM_LongestCommonSubstring)->Arg(16)->Arg(64)->Arg(256);

void BM_ParseLenient(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_lenient(kReply));
  }
}
BENCHMARK(BM_ParseLenient);

void BM_ParseLenientRepair(benchmark::State& state) {
  const std::string damaged = "前置说明。\n```json\n" + std::string(kReply) + "\n```";
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_lenient(damaged));
  }
}
BENCHMARK(BM_ParseLenientRepair);

void BM_ResolveScope(benchmark::State& state) {
  std::mt19937 rng(3);
  Paragraph para;
  std::string text;
  int start = 0;
  for (int i = 1; i <= 8; ++i) {
    const std::string sentence = encode_utf8(random_text(rng, 24)) + "。";
    para.sentences.push_back({i, sentence, start});
    start += static_cast<int>(cp_length(sentence));
    text += sentence;
  }
  para.text = text;
  const std::string fragment = para.sentences[2].text + para.sentences[3].text;
  for (auto _ : state) {
    benchmark::DoNotOptimize(resolve_scope(fragment, para));
  }
}
BENCHMARK(BM_ResolveScope);

void BM_SelectDemos(benchmark::State& state) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  DemoGroup group;
  group.name = "all";
  for (int i = 0; i < 50; ++i) {
    std::vector<float> v(64);
    for (auto& x : v) x = dist(rng);
    group.entries.push_back({"d" + std::to_string(i), "t", v, "[]"});
  }
  std::vector<float> query(64);
  for (auto& x : query) x = dist(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(select_demos(group, query, 20));
  }
}
BENCHMARK(BM_SelectDemos);

void BM_HashEmbedder(benchmark::State& state) {
  std::mt19937 rng(5);
  HashEmbedder embedder(0);
  const std::vector<std::string> texts = {encode_utf8(random_text(rng, 100))};
  for (auto _ : state) {
    benchmark::DoNotOptimize(embedder.embed(texts));
  }
}
BENCHMARK(BM_HashEmbedder);

}  // namespace

BENCHMARK_MAIN();
