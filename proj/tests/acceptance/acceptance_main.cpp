// Acceptance suite: one criterion per section, one PASS/FAIL line each.
// Exit code is the number of failed criteria.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include "rhetoric/corpus.hpp"
#include "rhetoric/ensemble.hpp"
#include "rhetoric/metrics.hpp"
#include "rhetoric/postprocess.hpp"
#include "rhetoric/runner.hpp"
#include "rhetoric/schema.hpp"
#include "rhetoric/text.hpp"

using namespace rhetoric;
namespace fs = std::filesystem;

namespace {

struct CheckFailure {
  std::string detail;
};

void require(bool cond, const std::string& detail) {
  if (!cond) throw CheckFailure{detail};
}

template <typename T, typename U>
void require_eq(const T& got, const U& want, const std::string& what) {
  if (!(got == want)) {
    std::ostringstream ss;
    ss << what << ": got " << got << ", want " << want;
    throw CheckFailure{ss.str()};
  }
}

void require_near(double got, double want, double tol, const std::string& what) {
  if (!(std::abs(got - want) <= tol)) {
    std::ostringstream ss;
    ss.precision(12);
    ss << what << ": got " << got << ", want " << want << " +/- " << tol;
    throw CheckFailure{ss.str()};
  }
}

int g_failures = 0;

void criterion(const std::string& name, const std::function<void()>& body) {
  const auto start = std::chrono::steady_clock::now();
  try {
    body();
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    std::printf("[PASS] %s (%lld ms)\n", name.c_str(), static_cast<long long>(ms));
  } catch (const CheckFailure& f) {
    ++g_failures;
    std::printf("[FAIL] %s — %s\n", name.c_str(), f.detail.c_str());
  } catch (const std::exception& e) {
    ++g_failures;
    std::printf("[FAIL] %s — exception: %s\n", name.c_str(), e.what());
  }
  std::fflush(stdout);
}

std::string data_path(const std::string& name) {
  return std::string(RHETORIC_TEST_DATA_DIR) + "/" + name;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path make_temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto dir = fs::temp_directory_path() /
                   ("rhetoric-acc-" + tag + "-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter.fetch_add(1)));
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string(RHETORIC_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  return std::system(cmd.c_str());
}

void require_cli(const std::string& args, const fs::path& log_dir, const std::string& tag) {
  const auto log = log_dir / (tag + ".log");
  if (run_cli(args, log) != 0) {
    throw CheckFailure{"CLI failed (" + tag + "): " + read_file(log)};
  }
}

const char* kTable3Json =
    "[{\"内容片段\": \"庄稼汉们站在地头，望着这片黄澄澄像狗尾巴的稻谷。\", "
    "\"修辞手法\": \"比喻\", \"形式上的细粒度修辞分类\": \"明喻\", "
    "\"内容上的细粒度修辞分类\": \"实在物\", \"喻词\": \"像\", \"本体\": \"稻谷\", "
    "\"喻体\": \"狗尾巴\"}]";

// ---------------------------------------------------------------------------
// criterion 1: reference-example fixture round trip
// ---------------------------------------------------------------------------
void c1_table3_round_trip() {
  const auto start = std::chrono::steady_clock::now();

  const auto instances = load_dataset(data_path("train_official.jsonl"),
                                      DatasetFormat::Official);
  const Instance& inst = instances.at(0);
  require_eq(inst.paragraph.doc_id, std::string("d01"), "doc id");

  const auto records = annotation_to_records(inst);
  require_eq(serialize_records(records), std::string(kTable3Json),
             "serialized record string");

  const auto items = finalize(records, inst.paragraph, compute_stats(instances), {},
                              "acceptance");
  require_eq(items.size(), std::size_t{1}, "finalized item count");
  const PredItem& item = items[0];
  require(item.sentence_ids == std::set<int>{1}, "sentence set != {1}");
  require_eq(item.coarse, std::string("比喻"), "coarse type");
  require_eq(item.form_fine.value_or(""), std::string("明喻"), "form type");
  require_eq(item.content_fine.value_or(""), std::string("实在物"), "content type");
  require_eq(item.components.size(), std::size_t{3}, "component count");
  auto piece = [&](const std::string& slot) -> Piece {
    for (const auto& span : item.components) {
      if (span.slot == slot) return span.pieces.at(0);
    }
    throw CheckFailure{"missing component slot " + slot};
  };
  require(piece("喻词") == Piece{"像", 16, 16}, "喻词 span != 像@[16,16]");
  require(piece("本体") == Piece{"稻谷", 21, 22}, "本体 span != 稻谷@[21,22]");
  require(piece("喻体") == Piece{"狗尾巴", 17, 19}, "喻体 span != 狗尾巴@[17,19]");

  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  require(elapsed < 1000, "round trip took " + std::to_string(elapsed) + " ms (>= 1 s)");
}

// ---------------------------------------------------------------------------
// criterion 2: corpus statistics
// ---------------------------------------------------------------------------
void c2_corpus_statistics() {
  const std::string official = data_path("official_train.jsonl");
  if (fs::exists(official)) {
    const auto instances = load_dataset(official, DatasetFormat::Official);
    const CorpusStats stats = compute_stats(instances);
    require_eq(stats.instances, 50, "instances");
    require_eq(stats.form_devices, 105, "form-level devices");
    require_eq(stats.content_devices, 63, "content-level devices");
    require_eq(stats.components, 145, "components");
    require_near(stats.avg_chars, 98.3, 0.05, "avg characters");
    require_near(stats.avg_sentences, 3.7, 0.05, "avg sentences");
    return;
  }
  // the official training set is not distributable; the bundled synthetic
  // fixture substitutes with hand-counted statistics, matched exactly
  const auto instances =
      load_dataset(data_path("train_internal.jsonl"), DatasetFormat::Internal);
  const CorpusStats stats = compute_stats(instances);
  require_eq(stats.instances, 14, "instances");
  require_eq(stats.form_devices, 14, "form-level devices");
  require_eq(stats.content_devices, 10, "content-level devices");
  require_eq(stats.components, 19, "components");
  require_near(stats.avg_chars, 341.0 / 14.0, 1e-9, "avg characters");
  require_near(stats.avg_sentences, 32.0 / 14.0, 1e-9, "avg sentences");
  require_eq(modal_fine_type(stats, "比喻", kTrackForm).fine, std::string("明喻"),
             "modal(比喻, form)");
  require_eq(modal_fine_type(stats, "排比", kTrackForm).fine, std::string("成分排比"),
             "modal(排比, form) tie-break");
}

// ---------------------------------------------------------------------------
// criterion 3: scope rule
// ---------------------------------------------------------------------------
void c3_scope_rule() {
  const auto instances =
      load_dataset(data_path("train_internal.jsonl"), DatasetFormat::Internal);
  const Paragraph& para = instances[0].paragraph;
  const std::string fragment = para.sentences[0].text;
  require_eq(cp_length(fragment), std::size_t{24}, "sentence-1 length");
  require_eq(cp_length(para.sentences[1].text), std::size_t{8}, "sentence-2 length");
  const auto scope = resolve_scope(fragment, para);
  require(scope.count(1) == 1, "sentence 1 not in scope (LCS 24 >= max(5, 14.4))");
  require(scope.count(2) == 0, "sentence 2 wrongly in scope (LCS < 5)");

  // 200 generated cases probing the floor/ratio boundary and monotonicity
  std::mt19937 rng(2025);
  std::uniform_int_distribution<int> len_dist(1, 20);
  const std::u32string pool = U"春夏秋冬雨雪风霜山川河流花草树木日月星辰";
  int boundary_hits = 0;
  for (int it = 0; it < 200; ++it) {
    const int len = len_dist(rng);
    std::u32string sentence;
    for (int i = 0; i < len; ++i) {
      sentence.push_back(pool[static_cast<std::size_t>(rng() % pool.size())]);
    }
    Paragraph p;
    p.doc_id = "gen";
    p.text = encode_utf8(sentence);
    p.sentences = {{1, p.text, 0}};

    const double theta = std::max(5.0, 0.6 * len);
    std::uniform_int_distribution<int> m_dist(0, len);
    const int m = m_dist(rng);  // prefix length => LCS is exactly m
    const std::string frag = encode_utf8(sentence.substr(0, static_cast<std::size_t>(m)));
    const bool in_scope = resolve_scope(frag, p).count(1) == 1;
    const bool expected = static_cast<double>(m) >= theta;
    require(in_scope == expected,
            "boundary case len=" + std::to_string(len) + " m=" + std::to_string(m));
    if (std::abs(m - theta) < 1.0) ++boundary_hits;

    // monotonicity: extending the fragment never shrinks the scope
    const std::string extended = frag + p.text;
    const bool after = resolve_scope(extended, p).count(1) == 1;
    require(!in_scope || after, "extension removed a sentence from scope");
  }
  require(boundary_hits > 5, "generator never probed the threshold boundary");
}

// ---------------------------------------------------------------------------
// criterion 4: LCS / longest-common-substring oracle equivalence
// ---------------------------------------------------------------------------
namespace oracle {

// strings over {0,1,2} of length <= 8, packed subsequence/substring sets
struct Entry {
  std::u32string text;
  std::vector<uint32_t> subseqs;   // (len << 13) | base-3 code, sorted desc
  std::vector<uint32_t> substrs;   // same packing, sorted desc
};

uint32_t pack(const std::vector<int>& digits) {
  uint32_t code = 0;
  for (std::size_t i = digits.size(); i-- > 0;) code = code * 3 + static_cast<uint32_t>(digits[i]);
  return (static_cast<uint32_t>(digits.size()) << 13) | code;
}

std::vector<Entry> build_entries(int max_len) {
  std::vector<std::vector<int>> all;
  all.push_back({});
  for (int len = 1; len <= max_len; ++len) {
    std::vector<std::vector<int>> next;
    for (const auto& s : all) {
      if (static_cast<int>(s.size()) != len - 1) continue;
      for (int d = 0; d < 3; ++d) {
        auto t = s;
        t.push_back(d);
        next.push_back(std::move(t));
      }
    }
    all.insert(all.end(), next.begin(), next.end());
  }

  std::vector<Entry> entries;
  entries.reserve(all.size());
  for (const auto& digits : all) {
    Entry e;
    for (const int d : digits) e.text.push_back(static_cast<char32_t>(U'a' + d));
    const std::size_t n = digits.size();
    // every subsequence, canonicalized
    for (uint32_t mask = 0; mask < (1u << n); ++mask) {
      std::vector<int> sub;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (1u << i)) sub.push_back(digits[i]);
      }
      e.subseqs.push_back(pack(sub));
    }
    std::sort(e.subseqs.begin(), e.subseqs.end(), std::greater<>());
    e.subseqs.erase(std::unique(e.subseqs.begin(), e.subseqs.end()), e.subseqs.end());
    // every substring
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t len = 0; i + len <= n; ++len) {
        e.substrs.push_back(pack({digits.begin() + static_cast<long>(i),
                                  digits.begin() + static_cast<long>(i + len)}));
      }
    }
    std::sort(e.substrs.begin(), e.substrs.end(), std::greater<>());
    e.substrs.erase(std::unique(e.substrs.begin(), e.substrs.end()), e.substrs.end());
    entries.push_back(std::move(e));
  }
  return entries;
}

// longest element common to two descending packed sets
std::size_t longest_common(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return a[i] >> 13;
    if (a[i] > b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return 0;  // unreachable: the empty string is in every set
}

bool is_subsequence(const std::u32string& needle, const std::u32string& hay) {
  std::size_t i = 0;
  for (const char32_t c : hay) {
    if (i < needle.size() && needle[i] == c) ++i;
  }
  return i == needle.size();
}

std::size_t lcs_brute(const std::u32string& a, const std::u32string& b) {
  std::size_t best = 0;
  for (uint32_t mask = 0; mask < (1u << a.size()); ++mask) {
    std::u32string sub;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (mask & (1u << i)) sub.push_back(a[i]);
    }
    if (sub.size() > best && is_subsequence(sub, b)) best = sub.size();
  }
  return best;
}

std::size_t lcsubstr_brute(const std::u32string& a, const std::u32string& b) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t len = best + 1; i + len <= a.size(); ++len) {
      if (b.find(a.substr(i, len)) == std::u32string::npos) break;
      best = len;
    }
  }
  return best;
}

}  // namespace oracle

void c4_lcs_oracles() {
  const auto entries = oracle::build_entries(8);
  require_eq(entries.size(), std::size_t{9841}, "string universe size");

  const std::size_t n = entries.size();
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  std::atomic<long> mismatches{0};
  std::atomic<std::size_t> next_row{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next_row.fetch_add(1);
      if (i >= n) return;
      const auto& a = entries[i];
      for (std::size_t j = i; j < n; ++j) {
        const auto& b = entries[j];
        const std::size_t want_seq = oracle::longest_common(a.subseqs, b.subseqs);
        if (lcs_length(std::u32string_view(a.text), std::u32string_view(b.text)) !=
            want_seq) {
          mismatches.fetch_add(1);
        }
        const std::size_t want_sub = oracle::longest_common(a.substrs, b.substrs);
        if (longest_common_substring(a.text, b.text).length != want_sub) {
          mismatches.fetch_add(1);
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < hw; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  require(mismatches.load() == 0,
          std::to_string(mismatches.load()) + " oracle mismatches over the exhaustive set");

  // 1000 random pairs of length <= 12, direct enumeration oracle
  std::mt19937 rng(4242);
  std::uniform_int_distribution<std::size_t> len_dist(0, 12);
  std::uniform_int_distribution<int> sym(0, 2);
  for (int it = 0; it < 1000; ++it) {
    std::u32string a, b;
    const std::size_t la = len_dist(rng), lb = len_dist(rng);
    for (std::size_t i = 0; i < la; ++i) a.push_back(static_cast<char32_t>(U'甲' + sym(rng)));
    for (std::size_t i = 0; i < lb; ++i) b.push_back(static_cast<char32_t>(U'甲' + sym(rng)));
    const std::u32string& small = a.size() <= b.size() ? a : b;
    const std::u32string& large = a.size() <= b.size() ? b : a;
    require(lcs_length(std::u32string_view(a), std::u32string_view(b)) ==
                oracle::lcs_brute(small, large),
            "random LCS mismatch at iteration " + std::to_string(it));
    const auto got = longest_common_substring(a, b);
    require(got.length == oracle::lcsubstr_brute(a, b),
            "random substring-length mismatch at iteration " + std::to_string(it));
    if (got.length > 0) {
      require(a.substr(got.pos_a, got.length) == b.substr(got.pos_b, got.length),
              "substring positions disagree at iteration " + std::to_string(it));
    }
  }
}

// ---------------------------------------------------------------------------
// criterion 5: ensemble arithmetic
// ---------------------------------------------------------------------------
void c5_ensemble_arithmetic() {
  EnsembleSpec t1;
  t1.members = {"M_1", "M_2", "M_3", "M_4"};
  t1.pos = {0.4, 0.4, 0.2, 0.1};
  t1.neg = t1.pos;
  t1.theta_e = -0.5;
  EnsembleSpec t2 = t1;
  t2.pos = {0.5, 0.4, 0.3, 0.2};
  t2.neg = t2.pos;
  t2.theta_e = -0.6;

  require_near(vote_score({true, false, false, false}, t1), -0.3, 1e-12,
               "lone member-1 score");
  require_near(vote_score({false, false, false, true}, t1), -0.9, 1e-12,
               "lone member-4 score");
  require_near(vote_score({true, true, true, true}, t1), 1.1, 1e-12, "unanimous score");
  require_near(vote_score({false, true, false, false}, t2), -0.6, 1e-12,
               "boundary score");

  auto one_item = [](std::string form) {
    PredItem p;
    p.sentence_ids = {1};
    p.coarse = "比喻";
    p.form_fine = std::move(form);
    return p;
  };
  require_eq(weighted_vote({{one_item("明喻")}, {}, {}, {}}, t1, FineTrack::Form).size(),
             std::size_t{1}, "-0.3 > -0.5 kept");
  require_eq(weighted_vote({{}, {}, {}, {one_item("明喻")}}, t1, FineTrack::Form).size(),
             std::size_t{0}, "-0.9 dropped");
  require_eq(weighted_vote({{one_item("明喻")},
                            {one_item("明喻")},
                            {one_item("明喻")},
                            {one_item("明喻")}},
                           t1, FineTrack::Form)
                 .size(),
             std::size_t{1}, "unanimous kept");
  require_eq(weighted_vote({{}, {one_item("明喻")}, {}, {}}, t2, FineTrack::Content).size(),
             std::size_t{0}, "-0.6 boundary dropped (strict >)");

  std::mt19937 rng(99);
  std::uniform_real_distribution<double> weight(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  for (int it = 0; it < 1000; ++it) {
    const std::size_t m = 1 + static_cast<std::size_t>(it % 7);
    EnsembleSpec spec;
    spec.members.assign(m, "x");
    for (std::size_t i = 0; i < m; ++i) spec.pos.push_back(weight(rng));
    spec.neg = spec.pos;
    std::vector<bool> votes(m), flipped(m);
    for (std::size_t i = 0; i < m; ++i) {
      votes[i] = coin(rng);
      flipped[i] = !votes[i];
    }
    require(std::abs(vote_score(flipped, spec) + vote_score(votes, spec)) < 1e-9,
            "negation symmetry violated at iteration " + std::to_string(it));
    const double base = vote_score(votes, spec);
    for (std::size_t i = 0; i < m; ++i) {
      if (votes[i]) continue;
      auto more = votes;
      more[i] = true;
      require(vote_score(more, spec) >= base - 1e-12,
              "monotonicity violated at iteration " + std::to_string(it));
    }
    require(vote_score(std::vector<bool>(m, true), spec) > -0.5 - 1e-12 &&
                vote_score(std::vector<bool>(m, true), spec) > -0.6 - 1e-12,
            "unanimous vote fell below a configured threshold");
  }
}

// ---------------------------------------------------------------------------
// criterion 6: metric suite
// ---------------------------------------------------------------------------
void c6_metric_suite() {
  require_near(compose_classification_score(1.0, 1.0, 0.0), 0.51, 1e-9,
               "S1 coarse-right/fine-wrong at IoU 1");
  require_near(compose_extraction_score(0.5, 1.0, 0.5, 0.0), 0.5, 1e-9,
               "S3 for stated parts");
  require_near(compose_classification_score(1.0, 1.0, 1.0), 1.0, 1e-9, "perfect S1");
  require_near(sentence_iou({}, {}), 1.0, 1e-9, "empty-vs-empty IoU");

  const auto train =
      load_dataset(data_path("train_internal.jsonl"), DatasetFormat::Internal);
  const CorpusStats stats = compute_stats(train);
  std::map<std::string, std::vector<PredItem>> preds;
  for (const auto& inst : train) {
    preds[inst.paragraph.doc_id] =
        finalize(annotation_to_records(inst), inst.paragraph, stats, {}, "gold");
  }
  for (const int track : {1, 2, 3}) {
    const auto report = evaluate(train, preds, track);
    require_near(report.composite, 1.0, 1e-9,
                 "gold-vs-gold S" + std::to_string(track));
    require_near(report.iou, 1.0, 1e-9, "gold-vs-gold IoU");
  }
}

// ---------------------------------------------------------------------------
// criterion 7: end-to-end determinism through the CLI
// ---------------------------------------------------------------------------
void c7_end_to_end_determinism() {
  const auto dir = make_temp_dir("e2e");

  // the full preparation chain runs through the CLI
  const std::string prepared = (dir / "train.jsonl").string();
  require_cli("prepare-data --input " + data_path("train_official.jsonl") +
                  " --format official --output " + prepared,
              dir, "prepare-data");
  require_cli("stats --data " + prepared + " --json", dir, "stats");
  require_cli("export-train --data " + prepared + " --output " +
                  (dir / "sft.jsonl").string(),
              dir, "export-train");
  require(fs::exists(dir / "sft.jsonl.recipe"), "export-train wrote no recipe sidecar");

  const std::string store = (dir / "store.json").string();
  require_cli("build-demos --data " + prepared + " --output " + store, dir,
              "build-demos");

  const std::string infer_base =
      "infer --preset M_LoRA-2 --backend-kind mock --backend-name mock --fixture " +
      data_path("mock_clean.json") + " --dataset " + data_path("e2e_docs.jsonl") +
      " --demos " + store + " --run-name e2e";
  require_cli(infer_base + " --output-dir " + (dir / "run1").string(), dir, "infer1");
  require_cli(infer_base + " --output-dir " + (dir / "run2").string(), dir, "infer2");
  require(read_file(dir / "run1" / "predictions.jsonl") ==
              read_file(dir / "run2" / "predictions.jsonl"),
          "predictions differ between identical runs");
  require(!read_file(dir / "run1" / "predictions.jsonl").empty(), "empty predictions");
  require(read_file(dir / "run1" / "manifest.json") ==
              read_file(dir / "run2" / "manifest.json"),
          "manifests differ between identical runs");

  // few-shot SEPA path is deterministic too
  const std::string sepa_base =
      "infer --backend-kind mock --backend-name mock --fixture " +
      data_path("mock_clean.json") + " --dataset " + data_path("e2e_docs.jsonl") +
      " --demos " + store + " --k 3 --partition SEPA --run-name e2e-sepa";
  require_cli(sepa_base + " --output-dir " + (dir / "sepa1").string(), dir, "sepa1");
  require_cli(sepa_base + " --output-dir " + (dir / "sepa2").string(), dir, "sepa2");
  require(read_file(dir / "sepa1" / "predictions.jsonl") ==
                  read_file(dir / "sepa2" / "predictions.jsonl") &&
              read_file(dir / "sepa1" / "manifest.json") ==
                  read_file(dir / "sepa2" / "manifest.json"),
          "SEPA outputs differ between identical runs");

  require_cli("replay --manifest " + (dir / "run1" / "manifest.json").string() +
                  " --output-dir " + (dir / "run3").string(),
              dir, "replay");
  require(read_file(dir / "run1" / "predictions.jsonl") ==
              read_file(dir / "run3" / "predictions.jsonl"),
          "replay did not reproduce predictions");

  // fallback chain under injected NoOutput / parse faults
  require_cli("infer --backend-kind mock --backend-name mock --fixture " +
                  data_path("mock_faulty.json") + " --dataset " +
                  data_path("e2e_docs.jsonl") + " --demos " + store +
                  " --run-name M_A --output-dir " + (dir / "faulty").string(),
              dir, "infer-faulty");
  std::ofstream spec_file(dir / "fallback.json");
  spec_file << R"({"name": "fb", "mode": "fallback", "track": 3, "members": ["M_A", "M_B"]})";
  spec_file.close();
  require_cli("ensemble --spec " + (dir / "fallback.json").string() + " --input M_A=" +
                  (dir / "faulty" / "predictions.jsonl").string() + " --input M_B=" +
                  (dir / "run1" / "predictions.jsonl").string() + " --output-dir " +
                  (dir / "fb").string(),
              dir, "ensemble-fallback");
  const auto combined = load_predictions((dir / "fb" / "predictions.jsonl").string());
  require_eq(combined.size(), std::size_t{10}, "fallback document count");
  for (const auto& doc : combined) {
    const bool faulted = doc.doc_id == "d01" || doc.doc_id == "d02" ||
                         doc.doc_id == "d03" || doc.doc_id == "d04";
    require_eq(doc.source_member, std::string(faulted ? "M_B" : "M_A"),
               "fallback member for " + doc.doc_id);
  }

  // and the evaluation of the deterministic run scores perfectly
  const auto gold = load_dataset(data_path("e2e_docs.jsonl"), DatasetFormat::Internal);
  const auto preds = load_predictions((dir / "run1" / "predictions.jsonl").string());
  for (const int track : {1, 2, 3}) {
    require_near(evaluate(gold, predictions_by_doc(preds), track).composite, 1.0, 1e-9,
                 "clean mock run S" + std::to_string(track));
  }

  // scoring and reporting also work through the CLI
  require_cli("evaluate --pred " + (dir / "run1" / "predictions.jsonl").string() +
                  " --gold " + data_path("e2e_docs.jsonl") + " --track 1 --out " +
                  (dir / "report.json").string(),
              dir, "evaluate");
  require(read_file(dir / "report.json").find("\"composite\": 1.0") != std::string::npos,
          "CLI evaluate did not report S1 = 1.0");
  require_cli("error-report --summary " + (dir / "run1" / "summary.json").string(), dir,
              "error-report");
}

// ---------------------------------------------------------------------------
// criterion 8: non-reproducibility disclosure
// ---------------------------------------------------------------------------
void c8_disclosure() {
  const fs::path readme = fs::path(RHETORIC_REPO_ROOT) / "README.md";
  require(fs::exists(readme), "README.md missing");
  const std::string text = read_file(readme);
  for (const char* number : {"47.18", "54.03", "39.94"}) {
    require(text.find(number) != std::string::npos,
            std::string("README does not mention the score ") + number);
  }
  require(text.find("cannot be reproduced") != std::string::npos,
          "README does not state that the scores cannot be reproduced");
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion("C1 reference-example fixture round trip", c1_table3_round_trip);
  criterion("C2 corpus statistics", c2_corpus_statistics);
  criterion("C3 scope rule threshold and properties", c3_scope_rule);
  criterion("C4 LCS / substring oracle equivalence", c4_lcs_oracles);
  criterion("C5 ensemble arithmetic", c5_ensemble_arithmetic);
  criterion("C6 metric suite", c6_metric_suite);
  criterion("C7 end-to-end determinism and fallback", c7_end_to_end_determinism);
  criterion("C8 non-reproducibility disclosure", c8_disclosure);
  if (g_failures == 0) {
    std::printf("all criteria passed\n");
  } else {
    std::printf("%d criteria FAILED\n", g_failures);
  }
  return g_failures;
}
