// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "support.hpp"
#include "xcoref/bench.hpp"
#include "xcoref/metrics.hpp"
#include "xcoref/topics.hpp"

using namespace xcoref;

namespace {

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail, double seconds) {
  std::printf("%s %s: %s (%.1fs)\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++failures;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

void run(const std::string& name, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
  report(name, o.pass, o.detail, took.count());
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Clustering groups(const std::vector<std::vector<std::string>>& g) { return Clustering::from_groups(g); }

// ---------------------------------------------------------------------------

Outcome check_gradient() {
  std::string worst_entity, worst_event;
  std::size_t cands = 0;
  const double entity = fixtures::mini_gradient_error(MentionKind::kEntity, &worst_entity, &cands);
  const double event = fixtures::mini_gradient_error(MentionKind::kEvent, &worst_event);
  const bool pass = entity < 1e-4 && event < 1e-4 && cands == 3;
  return {pass, "max rel error entity " + fmt("%.2e", entity) + " (" + worst_entity + "), event " +
                    fmt("%.2e", event) + " (" + worst_event + "), max candidates " +
                    std::to_string(cands)};
}

// Exhaustive search over cluster permutations for the CEAF-e alignment.
double ceaf_oracle(const Clustering& key, const Clustering& response) {
  const auto k = key.clusters();
  const auto r = response.clusters();
  auto phi = [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::size_t common = 0;
    for (const auto& x : a) common += std::count(b.begin(), b.end(), x);
    return 2.0 * static_cast<double>(common) / static_cast<double>(a.size() + b.size());
  };
  const bool key_small = k.size() <= r.size();
  const auto& small = key_small ? k : r;
  const auto& large = key_small ? r : k;
  std::vector<std::size_t> idx(large.size());
  std::iota(idx.begin(), idx.end(), 0);
  double best = 0;
  do {
    double s = 0;
    for (std::size_t i = 0; i < small.size(); ++i) s += phi(small[i], large[idx[i]]);
    best = std::max(best, s);
  } while (std::next_permutation(idx.begin(), idx.end()));
  const double p = best / static_cast<double>(r.size());
  const double rec = best / static_cast<double>(k.size());
  return p + rec > 0 ? 2 * p * rec / (p + rec) : 0.0;
}

Outcome check_metric_suite() {
  const auto gold = groups({{"a", "b", "c"}, {"d"}});
  const auto pred = groups({{"a", "b"}, {"c", "d"}});
  const auto s = evaluate_coref(pred, gold);
  const double muc_f = s.muc.f1, b3_f = s.b_cubed.f1, ceaf_f = s.ceaf_e.f1, conll = conll_f1(pred, gold);
  bool canonical = std::abs(muc_f - 0.5) < 1e-5 && std::abs(b3_f - 0.70588) < 1e-5 &&
                   std::abs(ceaf_f - 0.73333) < 1e-5 && std::abs(conll - 0.64640) < 1e-5;

  bool identity = true;
  for (const auto& c : {gold, pred, groups({{"a", "b", "c", "d"}}), groups({{"a"}, {"b"}, {"c"}})}) {
    const auto e = evaluate_coref(c, c);
    identity = identity && e.b_cubed.f1 == 1.0 && e.ceaf_e.f1 == 1.0 && conll_f1(c, c) == 1.0 &&
               (!e.muc.defined || e.muc.f1 == 1.0);
  }

  std::mt19937_64 rng(2024);
  int agree = 0;
  double worst = 0;
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + static_cast<int>(rng() % 9);
    const int kc = 1 + static_cast<int>(rng() % 6), rc = 1 + static_cast<int>(rng() % 6);
    Clustering key, response;
    for (int i = 0; i < n; ++i) {
      const std::string id = "m" + std::to_string(i);
      key.assign(id, static_cast<int>(rng() % kc));
      response.assign(id, static_cast<int>(rng() % rc));
    }
    const double gap = std::abs(ceaf_e(response, key).f1 - ceaf_oracle(key, response));
    worst = std::max(worst, gap);
    if (gap < 1e-9) ++agree;
  }
  const bool pass = canonical && identity && agree == 200;
  return {pass, "canonical " + fmt("%.5f", muc_f) + "/" + fmt("%.5f", b3_f) + "/" + fmt("%.5f", ceaf_f) +
                    "/" + fmt("%.5f", conll) + ", identity " + (identity ? "ok" : "broken") +
                    ", ceaf oracle " + std::to_string(agree) + "/200 (max gap " + fmt("%.1e", worst) + ")"};
}

Outcome check_composition() {
  const double err = fixtures::composition_max_error(1000, 7);
  return {err < 1e-6, "1000 ops, max component error " + fmt("%.2e", err)};
}

SynthCorpus one_topic(int docs, int clusters) {
  SynthConfig sc;
  sc.n_topics = 1;
  sc.docs_per_topic = docs;
  sc.mentions_per_doc = 10;
  sc.clusters_per_topic = clusters;
  sc.d_tok = 8;
  return generate_synthetic(sc);
}

Config bench_config() {
  Config c;
  c.d_tok = 8;
  c.d_arg = 4;
  c.d_f = 4;
  c.d_p = 8;
  return c;
}

Outcome check_complexity() {
  const Config config = bench_config();
  const auto params = init_params<float>(config, 0);
  EngineOptions o;
  o.teacher_forced = true;

  const auto seq = one_topic(100, 100);
  const auto st = run_corpus<float>(seq.corpus, seq.embeddings, params, config, o);
  const auto m = st.trace.mentions();
  const auto c = seq.gold.num_clusters();
  const auto b = sequential_bound_check(st.trace, c, m, pairwise_count(seq.corpus, o));
  const bool seq_ok = m == 1000 && c == 100 && b.invocations <= 101000 && b.pairwise == 499500 &&
                      b.ratio < 0.21;

  auto stream_at = [&](int docs) {
    const auto s = one_topic(docs, 50);
    auto [head, last] = fixtures::split_last(s.corpus);
    const auto state = run_corpus<float>(head, s.embeddings, params, config, o);
    return streaming_cost(state, *last, s.embeddings.at(last->doc_id), params, config, o);
  };
  const auto small = stream_at(101);
  const auto big = stream_at(201);
  const bool stream_ok = small.m == 1000 && big.m == 2000 && small.c == 50 && big.c == 50 &&
                         small.ours <= 610 && small.pairwise == 10045 && small.ours == big.ours;
  return {seq_ok && stream_ok,
          "sequential m=" + std::to_string(m) + " c=" + std::to_string(c) + ": " +
              std::to_string(b.invocations) + " scores vs pairwise " + std::to_string(b.pairwise) +
              " (ratio " + fmt("%.3f", b.ratio) + "); streaming c=50: " + std::to_string(small.ours) +
              " at m=1000, " + std::to_string(big.ours) + " at m=2000, bound 610, pairwise " +
              std::to_string(small.pairwise)};
}

Outcome check_streaming() {
  int equal = 0;
  for (int i = 0; i < 20; ++i) {
    const auto s = fixtures::varied_corpus(i);
    const auto c = fixtures::varied_config(s);
    const auto p = init_params<float>(c, static_cast<std::uint64_t>(i));
    if (fixtures::streaming_equivalent(s, p, c, fixtures::varied_options(s, false))) ++equal;
  }
  return {equal == 20, std::to_string(equal) + "/20 corpora with identical clustering"};
}

Outcome check_learning() {
  SynthConfig sc;  // 2 topics, 10 docs/topic, 8 clusters/topic, 6 mentions/doc, separation 8, seed 0
  const auto train_set = generate_synthetic(sc);
  sc.sample_seed = 1;
  const auto dev_set = generate_synthetic(sc);
  Config c;
  c.d_tok = 16;
  c.d_arg = 8;
  c.d_f = 8;
  c.d_p = 50;
  c.k = 4;
  c.learning_rate = 1e-3;
  c.max_epochs = 80;
  EngineOptions o;
  const TrainData td{&train_set.corpus, &train_set.embeddings, o};
  const TrainData dd{&dev_set.corpus, &dev_set.embeddings, o};
  const auto r = train<float>(td, dd, c);
  const double untrained = r.log.front().dev_conll_f1;
  const double lemma = conll_f1(lemma_baseline(dev_set.corpus, o), dev_set.gold);
  const double best = r.best_dev_f1;
  const bool pass = best >= 0.90 && best - lemma >= 0.2 && best - untrained >= 0.2;
  return {pass, "best dev CoNLL F1 " + fmt("%.3f", best) + " at epoch " + std::to_string(r.best_epoch) +
                    " (threshold 0.90), lemma " + fmt("%.3f", lemma) + ", untrained " +
                    fmt("%.3f", untrained)};
}

Outcome check_ablation() {
  SynthConfig sc;
  sc.event_mode = true;
  const auto train_set = generate_synthetic(sc);
  sc.sample_seed = sc.seed + 1000;
  const auto dev_set = generate_synthetic(sc);
  double f1[2] = {0, 0};
  for (int use = 0; use < 2; ++use) {
    Config c = Config::for_mode(MentionKind::kEvent);
    c.d_tok = 16;
    c.d_arg = 8;
    c.d_f = 8;
    c.d_p = 16;
    c.max_epochs = 40;
    c.use_arg_feature = use == 1;
    EngineOptions to, dop;
    to.kind = dop.kind = MentionKind::kEvent;
    to.entity_clustering = &train_set.entity_gold;
    dop.entity_clustering = &dev_set.entity_gold;
    const TrainData td{&train_set.corpus, &train_set.embeddings, to};
    const TrainData dd{&dev_set.corpus, &dev_set.embeddings, dop};
    f1[use] = train<float>(td, dd, c).best_dev_f1;
  }
  return {f1[1] > f1[0], "dev CoNLL F1 with argument feature " + fmt("%.3f", f1[1]) + ", without " +
                             fmt("%.3f", f1[0])};
}

// Pair-counting ARI and entropy-based homogeneity/completeness written out
// directly, independent of the contingency code under test.
ClusteringQuality quality_oracle(const Clustering& pred, const Clustering& gold) {
  const auto ids = gold.labels();
  std::vector<std::string> items;
  for (const auto& [id, _] : ids) items.push_back(id);
  const double n = static_cast<double>(items.size());
  double both = 0, same_pred = 0, same_gold = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      const bool p = pred.at(items[i]) == pred.at(items[j]);
      const bool g = gold.at(items[i]) == gold.at(items[j]);
      both += p && g;
      same_pred += p;
      same_gold += g;
    }
  }
  const double pairs = n * (n - 1) / 2;
  const double expected = same_pred * same_gold / pairs;
  const double top = (same_pred + same_gold) / 2;
  ClusteringQuality q;
  q.ari = top == expected ? 1.0 : (both - expected) / (top - expected);

  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pc, gc;
  for (const auto& id : items) {
    joint[{pred.at(id), gold.at(id)}] += 1;
    pc[pred.at(id)] += 1;
    gc[gold.at(id)] += 1;
  }
  auto entropy = [&](const std::map<int, double>& counts) {
    double h = 0;
    for (const auto& [_, v] : counts) h -= v / n * std::log(v / n);
    return h;
  };
  double h_g_given_p = 0, h_p_given_g = 0;
  for (const auto& [k, v] : joint) {
    h_g_given_p -= v / n * std::log(v / pc[k.first]);
    h_p_given_g -= v / n * std::log(v / gc[k.second]);
  }
  const double hg = entropy(gc), hp = entropy(pc);
  q.homogeneity = hg == 0 ? 1.0 : 1 - h_g_given_p / hg;
  q.completeness = hp == 0 ? 1.0 : 1 - h_p_given_g / hp;
  q.v_measure = q.homogeneity + q.completeness == 0
                    ? 0.0
                    : 2 * q.homogeneity * q.completeness / (q.homogeneity + q.completeness);
  return q;
}

Outcome check_topic_clustering() {
  double min_ari = 1, worst_gap = 0;
  int runs = 0;
  for (int nt : {2, 4}) {
    for (int seed = 0; seed < 10; ++seed) {
      SynthConfig sc;
      sc.seed = static_cast<std::uint64_t>(seed);
      sc.n_topics = nt;
      sc.separation = 5;
      const auto s = generate_synthetic(sc);
      const auto f = tfidf_features(s.corpus, default_stopword_set());
      const auto pred = topic_clustering(f, nt, static_cast<std::uint64_t>(seed));
      const auto q = clustering_quality(pred, s.topics);
      const auto o = quality_oracle(pred, s.topics);
      min_ari = std::min(min_ari, q.ari);
      for (double gap : {q.ari - o.ari, q.homogeneity - o.homogeneity, q.completeness - o.completeness,
                         q.v_measure - o.v_measure}) {
        worst_gap = std::max(worst_gap, std::abs(gap));
      }
      ++runs;
    }
  }
  // Quality oracle on fixed contingency tables as well.
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    Clustering a, b;
    for (int i = 0; i < 30; ++i) {
      a.assign("d" + std::to_string(i), static_cast<int>(rng() % 4));
      b.assign("d" + std::to_string(i), static_cast<int>(rng() % 3));
    }
    const auto q = clustering_quality(a, b);
    const auto o = quality_oracle(a, b);
    for (double gap : {q.ari - o.ari, q.homogeneity - o.homogeneity, q.completeness - o.completeness}) {
      worst_gap = std::max(worst_gap, std::abs(gap));
    }
  }
  return {min_ari >= 0.9 && worst_gap < 1e-9,
          std::to_string(runs) + " corpora (2 and 4 topics), min ARI " + fmt("%.3f", min_ari) +
              ", max quality gap vs oracle " + fmt("%.1e", worst_gap)};
}

Outcome check_teacher_forcing() {
  int exact = 0;
  for (int i = 0; i < 20; ++i) {
    const auto s = fixtures::varied_corpus(i);
    const auto c = fixtures::varied_config(s);
    const auto p = init_params<float>(c, static_cast<std::uint64_t>(i));
    const auto st = run_corpus<float>(s.corpus, s.embeddings, p, c, fixtures::varied_options(s, true));
    if (st.clustering() == s.gold && conll_f1(st.clustering(), s.gold) == 1.0) ++exact;
  }
  return {exact == 20, std::to_string(exact) + "/20 corpora reproduce gold with CoNLL F1 1.0"};
}

}  // namespace

int main() {
  run("gradient correctness", check_gradient);
  run("metric oracle suite", check_metric_suite);
  run("incremental composition", check_composition);
  run("complexity", check_complexity);
  run("streaming equivalence", check_streaming);
  run("learning sanity", check_learning);
  run("event ablation direction", check_ablation);
  run("topic clustering", check_topic_clustering);
  run("teacher forcing exactness", check_teacher_forcing);
  return failures == 0 ? 0 : 1;
}
