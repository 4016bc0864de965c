#include <cstring>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "xcoref/io.hpp"
#include "xcoref/synth.hpp"

using namespace xcoref;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

Corpus parse(const std::string& text, MentionKind mode = MentionKind::kEntity) {
  std::istringstream in(text);
  return parse_corpus(in, mode);
}

const char* kEventDoc =
    R"({"doc_id":"d1","topic_gold":"t","tokens":["Ann","met","Bob","Monday","Paris"],)"
    R"("mentions":[)"
    R"({"mention_id":"m2","kind":"event","start":1,"end":1,"gold_cluster":"v",)"
    R"("args":[{"role":"ARG1","mention_id":"m3"},{"role":"ARG0","mention_id":"m1"},)"
    R"({"role":"TIME","mention_id":"m5"},{"role":"LOC","mention_id":"m4"}]},)"
    R"({"mention_id":"m1","kind":"entity","start":0,"end":0,"entity_type":"PERSON"},)"
    R"({"mention_id":"m3","kind":"entity","start":2,"end":2,"entity_type":"PERSON"},)"
    R"({"mention_id":"m4","kind":"entity","start":3,"end":3,"entity_type":"TIME"},)"
    R"({"mention_id":"m5","kind":"entity","start":4,"end":4,"entity_type":"LOC"}]})";

}  // namespace

TEST(Corpus, MinimalDocument) {
  auto c = parse(R"({"doc_id":"a","tokens":["x"],"mentions":[{"mention_id":"m","kind":"entity","start":0,"end":0}]})");
  EXPECT_EQ(c.size(), 1u);
  EXPECT_EQ(c.count_mentions(MentionKind::kEntity), 1u);
  EXPECT_FALSE(c.doc(0).topic_gold.has_value());
}

TEST(Corpus, SpanOutOfOrderIsMalformed) {
  EXPECT_EQ(code_of([] {
              parse(R"({"doc_id":"a","tokens":["x","y"],"mentions":[{"mention_id":"m","kind":"entity","start":1,"end":0}]})");
            }),
            ErrorCode::kMalformedRecord);
}

TEST(Corpus, ErrorsCarryLineNumber) {
  try {
    parse("{\"doc_id\":\"a\",\"tokens\":[],\"mentions\":[]}\n{bad json}\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedRecord);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Corpus, DuplicateDocId) {
  EXPECT_EQ(code_of([] {
              parse("{\"doc_id\":\"a\",\"tokens\":[],\"mentions\":[]}\n{\"doc_id\":\"a\",\"tokens\":[],\"mentions\":[]}\n");
            }),
            ErrorCode::kDuplicateDocId);
}

TEST(Corpus, DanglingArgument) {
  EXPECT_EQ(code_of([] {
              parse(R"({"doc_id":"a","tokens":["x"],"mentions":[{"mention_id":"e","kind":"event","start":0,"end":0,"args":[{"role":"ARG0","mention_id":"nope"}]}]})",
                    MentionKind::kEvent);
            }),
            ErrorCode::kDanglingArgumentRef);
}

TEST(Corpus, TypeConstraintDropsArguments) {
  auto c = parse(kEventDoc, MentionKind::kEvent);
  // TIME filled by a LOC entity and LOC by a TIME entity are both dropped.
  EXPECT_EQ(c.dropped_arguments(), 2);
  const auto& ev = c.mention(*c.find_mention("m2"));
  ASSERT_EQ(ev.args.size(), 2u);
  for (const auto& a : ev.args) {
    const auto& ent = c.mention(*c.find_mention(a.mention_id));
    EXPECT_EQ(a.role == Role::kTime, ent.entity_type == EntityType::kTime);
    EXPECT_EQ(a.role == Role::kLoc, ent.entity_type == EntityType::kLoc);
  }
}

TEST(Corpus, SingleDroppedArgumentCountsOne) {
  auto c = parse(
      R"({"doc_id":"a","tokens":["hit","Paris"],"mentions":[{"mention_id":"e","kind":"event","start":0,"end":0,"args":[{"role":"TIME","mention_id":"p"}]},{"mention_id":"p","kind":"entity","start":1,"end":1,"entity_type":"LOC"}]})",
      MentionKind::kEvent);
  EXPECT_EQ(c.dropped_arguments(), 1);
}

TEST(Corpus, MentionsOrderedBySpanAndLinksDerived) {
  auto c = parse(kEventDoc, MentionKind::kEvent);
  const auto& ms = c.doc(0).mentions;
  std::vector<std::string> ids;
  for (const auto& m : ms) ids.push_back(m.mention_id);
  EXPECT_EQ(ids, (std::vector<std::string>{"m1", "m2", "m3", "m4", "m5"}));
  // Arguments follow mention order.
  EXPECT_EQ(ms[1].args[0].mention_id, "m1");
  EXPECT_EQ(ms[1].args[1].mention_id, "m3");
  ASSERT_EQ(ms[0].events_participated.size(), 1u);
  EXPECT_EQ(ms[0].events_participated[0], (Participation{"m2", Role::kArg0}));
}

TEST(Corpus, IngestionIdempotentAndRoundTrips) {
  auto a = parse(kEventDoc, MentionKind::kEvent);
  auto b = parse(kEventDoc, MentionKind::kEvent);
  EXPECT_TRUE(a == b);
  std::stringstream buf;
  write_corpus(buf, a);
  auto c = parse(buf.str(), MentionKind::kEvent);
  EXPECT_EQ(c.documents(), a.documents());
}

TEST(Corpus, GoldClusteringNeedsGold) {
  auto c = parse(kEventDoc, MentionKind::kEvent);
  EXPECT_EQ(c.gold_clustering(MentionKind::kEvent).size(), 1u);
  EXPECT_EQ(code_of([&] { c.gold_clustering(MentionKind::kEntity); }), ErrorCode::kMissingGold);
}

TEST(Embeddings, CountsAndRoundTripBitExact) {
  SynthConfig sc;
  auto s = generate_synthetic(sc);
  std::stringstream buf;
  write_embeddings(buf, s.embeddings);
  const std::string bytes = buf.str();
  auto back = read_embeddings(buf);
  EXPECT_TRUE(back == s.embeddings);
  std::stringstream again;
  write_embeddings(again, back);
  EXPECT_EQ(again.str(), bytes);
  const auto& d = s.corpus.doc(0);
  EXPECT_EQ(back.at(d.doc_id).tokens.size(), d.tokens.size());
  EXPECT_EQ(back.at(d.doc_id).context.size(), 16u);
}

TEST(Embeddings, ThreeTokenDocument) {
  EmbeddingStore store(2);
  store.put("d", DocEmbeddings{{0, 1}, {{1, 2}, {3, 4}, {5, 6}}});
  std::stringstream buf;
  write_embeddings(buf, store);
  EXPECT_EQ(buf.str().size(), 4 + 4 + 4 + 8 + 4 + 1 + 4 + 4 * 2 * 4u);
}

TEST(Embeddings, Errors) {
  EmbeddingStore store(3);
  store.put("d", DocEmbeddings{{0, 0, 0}, {{1, 1, 1}}});
  std::stringstream buf;
  write_embeddings(buf, store);
  const std::string bytes = buf.str();
  {
    std::istringstream in(bytes);
    EXPECT_EQ(code_of([&] { read_embeddings(in, 2); }), ErrorCode::kDimMismatch);
  }
  {
    std::istringstream in(bytes.substr(0, bytes.size() - 5));
    EXPECT_EQ(code_of([&] { read_embeddings(in); }), ErrorCode::kTruncatedFile);
  }
  Corpus c;
  Document d;
  d.doc_id = "other";
  c.add_document(d);
  EXPECT_EQ(code_of([&] { store.check_covers(c); }), ErrorCode::kMissingDocument);
}

TEST(Config, JsonRoundTripAndValidation) {
  Config c = Config::for_mode(MentionKind::kEvent);
  c.d_tok = 8;
  EXPECT_EQ(c.k, 3);
  EXPECT_EQ(config_from_json(to_json(c)), c);
  EXPECT_EQ(code_of([] { config_from_json({{"bogus", 1}}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { config_from_json({{"d_tok", 4}, {"d_m", 9}}); }), ErrorCode::kShapeMismatch);
  EXPECT_EQ(code_of([] { config_from_json({{"patience", -1}}); }), ErrorCode::kInvalidArgument);
}

TEST(Checkpoint, RoundTrips) {
  Config c;
  c.d_tok = 4;
  c.d_arg = 3;
  c.d_f = 2;
  c.d_p = 5;
  for (auto params : {ModelParams<float>::zeros(c), init_params<float>(c, 42)}) {
    std::stringstream buf;
    save_checkpoint(buf, params, c);
    auto [back, cfg] = load_checkpoint<float>(buf);
    EXPECT_EQ(cfg, c);
    std::vector<float> a, b;
    params.visit([&](const std::string&, const float* d, Eigen::Index r, Eigen::Index k) { a.insert(a.end(), d, d + r * k); });
    back.visit([&](const std::string&, const float* d, Eigen::Index r, Eigen::Index k) { b.insert(b.end(), d, d + r * k); });
    ASSERT_EQ(a.size(), b.size());
    EXPECT_EQ(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)), 0);
  }
}

TEST(Checkpoint, TensorCountMismatch) {
  Config c;
  c.d_tok = 4;
  c.d_arg = 3;
  c.d_f = 2;
  c.d_p = 5;
  std::stringstream buf;
  save_checkpoint(buf, ModelParams<float>::zeros(c), c);
  std::string bytes = buf.str();
  std::uint32_t len = 0;
  std::memcpy(&len, bytes.data(), 4);
  auto manifest = nlohmann::json::parse(bytes.substr(4, len));
  manifest["tensors"].erase(manifest["tensors"].size() - 1);
  const std::string text = manifest.dump();
  std::string edited(4, '\0');
  const auto n = static_cast<std::uint32_t>(text.size());
  std::memcpy(edited.data(), &n, 4);
  edited += text + bytes.substr(4 + len);
  std::istringstream in(edited);
  EXPECT_EQ(code_of([&] { load_checkpoint<float>(in); }), ErrorCode::kShapeMismatch);
  std::istringstream cut(bytes.substr(0, 10));
  EXPECT_EQ(code_of([&] { load_checkpoint<float>(cut); }), ErrorCode::kManifestCorrupt);
}

TEST(Io, ClusteringAndTopicsRoundTrip) {
  auto c = Clustering::from_groups({{"a", "b"}, {"c"}});
  std::stringstream buf;
  write_clustering(buf, c);
  EXPECT_EQ(read_clustering(buf), c);
  std::istringstream dup("{\"mention_id\":\"a\",\"cluster_id\":1}\n{\"mention_id\":\"a\",\"cluster_id\":\"x\"}\n");
  EXPECT_EQ(code_of([&] { read_clustering(dup); }), ErrorCode::kDuplicateMention);

  std::stringstream topics;
  write_topics(topics, Clustering::from_groups({{"d1", "d2"}, {"d3"}}));
  auto t = read_topics(topics);
  EXPECT_EQ(t.size(), 3u);
  EXPECT_EQ(t["d1"], t["d2"]);
  EXPECT_NE(t["d1"], t["d3"]);
}

TEST(Io, EngineStateRoundTrip) {
  SynthConfig sc;
  auto s = generate_synthetic(sc);
  Config cfg;
  cfg.d_tok = 16;
  cfg.d_arg = 4;
  cfg.d_f = 2;
  cfg.d_p = 4;
  auto params = init_params<float>(cfg, 1);
  EngineOptions opt;
  auto state = run_corpus<float>(s.corpus, s.embeddings, params, cfg, opt);
  auto back = state_from_json<float>(nlohmann::json::parse(state_to_json(state).dump()));
  EXPECT_EQ(back.clustering(), state.clustering());
  EXPECT_EQ(back.doc_order, state.doc_order);
  EXPECT_EQ(back.trace.scorer_invocations, state.trace.scorer_invocations);
  for (std::size_t i = 0; i < state.clusters.size(); ++i) {
    const auto& a = state.clusters.cluster(static_cast<int>(i));
    const auto& b = back.clusters.cluster(static_cast<int>(i));
    EXPECT_EQ(a.sum, b.sum);
    EXPECT_EQ(a.topics, b.topics);
  }
}
