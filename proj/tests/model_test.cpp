#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"
#include "xcoref/cluster.hpp"
#include "xcoref/encoder.hpp"
#include "xcoref/scorer.hpp"
#include "xcoref/trainer.hpp"

using namespace xcoref;

namespace {

using V = Vec<double>;

V vec(std::initializer_list<double> xs) {
  V v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Config small_config() {
  Config c;
  c.d_tok = 3;
  c.d_arg = 2;
  c.d_f = 2;
  c.d_p = 4;
  return c;
}

// Plain-loop LSTM over one direction; returns the per-step hidden states.
std::vector<std::vector<double>> lstm_oracle(const LstmParams<double>& p, const std::vector<V>& xs,
                                             bool reverse) {
  const int h = static_cast<int>(p.w_hh.cols());
  const int d = static_cast<int>(p.w_ih.cols());
  std::vector<double> hs(h, 0.0), cs(h, 0.0);
  std::vector<std::vector<double>> out;
  const std::size_t n = xs.size();
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  for (std::size_t s = 0; s < n; ++s) {
    const V& x = xs[reverse ? n - 1 - s : s];
    std::vector<double> z(4 * h);
    for (int r = 0; r < 4 * h; ++r) {
      double acc = p.b[r];
      for (int j = 0; j < d; ++j) acc += p.w_ih(r, j) * x[j];
      for (int j = 0; j < h; ++j) acc += p.w_hh(r, j) * hs[j];
      z[r] = acc;
    }
    for (int j = 0; j < h; ++j) {
      double i = sig(z[j]), f = sig(z[h + j]), g = std::tanh(z[2 * h + j]), o = sig(z[3 * h + j]);
      cs[j] = f * cs[j] + i * g;
      hs[j] = o * std::tanh(cs[j]);
    }
    out.push_back(hs);
  }
  return out;
}

}  // namespace

TEST(Encoder, SpanConcatenation) {
  EXPECT_EQ(encode_span<double>(vec({1, 2}), vec({3, 4})), vec({1, 2, 3, 4}));
  EXPECT_EQ(encode_span<double>(vec({5, 6}), vec({5, 6})), vec({5, 6, 5, 6}));
  EXPECT_EQ(encode_span<double>(V::Zero(3), V::Zero(3)), V::Zero(6));
}

TEST(Encoder, EmptyArgumentsEncodeToZero) {
  auto p = init_params<double>(small_config(), 1);
  EXPECT_EQ(aggregate_args<double>({}, p), V::Zero(4));
}

TEST(Encoder, ZeroRecurrentWeightsGiveZero) {
  auto p = ModelParams<double>::zeros(small_config());
  std::vector<V> args = {V::Ones(6), V::Constant(6, -2.0)};
  EXPECT_EQ(aggregate_args<double>(args, p), V::Zero(4));
}

TEST(Encoder, MatchesScalarLstm) {
  auto p = init_params<double>(small_config(), 5);
  std::mt19937 rng(2);
  std::normal_distribution<double> g;
  std::vector<V> args;
  for (int i = 0; i < 4; ++i) {
    V a(6);
    for (auto& x : a) x = g(rng);
    args.push_back(a);
  }
  const auto fwd = lstm_oracle(p.fwd, args, false);
  const auto bwd = lstm_oracle(p.bwd, args, true);
  V expect = V::Zero(4);
  for (std::size_t t = 0; t < 4; ++t) {
    for (int j = 0; j < 2; ++j) {
      expect[j] += fwd[t][static_cast<std::size_t>(j)] / 4;
      expect[2 + j] += bwd[3 - t][static_cast<std::size_t>(j)] / 4;
    }
  }
  EXPECT_LT((aggregate_args(args, p) - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Encoder, ComposeMatchesNaiveProduct) {
  auto p = init_params<double>(small_config(), 9);
  V span = V::LinSpaced(6, -1, 1), args = vec({0.5, -0.25, 0.1, 0.3});
  V h = compose_mention(span, args, p);
  V in = concat(span, args);
  for (Eigen::Index r = 0; r < p.w_a.rows(); ++r) {
    double acc = p.b_a[r];
    for (Eigen::Index c = 0; c < p.w_a.cols(); ++c) acc += p.w_a(r, c) * in[c];
    EXPECT_NEAR(h[r], acc, 1e-12);
  }
}

TEST(Encoder, ComposeSpecialCases) {
  auto p = ModelParams<double>::zeros(small_config());
  p.b_a = V::Constant(6, 0.5);
  V span = V::LinSpaced(6, 1, 6), args = V::Ones(4);
  EXPECT_EQ(compose_mention(span, args, p), p.b_a);
  p.b_a.setZero();
  p.w_a.leftCols(6) = Mat<double>::Identity(6, 6);
  EXPECT_EQ(compose_mention(span, args, p), span);
}

TEST(Cluster, ContextualizeSpecialCases) {
  auto p = ModelParams<double>::zeros(small_config());
  EXPECT_EQ(contextualize<double>(V::Ones(6), V::Ones(6), p), V::Zero(6));
  p.b_c = V::LinSpaced(6, -1, 1);
  EXPECT_EQ(contextualize<double>(V::Ones(6), V::Ones(6), p), V(p.b_c.array().tanh()));
}

TEST(Cluster, SingletonCandidateLifting) {
  EXPECT_EQ(singleton_candidate<double>(vec({1, 2})), vec({1, 2, 1, 2}));
  EXPECT_EQ(singleton_candidate<double>(V::Zero(2)), V::Zero(4));
  V ctx = vec({3, 4});
  EXPECT_NEAR(singleton_candidate(ctx).norm(), std::sqrt(2.0) * 5, 1e-12);
}

TEST(Cluster, IncrementalMean) {
  ClusterState<double> s;
  EXPECT_EQ(s.new_cluster(vec({1, 2}), "a"), 0);
  EXPECT_EQ(s.cluster(0).rep(), vec({1, 2}));
  s.add_member(0, vec({3, 6}), "b");
  EXPECT_EQ(s.cluster(0).rep(), vec({2, 4}));
  EXPECT_EQ(s.new_cluster(vec({0, 0}), "c"), 1);
  s.new_cluster(vec({0, 0}), "d");
  EXPECT_EQ(s.new_cluster(vec({0, 0}), "e"), 3);
  ClusterState<double> same;
  same.new_cluster(vec({1, 1}), "x");
  same.add_member(0, vec({1, 1}), "y");
  EXPECT_EQ(same.cluster(0).rep(), vec({1, 1}));
  try {
    s.add_member(7, vec({0, 0}), "z");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownCluster);
  }
}

TEST(Scorer, Cosine) {
  EXPECT_DOUBLE_EQ(cosine<double>(vec({1, 0}), vec({0, 1})), 0.0);
  EXPECT_DOUBLE_EQ(cosine<double>(vec({2, 0}), vec({1, 0})), 1.0);
  EXPECT_DOUBLE_EQ(cosine<double>(vec({0, 0}), vec({1, 0})), 0.0);
}

TEST(Scorer, MultiPerspectiveCosine) {
  V a = vec({1, 2}), b = vec({2, -1});
  std::vector<Mat<double>> ident = {Mat<double>::Identity(2, 2)};
  EXPECT_EQ(mp_cosine<double>(a, b, ident), vec({cosine(a, b)}));
  std::vector<Mat<double>> zero = {Mat<double>::Zero(3, 2), Mat<double>::Zero(3, 2)};
  EXPECT_EQ(mp_cosine<double>(a, b, zero), V::Zero(2));
}

TEST(Scorer, ArgumentFeature) {
  Mat<double> f_emb(2, 2);
  f_emb << 1, 2, 3, 4;
  RoleFillers q, m;
  EXPECT_EQ(arg_coref_feature<double>(argument_agreement(q, std::vector<const RoleFillers*>{&m}), f_emb),
            V::Zero(2));
  q.clusters[0] = {5};
  m.clusters[0] = {5};
  EXPECT_EQ(arg_coref_feature<double>(argument_agreement(q, std::vector<const RoleFillers*>{&m}), f_emb),
            vec({3, 4}));
  q.clusters[1] = {6};
  m.clusters[1] = {7};
  EXPECT_EQ(arg_coref_feature<double>(argument_agreement(q, std::vector<const RoleFillers*>{&m}), f_emb),
            vec({2, 3}));
}

TEST(Scorer, FeatureVectorLayout) {
  V h = vec({1, -2}), zero = V::Zero(2);
  auto f = feature_vector<double>(h, h, 1.0, vec({0.5}));
  EXPECT_EQ(f.size(), 2 * 2 + 1 + 1);
  EXPECT_EQ(f.segment(2, 2), V::Zero(2));
  EXPECT_DOUBLE_EQ(f[4], 1.0);
  auto p = ModelParams<double>::zeros(small_config());
  auto cf = candidate_features<double>(V::Ones(6), V::Zero(6), p, nullptr);
  EXPECT_EQ(cf.h_f.head(6), V::Zero(6));
  EXPECT_DOUBLE_EQ(cf.cos, 0.0);
  (void)zero;
}

TEST(Scorer, Softmax) {
  auto u = softmax_distribution<double>(vec({0.3, 0.3, 0.3}));
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(u.probs[i], 1.0 / 3, 1e-15);
  auto d = softmax_distribution<double>(vec({0, std::log(2.0)}));
  EXPECT_NEAR(d.probs[0], 1.0 / 3, 1e-15);
  EXPECT_NEAR(d.probs[1], 2.0 / 3, 1e-15);
  EXPECT_DOUBLE_EQ(softmax_distribution<double>(vec({-4})).probs[0], 1.0);
}

TEST(Scorer, ArgmaxTieBreak) {
  EXPECT_EQ(predict_link<double>(vec({0.2, 0.7, 0.1})), 1u);
  EXPECT_EQ(predict_link<double>(vec({0.5, 0.5})), 0u);
  EXPECT_EQ(predict_link<double>(V::Constant(4, 0.25)), 0u);
}

TEST(Loss, AnalyticValues) {
  EXPECT_NEAR(link_nll<double>(V::Zero(4), 2), std::log(4.0), 1e-12);
  std::vector<TrainingStep<double>> steps(2);
  steps[0].dist = softmax_distribution<double>(vec({0, 0}));
  steps[1].dist = softmax_distribution<double>(V::Zero(4));
  EXPECT_NEAR(document_loss(steps), (std::log(2.0) + std::log(4.0)) / 2, 1e-12);
  std::vector<TrainingStep<double>> sure(1);
  sure[0].dist = softmax_distribution<double>(vec({0, 800}));
  sure[0].gold = 1;
  EXPECT_NEAR(document_loss(sure), 0.0, 1e-12);
}

TEST(Gradients, EntityModeMatchesFiniteDifferences) {
  std::string worst;
  std::size_t cands = 0;
  EXPECT_LT(fixtures::mini_gradient_error(MentionKind::kEntity, &worst, &cands), 1e-4) << worst;
  EXPECT_EQ(cands, 3u);
}

TEST(Gradients, EventModeMatchesFiniteDifferences) {
  std::string worst;
  EXPECT_LT(fixtures::mini_gradient_error(MentionKind::kEvent, &worst), 1e-4) << worst;
}

TEST(Gradients, UnusedTensorHasZeroGradient) {
  const auto s = fixtures::mini_corpus(MentionKind::kEntity);
  const Config c = fixtures::mini_config(MentionKind::kEntity);
  const auto prepared = prepare_corpus<double>(s.corpus, s.embeddings, c, fixtures::mini_options(s, MentionKind::kEntity));
  auto p = init_params<double>(c, 1);
  auto g = p;
  g.set_zero();
  corpus_loss(prepared, c, p, &g);
  EXPECT_EQ(g.f_emb, Mat<double>::Zero(2, c.d_f));
  EXPECT_GT(global_norm(g), 0.0);
}

TEST(Gradients, RepeatedDocumentDoublesGradient) {
  const auto s = fixtures::mini_corpus(MentionKind::kEntity);
  const Config c = fixtures::mini_config(MentionKind::kEntity);
  const auto prepared = prepare_corpus<double>(s.corpus, s.embeddings, c, fixtures::mini_options(s, MentionKind::kEntity));
  auto p = init_params<double>(c, 1);
  TeacherForcedReplay<double> replay(prepared, c);
  auto once = p, twice = p;
  once.set_zero();
  twice.set_zero();
  replay.evaluate(p, &once);
  replay.evaluate(p, &twice);
  replay.evaluate(p, &twice);
  EXPECT_NEAR(global_norm(twice), 2 * global_norm(once), 1e-12);
  EXPECT_LT((twice.w_a - 2 * once.w_a).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Clip, Behaviour) {
  Config c = small_config();
  auto g = ModelParams<double>::zeros(c);
  g.b_o[0] = 15;
  clip_gradients(g, 30.0);
  EXPECT_DOUBLE_EQ(g.b_o[0], 15.0);
  g.b_o[0] = 0;
  g.w_o[0] = 60;
  clip_gradients(g, 30.0);
  EXPECT_DOUBLE_EQ(g.w_o[0], 30.0);
  EXPECT_DOUBLE_EQ(g.w_o[1], 0.0);

  auto r = init_params<double>(c, 4);
  r.w_a *= 100;
  auto before = r;
  clip_gradients(r, 30.0);
  EXPECT_LE(global_norm(r), 30.0 + 1e-6);
  // Direction is preserved.
  const double ratio = r.w_a(0, 0) / before.w_a(0, 0);
  EXPECT_NEAR((r.w_x - ratio * before.w_x).cwiseAbs().maxCoeff(), 0.0, 1e-12);

  g.w_o[0] = std::numeric_limits<double>::infinity();
  try {
    clip_gradients(g, 30.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFiniteGradient);
  }
}

TEST(Training, LossDescendsOnTinyCorpus) {
  const auto s = fixtures::mini_corpus(MentionKind::kEntity);
  Config c = fixtures::mini_config(MentionKind::kEntity);
  c.learning_rate = 1e-3;
  const auto prepared = prepare_corpus<double>(s.corpus, s.embeddings, c, fixtures::mini_options(s, MentionKind::kEntity));
  auto p = init_params<double>(c, 2);
  Adam<double> opt(p, c.learning_rate);
  double prev = train_epoch<double>(prepared, c, p, nullptr);
  for (int e = 0; e < 5; ++e) {
    train_epoch<double>(prepared, c, p, &opt);
    const double now = train_epoch<double>(prepared, c, p, nullptr);
    EXPECT_LE(now, prev + 1e-9);
    prev = now;
  }
}

TEST(Training, DeterministicAndPatienceZero) {
  SynthConfig sc;
  sc.docs_per_topic = 4;
  sc.d_tok = 4;
  auto tr = generate_synthetic(sc);
  sc.sample_seed = 9;
  auto dv = generate_synthetic(sc);
  Config c;
  c.d_tok = 4;
  c.d_arg = 3;
  c.d_f = 2;
  c.d_p = 3;
  c.max_epochs = 6;
  c.patience = 0;
  EngineOptions o;
  TrainData td{&tr.corpus, &tr.embeddings, o}, dd{&dv.corpus, &dv.embeddings, o};
  auto a = train<float>(td, dd, c);
  auto b = train<float>(td, dd, c);
  EXPECT_EQ(a.params.w_a, b.params.w_a);
  EXPECT_EQ(a.params.w_o, b.params.w_o);
  ASSERT_EQ(a.log.size(), b.log.size());
  EXPECT_EQ(a.log.front().epoch, 0);
  // Patience 0: the run ends at the first epoch that does not improve.
  for (std::size_t i = 1; i + 1 < a.log.size(); ++i) {
    EXPECT_GT(a.log[i].dev_conll_f1, [&] {
      double best = 0;
      for (std::size_t j = 0; j < i; ++j) best = std::max(best, a.log[j].dev_conll_f1);
      return best;
    }());
  }
  EXPECT_TRUE(a.log.back().stopped);
}
