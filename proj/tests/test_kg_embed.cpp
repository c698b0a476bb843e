#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "hypkg/kg_embed.hpp"
#include "hypkg/rng.hpp"

using namespace hypkg;

namespace {

// Toy graph used by the training sanity checks: 20 entities in two rings of
// 10, two relations (next-in-ring and cross-ring partner), 60 triples.
KnowledgeGraph toy_ring_kg() {
  KnowledgeGraph kg;
  auto name = [](int cluster, int i) {
    return "e" + std::to_string(cluster * 10 + i);
  };
  for (int cluster = 0; cluster < 2; ++cluster) {
    for (int i = 0; i < 10; ++i) {
      kg.add_triple(name(cluster, i), "next", name(cluster, (i + 1) % 10));
      kg.add_triple(name(cluster, i), "next", name(cluster, (i + 2) % 10));
    }
  }
  for (int i = 0; i < 10; ++i) {
    kg.add_triple(name(0, i), "partner", name(1, i));
    kg.add_triple(name(1, i), "partner", name(0, (i + 1) % 10));
  }
  return kg;
}

double mean_observed_score(const KnowledgeGraph& kg, const EmbeddingTable& t) {
  double sum = 0.0;
  for (const Triple& triple : kg.triples()) sum += score_triple(t, triple);
  return sum / static_cast<double>(kg.triples().size());
}

double mean_corrupted_score(const KnowledgeGraph& kg, const EmbeddingTable& t,
                            std::uint64_t seed) {
  Rng rng(seed);
  double sum = 0.0;
  int count = 0;
  for (const Triple& triple : kg.triples()) {
    Triple corrupted = triple;
    if (rng.coin()) {
      corrupted.head = static_cast<EntityId>(rng.uniform_index(kg.entity_count()));
    } else {
      corrupted.tail = static_cast<EntityId>(rng.uniform_index(kg.entity_count()));
    }
    sum += score_triple(t, corrupted);
    ++count;
  }
  return sum / count;
}

}  // namespace

TEST_SUITE("kg_embed") {

TEST_CASE("complex_score hand-checked values") {
  // 1 complex dim, packed [re, im]
  CHECK(complex_score(std::vector{1.0, 0.0}, std::vector{0.0, 1.0},
                      std::vector{0.0, 1.0}) == doctest::Approx(1.0));
  CHECK(complex_score(std::vector{1.0, 0.0}, std::vector{1.0, 0.0},
                      std::vector{0.0, 1.0}) == doctest::Approx(0.0));
}

TEST_CASE("complex_score of a zero relation is zero") {
  const std::vector<double> h{0.3, -0.2, 0.9, 0.4};
  const std::vector<double> r{0.0, 0.0, 0.0, 0.0};
  const std::vector<double> t{-0.5, 0.1, 0.2, 0.8};
  CHECK(complex_score(h, r, t) == 0.0);
}

TEST_CASE("complex_score is linear in the relation") {
  const std::vector<double> h{0.3, -0.2, 0.9, 0.4};
  const std::vector<double> r{0.7, 0.1, -0.3, 0.2};
  const std::vector<double> t{-0.5, 0.1, 0.2, 0.8};
  std::vector<double> r2 = r;
  for (double& x : r2) x *= -2.5;
  CHECK(complex_score(h, r2, t) ==
        doctest::Approx(-2.5 * complex_score(h, r, t)).epsilon(1e-12));
}

TEST_CASE("complex_score Hermitian symmetry") {
  // score(h, r, t) == score(t, conj(r), h)
  const std::vector<double> h{0.3, -0.2, 0.9, 0.4};
  const std::vector<double> r{0.7, 0.1, -0.3, 0.2};
  const std::vector<double> t{-0.5, 0.1, 0.2, 0.8};
  const std::vector<double> r_conj{0.7, 0.1, 0.3, -0.2};
  CHECK(complex_score(h, r, t) ==
        doctest::Approx(complex_score(t, r_conj, h)).epsilon(1e-12));
}

TEST_CASE("complex_score rejects mismatched or odd dimensions") {
  CHECK_THROWS_AS(complex_score(std::vector{1.0, 0.0}, std::vector{1.0},
                                std::vector{1.0, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(complex_score(std::vector{1.0}, std::vector{1.0},
                                std::vector{1.0}),
                  std::invalid_argument);
}

TEST_CASE("transe_score hand-checked values") {
  CHECK(transe_score(std::vector{0.0, 0.0}, std::vector{1.0, 1.0},
                     std::vector{1.0, 1.0}) == doctest::Approx(0.0));
  CHECK(transe_score(std::vector{0.0, 0.0}, std::vector{0.0, 0.0},
                     std::vector{3.0, 4.0}) == doctest::Approx(-5.0));
}

TEST_CASE("transe_score is never positive") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> h(4), r(4), t(4);
    for (int i = 0; i < 4; ++i) {
      h[static_cast<std::size_t>(i)] = rng.uniform(-2, 2);
      r[static_cast<std::size_t>(i)] = rng.uniform(-2, 2);
      t[static_cast<std::size_t>(i)] = rng.uniform(-2, 2);
    }
    CHECK(transe_score(h, r, t) <= 0.0);
  }
}

TEST_CASE("transe_score is invariant to joint translation of h and t") {
  const std::vector<double> h{0.3, -0.2}, r{0.7, 0.1}, t{-0.5, 0.1};
  std::vector<double> h2 = h, t2 = t;
  for (std::size_t i = 0; i < 2; ++i) {
    h2[i] += 3.25;
    t2[i] += 3.25;
  }
  CHECK(transe_score(h, r, t) ==
        doctest::Approx(transe_score(h2, r, t2)).epsilon(1e-12));
}

TEST_CASE("training separates observed from corrupted triples") {
  const KnowledgeGraph kg = toy_ring_kg();
  REQUIRE(kg.entity_count() == 20);
  REQUIRE(kg.relation_count() == 2);
  REQUIRE(kg.triples().size() == 60);

  EmbedTrainConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 200;
  cfg.learning_rate = 0.05;
  cfg.negatives_per_positive = 5;
  cfg.batch_size = 32;
  cfg.seed = 5;

  const EmbeddingTable table = train_embeddings(kg, cfg);
  const double observed = mean_observed_score(kg, table);
  const double corrupted = mean_corrupted_score(kg, table, 17);
  CHECK(observed > corrupted);
}

TEST_CASE("training is bitwise deterministic for a fixed seed") {
  const KnowledgeGraph kg = toy_ring_kg();
  EmbedTrainConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 20;
  cfg.seed = 42;
  const EmbeddingTable a = train_embeddings(kg, cfg);
  const EmbeddingTable b = train_embeddings(kg, cfg);
  CHECK(a.entity_vectors == b.entity_vectors);
  CHECK(a.relation_vectors == b.relation_vectors);
}

TEST_CASE("training rejects an empty graph") {
  KnowledgeGraph kg;
  EmbedTrainConfig cfg;
  CHECK_THROWS_AS(train_embeddings(kg, cfg), std::invalid_argument);
}

TEST_CASE("held-out MRR beats the random baseline") {
  const KnowledgeGraph kg = toy_ring_kg();
  // Hold out every sixth triple, train on the rest.
  KnowledgeGraph train_kg;
  std::vector<Triple> heldout_named;
  for (std::size_t i = 0; i < kg.triples().size(); ++i) {
    const Triple& t = kg.triples()[i];
    if (i % 6 == 0) {
      heldout_named.push_back(t);
    } else {
      train_kg.add_triple(kg.entity_name(t.head), kg.relation_name(t.relation),
                          kg.entity_name(t.tail));
    }
  }

  EmbedTrainConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 300;
  cfg.learning_rate = 0.05;
  cfg.seed = 5;
  const EmbeddingTable table = train_embeddings(train_kg, cfg);

  // Map held-out triples into the training graph's id space.
  std::vector<Triple> heldout;
  for (const Triple& t : heldout_named) {
    const auto h = train_kg.find_entity(kg.entity_name(t.head));
    const auto r = train_kg.find_relation(kg.relation_name(t.relation));
    const auto tail = train_kg.find_entity(kg.entity_name(t.tail));
    REQUIRE(h);
    REQUIRE(r);
    REQUIRE(tail);
    heldout.push_back(Triple{*h, *r, *tail});
  }
  const double mrr = filtered_mrr(train_kg, table, heldout, 20, 23);
  CHECK(mrr > 1.0 / 20.0);
}

TEST_CASE("pca recovers orthogonal centered columns up to order") {
  // columns are orthogonal, centered, and already sorted by variance
  Matrix m(4, 2);
  m << 2.0, 1.0,
       -2.0, -1.0,
       2.0, -1.0,
       -2.0, 1.0;
  const Matrix projected = pca_reduce(m, 2);
  // component sign convention makes the recovery exact
  CHECK(projected.col(0).isApprox(m.col(0), 1e-9));
  CHECK(projected.col(1).isApprox(m.col(1), 1e-9));
}

TEST_CASE("pca of a rank-1 matrix zeroes the second column") {
  Matrix m(5, 3);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 3; ++j) {
      m(i, j) = static_cast<double>((i - 2) * (j + 1));
    }
  }
  const Matrix projected = pca_reduce(m, 2);
  CHECK(projected.col(1).norm() == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("pca columns are orthogonal with decreasing variance") {
  Rng rng(31);
  Matrix m(4, 3);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) m(i, j) = rng.uniform(-1, 1);
  }
  const Matrix projected = pca_reduce(m, 2);
  CHECK(std::abs(projected.col(0).dot(projected.col(1))) < 1e-8);
  const double var0 = projected.col(0).squaredNorm();
  const double var1 = projected.col(1).squaredNorm();
  CHECK(var0 >= var1);

  // independent check of the projection variances via the covariance trace:
  // total projected variance cannot exceed the input's total variance
  Matrix centered = m.rowwise() - m.colwise().mean();
  CHECK(var0 + var1 <= centered.squaredNorm() + 1e-9);
}

TEST_CASE("pca rejects dims above min(n, m)") {
  Matrix m(3, 2);
  m.setZero();
  CHECK_THROWS_AS(pca_reduce(m, 3), std::invalid_argument);
}

TEST_CASE("pca of a zero-variance matrix is all zeros") {
  Matrix m(4, 3);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) m(i, j) = 5.0;
  }
  const Matrix projected = pca_reduce(m, 2);
  CHECK(projected.norm() == doctest::Approx(0.0));
}

TEST_CASE("embedding file round-trip preserves every value") {
  const KnowledgeGraph kg = toy_ring_kg();
  EmbedTrainConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 5;
  cfg.seed = 9;
  const EmbeddingTable table = train_embeddings(kg, cfg);
  const auto path = std::filesystem::temp_directory_path() / "emb_rt.tsv";
  save_embeddings(table, path);
  const EmbeddingTable loaded = load_embeddings(path);
  REQUIRE(loaded.entity_names == table.entity_names);
  CHECK(loaded.entity_vectors == table.entity_vectors);
}

}  // TEST_SUITE
