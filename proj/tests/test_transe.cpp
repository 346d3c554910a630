#include <doctest.h>

#include <cmath>
#include <random>

#include "okgllm/errors.hpp"
#include "okgllm/sst_data.hpp"
#include "okgllm/transe.hpp"
#include "test_util.hpp"

using namespace okgllm;

TEST_CASE("score identities") {
    Eigen::VectorXd h(2), r(2), t(2);
    h << 1.0, 2.0;
    r << 0.5, -1.0;
    SUBCASE("h + r = t scores zero") {
        t = h + r;
        CHECK(transe_score(h, r, t, 1) == doctest::Approx(0.0));
        CHECK(transe_score(h, r, t, 2) == doctest::Approx(0.0));
    }
    SUBCASE("3-4-5 residual under L2") {
        t = h + r;
        t(0) += 3.0;
        t(1) += 4.0;
        CHECK(transe_score(h, r, t, 2) == doctest::Approx(5.0));
        CHECK(transe_score(h, r, t, 1) == doctest::Approx(7.0));
    }
}

TEST_CASE("margin loss identities") {
    // Inactive hinge: neg score beats pos by more than gamma.
    CHECK(margin_loss({0.0}, {5.0}, 1.0) == doctest::Approx(0.0));
    // Active hinge: gamma + pos - neg.
    CHECK(margin_loss({2.0}, {1.0}, 1.0) == doctest::Approx(2.0));
    // Mean over pairs.
    CHECK(margin_loss({0.0, 2.0}, {5.0, 1.0}, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("margin pair gradient matches finite differences") {
    std::mt19937_64 rng(42);
    for (int p : {1, 2}) {
        for (int trial = 0; trial < 20; ++trial) {
            int d = 6;
            Eigen::VectorXd h = testutil::random_matrix(d, 1, rng).col(0);
            Eigen::VectorXd r = testutil::random_matrix(d, 1, rng).col(0);
            Eigen::VectorXd t = testutil::random_matrix(d, 1, rng).col(0);
            Eigen::VectorXd hn = testutil::random_matrix(d, 1, rng).col(0);
            Eigen::VectorXd tn = testutil::random_matrix(d, 1, rng).col(0);
            double gamma = 1.0;
            MarginPairGrad g = margin_pair_grad(h, r, t, hn, tn, gamma, p);

            // Skip hinge kinks and L1 kinks (finite differences invalid there).
            double pos = transe_score(h, r, t, p);
            double neg = transe_score(hn, r, tn, p);
            if (std::abs(gamma + pos - neg) < 1e-3) continue;

            auto loss_at = [&] {
                return std::max(0.0, gamma + transe_score(h, r, t, p) -
                                         transe_score(hn, r, tn, p));
            };
            CHECK(g.loss == doctest::Approx(loss_at()));

            struct Probe {
                Eigen::VectorXd* vec;
                const Eigen::VectorXd* grad;
            };
            for (Probe pr : {Probe{&h, &g.dh}, Probe{&r, &g.dr}, Probe{&t, &g.dt},
                             Probe{&hn, &g.dh_neg}, Probe{&tn, &g.dt_neg}}) {
                for (int i = 0; i < d; i += 2) {
                    double eps = 1e-6;
                    double saved = (*pr.vec)(i);
                    if (p == 1 && std::abs(saved) < 1e-3) continue;
                    (*pr.vec)(i) = saved + eps;
                    double up = loss_at();
                    (*pr.vec)(i) = saved - eps;
                    double dn = loss_at();
                    (*pr.vec)(i) = saved;
                    double numeric = (up - dn) / (2 * eps);
                    CHECK((*pr.grad)(i) ==
                          doctest::Approx(numeric).epsilon(1e-4).scale(1.0));
                }
            }
        }
    }
}

TEST_CASE("negative sampling avoids known positives and is near-uniform") {
    std::mt19937_64 rng(7);
    KnowledgeGraph g = testutil::random_graph(20, 40, rng);
    std::set<Triple> positives(g.triples().begin(), g.triples().end());

    std::map<std::string, int> counts;
    std::size_t fallbacks = 0;
    int total = 0;
    for (const auto& t : g.triples()) {
        auto negs = sample_negatives(g, t, 50, rng, &fallbacks);
        CHECK(negs.size() == 50);
        for (const auto& n : negs) {
            CHECK(n.relation == t.relation);
            if (fallbacks == 0) {
                // Exactly one slot corrupted, and never a known positive.
                CHECK(((n.head == t.head) != (n.tail == t.tail)));
                CHECK(positives.count(n) == 0);
            }
            counts[n.head == t.head ? n.tail : n.head]++;
            ++total;
        }
    }
    // Every entity should appear as a corruption at a roughly uniform rate.
    double expected = static_cast<double>(total) / 20.0;
    for (const auto& [id, c] : counts)
        CHECK(std::abs(c - expected) < 0.5 * expected);
}

TEST_CASE("embedding table save/load roundtrip is exact") {
    std::mt19937_64 rng(3);
    EmbeddingTable t;
    t.d = 5;
    t.p = 2;
    t.gamma = 1.5;
    t.seed = 99;
    t.epochs_trained = 12;
    t.frozen = true;
    t.entity_vectors["a"] = testutil::random_matrix(5, 1, rng).col(0);
    t.entity_vectors["b"] = testutil::random_matrix(5, 1, rng).col(0);
    t.relation_vectors["r"] = testutil::random_matrix(5, 1, rng).col(0);

    std::string path = testutil::tmp_path("table.bin");
    t.save(path);
    EmbeddingTable t2 = EmbeddingTable::load(path);
    CHECK(t2.d == t.d);
    CHECK(t2.frozen == t.frozen);
    CHECK(t2.entity("a") == t.entity("a"));
    CHECK(t2.relation("r") == t.relation("r"));
    CHECK(t2.checksum() == t.checksum());
    CHECK_THROWS_AS(t2.entity("ghost"), LookupError);
}

TEST_CASE("pretraining reduces loss and beats random ranking") {
    SyntheticConfig sc;
    sc.regions = 30;
    sc.currents = 4;
    sc.seas = 3;
    sc.timesteps = 40;
    SyntheticDataset ds = make_synthetic(sc);

    TransEConfig tc;
    tc.d = 16;
    tc.epochs = 60;
    tc.seed = 11;
    PretrainResult result = pretrain(ds.graph, tc);
    REQUIRE(result.epoch_mean_loss.size() == 60);
    CHECK(result.epoch_mean_loss.back() < result.epoch_mean_loss.front());
    CHECK(result.table.frozen);

    double rank = filtered_mean_rank(ds.graph, result.table, ds.graph.triples());
    double random_baseline = (static_cast<double>(ds.graph.entities().size()) + 1) / 2;
    CHECK(rank < random_baseline);

    SUBCASE("entity vectors are unit-renormalized") {
        for (const auto& [id, v] : result.table.entity_vectors)
            CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("same seed reproduces the table exactly") {
        PretrainResult again = pretrain(ds.graph, tc);
        CHECK(again.table.checksum() == result.table.checksum());
        CHECK(again.epoch_mean_loss == result.epoch_mean_loss);
    }
}

TEST_CASE("transe config validation") {
    TransEConfig tc;
    tc.gamma = -1.0;
    CHECK_THROWS_AS(tc.validate(), ConfigError);
    tc = TransEConfig{};
    tc.p = 3;
    CHECK_THROWS_AS(tc.validate(), ConfigError);
    tc = TransEConfig{};
    tc.d = 0;
    CHECK_THROWS_AS(tc.validate(), ConfigError);
}
