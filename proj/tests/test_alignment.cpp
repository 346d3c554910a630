#include <doctest.h>

#include <random>

#include "okgllm/alignment.hpp"
#include "test_util.hpp"

using namespace okgllm;

TEST_CASE("cross attention matches the explicit loop oracle") {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> rows_d(1, 6), keys_d(1, 8);
    for (int trial = 0; trial < 100; ++trial) {
        int d_m = 5, d = 7, d_k = 4;
        AlignmentParams params(d_m, d, d_k, rng);
        int rows = rows_d(rng), keys = keys_d(rng);
        Eigen::MatrixXd q = testutil::random_matrix(rows, d_m, rng);
        Eigen::MatrixXd k = testutil::random_matrix(keys, d, rng);

        CrossAttention got =
            cross_attend(ad::constant(q), ad::constant(k), params);
        Eigen::MatrixXd weights;
        Eigen::MatrixXd expect = testutil::attention_oracle(
            q, k, params.w_q->value, params.w_k->value, params.w_v->value,
            &weights);
        CHECK((got.output->value - expect).cwiseAbs().maxCoeff() < 1e-6);
        CHECK((got.weights->value - weights).cwiseAbs().maxCoeff() < 1e-6);

        // Attention rows sum to one.
        for (Eigen::Index i = 0; i < rows; ++i)
            CHECK(got.weights->value.row(i).sum() == doctest::Approx(1.0));
    }
}

TEST_CASE("single key attends with weight one and returns its value projection") {
    std::mt19937_64 rng(37);
    AlignmentParams params(3, 4, 5, rng);
    Eigen::MatrixXd q = testutil::random_matrix(2, 3, rng);
    Eigen::MatrixXd k = testutil::random_matrix(1, 4, rng);
    CrossAttention got = cross_attend(ad::constant(q), ad::constant(k), params);
    CHECK(got.weights->value == Eigen::MatrixXd::Ones(2, 1));
    Eigen::MatrixXd expect = k * params.w_v->value;
    for (int i = 0; i < 2; ++i)
        CHECK((got.output->value.row(i) - expect.row(0)).cwiseAbs().maxCoeff() ==
              0.0);
}

TEST_CASE("build_query prepends the region token and layer-normalizes rows") {
    std::mt19937_64 rng(41);
    LayerNormParams ln = LayerNormParams::trainable(4);
    Eigen::MatrixXd region = testutil::random_matrix(1, 4, rng);
    Eigen::MatrixXd ts = testutil::random_matrix(3, 4, rng);
    ad::Var q = build_query(ad::constant(region), ad::constant(ts), ln);
    REQUIRE(q->value.rows() == 4);
    for (Eigen::Index i = 0; i < 4; ++i) {
        CHECK(q->value.row(i).mean() == doctest::Approx(0.0).scale(1.0));
        double var = (q->value.row(i).array() - q->value.row(i).mean())
                         .square()
                         .mean();
        CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("cross attention gradients match finite differences") {
    std::mt19937_64 rng(43);
    AlignmentParams params(4, 5, 3, rng);
    Eigen::MatrixXd q = testutil::random_matrix(3, 4, rng);
    Eigen::MatrixXd k = testutil::random_matrix(4, 5, rng);
    auto build = [&] {
        CrossAttention att =
            cross_attend(ad::constant(q), ad::constant(k), params);
        return ad::sum(ad::cmul(att.output, att.output));
    };
    CHECK(testutil::grad_check(params.w_q, build, rng) < 1e-4);
    CHECK(testutil::grad_check(params.w_k, build, rng) < 1e-4);
    CHECK(testutil::grad_check(params.w_v, build, rng) < 1e-4);
}

TEST_CASE("desk backbone is frozen, deterministic and causal") {
    DeskBackbone bb(16, 2, 4, 64, 99);
    CHECK(bb.hidden_size() == 16);
    CHECK(bb.parameter_count() > 0);

    std::mt19937_64 rng(47);
    Eigen::MatrixXd x = testutil::random_matrix(6, 16, rng);
    std::vector<std::uint8_t> valid(6, 1);

    std::uint64_t sum_before = bb.checksum();
    ad::Var out1 = bb.forward(ad::constant(x), valid);
    ad::Var out2 = bb.forward(ad::constant(x), valid);
    CHECK(out1->value == out2->value);
    CHECK(bb.checksum() == sum_before);

    SUBCASE("same seed same weights, different seed different weights") {
        DeskBackbone same(16, 2, 4, 64, 99);
        DeskBackbone other(16, 2, 4, 64, 100);
        CHECK(same.checksum() == bb.checksum());
        CHECK(other.checksum() != bb.checksum());
        CHECK(same.identity() == bb.identity());
        CHECK(other.identity() != bb.identity());
    }

    SUBCASE("perturbing position j leaves outputs at i < j unchanged") {
        for (int j = 1; j < 6; ++j) {
            Eigen::MatrixXd xp = x;
            xp.row(j).array() += 0.5;
            ad::Var outp = bb.forward(ad::constant(xp), valid);
            for (int i = 0; i < j; ++i)
                CHECK((outp->value.row(i) - out1->value.row(i))
                          .cwiseAbs()
                          .maxCoeff() < 1e-6);
        }
    }

    SUBCASE("padding rows do not influence valid positions") {
        Eigen::MatrixXd padded(8, 16);
        padded.topRows(6) = x;
        padded.bottomRows(2) = testutil::random_matrix(2, 16, rng);
        std::vector<std::uint8_t> mask{1, 1, 1, 1, 1, 1, 0, 0};
        ad::Var outp = bb.forward(ad::constant(padded), mask);
        CHECK((outp->value.topRows(6) - out1->value).cwiseAbs().maxCoeff() < 1e-6);

        // Different garbage in the padding rows changes nothing.
        padded.bottomRows(2) = testutil::random_matrix(2, 16, rng);
        ad::Var outq = bb.forward(ad::constant(padded), mask);
        CHECK((outq->value.topRows(6) - out1->value).cwiseAbs().maxCoeff() < 1e-6);
    }

    SUBCASE("gradients flow through the frozen backbone to the input") {
        ad::Var input = ad::parameter(x);
        ad::Var loss = ad::sum(ad::cmul(bb.forward(input, valid),
                                        bb.forward(input, valid)));
        ad::backward(loss);
        CHECK(input->grad.cwiseAbs().maxCoeff() > 0.0);
    }
}

TEST_CASE("backbone_forward pads a ragged batch correctly") {
    DeskBackbone bb(8, 1, 2, 32, 5);
    std::mt19937_64 rng(53);
    std::vector<ad::Var> seqs{ad::constant(testutil::random_matrix(3, 8, rng)),
                              ad::constant(testutil::random_matrix(5, 8, rng))};
    std::vector<std::vector<std::uint8_t>> masks{{1, 1, 1}, {1, 1, 1, 1, 1}};
    auto outs = backbone_forward(seqs, masks, bb);
    REQUIRE(outs.size() == 2);
    CHECK(outs[0]->value.rows() == 3);
    CHECK(outs[1]->value.rows() == 5);
    // Each sequence matches its standalone forward.
    for (int i = 0; i < 2; ++i) {
        ad::Var solo = bb.forward(seqs[static_cast<std::size_t>(i)],
                                  masks[static_cast<std::size_t>(i)]);
        CHECK((outs[static_cast<std::size_t>(i)]->value - solo->value)
                  .cwiseAbs()
                  .maxCoeff() < 1e-9);
    }
}
