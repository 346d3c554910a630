#include <doctest.h>

#include <random>

#include "okgllm/decoder.hpp"
#include "okgllm/errors.hpp"
#include "test_util.hpp"

using namespace okgllm;

namespace {

Eigen::MatrixXd layernorm_oracle(const Eigen::MatrixXd& x,
                                 const Eigen::RowVectorXd& g,
                                 const Eigen::RowVectorXd& b, double eps = 1e-6) {
    Eigen::MatrixXd y(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double mu = x.row(i).mean();
        double var = (x.row(i).array() - mu).square().mean();
        y.row(i) = (((x.row(i).array() - mu) / std::sqrt(var + eps)) * g.array() +
                    b.array())
                       .matrix();
    }
    return y;
}

Eigen::MatrixXd causal_mask_oracle(Eigen::Index len,
                                   const std::vector<std::uint8_t>& valid) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(len, len);
    for (Eigen::Index i = 0; i < len; ++i)
        for (Eigen::Index j = 0; j < len; ++j)
            if (j > i || !valid[static_cast<std::size_t>(j)]) m(i, j) = -1e30;
    for (Eigen::Index i = 0; i < len; ++i)
        if (!valid[static_cast<std::size_t>(i)]) m(i, i) = 0.0;
    return m;
}

// Full pre-LN block stack replicated with plain Eigen loops.
Eigen::MatrixXd decode_oracle(const Eigen::MatrixXd& hidden,
                              const std::vector<std::uint8_t>& valid,
                              const DecoderParams& params) {
    Eigen::MatrixXd mask = causal_mask_oracle(hidden.rows(), valid);
    Eigen::MatrixXd x = hidden;
    for (const auto& blk : params.layers) {
        Eigen::MatrixXd h =
            layernorm_oracle(x, blk.ln1_g->value.row(0), blk.ln1_b->value.row(0));
        Eigen::MatrixXd heads(x.rows(), 0);
        for (int hd = 0; hd < params.heads; ++hd) {
            auto i = static_cast<std::size_t>(hd);
            Eigen::MatrixXd out = testutil::attention_oracle(
                h, h, blk.w_q[i]->value, blk.w_k[i]->value, blk.w_v[i]->value,
                nullptr, &mask);
            Eigen::MatrixXd grown(x.rows(), heads.cols() + out.cols());
            grown << heads, out;
            heads = grown;
        }
        x = x + heads * blk.w_o->value;
        Eigen::MatrixXd h2 =
            layernorm_oracle(x, blk.ln2_g->value.row(0), blk.ln2_b->value.row(0));
        Eigen::MatrixXd ff =
            ((h2 * blk.ff_w1->value).rowwise() + blk.ff_b1->value.row(0))
                .cwiseMax(0.0);
        x = x + ((ff * blk.ff_w2->value).rowwise() + blk.ff_b2->value.row(0));
    }
    return x;
}

}  // namespace

TEST_CASE("decode matches the explicit loop oracle") {
    std::mt19937_64 rng(61);
    std::uniform_int_distribution<int> len_d(1, 7);
    for (int trial = 0; trial < 100; ++trial) {
        DecoderParams params(8, 2, 2, rng);
        int len = len_d(rng);
        Eigen::MatrixXd hidden = testutil::random_matrix(len, 8, rng);
        std::vector<std::uint8_t> valid(static_cast<std::size_t>(len), 1);
        if (len > 2) valid.back() = 0;

        DecodeAttention got = decode(ad::constant(hidden), valid, params);
        Eigen::MatrixXd expect = decode_oracle(hidden, valid, params);
        CHECK((got.output->value - expect).cwiseAbs().maxCoeff() < 1e-6);

        REQUIRE(got.first_layer_weights.size() == 2);
        for (const auto& w : got.first_layer_weights)
            for (Eigen::Index i = 0; i < len; ++i)
                CHECK(w->value.row(i).sum() == doctest::Approx(1.0));
    }
}

TEST_CASE("decode is causal") {
    std::mt19937_64 rng(67);
    DecoderParams params(8, 4, 2, rng);
    Eigen::MatrixXd hidden = testutil::random_matrix(5, 8, rng);
    std::vector<std::uint8_t> valid(5, 1);
    Eigen::MatrixXd base = decode(ad::constant(hidden), valid, params).output->value;
    for (int j = 1; j < 5; ++j) {
        Eigen::MatrixXd perturbed = hidden;
        perturbed.row(j).array() += 1.0;
        Eigen::MatrixXd out =
            decode(ad::constant(perturbed), valid, params).output->value;
        for (int i = 0; i < j; ++i)
            CHECK((out.row(i) - base.row(i)).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("decode validates shapes") {
    std::mt19937_64 rng(71);
    DecoderParams params(8, 2, 1, rng);
    Eigen::MatrixXd hidden = testutil::random_matrix(3, 6, rng);
    CHECK_THROWS_AS(decode(ad::constant(hidden), {1, 1, 1}, params), ShapeError);
    Eigen::MatrixXd ok = testutil::random_matrix(3, 8, rng);
    CHECK_THROWS_AS(decode(ad::constant(ok), {1, 1}, params), ShapeError);
    CHECK_THROWS_AS(DecoderParams(10, 3, 1, rng), ConfigError);
}

TEST_CASE("projection head reads the last valid position") {
    std::mt19937_64 rng(73);
    ProjectionHead head(6, 4, rng);
    Eigen::MatrixXd refined = testutil::random_matrix(5, 6, rng);
    std::vector<std::uint8_t> valid{1, 1, 1, 0, 0};
    ad::Var y = project_normalized(ad::constant(refined), valid, head);
    Eigen::RowVectorXd expect =
        refined.row(2) * head.w->value + head.b->value.row(0);
    CHECK((y->value.row(0) - expect).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(
        project_normalized(ad::constant(refined), {0, 0, 0, 0, 0}, head),
        ShapeError);
}

TEST_CASE("denormalize_forecast inverts revin") {
    RevinStats stats{2.0, 3.0, 1e-5};
    Eigen::RowVectorXd y(3);
    y << 0.0, 1.0, -1.0;
    Eigen::VectorXd out = denormalize_forecast(y, stats);
    CHECK(out(0) == doctest::Approx(2.0));
    CHECK(out(1) == doctest::Approx(2.0 + (3.0 + 1e-5)));
    CHECK(out(2) == doctest::Approx(2.0 - (3.0 + 1e-5)));
}

TEST_CASE("l1 loss values and gradient flow through the decoder stack") {
    std::mt19937_64 rng(79);
    Eigen::MatrixXd a(1, 4), b(1, 4);
    a << 1, 2, 3, 4;
    b << 1, 4, 3, 8;
    CHECK(l1_loss_value(a, b) == doctest::Approx(1.5));
    CHECK(ad::scalar(l1_loss(ad::constant(a), b)) == doctest::Approx(1.5));

    DecoderParams params(8, 2, 2, rng);
    ProjectionHead head(8, 4, rng);
    Eigen::MatrixXd hidden = testutil::random_matrix(5, 8, rng);
    Eigen::MatrixXd target = testutil::random_matrix(1, 4, rng);
    std::vector<std::uint8_t> valid(5, 1);
    auto build = [&] {
        DecodeAttention att = decode(ad::constant(hidden), valid, params);
        ad::Var y = project_normalized(att.output, valid, head);
        ad::Var diff = ad::sub(y, ad::constant(target));
        return ad::sum(ad::cmul(diff, diff));
    };
    CHECK(testutil::grad_check(head.w, build, rng) < 1e-4);
    CHECK(testutil::grad_check(params.layers[0].w_q[0], build, rng) < 1e-4);
    CHECK(testutil::grad_check(params.layers[1].ff_w1, build, rng) < 1e-4);
    CHECK(testutil::grad_check(params.layers[0].ln1_g, build, rng) < 1e-4);
}
