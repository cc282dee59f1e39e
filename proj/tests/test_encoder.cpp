#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "valex/checkpoint.hpp"
#include "valex/error.hpp"

using namespace valex;
using namespace valex_test;

namespace {

TrainConfig quick_config() {
    TrainConfig c = TrainConfig::lexicon_defaults();
    c.dropout = 0.0;
    c.batch_size = 4;
    c.seed = 5;
    return c;
}

std::vector<TrainExample> prepare_on(ReferenceEncoder& enc, std::vector<TrainExample> data,
                                     TrainConfig config = quick_config()) {
    enc.prepare(data, config);
    return data;
}

}  // namespace

TEST_CASE("forward of a single-token text is head(embedding of that token)") {
    ReferenceEncoder enc(1, 8);
    auto data = prepare_on(enc, {{"hey", 1.0}});
    auto ids = enc.tokenize("hey");
    REQUIRE(ids.size() == 1);
    Vector expected = enc.head_weight() * enc.embedding_table().row(ids[0]).transpose() + enc.head_bias();
    Vector got = enc.forward("hey", RunMode::eval);
    CHECK((expected - got).norm() == 0.0);
}

TEST_CASE("repeating one token does not change the forward output") {
    ReferenceEncoder enc(2, 8);
    prepare_on(enc, {{"a", 1.0}});
    Vector one = enc.forward("a", RunMode::eval);
    Vector three = enc.forward("a a a", RunMode::eval);
    CHECK((one - three).norm() < 1e-15);
}

TEST_CASE("two-token forward matches hand matrix arithmetic on fixed tiny weights") {
    ReferenceEncoder enc(3, 2);
    prepare_on(enc, {{"x y", 0.0}});
    // Pin tiny weights by hand: e_x = (1, 2), e_y = (3, -4), w = (0.5, -1), b = 0.25.
    auto ids_x = enc.tokenize("x");
    auto ids_y = enc.tokenize("y");
    REQUIRE(ids_x.size() == 1);
    REQUIRE(ids_y.size() == 1);
    enc.embedding_table().row(ids_x[0]) << 1.0, 2.0;
    enc.embedding_table().row(ids_y[0]) << 3.0, -4.0;
    enc.head_weight() << 0.5, -1.0;
    enc.head_bias() << 0.25;
    // mean = (2, -1); w . mean + b = 1 + 1 + 0.25
    Vector out = enc.forward("x y", RunMode::eval);
    CHECK(out(0) == doctest::Approx(2.25).epsilon(1e-15));
}

TEST_CASE("empty and whitespace-only inputs raise the empty-input error") {
    ReferenceEncoder enc(3, 4);
    prepare_on(enc, {{"a", 0.0}});
    CHECK_THROWS_AS(enc.forward("", RunMode::eval), ValidationError);
    CHECK_THROWS_AS(enc.forward("   ", RunMode::eval), ValidationError);
}

TEST_CASE("unknown tokens back off to character n-grams instead of crashing") {
    ReferenceEncoder enc(4, 8);
    prepare_on(enc, {{"hello world", 1.0}});
    CHECK_NOTHROW(enc.forward("completely unseen tokens", RunMode::eval));
    CHECK_NOTHROW(enc.forward("zz", RunMode::eval));
    // Shared trigrams make related unknown words pool related rows.
    auto ids = enc.tokenize("helloing");
    CHECK(!ids.empty());
}

TEST_CASE("token order does not matter to mean pooling") {
    ReferenceEncoder enc(5, 8);
    TrainConfig wide = quick_config();
    wide.max_tokens = 64;  // invariance holds only inside the token window
    enc.prepare(std::vector<TrainExample>{{"alpha beta gamma", 0.0}}, wide);
    Vector a = enc.forward("alpha beta gamma", RunMode::eval);
    Vector b = enc.forward("gamma alpha beta", RunMode::eval);
    CHECK((a - b).norm() < 1e-12);
}

TEST_CASE("inputs beyond max tokens use exactly the first max_len tokens") {
    ReferenceEncoder enc(6, 8);
    TrainConfig c = quick_config();
    c.max_tokens = 2;
    enc.prepare(std::vector<TrainExample>{{"p q r s", 0.0}}, c);
    Vector truncated = enc.forward("p q r s", RunMode::eval);
    Vector first_two = enc.forward("p q", RunMode::eval);
    CHECK((truncated - first_two).norm() == 0.0);
    enc.set_max_tokens(4);
    Vector full = enc.forward("p q r s", RunMode::eval);
    CHECK((full - first_two).norm() > 0.0);
}

TEST_CASE("mse train step at an exact target has zero loss and changes nothing") {
    ReferenceEncoder enc(7, 4);
    auto data = prepare_on(enc, {{"w", 0.0}});
    // Force prediction == target.
    enc.head_weight().setZero();
    enc.head_bias().setZero();
    auto before = enc.parameters();
    Scalar loss = enc.train_step(data, Objective::mse, quick_config());
    CHECK(loss == 0.0);
    CHECK(enc.parameters() == before);
}

TEST_CASE("cross entropy with uniform logits is ln 3") {
    ReferenceEncoder enc(8, 4);
    std::vector<TrainExample> data = {{"w", 2.0}};
    enc.prepare(data, quick_config());
    enc.configure_head(3);
    enc.head_weight().setZero();
    enc.head_bias().setZero();
    Scalar loss = enc.batch_loss(data, Objective::cross_entropy);
    CHECK(loss == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("a single small-lr step strictly decreases the example loss") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        ReferenceEncoder enc(100 + trial, 6);
        std::vector<TrainExample> data = {{"some words here", rng.next_double(-4, 4)}};
        TrainConfig c = quick_config();
        c.learning_rate = 1e-3;
        enc.prepare(data, c);
        Scalar before = enc.batch_loss(data, Objective::mse);

        // Directional-derivative oracle: loss must initially drop along the
        // negative gradient, by roughly lr * |grad|^2.
        auto [loss, grads] = enc.loss_and_gradients(data, Objective::mse);
        auto flat = flatten_gradients(enc, grads);
        Scalar grad_sq = 0;
        for (Scalar g : flat) grad_sq += g * g;

        Scalar stepped = enc.train_step(data, Objective::mse, c);
        CHECK(stepped == doctest::Approx(before).epsilon(1e-12));  // pre-update loss reported
        Scalar after = enc.batch_loss(data, Objective::mse);
        if (grad_sq > 1e-12) {
            CHECK(after < before);
            CHECK(before - after == doctest::Approx(c.learning_rate * grad_sq).epsilon(0.05));
        }
    }
}

TEST_CASE("analytic gradients match central finite differences on random tiny instances") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        int dim = 2 + static_cast<int>(rng.next_below(4));
        ReferenceEncoder enc(200 + trial, dim);
        std::vector<TrainExample> batch;
        std::size_t n = 1 + rng.next_below(4);
        const char* texts[] = {"aa bb", "cc", "dd ee ff", "gg hh", "aa cc"};
        Objective objective = trial % 2 == 0 ? Objective::mse : Objective::cross_entropy;
        int k = objective == Objective::mse ? 1 : 2 + static_cast<int>(rng.next_below(2));
        for (std::size_t i = 0; i < n; ++i) {
            Scalar target = objective == Objective::mse
                                ? rng.next_double(-4, 4)
                                : static_cast<Scalar>(rng.next_below(static_cast<std::uint64_t>(k)));
            batch.push_back({texts[rng.next_below(5)], target});
        }
        enc.prepare(batch, quick_config());
        enc.configure_head(k);

        auto [loss, grads] = enc.loss_and_gradients(batch, Objective(objective));
        auto analytic = flatten_gradients(enc, grads);
        auto numeric = finite_difference_gradient(enc, batch, objective);
        REQUIRE(analytic.size() == numeric.size());
        CHECK(max_relative_error(analytic, numeric) < 1e-4);
    }
}

TEST_CASE("train_step applies exactly the analytic gradient step when dropout is off") {
    ReferenceEncoder enc(9, 5);
    std::vector<TrainExample> batch = {{"aa bb", 1.5}, {"cc", -2.0}};
    TrainConfig c = quick_config();
    c.learning_rate = 0.1;
    enc.prepare(batch, c);
    auto [loss, grads] = enc.loss_and_gradients(batch, Objective::mse);
    auto flat_grad = flatten_gradients(enc, grads);
    auto before = enc.parameters();
    enc.train_step(batch, Objective::mse, c);
    auto after = enc.parameters();
    for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK(after[i] == doctest::Approx(before[i] - 0.1 * flat_grad[i]).epsilon(1e-12));
    }
}

TEST_CASE("labels must match the objective") {
    ReferenceEncoder enc(10, 4);
    std::vector<TrainExample> data = {{"w", 0.5}};
    enc.prepare(data, quick_config());
    enc.configure_head(3);
    // 0.5 is not a class index
    CHECK_THROWS_AS(enc.batch_loss(data, Objective::cross_entropy), ValidationError);
    std::vector<TrainExample> oob = {{"w", 3.0}};
    CHECK_THROWS_AS(enc.batch_loss(oob, Objective::cross_entropy), ValidationError);
    // mse against a 3-wide head
    CHECK_THROWS_AS(enc.batch_loss(data, Objective::mse), ValidationError);
}

TEST_CASE("fit runs every epoch while validation keeps improving") {
    ReferenceEncoder enc(11, 8);
    std::vector<TrainExample> train = {{"good", 4.0}, {"bad", -4.0}, {"warm", 2.0}, {"cold", -2.0}};
    // Validation sentences reuse train tokens, so their loss tracks training
    // and keeps improving through these early epochs.
    std::vector<TrainExample> val = {{"good warm", 3.0}, {"bad cold", -3.0}};
    TrainConfig c = quick_config();
    c.max_epochs = 12;
    c.learning_rate = 0.05;
    auto curve = fit(enc, train, val, Objective::mse, c);
    CHECK(curve.epochs.size() == 12);
    CHECK_FALSE(curve.stopped_early);
    CHECK(curve.best_epoch == 11);
}

TEST_CASE("fit stops patience epochs past the best once validation freezes") {
    std::vector<TrainExample> train = {{"good", 4.0}, {"bad", -4.0}};
    std::vector<TrainExample> val = {{"unrelatedzz", 0.0}};
    TrainConfig c = quick_config();
    c.max_epochs = 50;
    CHECK_THROWS_AS([&] {
        ReferenceEncoder enc(12, 8);
        c.learning_rate = 0.0;
        fit(enc, train, val, Objective::mse, c);
    }(), ValidationError);

    // A learning rate below double epsilon freezes the validation loss, so
    // epoch 1 stays the best and the loop exits after patience more epochs.
    c.learning_rate = 1e-300;
    ReferenceEncoder enc(12, 8);
    auto curve = fit(enc, train, val, Objective::mse, c);
    CHECK(curve.stopped_early);
    CHECK(curve.best_epoch == 0);
    CHECK(curve.epochs.size() == std::size_t(1 + c.patience));
}

TEST_CASE("fit restores the parameters of the best validation epoch, not the last") {
    ReferenceEncoder enc(13, 8);
    std::vector<TrainExample> train = {{"good", 4.0}, {"bad", -4.0}, {"warm", 2.0}};
    std::vector<TrainExample> val = {{"goodish", 4.0}, {"badish", -4.0}};
    TrainConfig c = quick_config();
    c.max_epochs = 40;
    c.learning_rate = 0.8;  // deliberately twitchy so validation loss wobbles
    auto curve = fit(enc, train, val, Objective::mse, c);
    Scalar final_val = enc.batch_loss(val, Objective::mse);
    CHECK(final_val == doctest::Approx(curve.best_val_loss).epsilon(1e-12));
    CHECK(curve.best_val_loss <= curve.epochs.back().val_loss);
}

TEST_CASE("fit rejects empty or overlapping splits") {
    ReferenceEncoder enc(14, 4);
    std::vector<TrainExample> train = {{"a", 1.0}};
    std::vector<TrainExample> val = {{"a", 1.0}};
    CHECK_THROWS_AS(fit(enc, train, {}, Objective::mse, quick_config()), ValidationError);
    CHECK_THROWS_AS(fit(enc, {}, val, Objective::mse, quick_config()), ValidationError);
    CHECK_THROWS_WITH_AS(fit(enc, train, val, Objective::mse, quick_config()),
                         doctest::Contains("overlap"), ValidationError);
}

TEST_CASE("twenty-word toy lexicon is memorized to train MSE below 0.1") {
    auto lex = toy_lexicon();
    std::vector<TrainExample> train;
    std::vector<std::pair<std::string, Scalar>> oracle_data;
    for (const auto& e : lex.entries()) {
        train.push_back({e.word, e.valence});
        oracle_data.push_back({e.word, e.valence});
    }
    // Independent oracle: pooled bag-of-token least squares memorizes this set.
    PooledLeastSquares oracle;
    oracle.fit(oracle_data);
    REQUIRE(oracle.train_mse() < 1e-18);

    ReferenceEncoder enc(21);
    // Validation combos whose targets equal the mean of their word valences,
    // so validation tracks memorization and early stopping stays quiet.
    std::vector<TrainExample> val = {{"good great", 4.25}, {"bad awful", -4.25}};
    TrainConfig c = TrainConfig::lexicon_defaults();
    c.dropout = 0.0;
    c.learning_rate = 0.2;
    c.batch_size = 8;
    c.seed = 3;
    fit(enc, train, val, Objective::mse, c);
    Scalar mse = enc.batch_loss(train, Objective::mse);
    CHECK(mse < 0.1);
}

TEST_CASE("identical seeds give bitwise-identical training curves") {
    auto run = [] {
        ReferenceEncoder enc(77);
        std::vector<TrainExample> train = {{"good", 4.0}, {"bad", -4.0}, {"warm", 2.0}, {"cold", -2.0},
                                           {"fine", 1.0}, {"poor", -1.0}};
        std::vector<TrainExample> val = {{"bright", 3.0}, {"dark", -3.0}};
        TrainConfig c = TrainConfig::lexicon_defaults();
        c.max_epochs = 15;
        c.batch_size = 2;
        c.seed = 9;
        c.dropout = 0.2;  // dropout included: the mask stream must be seeded too
        auto curve = fit(enc, train, val, Objective::mse, c);
        return std::make_pair(curve, enc.parameters());
    };
    auto [curve_a, params_a] = run();
    auto [curve_b, params_b] = run();
    REQUIRE(curve_a.epochs.size() == curve_b.epochs.size());
    for (std::size_t i = 0; i < curve_a.epochs.size(); ++i) {
        CHECK(curve_a.epochs[i].train_loss == curve_b.epochs[i].train_loss);
        CHECK(curve_a.epochs[i].val_loss == curve_b.epochs[i].val_loss);
    }
    CHECK(params_a == params_b);
}

TEST_CASE("non-finite loss raises a divergence error") {
    ReferenceEncoder enc(15, 4);
    std::vector<TrainExample> data = {{"w", 1e308}};
    TrainConfig c = quick_config();
    c.learning_rate = 10.0;
    enc.prepare(data, c);
    CHECK_THROWS_AS(
        [&] {
            for (int i = 0; i < 50; ++i) enc.train_step(data, Objective::mse, c);
        }(),
        DivergenceError);
}

TEST_CASE("predict_valence clamps to the valence scale at inference only") {
    ReferenceEncoder enc(16, 4);
    std::vector<TrainExample> data = {{"w", 0.0}};
    enc.prepare(data, quick_config());
    enc.head_weight().setZero();
    enc.head_bias() << 40.0;  // raw head output far outside the scale
    CHECK(enc.forward("w", RunMode::eval)(0) > 5.0);
    CHECK(predict_valence(enc, "w") == 5.0);
    enc.head_bias() << -40.0;
    CHECK(predict_valence(enc, "w") == -5.0);
    // Loss still sees the raw output.
    Scalar loss = enc.batch_loss(data, Objective::mse);
    CHECK(loss == doctest::Approx(1600.0).epsilon(1e-6));
}

TEST_CASE("checkpoint state round-trips through JSON bit-for-bit") {
    ReferenceEncoder enc(18, 8);
    std::vector<TrainExample> data = {{"good words", 2.0}, {"bad stuff", -2.0}};
    TrainConfig c = quick_config();
    enc.prepare(data, c);
    for (int i = 0; i < 5; ++i) enc.train_step(data, Objective::mse, c);

    Checkpoint ckpt;
    ckpt.backend_kind = enc.kind();
    ckpt.backend_state = enc.state();
    ckpt.objective = Objective::mse;
    ckpt.config = c;
    auto path = std::filesystem::temp_directory_path() / "valex_ckpt.json";
    ckpt.save(path);
    auto loaded = Checkpoint::load(path);
    std::filesystem::remove(path);

    auto restored = loaded.instantiate();
    CHECK(restored->parameters() == enc.parameters());
    Vector a = enc.forward("good words and more", RunMode::eval);
    Vector b = restored->forward("good words and more", RunMode::eval);
    CHECK((a - b).norm() == 0.0);
    CHECK(loaded.content_id() == ckpt.content_id());
}

TEST_CASE("unknown backend kinds are rejected at instantiation") {
    Checkpoint ckpt;
    ckpt.backend_kind = "transformer-adapter";
    ckpt.objective = Objective::mse;
    CHECK_THROWS_AS(ckpt.instantiate(), ValidationError);
}
