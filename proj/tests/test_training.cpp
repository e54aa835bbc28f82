#include <catch2/catch_amalgamated.hpp>

#include "diffau/training.hpp"
#include "support/test_signals.hpp"

using namespace diffau;

namespace {

const STFTConfig kStft{};
const AmplitudeTransformParams kAmp{};
const NoiseSchedule kSched{0.05, 0.5, 1e-3};

std::vector<AmbisonicsSignal> tiny_clips(int n, int samples = 2048) {
    std::vector<AmbisonicsSignal> clips;
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_seed(33, static_cast<std::uint64_t>(i)));
        clips.push_back(encode_scene(testing::make_scene(rng, 1 + static_cast<int>(rng.integer(2)), samples), 3));
    }
    return clips;
}

ScoreModelConfig tiny_model(int block) { return ScoreModelConfig{block, 8, 2, 16}; }

TrainConfig tiny_train(int block, int steps) {
    TrainConfig tc;
    tc.block_order = block;
    tc.batch_size = 2;
    tc.step_size = 1e-3;
    tc.total_steps = steps;
    tc.seed = 7;
    tc.val_cadence = 5;
    tc.crop = 16;
    return tc;
}

}  // namespace

TEST_CASE("make_pairs channel arithmetic") {
    const auto clips = tiny_clips(2);
    const auto pairs1 = make_pairs(clips, 1, kStft, kAmp);
    REQUIRE(pairs1.size() == 2);
    CHECK(pairs1[0].y.size(0) == 8);
    CHECK(pairs1[0].x0.size(0) == 10);
    CHECK(pairs1[0].y.size(1) == 257);

    const auto pairs2 = make_pairs(clips, 2, kStft, kAmp);
    CHECK(pairs2[0].y.size(0) == 18);
    CHECK(pairs2[0].x0.size(0) == 14);

    // a zero clip yields a zero pair
    std::vector<AmbisonicsSignal> zero{AmbisonicsSignal(3, Eigen::MatrixXd::Zero(16, 2048), 16000.0)};
    const auto zpairs = make_pairs(zero, 1, kStft, kAmp);
    CHECK(zpairs[0].y.abs().max().item<double>() == 0.0);
    CHECK(zpairs[0].x0.abs().max().item<double>() == 0.0);

    // clips below order N+1 are rejected
    std::vector<AmbisonicsSignal> low{AmbisonicsSignal(1, Eigen::MatrixXd::Zero(4, 2048), 16000.0)};
    CHECK_THROWS_AS(make_pairs(low, 1, kStft, kAmp), std::invalid_argument);
    CHECK_THROWS_AS(make_pairs(std::vector<AmbisonicsSignal>{}, 0, kStft, kAmp), std::invalid_argument);
}

TEST_CASE("zero step size leaves parameters unchanged") {
    const auto pairs = make_pairs(tiny_clips(2), 1, kStft, kAmp);
    TrainConfig tc = tiny_train(1, 6);
    tc.step_size = 0.0;
    const TrainResult result = train_block(pairs, tiny_model(1), tc, kSched, kStft, kAmp);

    const ScoreModelParams fresh = init_params(tiny_model(1), kStft, kAmp, kSched, derive_seed(tc.seed, 0));
    auto pa = result.params.net->parameters(), pb = fresh.net->parameters();
    REQUIRE(pa.size() == pb.size());
    for (size_t i = 0; i < pa.size(); ++i) REQUIRE(pa[i].equal(pb[i]));
}

TEST_CASE("training is reproducible for a fixed seed") {
    const auto pairs = make_pairs(tiny_clips(2), 1, kStft, kAmp);
    const TrainResult a = train_block(pairs, tiny_model(1), tiny_train(1, 10), kSched, kStft, kAmp);
    const TrainResult b = train_block(pairs, tiny_model(1), tiny_train(1, 10), kSched, kStft, kAmp);
    REQUIRE(a.history.size() == b.history.size());
    for (size_t i = 0; i < a.history.size(); ++i) {
        REQUIRE(a.history[i].train_loss == b.history[i].train_loss);
        REQUIRE(a.history[i].val_loss == b.history[i].val_loss);
    }
    // the loss history is nonempty and finite
    REQUIRE(!a.history.empty());
    for (const auto& p : a.history) REQUIRE(std::isfinite(p.train_loss));
}

TEST_CASE("training validates config consistency") {
    const auto pairs = make_pairs(tiny_clips(1), 1, kStft, kAmp);
    CHECK_THROWS_AS(train_block(pairs, tiny_model(2), tiny_train(1, 2), kSched, kStft, kAmp), config_error);
    CHECK_THROWS_AS(train_block(pairs, tiny_model(2), tiny_train(2, 2), kSched, kStft, kAmp),
                    std::invalid_argument);  // pair channels are for block 1
    CHECK_THROWS_AS(train_block({}, tiny_model(1), tiny_train(1, 2), kSched, kStft, kAmp),
                    std::invalid_argument);

    // resume with a mismatched config
    const TrainResult r = train_block(pairs, tiny_model(1), tiny_train(1, 2), kSched, kStft, kAmp);
    ScoreModelConfig other = tiny_model(1);
    other.base_width = 12;
    CHECK_THROWS_AS(train_block(pairs, other, tiny_train(1, 2), kSched, kStft, kAmp, &r.params), config_error);
}

TEST_CASE("resume continues from the given parameters") {
    const auto pairs = make_pairs(tiny_clips(2), 1, kStft, kAmp);
    const TrainResult first = train_block(pairs, tiny_model(1), tiny_train(1, 4), kSched, kStft, kAmp);
    TrainConfig more = tiny_train(1, 3);
    more.step_size = 0.0;
    const TrainResult resumed =
        train_block(pairs, tiny_model(1), more, kSched, kStft, kAmp, &first.params);
    auto pa = resumed.params.net->parameters(), pb = first.params.net->parameters();
    for (size_t i = 0; i < pa.size(); ++i) REQUIRE(pa[i].equal(pb[i]));
}
