#include <doctest.h>

#include <algorithm>

#include "sbnet/error.hpp"
#include "sbnet/losses.hpp"
#include "sbnet/schedule.hpp"

using namespace sbnet;

namespace {

std::size_t count_face(const EpochPlan& plan) {
    return std::size_t(std::count(plan.begin(), plan.end(), Modality::Face));
}

}  // namespace

TEST_CASE("vfvf alternates whole epochs, voice first") {
    Rng rng(1);
    const Strategy s = Strategy::parse("vfvf");
    const EpochPlan e0 = plan_epoch(s, 0, 10, rng);
    const EpochPlan e1 = plan_epoch(s, 1, 10, rng);
    CHECK(count_face(e0) == 0);
    CHECK(count_face(e1) == 10);

    const Strategy f = Strategy::parse("fvfv");
    CHECK(count_face(plan_epoch(f, 0, 10, rng)) == 10);
    CHECK(count_face(plan_epoch(f, 1, 10, rng)) == 0);
}

TEST_CASE("half-epoch strategies split the batch sequence") {
    Rng rng(2);
    const EpochPlan p = plan_epoch(Strategy::parse("hefhev"), 0, 10, rng);
    for (std::size_t i = 0; i < 5; ++i) CHECK(p[i] == Modality::Face);
    for (std::size_t i = 5; i < 10; ++i) CHECK(p[i] == Modality::Voice);

    const EpochPlan q = plan_epoch(Strategy::parse("hevhef"), 0, 10, rng);
    CHECK(q[0] == Modality::Voice);
    CHECK(q[9] == Modality::Face);

    // odd batch count: modality counts differ by at most 1
    for (const char* name : {"hefhev", "hevhef"}) {
        const EpochPlan odd = plan_epoch(Strategy::parse(name), 0, 11, rng);
        const std::size_t faces = count_face(odd);
        CHECK((faces == 5 || faces == 6));
    }
}

TEST_CASE("random strategy is a fair coin and replays exactly") {
    const Strategy s = Strategy::parse("random");
    Rng rng(3);
    const EpochPlan plan = plan_epoch(s, 0, 10000, rng);
    const double frac = double(count_face(plan)) / 10000.0;
    CHECK(frac > 0.48);
    CHECK(frac < 0.52);

    Rng replay(3);
    CHECK(plan_epoch(s, 0, 10000, replay) == plan);
}

TEST_CASE("block strategy alternates k-epoch blocks") {
    Rng rng(4);
    const Strategy s = Strategy::parse("block:face:2");
    CHECK(plan_epoch(s, 0, 4, rng)[0] == Modality::Face);
    CHECK(plan_epoch(s, 1, 4, rng)[0] == Modality::Face);
    CHECK(plan_epoch(s, 2, 4, rng)[0] == Modality::Voice);
    CHECK(plan_epoch(s, 3, 4, rng)[0] == Modality::Voice);
    CHECK(plan_epoch(s, 4, 4, rng)[0] == Modality::Face);
}

TEST_CASE("only_face never emits a voice tag") {
    Rng rng(5);
    for (std::size_t epoch = 0; epoch < 5; ++epoch) {
        const EpochPlan p = plan_epoch(Strategy::parse("only_face"), epoch, 7, rng);
        CHECK(count_face(p) == 7);
    }
}

TEST_CASE("strategy parse round trip and errors") {
    for (const char* name : {"random", "hefhev", "hevhef", "vfvf", "fvfv",
                             "only_face", "only_voice", "block:voice:3"}) {
        CHECK(Strategy::parse(name).name() == name);
    }
    CHECK_THROWS_AS(Strategy::parse("bogus"), ConfigError);
    CHECK_THROWS_AS(Strategy::parse("block:ear:2"), ConfigError);
    CHECK_THROWS_AS(Strategy::parse("block:face:0"), ConfigError);
}

TEST_CASE("make_batches: exact chunks, disjoint, deterministic") {
    std::vector<std::size_t> ids(256);
    for (std::size_t i = 0; i < 256; ++i) ids[i] = i;

    Rng rng(6);
    const auto batches = make_batches(ids, 128, rng);
    REQUIRE(batches.size() == 2);
    std::vector<std::size_t> all;
    for (const auto& b : batches) all.insert(all.end(), b.begin(), b.end());
    std::sort(all.begin(), all.end());
    CHECK(all == ids);

    Rng replay(6);
    CHECK(make_batches(ids, 128, replay) == batches);
}

TEST_CASE("make_batches drops the short final batch") {
    std::vector<std::size_t> ids(300);
    for (std::size_t i = 0; i < 300; ++i) ids[i] = i;
    Rng rng(7);
    const auto batches = make_batches(ids, 128, rng);
    CHECK(batches.size() == 2);
}

TEST_CASE("make_batches rejects insufficient records") {
    Rng rng(8);
    const std::vector<std::size_t> ids = {1, 2, 3};
    CHECK_THROWS_AS(make_batches(ids, 128, rng), DataError);
}

TEST_CASE("single-identity batch leaves the oc negative term empty") {
    Rng rng(9);
    std::vector<std::size_t> ids(8);
    for (std::size_t i = 0; i < 8; ++i) ids[i] = i;
    const auto batches = make_batches(ids, 4, rng);

    Batch b;
    b.embeddings = gaussian(rng, 4, 3, 1.0, 0.1);
    b.labels.assign(4, 0);  // all one identity
    (void)batches;
    const auto r = oc_loss(b);
    CHECK(r.loss >= 0.0);
    CHECK(r.loss <= 1.0);  // negative term contributes 0
}
