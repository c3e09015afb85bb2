#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>

#include "sbnet/checkpoint.hpp"
#include "sbnet/error.hpp"
#include "sbnet/eval.hpp"
#include "sbnet/train.hpp"

using namespace sbnet;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/sbnet_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

Corpus train_corpus() {
    SynthConfig cfg;
    cfg.n_identities = 24;
    cfg.samples_per_identity_per_modality = 6;
    cfg.latent_dim = 6;
    cfg.d_in = 16;
    cfg.noise_std = 0.2;
    cfg.seed = 11;
    return gen_synthetic(cfg);
}

std::vector<double> packed(const SingleBranchParams& p) {
    std::vector<double> out;
    p.pack(out);
    return out;
}

TrainConfig small_config() {
    TrainConfig cfg;
    cfg.hidden = 24;
    cfg.embed_dim = 12;
    cfg.epochs = 5;
    cfg.batch_size = 16;
    cfg.sched.lr0 = 5e-3;
    cfg.strategy = Strategy::parse("random");
    cfg.seed = 42;
    return cfg;
}

}  // namespace

TEST_CASE("epochs=0 yields the initialized model with an empty trace") {
    const Corpus corpus = train_corpus();
    TrainConfig cfg = small_config();
    cfg.epochs = 0;
    const TrainedModel m = train_model(corpus, cfg);
    CHECK(m.epoch_mean_loss.empty());
    CHECK(m.d_in == 16);
    CHECK(m.hidden == 24);
    CHECK(m.embed_dim == 12);
    CHECK(m.single.bn_running_var == std::vector<double>(12, 1.0));
    CHECK(m.split.train.size() + m.split.validation.size() + m.split.test.size() == 24);
}

TEST_CASE("same seed reproduces the run bit for bit") {
    const Corpus corpus = train_corpus();
    const TrainConfig cfg = small_config();
    const TrainedModel a = train_model(corpus, cfg);
    const TrainedModel b = train_model(corpus, cfg);
    CHECK(packed(a.single) == packed(b.single));
    CHECK(a.head.w.data == b.head.w.data);
    CHECK(a.single.bn_running_mean == b.single.bn_running_mean);
    CHECK(a.epoch_mean_loss == b.epoch_mean_loss);
    CHECK(a.split.train == b.split.train);

    TrainConfig other = cfg;
    other.seed = 43;
    const TrainedModel c = train_model(corpus, other);
    CHECK(packed(a.single) != packed(c.single));
}

TEST_CASE("training reduces the mean loss for every formulation") {
    const Corpus corpus = train_corpus();
    for (LossKind kind : {LossKind::Fop, LossKind::Center, LossKind::Git}) {
        TrainConfig cfg = small_config();
        cfg.loss.kind = kind;
        cfg.epochs = 12;
        const TrainedModel m = train_model(corpus, cfg);
        REQUIRE(m.epoch_mean_loss.size() == 12);
        const double first = m.epoch_mean_loss.front();
        const double last = m.epoch_mean_loss.back();
        INFO("loss kind ", loss_kind_name(kind), ": ", first, " -> ", last);
        CHECK(last < first);
    }
}

TEST_CASE("two-branch variant trains and embeds with unit-norm rows") {
    const Corpus corpus = train_corpus();
    TrainConfig cfg = small_config();
    cfg.variant = Variant::Two;
    cfg.epochs = 4;
    const TrainedModel m = train_model(corpus, cfg);
    REQUIRE(m.epoch_mean_loss.size() == 4);
    CHECK(m.epoch_mean_loss.back() < m.epoch_mean_loss.front() * 1.5);

    const Matrix e = embed_corpus(m.two, corpus);
    for (std::size_t r = 0; r < e.rows; ++r)
        CHECK(l2_norm(e.row(r)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("checkpoint round trip is bit exact") {
    const Corpus corpus = train_corpus();
    TrainConfig cfg = small_config();
    cfg.loss.kind = LossKind::Git;
    cfg.epochs = 3;
    const TrainedModel m = train_model(corpus, cfg);

    TempFile f("ckpt.json");
    save_checkpoint(f.path, m);
    const TrainedModel r = load_checkpoint(f.path);
    CHECK(r.variant == m.variant);
    CHECK(packed(r.single) == packed(m.single));
    CHECK(r.single.bn_running_mean == m.single.bn_running_mean);
    CHECK(r.single.bn_running_var == m.single.bn_running_var);
    CHECK(r.head.w.data == m.head.w.data);
    CHECK(r.head.b == m.head.b);
    CHECK(r.centers.c.data == m.centers.c.data);
    CHECK(r.split.train == m.split.train);
    CHECK(r.split.test == m.split.test);
    CHECK(r.epoch_mean_loss == m.epoch_mean_loss);
    CHECK(r.seed == m.seed);
    CHECK(r.loss_kind == m.loss_kind);

    // saved twice, byte-identical
    TempFile g("ckpt2.json");
    save_checkpoint(g.path, r);
    std::ifstream fa(f.path), fb(g.path);
    std::string sa((std::istreambuf_iterator<char>(fa)), {});
    std::string sb((std::istreambuf_iterator<char>(fb)), {});
    CHECK(sa == sb);
}

TEST_CASE("checkpoint loader rejects a missing file") {
    CHECK_THROWS_AS(load_checkpoint("/tmp/sbnet_no_such_ckpt.json"), Error);
}

TEST_CASE("warm start continues from the given parameters and keeps the split") {
    const Corpus corpus = train_corpus();
    TrainConfig cfg = small_config();
    cfg.epochs = 3;
    const TrainedModel base = train_model(corpus, cfg);

    TrainConfig cont = cfg;
    cont.epochs = 0;
    const TrainedModel same = train_model(corpus, cont, &base);
    CHECK(packed(same.single) == packed(base.single));
    CHECK(same.split.train == base.split.train);

    cont.epochs = 2;
    cont.strategy = Strategy::parse("only_voice");
    const TrainedModel more = train_model(corpus, cont, &base);
    CHECK(more.split.train == base.split.train);
    CHECK(packed(more.single) != packed(base.single));
    CHECK(more.epoch_mean_loss.size() == 2);
}

TEST_CASE("variant names round trip") {
    CHECK(variant_name(parse_variant("single")) == "single");
    CHECK(variant_name(parse_variant("two")) == "two");
    CHECK_THROWS_AS(parse_variant("triple"), ConfigError);
}
