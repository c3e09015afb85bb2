#include <doctest.h>

#include <cmath>

#include "sbnet/error.hpp"
#include "sbnet/losses.hpp"

using namespace sbnet;

namespace {

Batch make_batch(const std::vector<std::vector<double>>& rows,
                 const std::vector<int>& labels) {
    Batch b;
    b.embeddings = Matrix(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(rows[i].begin(), rows[i].end(), b.embeddings.row(i).begin());
    b.labels = labels;
    return b;
}

double fd_err(const std::function<double(const std::vector<double>&)>& f,
              const std::vector<double>& at, const std::vector<double>& analytic) {
    const auto fd = finite_diff_grad(f, at, 1e-5);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < at.size(); ++i) {
        num += (analytic[i] - fd[i]) * (analytic[i] - fd[i]);
        den += fd[i] * fd[i];
    }
    return std::sqrt(num) / (std::sqrt(den) + 1e-300);
}

}  // namespace

TEST_CASE("ce_loss: uniform softmax gives ln C") {
    Rng rng(1);
    ClassifierHead head = ClassifierHead::init(3, 4, rng);
    head.w = Matrix(3, 4);
    head.b.assign(4, 0.0);
    const Batch b = make_batch({{1, 2, 3}, {0, 1, 0}}, {0, 2});
    CHECK(ce_loss(head, b).loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("ce_loss saturates to zero on a dominant true logit") {
    Rng rng(2);
    ClassifierHead head = ClassifierHead::init(1, 4, rng);
    head.w = Matrix(1, 4);
    head.w(0, 1) = 50.0;  // logit of class 1 is 50*x
    head.b.assign(4, 0.0);
    const Batch b = make_batch({{1.0}}, {1});
    CHECK(ce_loss(head, b).loss < 1e-20);
}

TEST_CASE("ce_loss gradient matches finite differences") {
    Rng rng(3);
    ClassifierHead head = ClassifierHead::init(5, 4, rng);
    Batch b;
    b.embeddings = gaussian(rng, 6, 5, 0.0, 1.0);
    for (int i = 0; i < 6; ++i) b.labels.push_back(int(rng.below(4)));

    const CeResult r = ce_loss(head, b);
    auto f = [&](const std::vector<double>& x) {
        Batch b2 = b;
        b2.embeddings.data = x;
        return ce_loss(head, b2).loss;
    };
    CHECK(fd_err(f, b.embeddings.data, r.grad_embeddings.data) < 1e-5);
}

TEST_CASE("ce_loss rejects out-of-range labels") {
    Rng rng(4);
    const ClassifierHead head = ClassifierHead::init(3, 4, rng);
    const Batch b = make_batch({{1, 0, 0}}, {7});
    CHECK_THROWS_AS(ce_loss(head, b), LabelError);
}

TEST_CASE("oc_loss boundary cases") {
    // identical same-class, no negatives: 1 - 1 + 0 = 0
    CHECK(oc_loss(make_batch({{1, 2}, {1, 2}}, {0, 0})).loss ==
          doctest::Approx(0.0).epsilon(1e-12));
    // orthogonal different-class, no positives: 1 - 0 + 0 = 1
    CHECK(oc_loss(make_batch({{1, 0}, {0, 1}}, {0, 1})).loss == doctest::Approx(1.0));
    // identical different-class: worst separation, 1 - 0 + 1 = 2
    CHECK(oc_loss(make_batch({{1, 2}, {1, 2}}, {0, 1})).loss == doctest::Approx(2.0));
}

TEST_CASE("oc_loss is invariant to positive rescaling and bounded in [0,2]") {
    Rng rng(5);
    for (int it = 0; it < 10; ++it) {
        Batch b;
        b.embeddings = gaussian(rng, 6, 4, 0.0, 1.0);
        for (int i = 0; i < 6; ++i) b.labels.push_back(int(rng.below(3)));
        const double base = oc_loss(b).loss;
        CHECK(base >= 0.0);
        CHECK(base <= 2.0);
        Batch scaled = b;
        for (std::size_t j = 0; j < 4; ++j)
            scaled.embeddings(2, j) *= 7.5;  // rescale one row
        CHECK(std::abs(oc_loss(scaled).loss - base) < 1e-9);
    }
}

TEST_CASE("oc_loss gradient matches finite differences (mean and sum modes)") {
    Rng rng(6);
    for (PairReduction red : {PairReduction::Mean, PairReduction::Sum}) {
        Batch b;
        b.embeddings = gaussian(rng, 5, 4, 0.0, 1.0);
        for (int i = 0; i < 5; ++i) b.labels.push_back(int(rng.below(3)));
        const auto r = oc_loss(b, red);
        auto f = [&](const std::vector<double>& x) {
            Batch b2 = b;
            b2.embeddings.data = x;
            return oc_loss(b2, red).loss;
        };
        CHECK(fd_err(f, b.embeddings.data, r.grad_embeddings.data) < 1e-5);
    }
}

TEST_CASE("oc_loss with a single identity has an empty negative term") {
    const Batch b = make_batch({{1, 0}, {0, 1}, {1, 1}}, {0, 0, 0});
    // negatives contribute 0; loss = 1 - mean positive cosine
    const double mean_pos = (0.0 + std::sqrt(0.5) + std::sqrt(0.5)) / 3.0;
    CHECK(oc_loss(b).loss == doctest::Approx(1.0 - mean_pos));
}

TEST_CASE("oc_loss rejects zero-norm embeddings") {
    CHECK_THROWS_AS(oc_loss(make_batch({{0, 0}, {1, 0}}, {0, 1})),
                    DegenerateVectorError);
}

TEST_CASE("center_loss values and gradient") {
    Centers centers{Matrix(2, 2)};
    centers.c(1, 0) = 3.0;

    // embeddings exactly on their centers
    Batch onc = make_batch({{0, 0}, {3, 0}}, {0, 1});
    CHECK(center_loss(onc, centers).loss == 0.0);

    // single sample at distance 2: 0.5 * 4 = 2
    Batch far = make_batch({{2, 0}}, {0});
    const auto r = center_loss(far, centers);
    CHECK(r.loss == doctest::Approx(2.0));
    CHECK(r.grad_embeddings(0, 0) == doctest::Approx(2.0));

    Rng rng(7);
    Batch b;
    b.embeddings = gaussian(rng, 5, 2, 0.0, 1.0);
    for (int i = 0; i < 5; ++i) b.labels.push_back(int(rng.below(2)));
    const auto rr = center_loss(b, centers);
    auto f = [&](const std::vector<double>& x) {
        Batch b2 = b;
        b2.embeddings.data = x;
        return center_loss(b2, centers).loss;
    };
    CHECK(fd_err(f, b.embeddings.data, rr.grad_embeddings.data) < 1e-5);
}

TEST_CASE("center_update fixed point and delta rule arithmetic") {
    Centers centers{Matrix(2, 2)};
    centers.c(0, 0) = 1.0;
    centers.c(0, 1) = -1.0;
    Batch fixed = make_batch({{1, -1}}, {0});
    Centers copy = centers;
    center_update(copy, fixed, 1.0);
    CHECK(copy.c.data == centers.c.data);

    // one sample, lr 1, c=(0,0), I=(2,0): delta=(0-2)/2=(-1,0), c'=(1,0)
    Centers c2{Matrix(1, 2)};
    center_update(c2, make_batch({{2, 0}}, {0}), 1.0);
    CHECK(c2.c(0, 0) == doctest::Approx(1.0));
    CHECK(c2.c(0, 1) == 0.0);
}

TEST_CASE("repeated center updates converge toward the class sample mean") {
    Rng rng(8);
    Batch b;
    b.embeddings = gaussian(rng, 6, 3, 0.0, 1.0);
    b.labels.assign(6, 0);
    std::vector<double> mean(3, 0.0);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t k = 0; k < 3; ++k) mean[k] += b.embeddings(i, k) / 6.0;

    Centers centers{gaussian(rng, 1, 3, 0.0, 2.0)};
    double prev = 1e300;
    for (int it = 0; it < 50; ++it) {
        center_update(centers, b, 0.5);
        double dist = 0.0;
        for (std::size_t k = 0; k < 3; ++k)
            dist += (centers.c(0, k) - mean[k]) * (centers.c(0, k) - mean[k]);
        CHECK(dist <= prev + 1e-15);
        prev = dist;
    }
    CHECK(prev < 1e-4);
}

TEST_CASE("git_loss values, limit, and gradient") {
    // two samples of different classes; place centers so one ordered pair
    // has squared distance 1 and the other is far away
    Centers centers{Matrix(2, 2)};
    centers.c(1, 0) = 1.0;   // ||I_0 - c_1||^2 = 1 for I_0 = (0,0)
    centers.c(0, 1) = 1e6;   // pushes the (1,0) pair contribution to ~0
    const Batch b = make_batch({{0, 0}, {1, 5}}, {0, 1});
    CHECK(git_loss(b, centers).loss == doctest::Approx(0.5).epsilon(1e-6));

    // embeddings far from all foreign centers: loss -> 0
    Centers near{Matrix(2, 2)};
    const Batch far = make_batch({{1e8, 0}, {0, 1e8}}, {0, 1});
    CHECK(git_loss(far, near).loss < 1e-12);

    Rng rng(9);
    Batch rb;
    rb.embeddings = gaussian(rng, 5, 3, 0.0, 1.0);
    for (int i = 0; i < 5; ++i) rb.labels.push_back(int(rng.below(3)));
    Centers rc{gaussian(rng, 3, 3, 0.0, 1.0)};
    const auto r = git_loss(rb, rc);
    auto f = [&](const std::vector<double>& x) {
        Batch b2 = rb;
        b2.embeddings.data = x;
        return git_loss(b2, rc).loss;
    };
    CHECK(fd_err(f, rb.embeddings.data, r.grad_embeddings.data) < 1e-5);
    // strictly positive, bounded by the ordered cross-class pair count
    CHECK(r.loss > 0.0);
    CHECK(r.loss <= 20.0);
}

TEST_CASE("total_loss degenerate weights reduce to plain CE") {
    Rng rng(10);
    const ClassifierHead head = ClassifierHead::init(4, 3, rng);
    const Centers centers{gaussian(rng, 3, 4, 0.0, 1.0)};
    Batch b;
    b.embeddings = gaussian(rng, 5, 4, 0.0, 1.0);
    for (int i = 0; i < 5; ++i) b.labels.push_back(int(rng.below(3)));

    const CeResult ce = ce_loss(head, b);

    LossConfig fop;
    fop.kind = LossKind::Fop;
    fop.alpha = 0.0;
    CHECK(total_loss(fop, head, centers, b).loss == ce.loss);

    LossConfig git;
    git.kind = LossKind::Git;
    git.alpha_c = 0.0;
    git.alpha_g = 0.0;
    const auto tg = total_loss(git, head, centers, b);
    CHECK(tg.loss == ce.loss);
    CHECK(tg.grad_embeddings.data == ce.grad_embeddings.data);
}

TEST_CASE("total_loss composes CE=ln4 with OC=0") {
    // 4 classes, zero head -> CE = ln 4; one identity with two identical
    // embeddings -> OC = 0
    ClassifierHead head;
    head.w = Matrix(2, 4);
    head.b.assign(4, 0.0);
    const Centers centers{Matrix(4, 2)};
    const Batch b = make_batch({{1, 2}, {1, 2}}, {0, 0});

    LossConfig cfg;
    cfg.kind = LossKind::Fop;
    cfg.alpha = 1.0;
    CHECK(total_loss(cfg, head, centers, b).loss ==
          doctest::Approx(std::log(4.0)).epsilon(1e-12));
}
