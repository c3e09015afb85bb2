#include "sbnet/gradcheck.hpp"

#include <cmath>

#include "sbnet/losses.hpp"
#include "sbnet/matrix.hpp"
#include "sbnet/model.hpp"

namespace sbnet {

namespace {

constexpr double kEps = 1e-5;
constexpr std::size_t kBatch = 8;
constexpr std::size_t kDim = 16;
constexpr std::size_t kClasses = 4;

double rel_err(const std::vector<double>& analytic, const std::vector<double>& fd) {
    double num = 0.0, da = 0.0, df = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double diff = analytic[i] - fd[i];
        num += diff * diff;
        da += analytic[i] * analytic[i];
        df += fd[i] * fd[i];
    }
    return std::sqrt(num) / (std::sqrt(da) + std::sqrt(df) + 1e-300);
}

Batch random_batch(Rng& rng) {
    Batch b;
    b.embeddings = gaussian(rng, kBatch, kDim, 0.0, 1.0);
    for (std::size_t i = 0; i < kBatch; ++i)
        b.labels.push_back(int(rng.below(kClasses)));
    return b;
}

GradCheckResult check(const std::string& name, const std::vector<double>& analytic,
                      const std::vector<double>& fd) {
    GradCheckResult r;
    r.name = name;
    r.max_rel_err = rel_err(analytic, fd);
    r.passed = r.max_rel_err < r.tolerance;
    return r;
}

GradCheckResult check_ce(Rng& rng, bool fault) {
    ClassifierHead head = ClassifierHead::init(kDim, kClasses, rng);
    Batch batch = random_batch(rng);

    // One flat vector: [embeddings, W, b].
    std::vector<double> at;
    at.insert(at.end(), batch.embeddings.data.begin(), batch.embeddings.data.end());
    at.insert(at.end(), head.w.data.begin(), head.w.data.end());
    at.insert(at.end(), head.b.begin(), head.b.end());

    auto eval = [&](const std::vector<double>& x) {
        Batch b2 = batch;
        ClassifierHead h2 = head;
        std::size_t pos = 0;
        std::copy(x.begin(), x.begin() + b2.embeddings.data.size(),
                  b2.embeddings.data.begin());
        pos += b2.embeddings.data.size();
        std::copy(x.begin() + pos, x.begin() + pos + h2.w.data.size(),
                  h2.w.data.begin());
        pos += h2.w.data.size();
        std::copy(x.begin() + pos, x.end(), h2.b.begin());
        return ce_loss(h2, b2).loss;
    };

    const auto fd = finite_diff_grad(eval, at, kEps);
    CeResult r = ce_loss(head, batch);
    std::vector<double> analytic;
    analytic.insert(analytic.end(), r.grad_embeddings.data.begin(),
                    r.grad_embeddings.data.end());
    analytic.insert(analytic.end(), r.grad_w.data.begin(), r.grad_w.data.end());
    analytic.insert(analytic.end(), r.grad_b.begin(), r.grad_b.end());
    if (fault) analytic[0] += 0.1;
    return check("ce_loss", analytic, fd);
}

GradCheckResult check_oc(Rng& rng) {
    Batch batch = random_batch(rng);
    auto eval = [&](const std::vector<double>& x) {
        Batch b2 = batch;
        b2.embeddings.data = x;
        return oc_loss(b2).loss;
    };
    const auto fd = finite_diff_grad(eval, batch.embeddings.data, kEps);
    return check("oc_loss", oc_loss(batch).grad_embeddings.data, fd);
}

GradCheckResult check_center(Rng& rng) {
    Batch batch = random_batch(rng);
    Centers centers{gaussian(rng, kClasses, kDim, 0.0, 1.0)};
    auto eval = [&](const std::vector<double>& x) {
        Batch b2 = batch;
        b2.embeddings.data = x;
        return center_loss(b2, centers).loss;
    };
    const auto fd = finite_diff_grad(eval, batch.embeddings.data, kEps);
    return check("center_loss", center_loss(batch, centers).grad_embeddings.data, fd);
}

GradCheckResult check_git(Rng& rng) {
    Batch batch = random_batch(rng);
    Centers centers{gaussian(rng, kClasses, kDim, 0.0, 1.0)};
    auto eval = [&](const std::vector<double>& x) {
        Batch b2 = batch;
        b2.embeddings.data = x;
        return git_loss(b2, centers).loss;
    };
    const auto fd = finite_diff_grad(eval, batch.embeddings.data, kEps);
    return check("git_loss", git_loss(batch, centers).grad_embeddings.data, fd);
}

GradCheckResult check_single(Rng& rng) {
    const std::size_t d_in = kDim, h = 12, d = 10;
    SingleBranchParams params = SingleBranchParams::init(d_in, h, d, rng);
    const Matrix x = gaussian(rng, kBatch, d_in, 0.0, 1.0);
    // Random projection weights: plain sum(out) has near-zero sensitivity
    // to the pre-BN weights because BN centers each column.
    const Matrix proj = gaussian(rng, kBatch, d, 0.0, 1.0);

    std::vector<double> at;
    SingleBranchParams base = params;
    base.pack(at);
    at.insert(at.end(), x.data.begin(), x.data.end());

    auto eval = [&](const std::vector<double>& v) {
        SingleBranchParams p2 = base;
        p2.unpack(v);
        Matrix x2 = x;
        std::copy(v.begin() + std::ptrdiff_t(base.trainable_size()), v.end(),
                  x2.data.begin());
        const auto fwd = single_forward(p2, x2, Mode::Train);
        double s = 0.0;
        for (std::size_t i = 0; i < fwd.out.data.size(); ++i)
            s += proj.data[i] * fwd.out.data[i];
        return s;
    };
    const auto fd = finite_diff_grad(eval, at, kEps);

    SingleBranchParams p2 = base;
    const auto fwd = single_forward(p2, x, Mode::Train);
    const auto bwd = single_backward(base, fwd.cache, proj);
    std::vector<double> analytic;
    bwd.grads.pack(analytic);
    analytic.insert(analytic.end(), bwd.grad_x.data.begin(), bwd.grad_x.data.end());
    return check("single_branch", analytic, fd);
}

GradCheckResult check_two(Rng& rng) {
    const std::size_t d_in = kDim, h = 12, d = 10;
    TwoBranchParams params = TwoBranchParams::init(d_in, h, d, rng);
    const Matrix xf = gaussian(rng, kBatch, d_in, 0.0, 1.0);
    const Matrix xv = gaussian(rng, kBatch, d_in, 0.0, 1.0);
    const Matrix proj = gaussian(rng, kBatch, d, 0.0, 1.0);

    std::vector<double> at;
    params.pack(at);

    auto eval = [&](const std::vector<double>& v) {
        TwoBranchParams p2 = params;
        p2.unpack(v);
        const auto fwd = two_forward(p2, xf, xv);
        double s = 0.0;
        for (std::size_t i = 0; i < fwd.l.data.size(); ++i)
            s += proj.data[i] * fwd.l.data[i];
        return s;
    };
    const auto fd = finite_diff_grad(eval, at, kEps);

    const auto fwd = two_forward(params, xf, xv);
    const auto g = two_backward(params, fwd.cache, proj);
    std::vector<double> analytic;
    g.pack(analytic);
    return check("two_branch_fusion", analytic, fd);
}

}  // namespace

std::vector<GradCheckResult> run_gradient_checks(std::uint64_t seed, bool inject_fault) {
    Rng rng(seed);
    std::vector<GradCheckResult> results;
    results.push_back(check_ce(rng, inject_fault));
    results.push_back(check_oc(rng));
    results.push_back(check_center(rng));
    results.push_back(check_git(rng));
    results.push_back(check_single(rng));
    results.push_back(check_two(rng));
    return results;
}

}  // namespace sbnet
