#include "sbnet/losses.hpp"

#include <algorithm>
#include <cmath>

#include "sbnet/error.hpp"

namespace sbnet {

namespace {

void check_labels(const Batch& batch, std::size_t n_classes) {
    for (std::size_t i = 0; i < batch.labels.size(); ++i) {
        const int y = batch.labels[i];
        if (y < 0 || std::size_t(y) >= n_classes)
            throw LabelError("label " + std::to_string(y) + " at batch index " +
                             std::to_string(i) + " outside [0, " +
                             std::to_string(n_classes) + ")");
    }
    if (batch.labels.size() != batch.embeddings.rows)
        throw DimensionError("batch: labels/embeddings row count mismatch");
}

}  // namespace

ClassifierHead ClassifierHead::init(std::size_t d, std::size_t n_classes, Rng& rng) {
    if (n_classes < 2) throw ConfigError("classifier head needs >= 2 classes");
    ClassifierHead h;
    h.w = gaussian(rng, d, n_classes, 0.0, std::sqrt(1.0 / double(d)));
    h.b.assign(n_classes, 0.0);
    return h;
}

void ClassifierHead::pack(std::vector<double>& out) const {
    out.insert(out.end(), w.data.begin(), w.data.end());
    out.insert(out.end(), b.begin(), b.end());
}

void ClassifierHead::unpack(const std::vector<double>& in, std::size_t offset) {
    std::copy(in.begin() + offset, in.begin() + offset + w.data.size(),
              w.data.begin());
    offset += w.data.size();
    std::copy(in.begin() + offset, in.begin() + offset + b.size(), b.begin());
}

LossKind parse_loss_kind(const std::string& name) {
    if (name == "fop") return LossKind::Fop;
    if (name == "center") return LossKind::Center;
    if (name == "git") return LossKind::Git;
    throw ConfigError("unknown loss '" + name + "' (expected fop|center|git)");
}

std::string loss_kind_name(LossKind k) {
    switch (k) {
        case LossKind::Fop: return "fop";
        case LossKind::Center: return "center";
        case LossKind::Git: return "git";
    }
    return "?";
}

CeResult ce_loss(const ClassifierHead& head, const Batch& batch) {
    const std::size_t n_classes = head.b.size();
    check_labels(batch, n_classes);
    const Matrix& e = batch.embeddings;
    const std::size_t batch_size = e.rows;

    Matrix logits = matmul(e, head.w);
    for (std::size_t i = 0; i < batch_size; ++i)
        for (std::size_t c = 0; c < n_classes; ++c) logits(i, c) += head.b[c];

    CeResult r;
    Matrix dlogits(batch_size, n_classes);
    for (std::size_t i = 0; i < batch_size; ++i) {
        const double m = *std::max_element(logits.row(i).begin(), logits.row(i).end());
        double denom = 0.0;
        for (std::size_t c = 0; c < n_classes; ++c)
            denom += std::exp(logits(i, c) - m);
        const int y = batch.labels[i];
        r.loss += -(logits(i, y) - m - std::log(denom));
        for (std::size_t c = 0; c < n_classes; ++c) {
            const double p = std::exp(logits(i, c) - m) / denom;
            dlogits(i, c) = (p - (int(c) == y ? 1.0 : 0.0)) / double(batch_size);
        }
    }
    r.loss /= double(batch_size);

    r.grad_embeddings = matmul(dlogits, transpose(head.w));
    r.grad_w = matmul(transpose(e), dlogits);
    r.grad_b.assign(n_classes, 0.0);
    for (std::size_t i = 0; i < batch_size; ++i)
        for (std::size_t c = 0; c < n_classes; ++c) r.grad_b[c] += dlogits(i, c);
    return r;
}

EmbeddingLossResult oc_loss(const Batch& batch, PairReduction reduction) {
    const Matrix& e = batch.embeddings;
    const std::size_t batch_size = e.rows;
    if (batch_size < 2) throw ContractError("oc_loss: needs batch size >= 2");
    if (batch.labels.size() != batch_size)
        throw DimensionError("oc_loss: labels/embeddings mismatch");

    const std::size_t d = e.cols;
    std::vector<double> norms(batch_size);
    Matrix unit(batch_size, d);
    for (std::size_t i = 0; i < batch_size; ++i) {
        norms[i] = l2_norm(e.row(i));
        if (norms[i] < kNormEps)
            throw DegenerateVectorError("oc_loss: zero-norm embedding at row " +
                                        std::to_string(i));
        for (std::size_t j = 0; j < d; ++j) unit(i, j) = e(i, j) / norms[i];
    }

    double pos_sum = 0.0, neg_sum = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < batch_size; ++i)
        for (std::size_t j = i + 1; j < batch_size; ++j) {
            const double c = dot(unit.row(i), unit.row(j));
            if (batch.labels[i] == batch.labels[j]) {
                pos_sum += c;
                ++n_pos;
            } else {
                neg_sum += c;
                ++n_neg;
            }
        }

    const bool mean = reduction == PairReduction::Mean;
    const double pos_term = n_pos ? (mean ? pos_sum / double(n_pos) : pos_sum) : 0.0;
    const double neg_term = n_neg ? (mean ? neg_sum / double(n_neg) : neg_sum) : 0.0;

    EmbeddingLossResult r;
    r.loss = 1.0 - pos_term + std::abs(neg_term);
    r.grad_embeddings = Matrix(batch_size, d);

    const double neg_sign = neg_term > 0.0 ? 1.0 : (neg_term < 0.0 ? -1.0 : 0.0);
    for (std::size_t i = 0; i < batch_size; ++i)
        for (std::size_t j = i + 1; j < batch_size; ++j) {
            double w;
            if (batch.labels[i] == batch.labels[j])
                w = -(mean ? 1.0 / double(n_pos) : 1.0);
            else
                w = neg_sign * (mean ? 1.0 / double(n_neg) : 1.0);
            if (w == 0.0) continue;
            const double cij = dot(unit.row(i), unit.row(j));
            // d cos(e_i, e_j)/d e_i = (u_j - cos * u_i) / ||e_i||
            for (std::size_t k = 0; k < d; ++k) {
                r.grad_embeddings(i, k) += w * (unit(j, k) - cij * unit(i, k)) / norms[i];
                r.grad_embeddings(j, k) += w * (unit(i, k) - cij * unit(j, k)) / norms[j];
            }
        }
    return r;
}

EmbeddingLossResult center_loss(const Batch& batch, const Centers& centers) {
    check_labels(batch, centers.c.rows);
    const Matrix& e = batch.embeddings;
    EmbeddingLossResult r;
    r.grad_embeddings = Matrix(e.rows, e.cols);
    for (std::size_t i = 0; i < e.rows; ++i) {
        const int y = batch.labels[i];
        for (std::size_t k = 0; k < e.cols; ++k) {
            const double diff = e(i, k) - centers.c(y, k);
            r.loss += 0.5 * diff * diff;
            r.grad_embeddings(i, k) = diff;
        }
    }
    return r;
}

void center_update(Centers& centers, const Batch& batch, double center_lr) {
    check_labels(batch, centers.c.rows);
    const Matrix& e = batch.embeddings;
    const std::size_t d = centers.c.cols;

    std::vector<std::size_t> counts(centers.c.rows, 0);
    Matrix delta(centers.c.rows, d);
    for (std::size_t i = 0; i < e.rows; ++i) {
        const int y = batch.labels[i];
        ++counts[y];
        for (std::size_t k = 0; k < d; ++k) delta(y, k) += centers.c(y, k) - e(i, k);
    }
    for (std::size_t j = 0; j < counts.size(); ++j) {
        if (counts[j] == 0) continue;
        const double scale = center_lr / double(1 + counts[j]);
        for (std::size_t k = 0; k < d; ++k) centers.c(j, k) -= scale * delta(j, k);
    }
}

EmbeddingLossResult git_loss(const Batch& batch, const Centers& centers) {
    check_labels(batch, centers.c.rows);
    const Matrix& e = batch.embeddings;
    const std::size_t batch_size = e.rows;
    if (batch_size < 2) throw ContractError("git_loss: needs batch size >= 2");
    const std::size_t d = e.cols;

    EmbeddingLossResult r;
    r.grad_embeddings = Matrix(batch_size, d);
    // Ordered pairs (i, j), i != j, restricted to different classes: the push
    // term decays with the distance from I_i to the foreign center c_{y_j}.
    for (std::size_t i = 0; i < batch_size; ++i)
        for (std::size_t j = 0; j < batch_size; ++j) {
            if (i == j || batch.labels[i] == batch.labels[j]) continue;
            const int yj = batch.labels[j];
            double dist2 = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = e(i, k) - centers.c(yj, k);
                dist2 += diff * diff;
            }
            const double denom = 1.0 + dist2;
            r.loss += 1.0 / denom;
            const double scale = -2.0 / (denom * denom);
            for (std::size_t k = 0; k < d; ++k)
                r.grad_embeddings(i, k) += scale * (e(i, k) - centers.c(yj, k));
        }
    return r;
}

TotalLossResult total_loss(const LossConfig& cfg, const ClassifierHead& head,
                           const Centers& centers, const Batch& batch) {
    CeResult ce = ce_loss(head, batch);

    TotalLossResult r;
    r.ce = ce.loss;
    r.grad_embeddings = std::move(ce.grad_embeddings);
    r.grad_head_w = std::move(ce.grad_w);
    r.grad_head_b = std::move(ce.grad_b);

    auto add_weighted = [&](const EmbeddingLossResult& part, double weight) {
        if (weight == 0.0) return;
        r.auxiliary += weight * part.loss;
        for (std::size_t i = 0; i < r.grad_embeddings.data.size(); ++i)
            r.grad_embeddings.data[i] += weight * part.grad_embeddings.data[i];
    };

    switch (cfg.kind) {
        case LossKind::Fop:
            if (cfg.alpha != 0.0)
                add_weighted(oc_loss(batch, cfg.pair_reduction), cfg.alpha);
            break;
        case LossKind::Center:
            if (cfg.alpha_c != 0.0)
                add_weighted(center_loss(batch, centers), cfg.alpha_c);
            break;
        case LossKind::Git:
            if (cfg.alpha_c != 0.0)
                add_weighted(center_loss(batch, centers), cfg.alpha_c);
            if (cfg.alpha_g != 0.0) add_weighted(git_loss(batch, centers), cfg.alpha_g);
            break;
    }
    r.loss = r.ce + r.auxiliary;
    return r;
}

}  // namespace sbnet
