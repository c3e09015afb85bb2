#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sbnet/matrix.hpp"

namespace sbnet {

enum class Modality { Face, Voice };
enum class BatchTag { Face, Voice, Fused };

// Identity-labeled embedding mini-batch fed to the loss layer.
struct Batch {
    Matrix embeddings;        // B x d
    std::vector<int> labels;  // in [0, C)
    BatchTag tag = BatchTag::Fused;
};

// Linear logits head over the d-dimensional embedding, shared across
// modalities: the shared identity supervision is what aligns them.
struct ClassifierHead {
    Matrix w;               // d x C
    std::vector<double> b;  // C

    static ClassifierHead init(std::size_t d, std::size_t n_classes, Rng& rng);
    std::size_t trainable_size() const { return w.data.size() + b.size(); }
    void pack(std::vector<double>& out) const;
    void unpack(const std::vector<double>& in, std::size_t offset);
};

// One learnable center per training identity, shared across modalities.
struct Centers {
    Matrix c;  // C x d
};

enum class LossKind { Fop, Center, Git };

LossKind parse_loss_kind(const std::string& name);
std::string loss_kind_name(LossKind k);

enum class PairReduction { Mean, Sum };

struct LossConfig {
    LossKind kind = LossKind::Fop;
    double alpha = 1.0;      // OC weight
    double alpha_c = 0.003;  // center weight
    double alpha_g = 0.003;  // git weight
    double center_lr = 0.5;
    PairReduction pair_reduction = PairReduction::Mean;
};

struct CeResult {
    double loss = 0.0;
    Matrix grad_embeddings;
    Matrix grad_w;
    std::vector<double> grad_b;
};

// Mean softmax cross-entropy over the batch, max-shift stabilized.
CeResult ce_loss(const ClassifierHead& head, const Batch& batch);

struct EmbeddingLossResult {
    double loss = 0.0;
    Matrix grad_embeddings;
};

// Orthogonality constraint: 1 - reduce(same-class cosines)
// + |reduce(cross-class cosines)| over unordered pairs. An empty pair set
// contributes 0 to its term.
EmbeddingLossResult oc_loss(const Batch& batch,
                            PairReduction reduction = PairReduction::Mean);

// 1/2 sum_i ||I_i - c_{y_i}||^2. Centers are constants here; they move only
// through center_update.
EmbeddingLossResult center_loss(const Batch& batch, const Centers& centers);

// Delta rule: c_j -= lr * sum_{y_i=j}(c_j - I_i) / (1 + n_j).
void center_update(Centers& centers, const Batch& batch, double center_lr);

// sum over ordered cross-class pairs of 1 / (1 + ||I_i - c_{y_j}||^2).
EmbeddingLossResult git_loss(const Batch& batch, const Centers& centers);

struct TotalLossResult {
    double loss = 0.0;
    double ce = 0.0;
    double auxiliary = 0.0;  // weighted non-CE part
    Matrix grad_embeddings;
    Matrix grad_head_w;
    std::vector<double> grad_head_b;
};

// CE plus the selected auxiliary terms, with gradients summed accordingly.
TotalLossResult total_loss(const LossConfig& cfg, const ClassifierHead& head,
                           const Centers& centers, const Batch& batch);

}  // namespace sbnet
