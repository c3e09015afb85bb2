#pragma once

#include <cstddef>
#include <vector>

#include "sbnet/matrix.hpp"
#include "sbnet/rng.hpp"

namespace sbnet {

enum class Mode { Train, Eval };

// Two fully connected layers with ReLU, batch norm after the last linear
// layer. The same parameters process face and voice batches; the forward
// path never sees a modality tag.
struct SingleBranchParams {
    std::size_t d_in = 0, h = 0, d = 0;

    Matrix w1;               // d_in x h
    std::vector<double> b1;  // h
    Matrix w2;               // h x d
    std::vector<double> b2;  // d

    std::vector<double> bn_gamma, bn_beta;                // d
    std::vector<double> bn_running_mean, bn_running_var;  // d
    double bn_momentum = 0.1;
    double bn_eps = 1e-5;

    static SingleBranchParams init(std::size_t d_in, std::size_t h, std::size_t d,
                                   Rng& rng);

    std::size_t trainable_size() const;
    void pack(std::vector<double>& out) const;   // trainable params only
    void unpack(const std::vector<double>& in);  // running stats untouched
};

struct SingleBranchGrads {
    Matrix w1;
    std::vector<double> b1;
    Matrix w2;
    std::vector<double> b2;
    std::vector<double> bn_gamma, bn_beta;

    void pack(std::vector<double>& out) const;
};

struct SingleForwardCache {
    Mode mode = Mode::Eval;
    Matrix x;          // input batch
    Matrix h_pre;      // pre-ReLU
    Matrix h_act;      // post-ReLU
    Matrix z;          // BN input
    std::vector<double> batch_mean, batch_var;  // biased, train mode only
    Matrix x_hat;      // normalized z
};

struct SingleForwardResult {
    Matrix out;
    SingleForwardCache cache;
};

// Train mode uses batch statistics and updates the running stats in place;
// eval mode reads running stats and mutates nothing. Train mode needs B >= 2.
SingleForwardResult single_forward(SingleBranchParams& p, const Matrix& x, Mode mode);

// Eval-only forward on a const model.
Matrix single_forward_eval(const SingleBranchParams& p, const Matrix& x);

struct SingleBackwardResult {
    SingleBranchGrads grads;
    Matrix grad_x;
};

SingleBackwardResult single_backward(const SingleBranchParams& p,
                                     const SingleForwardCache& cache,
                                     const Matrix& grad_out);

// One modality-specific projection stack: two FC layers with ReLU, no BN.
struct BranchParams {
    Matrix w1;
    std::vector<double> b1;
    Matrix w2;
    std::vector<double> b2;
};

struct BranchGrads {
    Matrix w1;
    std::vector<double> b1;
    Matrix w2;
    std::vector<double> b2;
};

// Two independent branches, L2 normalization, and a softmax attention head
// fusing the two unit embeddings into one.
struct TwoBranchParams {
    std::size_t d_in = 0, h = 0, d = 0;
    BranchParams face, voice;
    Matrix fusion_w;               // 2d x 2
    std::vector<double> fusion_b;  // 2

    static TwoBranchParams init(std::size_t d_in, std::size_t h, std::size_t d,
                                Rng& rng);

    std::size_t trainable_size() const;
    void pack(std::vector<double>& out) const;
    void unpack(const std::vector<double>& in);
};

struct TwoForwardCache {
    Matrix xf, xv;
    Matrix hf_pre, hf_act, uf_raw;  // face branch intermediates
    Matrix hv_pre, hv_act, uv_raw;  // voice branch intermediates
    Matrix u, v;                    // unit embeddings
    Matrix attn;                    // B x 2 softmax weights
};

struct TwoForwardResult {
    Matrix l;  // fused embedding, B x d
    Matrix u, v;
    TwoForwardCache cache;
};

TwoForwardResult two_forward(const TwoBranchParams& p, const Matrix& xf,
                             const Matrix& xv);

struct TwoBranchGrads {
    BranchGrads face, voice;
    Matrix fusion_w;
    std::vector<double> fusion_b;

    void pack(std::vector<double>& out) const;
};

TwoBranchGrads two_backward(const TwoBranchParams& p, const TwoForwardCache& cache,
                            const Matrix& grad_l);

// Branch-only eval forward (no fusion): raw projection, then L2 normalize.
// Used for scoring one modality against the other.
Matrix branch_forward_eval(const BranchParams& b, const Matrix& x);

}  // namespace sbnet
