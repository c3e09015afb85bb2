#include "sbnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sbnet/error.hpp"

namespace sbnet {

namespace {

// x (B x n) * w (n x m) + b broadcast over rows.
Matrix affine(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
    Matrix out = matmul(x, w);
    for (std::size_t i = 0; i < out.rows; ++i)
        for (std::size_t j = 0; j < out.cols; ++j) out(i, j) += b[j];
    return out;
}

Matrix relu(const Matrix& m) {
    Matrix out = m;
    for (double& v : out.data) v = std::max(v, 0.0);
    return out;
}

std::vector<double> col_sum(const Matrix& m) {
    std::vector<double> s(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) s[j] += m(i, j);
    return s;
}

void append(std::vector<double>& out, const Matrix& m) {
    out.insert(out.end(), m.data.begin(), m.data.end());
}
void append(std::vector<double>& out, const std::vector<double>& v) {
    out.insert(out.end(), v.begin(), v.end());
}

std::size_t take(const std::vector<double>& in, std::size_t pos, Matrix& m) {
    std::copy(in.begin() + pos, in.begin() + pos + m.data.size(), m.data.begin());
    return pos + m.data.size();
}
std::size_t take(const std::vector<double>& in, std::size_t pos,
                 std::vector<double>& v) {
    std::copy(in.begin() + pos, in.begin() + pos + v.size(), v.begin());
    return pos + v.size();
}

Matrix he_init(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
    return gaussian(rng, fan_in, fan_out, 0.0, std::sqrt(2.0 / double(fan_in)));
}

struct FcGrads {
    Matrix dw1, dw2;
    std::vector<double> db1, db2;
    Matrix dx;
};

// Backward through z = relu(x w1 + b1) w2 + b2 given dz.
FcGrads fc_backward(const Matrix& x, const Matrix& h_pre, const Matrix& h_act,
                    const Matrix& w1, const Matrix& w2, const Matrix& dz) {
    FcGrads g;
    g.dw2 = matmul(transpose(h_act), dz);
    g.db2 = col_sum(dz);
    Matrix dh = matmul(dz, transpose(w2));
    for (std::size_t i = 0; i < dh.data.size(); ++i)
        if (h_pre.data[i] <= 0.0) dh.data[i] = 0.0;
    g.dw1 = matmul(transpose(x), dh);
    g.db1 = col_sum(dh);
    g.dx = matmul(dh, transpose(w1));
    return g;
}

}  // namespace

SingleBranchParams SingleBranchParams::init(std::size_t d_in, std::size_t h,
                                            std::size_t d, Rng& rng) {
    SingleBranchParams p;
    p.d_in = d_in;
    p.h = h;
    p.d = d;
    p.w1 = he_init(rng, d_in, h);
    p.b1.assign(h, 0.0);
    p.w2 = he_init(rng, h, d);
    p.b2.assign(d, 0.0);
    p.bn_gamma.assign(d, 1.0);
    p.bn_beta.assign(d, 0.0);
    p.bn_running_mean.assign(d, 0.0);
    p.bn_running_var.assign(d, 1.0);
    return p;
}

std::size_t SingleBranchParams::trainable_size() const {
    return d_in * h + h + h * d + d + d + d;
}

void SingleBranchParams::pack(std::vector<double>& out) const {
    append(out, w1);
    append(out, b1);
    append(out, w2);
    append(out, b2);
    append(out, bn_gamma);
    append(out, bn_beta);
}

void SingleBranchParams::unpack(const std::vector<double>& in) {
    std::size_t pos = 0;
    pos = take(in, pos, w1);
    pos = take(in, pos, b1);
    pos = take(in, pos, w2);
    pos = take(in, pos, b2);
    pos = take(in, pos, bn_gamma);
    pos = take(in, pos, bn_beta);
}

void SingleBranchGrads::pack(std::vector<double>& out) const {
    append(out, w1);
    append(out, b1);
    append(out, w2);
    append(out, b2);
    append(out, bn_gamma);
    append(out, bn_beta);
}

SingleForwardResult single_forward(SingleBranchParams& p, const Matrix& x, Mode mode) {
    if (x.cols != p.d_in)
        throw DimensionError("single_forward: input has " + std::to_string(x.cols) +
                             " columns, model expects " + std::to_string(p.d_in));
    const std::size_t batch = x.rows;
    if (mode == Mode::Train && batch < 2)
        throw ContractError("single_forward: train mode needs batch size >= 2");

    SingleForwardResult r;
    SingleForwardCache& c = r.cache;
    c.mode = mode;
    c.x = x;
    c.h_pre = affine(x, p.w1, p.b1);
    c.h_act = relu(c.h_pre);
    c.z = affine(c.h_act, p.w2, p.b2);

    const std::size_t d = p.d;
    c.x_hat = Matrix(batch, d);
    r.out = Matrix(batch, d);

    if (mode == Mode::Train) {
        c.batch_mean.assign(d, 0.0);
        c.batch_var.assign(d, 0.0);
        for (std::size_t i = 0; i < batch; ++i)
            for (std::size_t j = 0; j < d; ++j) c.batch_mean[j] += c.z(i, j);
        for (double& m : c.batch_mean) m /= double(batch);
        for (std::size_t i = 0; i < batch; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                const double dz = c.z(i, j) - c.batch_mean[j];
                c.batch_var[j] += dz * dz;
            }
        for (double& v : c.batch_var) v /= double(batch);

        for (std::size_t j = 0; j < d; ++j) {
            const double inv_std = 1.0 / std::sqrt(c.batch_var[j] + p.bn_eps);
            for (std::size_t i = 0; i < batch; ++i) {
                c.x_hat(i, j) = (c.z(i, j) - c.batch_mean[j]) * inv_std;
                r.out(i, j) = p.bn_gamma[j] * c.x_hat(i, j) + p.bn_beta[j];
            }
            p.bn_running_mean[j] = (1.0 - p.bn_momentum) * p.bn_running_mean[j] +
                                   p.bn_momentum * c.batch_mean[j];
            p.bn_running_var[j] = (1.0 - p.bn_momentum) * p.bn_running_var[j] +
                                  p.bn_momentum * c.batch_var[j];
        }
    } else {
        for (std::size_t j = 0; j < d; ++j) {
            const double inv_std = 1.0 / std::sqrt(p.bn_running_var[j] + p.bn_eps);
            for (std::size_t i = 0; i < batch; ++i) {
                c.x_hat(i, j) = (c.z(i, j) - p.bn_running_mean[j]) * inv_std;
                r.out(i, j) = p.bn_gamma[j] * c.x_hat(i, j) + p.bn_beta[j];
            }
        }
    }
    check_finite(r.out, "single_forward output");
    return r;
}

Matrix single_forward_eval(const SingleBranchParams& p, const Matrix& x) {
    // Eval mode never mutates; the const_cast is contained here and guarded
    // by the mode check inside single_forward.
    auto& mut = const_cast<SingleBranchParams&>(p);
    return single_forward(mut, x, Mode::Eval).out;
}

SingleBackwardResult single_backward(const SingleBranchParams& p,
                                     const SingleForwardCache& c,
                                     const Matrix& grad_out) {
    if (c.mode != Mode::Train)
        throw ContractError("single_backward: cache was not produced in train mode");
    if (!grad_out.same_shape(c.x_hat))
        throw DimensionError("single_backward: grad_out shape mismatch");

    const std::size_t batch = grad_out.rows;
    const std::size_t d = p.d;

    SingleBackwardResult r;
    r.grads.bn_gamma.assign(d, 0.0);
    r.grads.bn_beta.assign(d, 0.0);

    // BN backward with batch statistics.
    Matrix dz(batch, d);
    for (std::size_t j = 0; j < d; ++j) {
        const double inv_std = 1.0 / std::sqrt(c.batch_var[j] + p.bn_eps);
        double sum_dxhat = 0.0, sum_dxhat_zc = 0.0;
        for (std::size_t i = 0; i < batch; ++i) {
            const double go = grad_out(i, j);
            r.grads.bn_gamma[j] += go * c.x_hat(i, j);
            r.grads.bn_beta[j] += go;
            const double dxhat = go * p.bn_gamma[j];
            sum_dxhat += dxhat;
            sum_dxhat_zc += dxhat * (c.z(i, j) - c.batch_mean[j]);
        }
        const double dvar = sum_dxhat_zc * (-0.5) * inv_std * inv_std * inv_std;
        const double dmean = -sum_dxhat * inv_std;
        for (std::size_t i = 0; i < batch; ++i) {
            const double dxhat = grad_out(i, j) * p.bn_gamma[j];
            const double zc = c.z(i, j) - c.batch_mean[j];
            dz(i, j) = dxhat * inv_std + dvar * 2.0 * zc / double(batch) +
                       dmean / double(batch);
        }
    }

    FcGrads fc = fc_backward(c.x, c.h_pre, c.h_act, p.w1, p.w2, dz);
    r.grads.w1 = std::move(fc.dw1);
    r.grads.b1 = std::move(fc.db1);
    r.grads.w2 = std::move(fc.dw2);
    r.grads.b2 = std::move(fc.db2);
    r.grad_x = std::move(fc.dx);
    return r;
}

TwoBranchParams TwoBranchParams::init(std::size_t d_in, std::size_t h, std::size_t d,
                                      Rng& rng) {
    TwoBranchParams p;
    p.d_in = d_in;
    p.h = h;
    p.d = d;
    for (BranchParams* b : {&p.face, &p.voice}) {
        b->w1 = he_init(rng, d_in, h);
        b->b1.assign(h, 0.0);
        b->w2 = he_init(rng, h, d);
        b->b2.assign(d, 0.0);
    }
    p.fusion_w = gaussian(rng, 2 * d, 2, 0.0, std::sqrt(1.0 / double(2 * d)));
    p.fusion_b.assign(2, 0.0);
    return p;
}

std::size_t TwoBranchParams::trainable_size() const {
    return 2 * (d_in * h + h + h * d + d) + 2 * d * 2 + 2;
}

void TwoBranchParams::pack(std::vector<double>& out) const {
    for (const BranchParams* b : {&face, &voice}) {
        append(out, b->w1);
        append(out, b->b1);
        append(out, b->w2);
        append(out, b->b2);
    }
    append(out, fusion_w);
    append(out, fusion_b);
}

void TwoBranchParams::unpack(const std::vector<double>& in) {
    std::size_t pos = 0;
    for (BranchParams* b : {&face, &voice}) {
        pos = take(in, pos, b->w1);
        pos = take(in, pos, b->b1);
        pos = take(in, pos, b->w2);
        pos = take(in, pos, b->b2);
    }
    pos = take(in, pos, fusion_w);
    pos = take(in, pos, fusion_b);
}

void TwoBranchGrads::pack(std::vector<double>& out) const {
    for (const BranchGrads* b : {&face, &voice}) {
        append(out, b->w1);
        append(out, b->b1);
        append(out, b->w2);
        append(out, b->b2);
    }
    append(out, fusion_w);
    append(out, fusion_b);
}

TwoForwardResult two_forward(const TwoBranchParams& p, const Matrix& xf,
                             const Matrix& xv) {
    if (xf.rows != xv.rows)
        throw DimensionError("two_forward: face and voice batch sizes differ");
    if (xf.cols != p.d_in || xv.cols != p.d_in)
        throw DimensionError("two_forward: input dimension mismatch");

    TwoForwardResult r;
    TwoForwardCache& c = r.cache;
    c.xf = xf;
    c.xv = xv;

    c.hf_pre = affine(xf, p.face.w1, p.face.b1);
    c.hf_act = relu(c.hf_pre);
    c.uf_raw = affine(c.hf_act, p.face.w2, p.face.b2);
    c.u = row_l2_normalize(c.uf_raw);

    c.hv_pre = affine(xv, p.voice.w1, p.voice.b1);
    c.hv_act = relu(c.hv_pre);
    c.uv_raw = affine(c.hv_act, p.voice.w2, p.voice.b2);
    c.v = row_l2_normalize(c.uv_raw);

    const std::size_t batch = xf.rows;
    const std::size_t d = p.d;
    c.attn = Matrix(batch, 2);
    r.l = Matrix(batch, d);
    for (std::size_t i = 0; i < batch; ++i) {
        double logits[2] = {p.fusion_b[0], p.fusion_b[1]};
        for (std::size_t j = 0; j < d; ++j) {
            logits[0] += c.u(i, j) * p.fusion_w(j, 0) + c.v(i, j) * p.fusion_w(d + j, 0);
            logits[1] += c.u(i, j) * p.fusion_w(j, 1) + c.v(i, j) * p.fusion_w(d + j, 1);
        }
        const double m = std::max(logits[0], logits[1]);
        const double e0 = std::exp(logits[0] - m);
        const double e1 = std::exp(logits[1] - m);
        c.attn(i, 0) = e0 / (e0 + e1);
        c.attn(i, 1) = e1 / (e0 + e1);
        for (std::size_t j = 0; j < d; ++j)
            r.l(i, j) = c.attn(i, 0) * c.u(i, j) + c.attn(i, 1) * c.v(i, j);
    }
    r.u = c.u;
    r.v = c.v;
    check_finite(r.l, "two_forward output");
    return r;
}

TwoBranchGrads two_backward(const TwoBranchParams& p, const TwoForwardCache& c,
                            const Matrix& grad_l) {
    const std::size_t batch = grad_l.rows;
    const std::size_t d = p.d;
    if (grad_l.cols != d || batch != c.u.rows)
        throw DimensionError("two_backward: grad_l shape mismatch");

    TwoBranchGrads g;
    g.fusion_w = Matrix(2 * d, 2);
    g.fusion_b.assign(2, 0.0);

    Matrix du(batch, d), dv(batch, d);
    for (std::size_t i = 0; i < batch; ++i) {
        const double a0 = c.attn(i, 0);
        const double a1 = c.attn(i, 1);
        double da0 = 0.0, da1 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            da0 += grad_l(i, j) * c.u(i, j);
            da1 += grad_l(i, j) * c.v(i, j);
            du(i, j) = a0 * grad_l(i, j);
            dv(i, j) = a1 * grad_l(i, j);
        }
        // softmax Jacobian
        const double s = a0 * da0 + a1 * da1;
        const double ds0 = a0 * (da0 - s);
        const double ds1 = a1 * (da1 - s);
        g.fusion_b[0] += ds0;
        g.fusion_b[1] += ds1;
        for (std::size_t j = 0; j < d; ++j) {
            g.fusion_w(j, 0) += c.u(i, j) * ds0;
            g.fusion_w(j, 1) += c.u(i, j) * ds1;
            g.fusion_w(d + j, 0) += c.v(i, j) * ds0;
            g.fusion_w(d + j, 1) += c.v(i, j) * ds1;
            du(i, j) += p.fusion_w(j, 0) * ds0 + p.fusion_w(j, 1) * ds1;
            dv(i, j) += p.fusion_w(d + j, 0) * ds0 + p.fusion_w(d + j, 1) * ds1;
        }
    }

    // Back through the L2 normalization of each row.
    auto l2_backward = [d](const Matrix& raw, const Matrix& unit, const Matrix& dunit) {
        Matrix draw(dunit.rows, d);
        for (std::size_t i = 0; i < dunit.rows; ++i) {
            const double norm = l2_norm(raw.row(i));
            double proj = 0.0;
            for (std::size_t j = 0; j < d; ++j) proj += unit(i, j) * dunit(i, j);
            for (std::size_t j = 0; j < d; ++j)
                draw(i, j) = (dunit(i, j) - unit(i, j) * proj) / norm;
        }
        return draw;
    };

    const Matrix duf_raw = l2_backward(c.uf_raw, c.u, du);
    const Matrix duv_raw = l2_backward(c.uv_raw, c.v, dv);

    FcGrads ff = fc_backward(c.xf, c.hf_pre, c.hf_act, p.face.w1, p.face.w2, duf_raw);
    g.face.w1 = std::move(ff.dw1);
    g.face.b1 = std::move(ff.db1);
    g.face.w2 = std::move(ff.dw2);
    g.face.b2 = std::move(ff.db2);

    FcGrads fv = fc_backward(c.xv, c.hv_pre, c.hv_act, p.voice.w1, p.voice.w2, duv_raw);
    g.voice.w1 = std::move(fv.dw1);
    g.voice.b1 = std::move(fv.db1);
    g.voice.w2 = std::move(fv.dw2);
    g.voice.b2 = std::move(fv.db2);
    return g;
}

Matrix branch_forward_eval(const BranchParams& b, const Matrix& x) {
    const Matrix h = relu(affine(x, b.w1, b.b1));
    return row_l2_normalize(affine(h, b.w2, b.b2));
}

}  // namespace sbnet
