#include "tcco/layers.hpp"

#include <stdexcept>

namespace tcco::nn {

Linear::Linear(const std::string& name, int in, int out, Rng& rng, double gain) {
    w = Param(name + ".w", in, out);
    b = Param(name + ".b", 1, out);
    const double scale = gain * std::sqrt(2.0 / static_cast<double>(in + out));
    for (double& x : w.value.v) x = rng.normal() * scale;
}

Tape::Var Linear::apply(Tape& t, Tape::Var x) const {
    Tape::Var wv = t.param(const_cast<Param&>(w));
    Tape::Var bv = t.param(const_cast<Param&>(b));
    return t.add_rowvec(t.matmul(x, wv), bv);
}

LayerNorm::LayerNorm(const std::string& name, int d) {
    gain = Param(name + ".gain", 1, d);
    bias = Param(name + ".bias", 1, d);
    gain.value.fill(1.0);
}

Tape::Var LayerNorm::apply(Tape& t, Tape::Var x) const {
    Tape::Var g = t.param(const_cast<Param&>(gain));
    Tape::Var b = t.param(const_cast<Param&>(bias));
    return t.layer_norm_rows(x, g, b);
}

MultiHeadSelfAttention::MultiHeadSelfAttention(const std::string& name, int d,
                                               int n_heads, Rng& rng)
    : wq(name + ".q", d, d, rng),
      wk(name + ".k", d, d, rng),
      wv(name + ".v", d, d, rng),
      wo(name + ".o", d, d, rng),
      heads(n_heads),
      dim(d) {
    if (d % n_heads != 0)
        throw std::invalid_argument("attention: dim not divisible by heads");
}

Tape::Var MultiHeadSelfAttention::apply(Tape& t, Tape::Var x, int batch, int len,
                                        const std::vector<int>& valid_from) const {
    if (x.rows != batch * len) throw std::invalid_argument("attention: bad layout");
    const int dh = dim / heads;
    Tape::Var q = wq.apply(t, x);
    Tape::Var k = wk.apply(t, x);
    Tape::Var v = wv.apply(t, x);

    std::vector<Tape::Var> rows;
    rows.reserve(static_cast<std::size_t>(batch));
    for (int b = 0; b < batch; ++b) {
        const int vf = valid_from.empty() ? 0 : valid_from[static_cast<std::size_t>(b)];
        Tape::Var mask = t.input(causal_mask(len, vf));
        std::vector<Tape::Var> head_outs;
        head_outs.reserve(static_cast<std::size_t>(heads));
        for (int h = 0; h < heads; ++h) {
            Tape::Var qb = t.block(q, b * len, h * dh, len, dh);
            Tape::Var kb = t.block(k, b * len, h * dh, len, dh);
            Tape::Var vb = t.block(v, b * len, h * dh, len, dh);
            head_outs.push_back(scaled_dot_attention(t, qb, kb, vb, mask));
        }
        rows.push_back(t.hstack(head_outs));
    }
    Tape::Var merged = t.vstack(rows);
    return wo.apply(t, merged);
}

void Adam::step(std::vector<Param*>& params, double lr) {
    if (moments_.size() != params.size()) {
        moments_.clear();
        moments_.reserve(params.size());
        for (Param* p : params)
            moments_.push_back({Tensor(p->value.rows, p->value.cols),
                                Tensor(p->value.rows, p->value.cols)});
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Param& p = *params[k];
        Moments& mo = moments_[k];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad.v[i];
            mo.m.v[i] = beta1_ * mo.m.v[i] + (1.0 - beta1_) * g;
            mo.v.v[i] = beta2_ * mo.v.v[i] + (1.0 - beta2_) * g * g;
            const double mhat = mo.m.v[i] / bc1;
            const double vhat = mo.v.v[i] / bc2;
            p.value.v[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

}  // namespace tcco::nn
