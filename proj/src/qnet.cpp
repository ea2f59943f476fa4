#include "tcco/qnet.hpp"

#include <stdexcept>

namespace tcco::nn {

QNetwork::QNetwork(QNetworkConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    Rng rng(seed);
    const int encoders = cfg_.share_subflow_encoders ? 1 : cfg_.subflows;
    for (int i = 0; i < encoders; ++i) {
        const std::string tag = "enc" + std::to_string(i);
        enc1_.emplace_back(tag + ".fc1", cfg_.obs_fields, cfg_.fc_dim, rng);
        enc2_.emplace_back(tag + ".fc2", cfg_.fc_dim, cfg_.fc_dim, rng);
    }
    merge_ = Linear("merge", cfg_.subflows * cfg_.fc_dim, cfg_.embed_dim, rng);
    pos_ = Param("pos", cfg_.context_len, cfg_.embed_dim);
    for (double& x : pos_.value.v) x = rng.normal() * 0.02;
    for (int l = 0; l < cfg_.layers; ++l) {
        const std::string tag = "block" + std::to_string(l);
        blocks_.push_back(Block{
            MultiHeadSelfAttention(tag + ".attn", cfg_.embed_dim, cfg_.heads, rng),
            LayerNorm(tag + ".ln_attn", cfg_.embed_dim),
            Linear(tag + ".ff1", cfg_.embed_dim, cfg_.ff_dim, rng),
            Linear(tag + ".ff2", cfg_.ff_dim, cfg_.embed_dim, rng),
            LayerNorm(tag + ".ln_ff", cfg_.embed_dim),
        });
    }
    head_ = Linear("head", cfg_.embed_dim, cfg_.actions, rng);
}

Tape::Var QNetwork::forward(Tape& t, const Tensor& features, int batch,
                            const std::vector<int>& valid_from) const {
    const int len = cfg_.use_transformer ? cfg_.context_len : 1;
    if (features.rows != batch * len || features.cols != cfg_.obs_dim())
        throw std::invalid_argument("q_forward: feature shape mismatch");

    Tape::Var x = t.input(features);

    // Per-subflow encoders on each timestep's slice of the observation.
    std::vector<Tape::Var> encoded;
    encoded.reserve(static_cast<std::size_t>(cfg_.subflows));
    for (int i = 0; i < cfg_.subflows; ++i) {
        const std::size_t e = cfg_.share_subflow_encoders ? 0 : static_cast<std::size_t>(i);
        Tape::Var slice = t.block(x, 0, i * cfg_.obs_fields, features.rows, cfg_.obs_fields);
        Tape::Var h = t.relu(enc1_[e].apply(t, slice));
        encoded.push_back(t.relu(enc2_[e].apply(t, h)));
    }
    Tape::Var merged = merge_.apply(t, t.hstack(encoded));

    if (cfg_.use_transformer) {
        Tape::Var p = t.tile_rows(t.param(const_cast<Param&>(pos_)), batch);
        Tape::Var h = t.add(merged, p);
        for (const Block& b : blocks_) {
            // ResGate around each sub-block, then post-layer-norm.
            Tape::Var attn = b.attn.apply(t, h, batch, len, valid_from);
            h = b.ln_attn.apply(t, t.add(h, attn));
            Tape::Var ff = b.ff2.apply(t, t.relu(b.ff1.apply(t, h)));
            h = b.ln_ff.apply(t, t.add(h, ff));
        }
        return head_.apply(t, h);
    }
    Tape::Var h = t.relu(merged);
    return head_.apply(t, h);
}

Tensor QNetwork::q_values(const Tensor& features, int batch,
                          const std::vector<int>& valid_from) const {
    Tape t;
    Tape::Var q = forward(t, features, batch, valid_from);
    return t.value(q);
}

std::vector<Param*> QNetwork::params() {
    std::vector<Param*> out;
    for (auto& l : enc1_) l.collect(out);
    for (auto& l : enc2_) l.collect(out);
    merge_.collect(out);
    if (cfg_.use_transformer) {
        out.push_back(&pos_);
        for (auto& b : blocks_) {
            b.attn.collect(out);
            b.ln_attn.collect(out);
            b.ff1.collect(out);
            b.ff2.collect(out);
            b.ln_ff.collect(out);
        }
    }
    head_.collect(out);
    return out;
}

std::vector<const Param*> QNetwork::params() const {
    auto mut = const_cast<QNetwork*>(this)->params();
    return {mut.begin(), mut.end()};
}

void QNetwork::copy_from(const QNetwork& other) {
    auto dst = params();
    auto src = const_cast<QNetwork&>(other).params();
    if (dst.size() != src.size()) throw std::logic_error("copy_from: param mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i]->value = src[i]->value;
}

}  // namespace tcco::nn
