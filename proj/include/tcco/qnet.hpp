#pragma once

#include <cstdint>
#include <vector>

#include "tcco/layers.hpp"
#include "tcco/tensor.hpp"

namespace tcco::nn {

struct QNetworkConfig {
    int subflows = 2;      // M
    int obs_fields = 6;    // per-subflow observation width
    int fc_dim = 64;       // subflow FC1 & FC2
    int embed_dim = 128;
    int heads = 4;
    int layers = 1;
    int ff_dim = 128;      // feed-forward hidden width
    int context_len = 20;  // L
    int actions = 25;
    bool share_subflow_encoders = false;
    bool use_transformer = true;  // off = single-step variant

    int obs_dim() const { return subflows * obs_fields; }
};

// Transformer-based Q-function. Per-timestep per-subflow FC encoders,
// concatenation across subflows, projection to the embedding, learned
// positional encoding, one (or more) causal self-attention blocks with
// residual gates and post-layer-norm, and a Q head emitting one value
// per action at every position.
class QNetwork {
public:
    QNetwork(QNetworkConfig cfg, std::uint64_t seed);

    // features laid out [batch*len, obs_dim], len == context_len.
    // valid_from[b] marks the first real (non-padded) position.
    Tape::Var forward(Tape& t, const Tensor& features, int batch,
                      const std::vector<int>& valid_from) const;

    // Forward without gradient bookkeeping kept around (fresh tape).
    Tensor q_values(const Tensor& features, int batch,
                    const std::vector<int>& valid_from) const;

    std::vector<Param*> params();
    std::vector<const Param*> params() const;
    void copy_from(const QNetwork& other);

    const QNetworkConfig& config() const { return cfg_; }

private:
    struct Block {
        MultiHeadSelfAttention attn;
        LayerNorm ln_attn;
        Linear ff1, ff2;
        LayerNorm ln_ff;
    };

    QNetworkConfig cfg_;
    std::vector<Linear> enc1_, enc2_;  // one pair per subflow (or shared)
    Linear merge_;
    Param pos_;
    std::vector<Block> blocks_;
    Linear head_;
};

}  // namespace tcco::nn
