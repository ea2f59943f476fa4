#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tcco/rng.hpp"
#include "tcco/tensor.hpp"

namespace tcco::nn {

struct Linear {
    Param w;  // [in, out]
    Param b;  // [1, out]

    Linear() = default;
    Linear(const std::string& name, int in, int out, Rng& rng, double gain = 1.0);

    Tape::Var apply(Tape& t, Tape::Var x) const;
    void collect(std::vector<Param*>& out) {
        out.push_back(&w);
        out.push_back(&b);
    }
};

struct LayerNorm {
    Param gain;  // [1, d]
    Param bias;  // [1, d]

    LayerNorm() = default;
    LayerNorm(const std::string& name, int d);

    Tape::Var apply(Tape& t, Tape::Var x) const;
    void collect(std::vector<Param*>& out) {
        out.push_back(&gain);
        out.push_back(&bias);
    }
};

// Multi-head causal self-attention over a batch of equal-length
// sequences laid out as [batch*len, d]. Each batch item carries its own
// validity offset so front-padded positions stay unattended.
struct MultiHeadSelfAttention {
    Linear wq, wk, wv, wo;
    int heads = 4;
    int dim = 0;

    MultiHeadSelfAttention() = default;
    MultiHeadSelfAttention(const std::string& name, int d, int n_heads, Rng& rng);

    Tape::Var apply(Tape& t, Tape::Var x, int batch, int len,
                    const std::vector<int>& valid_from) const;
    void collect(std::vector<Param*>& out) {
        wq.collect(out);
        wk.collect(out);
        wv.collect(out);
        wo.collect(out);
    }
};

// Adam with the conventional moment defaults; the learning-rate schedule
// lives with the agent.
class Adam {
public:
    explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(std::vector<Param*>& params, double lr);

private:
    struct Moments {
        Tensor m;
        Tensor v;
    };
    double beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
    std::vector<Moments> moments_;
};

}  // namespace tcco::nn
