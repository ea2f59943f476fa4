#include "tcco/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tcco::nn {

void matmul_acc(const Tensor& a, const Tensor& b, Tensor& c) {
    assert(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols);
    const int n = b.cols;
    for (int i = 0; i < a.rows; ++i) {
        double* cr = c.row(i);
        const double* ar = a.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const double av = ar[k];
            if (av == 0.0) continue;
            const double* br = b.row(k);
            for (int j = 0; j < n; ++j) cr[j] += av * br[j];
        }
    }
}

void matmul_nt_acc(const Tensor& a, const Tensor& b, Tensor& c) {
    assert(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows);
    for (int i = 0; i < a.rows; ++i) {
        const double* ar = a.row(i);
        double* cr = c.row(i);
        for (int j = 0; j < b.rows; ++j) {
            const double* br = b.row(j);
            double acc = 0.0;
            for (int k = 0; k < a.cols; ++k) acc += ar[k] * br[k];
            cr[j] += acc;
        }
    }
}

void matmul_tn_acc(const Tensor& a, const Tensor& b, Tensor& c) {
    assert(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols);
    const int n = b.cols;
    for (int k = 0; k < a.rows; ++k) {
        const double* ar = a.row(k);
        const double* br = b.row(k);
        for (int i = 0; i < a.cols; ++i) {
            const double av = ar[i];
            if (av == 0.0) continue;
            double* cr = c.row(i);
            for (int j = 0; j < n; ++j) cr[j] += av * br[j];
        }
    }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    Tensor c(a.rows, b.cols);
    matmul_acc(a, b, c);
    return c;
}

Tape::Var Tape::push(Tensor val, BackFn back, Param* bound) {
    Node n;
    n.grad = Tensor(val.rows, val.cols);
    n.val = std::move(val);
    n.back = std::move(back);
    n.bound = bound;
    nodes_.push_back(std::move(n));
    const int id = static_cast<int>(nodes_.size()) - 1;
    return Var{id, nodes_.back().val.rows, nodes_.back().val.cols};
}

Tape::Var Tape::input(Tensor t) { return push(std::move(t), nullptr); }

Tape::Var Tape::param(Param& p) { return push(p.value, nullptr, &p); }

Tape::Var Tape::matmul(Var a, Var b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dims disagree");
    Tensor out(a.rows, b.cols);
    matmul_acc(val_of(a.id), val_of(b.id), out);
    const int ia = a.id, ib = b.id;
    return push(std::move(out), [ia, ib](Tape& t, const Tensor& dc, const Tensor&) {
        matmul_nt_acc(dc, t.val_of(ib), t.grad_mut(ia));  // dA += dC B^T
        matmul_tn_acc(t.val_of(ia), dc, t.grad_mut(ib));  // dB += A^T dC
    });
}

Tape::Var Tape::matmul_nt(Var a, Var b) {
    if (a.cols != b.cols) throw std::invalid_argument("matmul_nt: dims disagree");
    Tensor out(a.rows, b.rows);
    matmul_nt_acc(val_of(a.id), val_of(b.id), out);
    const int ia = a.id, ib = b.id;
    return push(std::move(out), [ia, ib](Tape& t, const Tensor& dc, const Tensor&) {
        matmul_acc(dc, t.val_of(ib), t.grad_mut(ia));     // dA += dC B
        matmul_tn_acc(dc, t.val_of(ia), t.grad_mut(ib));  // dB += dC^T A
    });
}

Tape::Var Tape::add(Var a, Var b) {
    Tensor out = val_of(a.id);
    const Tensor& tb = val_of(b.id);
    if (out.rows != tb.rows || out.cols != tb.cols)
        throw std::invalid_argument("add: shape mismatch");
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += tb.v[i];
    const int ia = a.id, ib = b.id;
    return push(std::move(out), [ia, ib](Tape& t, const Tensor& dc, const Tensor&) {
        Tensor& da = t.grad_mut(ia);
        Tensor& db = t.grad_mut(ib);
        for (std::size_t i = 0; i < dc.size(); ++i) {
            da.v[i] += dc.v[i];
            db.v[i] += dc.v[i];
        }
    });
}

Tape::Var Tape::sub(Var a, Var b) {
    Tensor out = val_of(a.id);
    const Tensor& tb = val_of(b.id);
    if (out.rows != tb.rows || out.cols != tb.cols)
        throw std::invalid_argument("sub: shape mismatch");
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] -= tb.v[i];
    const int ia = a.id, ib = b.id;
    return push(std::move(out), [ia, ib](Tape& t, const Tensor& dc, const Tensor&) {
        Tensor& da = t.grad_mut(ia);
        Tensor& db = t.grad_mut(ib);
        for (std::size_t i = 0; i < dc.size(); ++i) {
            da.v[i] += dc.v[i];
            db.v[i] -= dc.v[i];
        }
    });
}

Tape::Var Tape::hadamard(Var a, Var b) {
    Tensor out = val_of(a.id);
    const Tensor& tb = val_of(b.id);
    if (out.rows != tb.rows || out.cols != tb.cols)
        throw std::invalid_argument("hadamard: shape mismatch");
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] *= tb.v[i];
    const int ia = a.id, ib = b.id;
    return push(std::move(out), [ia, ib](Tape& t, const Tensor& dc, const Tensor&) {
        const Tensor& va = t.val_of(ia);
        const Tensor& vb = t.val_of(ib);
        Tensor& da = t.grad_mut(ia);
        Tensor& db = t.grad_mut(ib);
        for (std::size_t i = 0; i < dc.size(); ++i) {
            da.v[i] += dc.v[i] * vb.v[i];
            db.v[i] += dc.v[i] * va.v[i];
        }
    });
}

Tape::Var Tape::scale(Var a, double c) {
    Tensor out = val_of(a.id);
    for (double& x : out.v) x *= c;
    const int ia = a.id;
    return push(std::move(out), [ia, c](Tape& t, const Tensor& dc, const Tensor&) {
        Tensor& da = t.grad_mut(ia);
        for (std::size_t i = 0; i < dc.size(); ++i) da.v[i] += c * dc.v[i];
    });
}

Tape::Var Tape::add_rowvec(Var a, Var rowv) {
    if (rowv.rows != 1 || rowv.cols != a.cols)
        throw std::invalid_argument("add_rowvec: bias shape mismatch");
    Tensor out = val_of(a.id);
    const Tensor& b = val_of(rowv.id);
    for (int i = 0; i < out.rows; ++i) {
        double* r = out.row(i);
        for (int j = 0; j < out.cols; ++j) r[j] += b.v[static_cast<std::size_t>(j)];
    }
    const int ia = a.id, ib = rowv.id;
    return push(std::move(out), [ia, ib](Tape& t, const Tensor& dc, const Tensor&) {
        Tensor& da = t.grad_mut(ia);
        Tensor& db = t.grad_mut(ib);
        for (int i = 0; i < dc.rows; ++i) {
            const double* r = dc.row(i);
            for (int j = 0; j < dc.cols; ++j) {
                da(i, j) += r[j];
                db.v[static_cast<std::size_t>(j)] += r[j];
            }
        }
    });
}

Tape::Var Tape::relu(Var a) {
    Tensor out = val_of(a.id);
    for (double& x : out.v) x = x > 0.0 ? x : 0.0;
    const int ia = a.id;
    return push(std::move(out), [ia](Tape& t, const Tensor& dc, const Tensor&) {
        const Tensor& va = t.val_of(ia);
        Tensor& da = t.grad_mut(ia);
        for (std::size_t i = 0; i < dc.size(); ++i)
            if (va.v[i] > 0.0) da.v[i] += dc.v[i];
    });
}

Tape::Var Tape::softmax_rows(Var a) {
    Tensor out = val_of(a.id);
    for (int i = 0; i < out.rows; ++i) {
        double* r = out.row(i);
        double mx = r[0];
        for (int j = 1; j < out.cols; ++j) mx = std::max(mx, r[j]);
        double sum = 0.0;
        for (int j = 0; j < out.cols; ++j) {
            r[j] = std::exp(r[j] - mx);
            sum += r[j];
        }
        for (int j = 0; j < out.cols; ++j) r[j] /= sum;
    }
    const int ia = a.id;
    // dx_j = y_j (dy_j - sum_k dy_k y_k), per row.
    return push(std::move(out), [ia](Tape& t, const Tensor& dy, const Tensor& y) {
        Tensor& da = t.grad_mut(ia);
        for (int i = 0; i < y.rows; ++i) {
            const double* yr = y.row(i);
            const double* dr = dy.row(i);
            double dot = 0.0;
            for (int j = 0; j < y.cols; ++j) dot += yr[j] * dr[j];
            double* dar = da.row(i);
            for (int j = 0; j < y.cols; ++j) dar[j] += yr[j] * (dr[j] - dot);
        }
    });
}

Tape::Var Tape::layer_norm_rows(Var x, Var gain, Var bias, double eps) {
    if (gain.rows != 1 || gain.cols != x.cols || bias.rows != 1 || bias.cols != x.cols)
        throw std::invalid_argument("layer_norm: affine shape mismatch");
    const Tensor& vx = val_of(x.id);
    const Tensor& vg = val_of(gain.id);
    const Tensor& vb = val_of(bias.id);
    Tensor out(vx.rows, vx.cols);
    Tensor xhat(vx.rows, vx.cols);
    std::vector<double> inv_std(static_cast<std::size_t>(vx.rows));
    for (int i = 0; i < vx.rows; ++i) {
        const double* r = vx.row(i);
        double mean = 0.0;
        for (int j = 0; j < vx.cols; ++j) mean += r[j];
        mean /= vx.cols;
        double var = 0.0;
        for (int j = 0; j < vx.cols; ++j) var += (r[j] - mean) * (r[j] - mean);
        var /= vx.cols;
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[static_cast<std::size_t>(i)] = is;
        double* xr = xhat.row(i);
        double* orow = out.row(i);
        for (int j = 0; j < vx.cols; ++j) {
            xr[j] = (r[j] - mean) * is;
            orow[j] = xr[j] * vg.v[static_cast<std::size_t>(j)] +
                      vb.v[static_cast<std::size_t>(j)];
        }
    }
    const int ix = x.id, ig = gain.id, ib = bias.id;
    return push(
        std::move(out),
        [ix, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](
            Tape& t, const Tensor& dy, const Tensor&) {
            const Tensor& vg = t.val_of(ig);
            Tensor& dx = t.grad_mut(ix);
            Tensor& dg = t.grad_mut(ig);
            Tensor& db = t.grad_mut(ib);
            const int cols = dy.cols;
            for (int i = 0; i < dy.rows; ++i) {
                const double* dr = dy.row(i);
                const double* xr = xhat.row(i);
                const double is = inv_std[static_cast<std::size_t>(i)];
                double sum_g = 0.0;   // mean of g*dy
                double sum_gx = 0.0;  // mean of g*dy*xhat
                for (int j = 0; j < cols; ++j) {
                    const double gd = vg.v[static_cast<std::size_t>(j)] * dr[j];
                    sum_g += gd;
                    sum_gx += gd * xr[j];
                    dg.v[static_cast<std::size_t>(j)] += dr[j] * xr[j];
                    db.v[static_cast<std::size_t>(j)] += dr[j];
                }
                sum_g /= cols;
                sum_gx /= cols;
                double* dxr = dx.row(i);
                for (int j = 0; j < cols; ++j) {
                    const double gd = vg.v[static_cast<std::size_t>(j)] * dr[j];
                    dxr[j] += is * (gd - sum_g - xr[j] * sum_gx);
                }
            }
        });
}

Tape::Var Tape::block(Var a, int r0, int c0, int nr, int nc) {
    if (r0 < 0 || c0 < 0 || r0 + nr > a.rows || c0 + nc > a.cols)
        throw std::invalid_argument("block: out of range");
    const Tensor& va = val_of(a.id);
    Tensor out(nr, nc);
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nc; ++j) out(i, j) = va(r0 + i, c0 + j);
    const int ia = a.id;
    return push(std::move(out), [ia, r0, c0, nr, nc](Tape& t, const Tensor& dc, const Tensor&) {
        Tensor& da = t.grad_mut(ia);
        for (int i = 0; i < nr; ++i)
            for (int j = 0; j < nc; ++j) da(r0 + i, c0 + j) += dc(i, j);
    });
}

Tape::Var Tape::hstack(std::span<const Var> parts) {
    if (parts.empty()) throw std::invalid_argument("hstack: empty");
    int cols = 0;
    const int rows = parts.front().rows;
    for (const Var& p : parts) {
        if (p.rows != rows) throw std::invalid_argument("hstack: row mismatch");
        cols += p.cols;
    }
    Tensor out(rows, cols);
    std::vector<int> ids;
    std::vector<int> offsets;
    std::vector<int> widths;
    int off = 0;
    for (const Var& p : parts) {
        const Tensor& vp = val_of(p.id);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < vp.cols; ++j) out(i, off + j) = vp(i, j);
        ids.push_back(p.id);
        offsets.push_back(off);
        widths.push_back(p.cols);
        off += p.cols;
    }
    return push(std::move(out), [ids, offsets, widths](Tape& t, const Tensor& dc, const Tensor&) {
        for (std::size_t k = 0; k < ids.size(); ++k) {
            Tensor& dp = t.grad_mut(ids[k]);
            const int o = offsets[k];
            for (int i = 0; i < dp.rows; ++i)
                for (int j = 0; j < widths[k]; ++j) dp(i, j) += dc(i, o + j);
        }
    });
}

Tape::Var Tape::vstack(std::span<const Var> parts) {
    if (parts.empty()) throw std::invalid_argument("vstack: empty");
    int rows = 0;
    const int cols = parts.front().cols;
    for (const Var& p : parts) {
        if (p.cols != cols) throw std::invalid_argument("vstack: col mismatch");
        rows += p.rows;
    }
    Tensor out(rows, cols);
    std::vector<int> ids;
    std::vector<int> offsets;
    std::vector<int> heights;
    int off = 0;
    for (const Var& p : parts) {
        const Tensor& vp = val_of(p.id);
        for (int i = 0; i < vp.rows; ++i)
            for (int j = 0; j < cols; ++j) out(off + i, j) = vp(i, j);
        ids.push_back(p.id);
        offsets.push_back(off);
        heights.push_back(p.rows);
        off += p.rows;
    }
    return push(std::move(out),
                [ids, offsets, heights](Tape& t, const Tensor& dc, const Tensor&) {
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                        Tensor& dp = t.grad_mut(ids[k]);
                        const int o = offsets[k];
                        for (int i = 0; i < heights[k]; ++i)
                            for (int j = 0; j < dc.cols; ++j) dp(i, j) += dc(o + i, j);
                    }
                });
}

Tape::Var Tape::tile_rows(Var a, int times) {
    const Tensor& va = val_of(a.id);
    Tensor out(va.rows * times, va.cols);
    for (int k = 0; k < times; ++k)
        for (int i = 0; i < va.rows; ++i)
            for (int j = 0; j < va.cols; ++j) out(k * va.rows + i, j) = va(i, j);
    const int ia = a.id;
    const int block_rows = va.rows;
    return push(std::move(out),
                [ia, times, block_rows](Tape& t, const Tensor& dc, const Tensor&) {
                    Tensor& da = t.grad_mut(ia);
                    for (int k = 0; k < times; ++k)
                        for (int i = 0; i < block_rows; ++i)
                            for (int j = 0; j < dc.cols; ++j)
                                da(i, j) += dc(k * block_rows + i, j);
                });
}

Tape::Var Tape::select_per_row(Var a, std::vector<int> idx) {
    if (static_cast<int>(idx.size()) != a.rows)
        throw std::invalid_argument("select_per_row: index count mismatch");
    const Tensor& va = val_of(a.id);
    Tensor out(a.rows, 1);
    for (int i = 0; i < a.rows; ++i) {
        const int j = idx[static_cast<std::size_t>(i)];
        if (j < 0 || j >= a.cols) throw std::out_of_range("select_per_row: bad index");
        out(i, 0) = va(i, j);
    }
    const int ia = a.id;
    return push(std::move(out), [ia, idx = std::move(idx)](Tape& t, const Tensor& dc,
                                                           const Tensor&) {
        Tensor& da = t.grad_mut(ia);
        for (int i = 0; i < dc.rows; ++i) da(i, idx[static_cast<std::size_t>(i)]) += dc(i, 0);
    });
}

Tape::Var Tape::sum_all(Var a) {
    const Tensor& va = val_of(a.id);
    double s = 0.0;
    for (double x : va.v) s += x;
    Tensor out(1, 1);
    out(0, 0) = s;
    const int ia = a.id;
    return push(std::move(out), [ia](Tape& t, const Tensor& dc, const Tensor&) {
        const double d = dc(0, 0);
        Tensor& da = t.grad_mut(ia);
        for (double& x : da.v) x += d;
    });
}

void Tape::backward(Var scalar) {
    if (value(scalar).size() != 1) throw std::invalid_argument("backward: non-scalar seed");
    grad_mut(scalar.id)(0, 0) = 1.0;
    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.back) n.back(*this, n.grad, n.val);
        if (n.bound != nullptr) {
            Tensor& g = n.bound->grad;
            for (std::size_t i = 0; i < g.size(); ++i) g.v[i] += n.grad.v[i];
        }
    }
}

Tape::Var scaled_dot_attention(Tape& t, Tape::Var q, Tape::Var k, Tape::Var v,
                               Tape::Var mask) {
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(q.cols));
    Tape::Var scores = t.scale(t.matmul_nt(q, k), inv_sqrt);
    scores = t.add(scores, mask);
    Tape::Var probs = t.softmax_rows(scores);
    return t.matmul(probs, v);
}

Tensor causal_mask(int len, int valid_from, double neg) {
    Tensor m(len, len);
    for (int i = 0; i < len; ++i)
        for (int j = 0; j < len; ++j)
            m(i, j) = (j == i || (j < i && j >= valid_from)) ? 0.0 : neg;
    return m;
}

}  // namespace tcco::nn
