#ifndef PLATED_NDNUM_OPS_HPP
#define PLATED_NDNUM_OPS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "plated/error.hpp"
#include "plated/rng.hpp"
#include "plated/tensor.hpp"

namespace plated {

// ---------------------------------------------------------------------------
// conv2d: 3x3 cross-correlation, zero same-padding, stride 1.
// x [H,W,Cin], kernels [3,3,Cin,Cout], bias [Cout] -> [H,W,Cout]
// ---------------------------------------------------------------------------

inline void conv2d_check(const Tensor& x, const Tensor& k, const Tensor& b) {
    require(x.rank() == 3, "conv2d: input must be rank 3 [H,W,Cin], got " + x.shape_str());
    require(k.rank() == 4 && k.dim(0) == 3 && k.dim(1) == 3,
            "conv2d: kernels must be [3,3,Cin,Cout], got " + k.shape_str());
    require(k.dim(2) == x.dim(2), "conv2d: kernel Cin " + std::to_string(k.dim(2)) +
                                      " does not match input channels " + std::to_string(x.dim(2)));
    require(b.rank() == 1 && b.dim(0) == k.dim(3),
            "conv2d: bias length must equal Cout " + std::to_string(k.dim(3)));
}

inline Tensor conv2d(const Tensor& x, const Tensor& kernels, const Tensor& bias) {
    conv2d_check(x, kernels, bias);
    const std::size_t h = x.dim(0), w = x.dim(1), cin = x.dim(2), cout = kernels.dim(3);
    Tensor y({h, w, cout});
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            for (std::size_t co = 0; co < cout; ++co) y.at(i, j, co) = bias[co];
            for (std::size_t di = 0; di < 3; ++di) {
                if (i + di < 1 || i + di - 1 >= h) continue;
                const std::size_t si = i + di - 1;
                for (std::size_t dj = 0; dj < 3; ++dj) {
                    if (j + dj < 1 || j + dj - 1 >= w) continue;
                    const std::size_t sj = j + dj - 1;
                    const real* xp = x.data() + (si * w + sj) * cin;
                    for (std::size_t ci = 0; ci < cin; ++ci) {
                        const real xv = xp[ci];
                        const real* kp = kernels.data() + ((di * 3 + dj) * cin + ci) * cout;
                        real* yp = y.data() + (i * w + j) * cout;
                        for (std::size_t co = 0; co < cout; ++co) yp[co] += xv * kp[co];
                    }
                }
            }
        }
    }
    return y;
}

// Accumulates into dk/db (batch loops call this once per sample); dx is assigned.
inline void conv2d_backward(const Tensor& x, const Tensor& kernels, const Tensor& dout,
                            Tensor& dx, Tensor& dk, Tensor& db) {
    const std::size_t h = x.dim(0), w = x.dim(1), cin = x.dim(2), cout = kernels.dim(3);
    dx = Tensor({h, w, cin});
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            const real* dop = dout.data() + (i * w + j) * cout;
            for (std::size_t co = 0; co < cout; ++co) db[co] += dop[co];
            for (std::size_t di = 0; di < 3; ++di) {
                if (i + di < 1 || i + di - 1 >= h) continue;
                const std::size_t si = i + di - 1;
                for (std::size_t dj = 0; dj < 3; ++dj) {
                    if (j + dj < 1 || j + dj - 1 >= w) continue;
                    const std::size_t sj = j + dj - 1;
                    const real* xp = x.data() + (si * w + sj) * cin;
                    real* dxp = dx.data() + (si * w + sj) * cin;
                    for (std::size_t ci = 0; ci < cin; ++ci) {
                        const real* kp = kernels.data() + ((di * 3 + dj) * cin + ci) * cout;
                        real* dkp = dk.data() + ((di * 3 + dj) * cin + ci) * cout;
                        real acc = 0;
                        for (std::size_t co = 0; co < cout; ++co) {
                            acc += dop[co] * kp[co];
                            dkp[co] += xp[ci] * dop[co];
                        }
                        dxp[ci] += acc;
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// maxpool2: non-overlapping 2x2 max, trailing odd row/column dropped.
// ---------------------------------------------------------------------------

inline Tensor maxpool2(const Tensor& x) {
    require(x.rank() == 3, "maxpool2: input must be rank 3 [H,W,C], got " + x.shape_str());
    require(x.dim(0) >= 2 && x.dim(1) >= 2, "maxpool2: spatial size must be at least 2x2");
    const std::size_t oh = x.dim(0) / 2, ow = x.dim(1) / 2, c = x.dim(2);
    Tensor y({oh, ow, c});
    for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j)
            for (std::size_t ch = 0; ch < c; ++ch) {
                real best = x.at(2 * i, 2 * j, ch);
                best = std::max(best, x.at(2 * i, 2 * j + 1, ch));
                best = std::max(best, x.at(2 * i + 1, 2 * j, ch));
                best = std::max(best, x.at(2 * i + 1, 2 * j + 1, ch));
                y.at(i, j, ch) = best;
            }
    return y;
}

// Gradient routed to the first-occurring argmax (row-major window order).
inline Tensor maxpool2_backward(const Tensor& x, const Tensor& dout) {
    const std::size_t oh = x.dim(0) / 2, ow = x.dim(1) / 2, c = x.dim(2);
    Tensor dx(x.shape());
    for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j)
            for (std::size_t ch = 0; ch < c; ++ch) {
                std::size_t bi = 2 * i, bj = 2 * j;
                real best = x.at(bi, bj, ch);
                const std::size_t is[4] = {2 * i, 2 * i, 2 * i + 1, 2 * i + 1};
                const std::size_t js[4] = {2 * j, 2 * j + 1, 2 * j, 2 * j + 1};
                for (int w = 1; w < 4; ++w)
                    if (x.at(is[w], js[w], ch) > best) {
                        best = x.at(is[w], js[w], ch);
                        bi = is[w];
                        bj = js[w];
                    }
                dx.at(bi, bj, ch) += dout.at(i, j, ch);
            }
    return dx;
}

// ---------------------------------------------------------------------------
// dense: y = xW + b over the last axis; leading axes are flattened to rows.
// x [..,Fin], W [Fin,Fout], b [Fout] -> [..,Fout]
// ---------------------------------------------------------------------------

inline Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    require(x.rank() >= 1, "dense: input must have rank >= 1");
    require(weight.rank() == 2, "dense: weight must be rank 2, got " + weight.shape_str());
    const std::size_t fin = weight.dim(0), fout = weight.dim(1);
    require(x.dim(x.rank() - 1) == fin, "dense: input feature dim " +
                                            std::to_string(x.dim(x.rank() - 1)) +
                                            " does not match weight rows " + std::to_string(fin));
    require(bias.rank() == 1 && bias.dim(0) == fout, "dense: bias length must equal Fout");
    const std::size_t rows = x.size() / fin;
    std::vector<std::size_t> out_shape(x.shape());
    out_shape.back() = fout;
    Tensor y(out_shape);
    for (std::size_t r = 0; r < rows; ++r) {
        const real* xp = x.data() + r * fin;
        real* yp = y.data() + r * fout;
        for (std::size_t o = 0; o < fout; ++o) yp[o] = bias[o];
        for (std::size_t i = 0; i < fin; ++i) {
            const real xv = xp[i];
            if (xv == real(0)) continue;
            const real* wp = weight.data() + i * fout;
            for (std::size_t o = 0; o < fout; ++o) yp[o] += xv * wp[o];
        }
    }
    return y;
}

inline void dense_backward(const Tensor& x, const Tensor& weight, const Tensor& dout,
                           Tensor& dx, Tensor& dw, Tensor& db) {
    const std::size_t fin = weight.dim(0), fout = weight.dim(1);
    const std::size_t rows = x.size() / fin;
    dx = Tensor(x.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const real* xp = x.data() + r * fin;
        const real* dop = dout.data() + r * fout;
        real* dxp = dx.data() + r * fin;
        for (std::size_t o = 0; o < fout; ++o) db[o] += dop[o];
        for (std::size_t i = 0; i < fin; ++i) {
            const real* wp = weight.data() + i * fout;
            real* dwp = dw.data() + i * fout;
            real acc = 0;
            for (std::size_t o = 0; o < fout; ++o) {
                acc += dop[o] * wp[o];
                dwp[o] += xp[i] * dop[o];
            }
            dxp[i] = acc;
        }
    }
}

// ---------------------------------------------------------------------------
// Activations. softmax applies over the last axis; the rest are elementwise.
// ---------------------------------------------------------------------------

enum class Activation { relu, sigmoid, tanh, softmax };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::tanh: return "tanh";
        case Activation::softmax: return "softmax";
    }
    return "?";
}

inline Tensor activation(Activation kind, const Tensor& x) {
    Tensor y(x.shape());
    switch (kind) {
        case Activation::relu:
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0 ? x[i] : real(0);
            break;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = real(1) / (real(1) + std::exp(-x[i]));
            break;
        case Activation::tanh:
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
            break;
        case Activation::softmax: {
            require(x.rank() >= 1, "softmax: input must have rank >= 1");
            const std::size_t v = x.dim(x.rank() - 1);
            const std::size_t rows = x.size() / v;
            for (std::size_t r = 0; r < rows; ++r) {
                const real* xp = x.data() + r * v;
                real* yp = y.data() + r * v;
                real mx = xp[0];
                for (std::size_t i = 1; i < v; ++i) mx = std::max(mx, xp[i]);
                double sum = 0;
                for (std::size_t i = 0; i < v; ++i) {
                    yp[i] = std::exp(xp[i] - mx);
                    sum += yp[i];
                }
                for (std::size_t i = 0; i < v; ++i) yp[i] = static_cast<real>(yp[i] / sum);
            }
            break;
        }
    }
    return y;
}

// dx from dout; `x` is the forward input and `y` the forward output (the
// cheaper of the two is used per kind).
inline Tensor activation_backward(Activation kind, const Tensor& x, const Tensor& y, const Tensor& dout) {
    Tensor dx(x.shape());
    switch (kind) {
        case Activation::relu:
            for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0 ? dout[i] : real(0);
            break;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < x.size(); ++i) dx[i] = dout[i] * y[i] * (real(1) - y[i]);
            break;
        case Activation::tanh:
            for (std::size_t i = 0; i < x.size(); ++i) dx[i] = dout[i] * (real(1) - y[i] * y[i]);
            break;
        case Activation::softmax: {
            const std::size_t v = x.dim(x.rank() - 1);
            const std::size_t rows = x.size() / v;
            for (std::size_t r = 0; r < rows; ++r) {
                const real* yp = y.data() + r * v;
                const real* dop = dout.data() + r * v;
                real* dxp = dx.data() + r * v;
                double dot = 0;
                for (std::size_t i = 0; i < v; ++i) dot += static_cast<double>(dop[i]) * yp[i];
                for (std::size_t i = 0; i < v; ++i)
                    dxp[i] = yp[i] * (dop[i] - static_cast<real>(dot));
            }
            break;
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// batch_norm over rows: x [N,F]. eps 1e-3, running-stat momentum 0.99.
// Rank-3/4 feature maps are normalized channel-wise by flattening the
// spatial (and batch) positions into rows before calling this.
// ---------------------------------------------------------------------------

struct BatchNormCache {
    Tensor xhat;          // [N,F]
    std::vector<double> inv_std;  // per feature
};

inline constexpr double kNormEps = 1e-3;
inline constexpr double kBnMomentum = 0.99;

inline Tensor batch_norm_train(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                               Tensor& running_mean, Tensor& running_var, BatchNormCache& cache) {
    require(x.rank() == 2, "batch_norm: input must be [N,F], got " + x.shape_str());
    const std::size_t n = x.dim(0), f = x.dim(1);
    require(n >= 2, "batch_norm: train mode needs a batch of at least 2 rows");
    require(gamma.size() == f && beta.size() == f, "batch_norm: gamma/beta length must equal F");
    Tensor y({n, f});
    cache.xhat = Tensor({n, f});
    cache.inv_std.assign(f, 0.0);
    for (std::size_t j = 0; j < f; ++j) {
        double mean = 0;
        for (std::size_t i = 0; i < n; ++i) mean += x.at(i, j);
        mean /= n;
        double var = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = x.at(i, j) - mean;
            var += d * d;
        }
        var /= n;  // biased, matches normalization
        const double inv = 1.0 / std::sqrt(var + kNormEps);
        cache.inv_std[j] = inv;
        for (std::size_t i = 0; i < n; ++i) {
            const real xh = static_cast<real>((x.at(i, j) - mean) * inv);
            cache.xhat.at(i, j) = xh;
            y.at(i, j) = gamma[j] * xh + beta[j];
        }
        running_mean[j] = static_cast<real>(kBnMomentum * running_mean[j] + (1.0 - kBnMomentum) * mean);
        running_var[j] = static_cast<real>(kBnMomentum * running_var[j] + (1.0 - kBnMomentum) * var);
    }
    return y;
}

inline Tensor batch_norm_eval(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                              const Tensor& running_mean, const Tensor& running_var) {
    require(x.rank() == 2, "batch_norm: input must be [N,F], got " + x.shape_str());
    const std::size_t n = x.dim(0), f = x.dim(1);
    require(gamma.size() == f && beta.size() == f, "batch_norm: gamma/beta length must equal F");
    Tensor y({n, f});
    for (std::size_t j = 0; j < f; ++j) {
        const double inv = 1.0 / std::sqrt(static_cast<double>(running_var[j]) + kNormEps);
        for (std::size_t i = 0; i < n; ++i)
            y.at(i, j) = static_cast<real>(gamma[j] * (x.at(i, j) - running_mean[j]) * inv + beta[j]);
    }
    return y;
}

inline Tensor batch_norm_backward(const Tensor& gamma, const BatchNormCache& cache, const Tensor& dout,
                                  Tensor& dgamma, Tensor& dbeta) {
    const std::size_t n = cache.xhat.dim(0), f = cache.xhat.dim(1);
    Tensor dx({n, f});
    for (std::size_t j = 0; j < f; ++j) {
        double sum_d = 0, sum_dx = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = dout.at(i, j);
            sum_d += d;
            sum_dx += d * cache.xhat.at(i, j);
            dgamma[j] += static_cast<real>(d * cache.xhat.at(i, j));
            dbeta[j] += static_cast<real>(d);
        }
        const double scale = gamma[j] * cache.inv_std[j] / n;
        for (std::size_t i = 0; i < n; ++i)
            dx.at(i, j) = static_cast<real>(scale * (n * dout.at(i, j) - sum_d - cache.xhat.at(i, j) * sum_dx));
    }
    return dx;
}

// ---------------------------------------------------------------------------
// layer_norm: each row of [..,F] normalized independently, eps 1e-3.
// ---------------------------------------------------------------------------

struct LayerNormCache {
    Tensor xhat;
    std::vector<double> inv_std;  // per row
};

inline Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, LayerNormCache& cache) {
    require(x.rank() >= 1, "layer_norm: input must have rank >= 1");
    const std::size_t f = x.dim(x.rank() - 1);
    require(gamma.size() == f && beta.size() == f, "layer_norm: gamma/beta length must equal F");
    const std::size_t rows = x.size() / f;
    Tensor y(x.shape());
    cache.xhat = Tensor(x.shape());
    cache.inv_std.assign(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const real* xp = x.data() + r * f;
        double mean = 0;
        for (std::size_t j = 0; j < f; ++j) mean += xp[j];
        mean /= f;
        double var = 0;
        for (std::size_t j = 0; j < f; ++j) {
            double d = xp[j] - mean;
            var += d * d;
        }
        var /= f;
        const double inv = 1.0 / std::sqrt(var + kNormEps);
        cache.inv_std[r] = inv;
        for (std::size_t j = 0; j < f; ++j) {
            const real xh = static_cast<real>((xp[j] - mean) * inv);
            cache.xhat.data()[r * f + j] = xh;
            y.data()[r * f + j] = gamma[j] * xh + beta[j];
        }
    }
    return y;
}

inline Tensor layer_norm_backward(const Tensor& gamma, const LayerNormCache& cache, const Tensor& dout,
                                  Tensor& dgamma, Tensor& dbeta) {
    const std::size_t f = cache.xhat.dim(cache.xhat.rank() - 1);
    const std::size_t rows = cache.xhat.size() / f;
    Tensor dx(cache.xhat.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const real* xh = cache.xhat.data() + r * f;
        const real* dop = dout.data() + r * f;
        real* dxp = dx.data() + r * f;
        double sum_d = 0, sum_dx = 0;
        for (std::size_t j = 0; j < f; ++j) {
            const double dg = static_cast<double>(dop[j]) * gamma[j];
            sum_d += dg;
            sum_dx += dg * xh[j];
            dgamma[j] += static_cast<real>(dop[j] * xh[j]);
            dbeta[j] += dop[j];
        }
        const double inv = cache.inv_std[r];
        for (std::size_t j = 0; j < f; ++j) {
            const double dg = static_cast<double>(dop[j]) * gamma[j];
            dxp[j] = static_cast<real>(inv / f * (f * dg - sum_d - xh[j] * sum_dx));
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Inverted dropout: train zeroes with probability `rate` and scales the
// survivors by 1/(1-rate); eval is the identity.
// ---------------------------------------------------------------------------

inline Tensor dropout_train(const Tensor& x, double rate, Rng& rng, Tensor& mask_out) {
    require(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0,1)");
    mask_out = Tensor(x.shape());
    Tensor y(x.shape());
    const real scale = static_cast<real>(1.0 / (1.0 - rate));
    for (std::size_t i = 0; i < x.size(); ++i) {
        const bool keep = rate == 0.0 || !rng.bernoulli(rate);
        mask_out[i] = keep ? scale : real(0);
        y[i] = x[i] * mask_out[i];
    }
    return y;
}

inline Tensor dropout_backward(const Tensor& mask, const Tensor& dout) {
    Tensor dx(dout.shape());
    for (std::size_t i = 0; i < dout.size(); ++i) dx[i] = dout[i] * mask[i];
    return dx;
}

// ---------------------------------------------------------------------------
// embedding: row gather. ids [L] (integer values), table [V,D] -> [L,D].
// ---------------------------------------------------------------------------

inline Tensor embedding(const std::vector<std::size_t>& ids, const Tensor& table) {
    require(table.rank() == 2, "embedding: table must be [V,D]");
    const std::size_t v = table.dim(0), d = table.dim(1);
    Tensor y({ids.size() ? ids.size() : 1, d});
    require(!ids.empty(), "embedding: empty id sequence");
    for (std::size_t t = 0; t < ids.size(); ++t) {
        require(ids[t] < v, "embedding: id " + std::to_string(ids[t]) + " out of range [0," +
                                std::to_string(v) + ")");
        std::copy_n(table.data() + ids[t] * d, d, y.data() + t * d);
    }
    return y;
}

// Scatter-add of dout into dtable. Callers skip this entirely for frozen tables.
inline void embedding_backward(const std::vector<std::size_t>& ids, const Tensor& dout, Tensor& dtable) {
    const std::size_t d = dtable.dim(1);
    for (std::size_t t = 0; t < ids.size(); ++t) {
        const real* src = dout.data() + t * d;
        real* dst = dtable.data() + ids[t] * d;
        for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
}

}  // namespace plated

#endif  // PLATED_NDNUM_OPS_HPP
