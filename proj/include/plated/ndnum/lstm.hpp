#ifndef PLATED_NDNUM_LSTM_HPP
#define PLATED_NDNUM_LSTM_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "plated/error.hpp"
#include "plated/tensor.hpp"

namespace plated {

// Single-direction LSTM pass over one sequence. Gates ordered i,f,g,o with
// sigmoid on i/f/o and tanh on g and the cell output; zero initial state.
// With reverse=true the sequence is consumed from the last position to the
// first and outputs are written back at their source positions.

struct LstmCache {
    Tensor gates;   // [L,4U] post-activation, step order
    Tensor cells;   // [L,U]  c_t, step order
    Tensor hidden;  // [L,U]  h_t, step order
};

namespace detail {
inline real sigmoid_r(real z) { return real(1) / (real(1) + std::exp(-z)); }
}

inline Tensor lstm_direction(const Tensor& seq, const Tensor& w, const Tensor& r, const Tensor& b,
                             bool reverse, LstmCache& cache) {
    require(seq.rank() == 2, "lstm: input must be [L,D], got " + seq.shape_str());
    const std::size_t len = seq.dim(0), d = seq.dim(1);
    require(len > 0, "lstm: empty sequence");
    require(w.rank() == 2 && w.dim(0) == d && w.dim(1) % 4 == 0,
            "lstm: W must be [D,4U], got " + w.shape_str());
    const std::size_t u = w.dim(1) / 4;
    require(r.rank() == 2 && r.dim(0) == u && r.dim(1) == 4 * u, "lstm: R must be [U,4U]");
    require(b.rank() == 1 && b.dim(0) == 4 * u, "lstm: bias must be [4U]");

    cache.gates = Tensor({len, 4 * u});
    cache.cells = Tensor({len, u});
    cache.hidden = Tensor({len, u});
    Tensor out({len, u});

    std::vector<real> h_prev(u, real(0)), c_prev(u, real(0)), z(4 * u);
    for (std::size_t s = 0; s < len; ++s) {
        const std::size_t pos = reverse ? len - 1 - s : s;
        const real* xp = seq.data() + pos * d;
        for (std::size_t k = 0; k < 4 * u; ++k) z[k] = b[k];
        for (std::size_t i = 0; i < d; ++i) {
            const real xv = xp[i];
            if (xv == real(0)) continue;
            const real* wp = w.data() + i * 4 * u;
            for (std::size_t k = 0; k < 4 * u; ++k) z[k] += xv * wp[k];
        }
        for (std::size_t j = 0; j < u; ++j) {
            const real hv = h_prev[j];
            if (hv == real(0)) continue;
            const real* rp = r.data() + j * 4 * u;
            for (std::size_t k = 0; k < 4 * u; ++k) z[k] += hv * rp[k];
        }
        real* gp = cache.gates.data() + s * 4 * u;
        real* cp = cache.cells.data() + s * u;
        real* hp = cache.hidden.data() + s * u;
        for (std::size_t j = 0; j < u; ++j) {
            const real gi = detail::sigmoid_r(z[j]);
            const real gf = detail::sigmoid_r(z[u + j]);
            const real gg = std::tanh(z[2 * u + j]);
            const real go = detail::sigmoid_r(z[3 * u + j]);
            gp[j] = gi;
            gp[u + j] = gf;
            gp[2 * u + j] = gg;
            gp[3 * u + j] = go;
            const real c = gf * c_prev[j] + gi * gg;
            cp[j] = c;
            hp[j] = go * std::tanh(c);
        }
        for (std::size_t j = 0; j < u; ++j) {
            h_prev[j] = hp[j];
            c_prev[j] = cp[j];
            out.data()[pos * u + j] = hp[j];
        }
    }
    return out;
}

// BPTT for one direction. dseq is accumulated (callers zero it or share it
// between directions); dw/dr/db are accumulated.
inline void lstm_direction_backward(const Tensor& seq, const Tensor& w, const Tensor& r,
                                    bool reverse, const LstmCache& cache, const Tensor& dout,
                                    Tensor& dseq, Tensor& dw, Tensor& dr, Tensor& db) {
    const std::size_t len = seq.dim(0), d = seq.dim(1);
    const std::size_t u = w.dim(1) / 4;
    std::vector<real> dh_next(u, real(0)), dc_next(u, real(0)), dz(4 * u);
    for (std::size_t s = len; s-- > 0;) {
        const std::size_t pos = reverse ? len - 1 - s : s;
        const real* gp = cache.gates.data() + s * 4 * u;
        const real* cp = cache.cells.data() + s * u;
        const real* c_prev = s > 0 ? cache.cells.data() + (s - 1) * u : nullptr;
        const real* h_prev = s > 0 ? cache.hidden.data() + (s - 1) * u : nullptr;
        for (std::size_t j = 0; j < u; ++j) {
            const real gi = gp[j], gf = gp[u + j], gg = gp[2 * u + j], go = gp[3 * u + j];
            const real tc = std::tanh(cp[j]);
            const real dh = dout.data()[pos * u + j] + dh_next[j];
            const real dc = dh * go * (real(1) - tc * tc) + dc_next[j];
            const real cprev = s > 0 ? c_prev[j] : real(0);
            dz[j] = dc * gg * gi * (real(1) - gi);                  // i gate
            dz[u + j] = dc * cprev * gf * (real(1) - gf);           // f gate
            dz[2 * u + j] = dc * gi * (real(1) - gg * gg);          // g gate
            dz[3 * u + j] = dh * tc * go * (real(1) - go);          // o gate
            dc_next[j] = dc * gf;
        }
        const real* xp = seq.data() + pos * d;
        real* dxp = dseq.data() + pos * d;
        for (std::size_t k = 0; k < 4 * u; ++k) db[k] += dz[k];
        for (std::size_t i = 0; i < d; ++i) {
            const real* wp = w.data() + i * 4 * u;
            real* dwp = dw.data() + i * 4 * u;
            real acc = 0;
            for (std::size_t k = 0; k < 4 * u; ++k) {
                acc += dz[k] * wp[k];
                dwp[k] += xp[i] * dz[k];
            }
            dxp[i] += acc;
        }
        std::fill(dh_next.begin(), dh_next.end(), real(0));
        for (std::size_t j = 0; j < u; ++j) {
            const real* rp = r.data() + j * 4 * u;
            real* drp = dr.data() + j * 4 * u;
            const real hv = s > 0 ? h_prev[j] : real(0);
            real acc = 0;
            for (std::size_t k = 0; k < 4 * u; ++k) {
                acc += dz[k] * rp[k];
                if (s > 0) drp[k] += hv * dz[k];
            }
            dh_next[j] = acc;
        }
    }
}

// Full-sequence view used by the layer and by gradient checks: forward and
// optional reversed-backward pass concatenated per step -> [L, U or 2U].

struct LstmSequenceCache {
    LstmCache fwd;
    LstmCache bwd;
};

inline Tensor lstm_sequence(const Tensor& seq, const Tensor& w_f, const Tensor& r_f, const Tensor& b_f,
                            const Tensor* w_b, const Tensor* r_b, const Tensor* b_b,
                            LstmSequenceCache& cache) {
    Tensor fwd = lstm_direction(seq, w_f, r_f, b_f, false, cache.fwd);
    if (w_b == nullptr) return fwd;
    Tensor bwd = lstm_direction(seq, *w_b, *r_b, *b_b, true, cache.bwd);
    const std::size_t len = seq.dim(0), u = fwd.dim(1);
    Tensor out({len, 2 * u});
    for (std::size_t t = 0; t < len; ++t) {
        std::copy_n(fwd.data() + t * u, u, out.data() + t * 2 * u);
        std::copy_n(bwd.data() + t * u, u, out.data() + t * 2 * u + u);
    }
    return out;
}

inline Tensor lstm_sequence_backward(const Tensor& seq, const Tensor& w_f, const Tensor& r_f,
                                     const Tensor* w_b, const Tensor* r_b,
                                     const LstmSequenceCache& cache, const Tensor& dout,
                                     Tensor& dw_f, Tensor& dr_f, Tensor& db_f,
                                     Tensor* dw_b, Tensor* dr_b, Tensor* db_b) {
    const std::size_t len = seq.dim(0);
    Tensor dseq(seq.shape());
    if (w_b == nullptr) {
        lstm_direction_backward(seq, w_f, r_f, false, cache.fwd, dout, dseq, dw_f, dr_f, db_f);
        return dseq;
    }
    const std::size_t u = w_f.dim(1) / 4;
    Tensor dout_f({len, u}), dout_b({len, u});
    for (std::size_t t = 0; t < len; ++t) {
        std::copy_n(dout.data() + t * 2 * u, u, dout_f.data() + t * u);
        std::copy_n(dout.data() + t * 2 * u + u, u, dout_b.data() + t * u);
    }
    lstm_direction_backward(seq, w_f, r_f, false, cache.fwd, dout_f, dseq, dw_f, dr_f, db_f);
    lstm_direction_backward(seq, *w_b, *r_b, true, cache.bwd, dout_b, dseq, *dw_b, *dr_b, *db_b);
    return dseq;
}

}  // namespace plated

#endif  // PLATED_NDNUM_LSTM_HPP
