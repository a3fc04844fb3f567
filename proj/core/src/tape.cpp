#include "panolayout/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace panolayout::nn {

namespace {

double softplus_scalar(double v) {
  return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

double sigmoid_scalar(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}


}  // namespace

const Tensor& Value::val() const { return tape->value(id); }
const Tensor& Value::grad() const { return tape->grad(id); }
bool Value::requires_grad() const { return tape != nullptr && tape->requires_grad(id); }

int Tape::push(Tensor v, bool requires_grad) {
  nodes_.push_back(Node{std::move(v), Tensor{}, requires_grad, false, nullptr});
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor& Tape::grad_buf(int id) {
  Node& n = nodes_[id];
  if (!n.grad_live) {
    n.grad = Tensor::zeros(n.value.shape);
    n.grad_live = true;
  }
  return n.grad;
}

const Tensor& Tape::grad(int id) {
  return grad_buf(id);
}

void Tape::check_mine(Value v) const {
  if (v.tape != this || v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
    throw std::invalid_argument("value does not belong to this tape");
  }
}

bool Tape::wants_grad(Value a) const { return grad_enabled_ && nodes_[a.id].requires_grad; }
bool Tape::wants_grad(Value a, Value b) const {
  return grad_enabled_ && (nodes_[a.id].requires_grad || nodes_[b.id].requires_grad);
}

void Tape::backward(Value loss) {
  check_mine(loss);
  if (backward_done_) throw std::logic_error("backward already ran on this tape");
  if (nodes_[loss.id].value.numel() != 1) throw std::invalid_argument("loss must be a scalar");
  if (!nodes_[loss.id].requires_grad) {
    throw std::invalid_argument("backward on a value with no recorded graph");
  }
  grad_buf(loss.id)[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad_live && n.backprop) n.backprop();
  }
  backward_done_ = true;
}

// ---------------------------------------------------------------------------
// convolution kernels

namespace {

// 3-tap row accumulation with the horizontal wrap peeled out of the hot loop.
// Requires stride * ow == wd with stride in {1, 2}; only ox = 0 reads the
// wrapped left column and only stride-1 reads the wrapped right one.

Tensor conv2d_fwd(const Tensor& x, const Tensor& w, const Tensor& b, int stride) {
  const int ci = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int co = w.dim(0);
  const int oh = (h - 1) / stride + 1;
  const int ow = wd / stride;
  Tensor out({co, oh, ow});
  for (int oc = 0; oc < co; ++oc) {
    double* op = &out.data[static_cast<size_t>(oc) * oh * ow];
    const double bias = b[oc];
    for (int i = 0; i < oh * ow; ++i) op[i] = bias;
    for (int ic = 0; ic < ci; ++ic) {
      const double* xp = &x.data[static_cast<size_t>(ic) * h * wd];
      const double* wp = &w.data[(static_cast<size_t>(oc) * ci + ic) * 9];
      for (int oy = 0; oy < oh; ++oy) {
        double* orow = op + static_cast<size_t>(oy) * ow;
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = oy * stride + ky - 1;
          if (iy < 0 || iy >= h) continue;
          const double* xrow = xp + static_cast<size_t>(iy) * wd;
          const double w0 = wp[ky * 3], w1 = wp[ky * 3 + 1], w2 = wp[ky * 3 + 2];
          orow[0] += w0 * xrow[wd - 1] + w1 * xrow[0] + w2 * xrow[1];
          for (int ox = 1; ox < ow; ++ox) {
            const int i = ox * stride;
            orow[ox] += w0 * xrow[i - 1] + w1 * xrow[i] + w2 * xrow[(i + 1) % wd];
          }
        }
      }
    }
  }
  return out;
}

void conv2d_bwd(const Tensor& g, const Tensor& x, const Tensor& w, int stride, Tensor* dx,
                Tensor* dw, Tensor* db) {
  const int ci = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int co = w.dim(0);
  const int oh = g.dim(1), ow = g.dim(2);
  for (int oc = 0; oc < co; ++oc) {
    const double* gp = &g.data[static_cast<size_t>(oc) * oh * ow];
    if (db) {
      double acc = 0.0;
      for (int i = 0; i < oh * ow; ++i) acc += gp[i];
      db->data[oc] += acc;
    }
    for (int ic = 0; ic < ci; ++ic) {
      const double* xp = &x.data[static_cast<size_t>(ic) * h * wd];
      const double* wp = &w.data[(static_cast<size_t>(oc) * ci + ic) * 9];
      double* dwp = dw ? &dw->data[(static_cast<size_t>(oc) * ci + ic) * 9] : nullptr;
      double* dxp = dx ? &dx->data[static_cast<size_t>(ic) * h * wd] : nullptr;
      for (int oy = 0; oy < oh; ++oy) {
        const double* grow = gp + static_cast<size_t>(oy) * ow;
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = oy * stride + ky - 1;
          if (iy < 0 || iy >= h) continue;
          const double* xrow = xp + static_cast<size_t>(iy) * wd;
          double* dxrow = dxp ? dxp + static_cast<size_t>(iy) * wd : nullptr;
          const double w0 = wp[ky * 3], w1 = wp[ky * 3 + 1], w2 = wp[ky * 3 + 2];
          double a0 = grow[0] * xrow[wd - 1], a1 = grow[0] * xrow[0], a2 = grow[0] * xrow[1];
          if (dxrow) {
            dxrow[wd - 1] += grow[0] * w0;
            dxrow[0] += grow[0] * w1;
            dxrow[1] += grow[0] * w2;
          }
          for (int ox = 1; ox < ow; ++ox) {
            const int i = ox * stride;
            const int ir = (i + 1) % wd;
            const double gv = grow[ox];
            a0 += gv * xrow[i - 1];
            a1 += gv * xrow[i];
            a2 += gv * xrow[ir];
            if (dxrow) {
              dxrow[i - 1] += gv * w0;
              dxrow[i] += gv * w1;
              dxrow[ir] += gv * w2;
            }
          }
          if (dwp) {
            dwp[ky * 3] += a0;
            dwp[ky * 3 + 1] += a1;
            dwp[ky * 3 + 2] += a2;
          }
        }
      }
    }
  }
}

Tensor conv1d_fwd(const Tensor& x, const Tensor& w, const Tensor& b) {
  const int ci = x.dim(0), wd = x.dim(1);
  const int co = w.dim(0);
  Tensor out({co, wd});
  for (int oc = 0; oc < co; ++oc) {
    double* op = &out.data[static_cast<size_t>(oc) * wd];
    for (int i = 0; i < wd; ++i) op[i] = b[oc];
    for (int ic = 0; ic < ci; ++ic) {
      const double* xp = &x.data[static_cast<size_t>(ic) * wd];
      const double* wp = &w.data[(static_cast<size_t>(oc) * ci + ic) * 3];
      const double w0 = wp[0], w1 = wp[1], w2 = wp[2];
      op[0] += w0 * xp[wd - 1] + w1 * xp[0] + w2 * xp[1];
      for (int ox = 1; ox < wd - 1; ++ox) {
        op[ox] += w0 * xp[ox - 1] + w1 * xp[ox] + w2 * xp[ox + 1];
      }
      op[wd - 1] += w0 * xp[wd - 2] + w1 * xp[wd - 1] + w2 * xp[0];
    }
  }
  return out;
}

void conv1d_bwd(const Tensor& g, const Tensor& x, const Tensor& w, Tensor* dx, Tensor* dw,
                Tensor* db) {
  const int ci = x.dim(0), wd = x.dim(1);
  const int co = w.dim(0);
  for (int oc = 0; oc < co; ++oc) {
    const double* gp = &g.data[static_cast<size_t>(oc) * wd];
    if (db) {
      double acc = 0.0;
      for (int i = 0; i < wd; ++i) acc += gp[i];
      db->data[oc] += acc;
    }
    for (int ic = 0; ic < ci; ++ic) {
      const double* xp = &x.data[static_cast<size_t>(ic) * wd];
      const double* wp = &w.data[(static_cast<size_t>(oc) * ci + ic) * 3];
      double* dwp = dw ? &dw->data[(static_cast<size_t>(oc) * ci + ic) * 3] : nullptr;
      double* dxp = dx ? &dx->data[static_cast<size_t>(ic) * wd] : nullptr;
      const double w0 = wp[0], w1 = wp[1], w2 = wp[2];
      double a0 = gp[0] * xp[wd - 1], a1 = gp[0] * xp[0], a2 = gp[0] * xp[1];
      if (dxp) {
        dxp[wd - 1] += gp[0] * w0;
        dxp[0] += gp[0] * w1;
        dxp[1] += gp[0] * w2;
      }
      for (int ox = 1; ox < wd - 1; ++ox) {
        const double gv = gp[ox];
        a0 += gv * xp[ox - 1];
        a1 += gv * xp[ox];
        a2 += gv * xp[ox + 1];
        if (dxp) {
          dxp[ox - 1] += gv * w0;
          dxp[ox] += gv * w1;
          dxp[ox + 1] += gv * w2;
        }
      }
      a0 += gp[wd - 1] * xp[wd - 2];
      a1 += gp[wd - 1] * xp[wd - 1];
      a2 += gp[wd - 1] * xp[0];
      if (dxp) {
        dxp[wd - 2] += gp[wd - 1] * w0;
        dxp[wd - 1] += gp[wd - 1] * w1;
        dxp[0] += gp[wd - 1] * w2;
      }
      if (dwp) {
        dwp[0] += a0;
        dwp[1] += a1;
        dwp[2] += a2;
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ops

Value Tape::conv2d(Value x, Value w, Value b, int stride) {
  check_mine(x);
  check_mine(w);
  check_mine(b);
  const Tensor& xv = nodes_[x.id].value;
  const Tensor& wv = nodes_[w.id].value;
  if (xv.ndim() != 3 || wv.ndim() != 4 || wv.dim(2) != 3 || wv.dim(3) != 3 ||
      wv.dim(1) != xv.dim(0) || xv.dim(2) % stride != 0) {
    throw std::invalid_argument("conv2d: bad shapes");
  }
  const bool req = grad_enabled_ && (nodes_[x.id].requires_grad || nodes_[w.id].requires_grad ||
                                     nodes_[b.id].requires_grad);
  const int id = push(conv2d_fwd(xv, wv, nodes_[b.id].value, stride), req);
  if (req) {
    nodes_[id].backprop = [this, id, xi = x.id, wi = w.id, bi = b.id, stride] {
      conv2d_bwd(nodes_[id].grad, nodes_[xi].value, nodes_[wi].value, stride,
                 nodes_[xi].requires_grad ? &grad_buf(xi) : nullptr,
                 nodes_[wi].requires_grad ? &grad_buf(wi) : nullptr,
                 nodes_[bi].requires_grad ? &grad_buf(bi) : nullptr);
    };
  }
  return wrap(id);
}

Value Tape::conv1d(Value x, Value w, Value b) {
  check_mine(x);
  check_mine(w);
  check_mine(b);
  const Tensor& xv = nodes_[x.id].value;
  const Tensor& wv = nodes_[w.id].value;
  if (xv.ndim() != 2 || wv.ndim() != 3 || wv.dim(2) != 3 || wv.dim(1) != xv.dim(0)) {
    throw std::invalid_argument("conv1d: bad shapes");
  }
  const bool req = grad_enabled_ && (nodes_[x.id].requires_grad || nodes_[w.id].requires_grad ||
                                     nodes_[b.id].requires_grad);
  const int id = push(conv1d_fwd(xv, wv, nodes_[b.id].value), req);
  if (req) {
    nodes_[id].backprop = [this, id, xi = x.id, wi = w.id, bi = b.id] {
      conv1d_bwd(nodes_[id].grad, nodes_[xi].value, nodes_[wi].value,
                 nodes_[xi].requires_grad ? &grad_buf(xi) : nullptr,
                 nodes_[wi].requires_grad ? &grad_buf(wi) : nullptr,
                 nodes_[bi].requires_grad ? &grad_buf(bi) : nullptr);
    };
  }
  return wrap(id);
}

void Tape::track_signs(const Tensor& t) {
  std::uint64_t h = kink_signature_;
  for (double v : t.data) {
    h ^= v > 0.0 ? 0x9eu : 0x31u;
    h *= 0x100000001b3ull;
  }
  kink_signature_ = h;
}

Value Tape::relu(Value x) {
  check_mine(x);
  if (kink_tracking_) track_signs(nodes_[x.id].value);
  Tensor out = nodes_[x.id].value;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  const bool req = wants_grad(x);
  const int id = push(std::move(out), req);
  if (req) {
    nodes_[id].backprop = [this, id, xi = x.id] {
      const Tensor& g = nodes_[id].grad;
      const Tensor& xv = nodes_[xi].value;
      Tensor& dx = grad_buf(xi);
      for (size_t i = 0; i < g.data.size(); ++i) {
        if (xv.data[i] > 0.0) dx.data[i] += g.data[i];
      }
    };
  }
  return wrap(id);
}

Value Tape::mean_rows(Value x) {
  check_mine(x);
  const Tensor& xv = nodes_[x.id].value;
  if (xv.ndim() != 3) throw std::invalid_argument("mean_rows: want [C, H, W]");
  const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  Tensor out({c, w});
  const double inv_h = 1.0 / h;
  for (int ic = 0; ic < c; ++ic) {
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) out.at(ic, u) += xv.at(ic, v, u);
    }
    for (int u = 0; u < w; ++u) out.at(ic, u) *= inv_h;
  }
  const bool req = wants_grad(x);
  const int id = push(std::move(out), req);
  if (req) {
    nodes_[id].backprop = [this, id, xi = x.id, c, h, w, inv_h] {
      const Tensor& g = nodes_[id].grad;
      Tensor& dx = grad_buf(xi);
      for (int ic = 0; ic < c; ++ic) {
        for (int v = 0; v < h; ++v) {
          for (int u = 0; u < w; ++u) dx.at(ic, v, u) += g.at(ic, u) * inv_h;
        }
      }
    };
  }
  return wrap(id);
}

Value Tape::upsample_linear(Value x, int factor) {
  check_mine(x);
  const Tensor& xv = nodes_[x.id].value;
  if (xv.ndim() != 2 || factor < 1) throw std::invalid_argument("upsample_linear: bad args");
  const int c = xv.dim(0), w = xv.dim(1);
  const int ow = w * factor;
  Tensor out({c, ow});
  for (int j = 0; j < ow; ++j) {
    const double s = (j + 0.5) / factor - 0.5;
    const int i0 = static_cast<int>(std::floor(s));
    const double t = s - i0;
    const int ia = ((i0 % w) + w) % w;
    const int ib = (ia + 1) % w;
    for (int ic = 0; ic < c; ++ic) {
      out.at(ic, j) = (1.0 - t) * xv.at(ic, ia) + t * xv.at(ic, ib);
    }
  }
  const bool req = wants_grad(x);
  const int id = push(std::move(out), req);
  if (req) {
    nodes_[id].backprop = [this, id, xi = x.id, factor, c, w] {
      const Tensor& g = nodes_[id].grad;
      Tensor& dx = grad_buf(xi);
      const int ow = w * factor;
      for (int j = 0; j < ow; ++j) {
        const double s = (j + 0.5) / factor - 0.5;
        const int i0 = static_cast<int>(std::floor(s));
        const double t = s - i0;
        const int ia = ((i0 % w) + w) % w;
        const int ib = (ia + 1) % w;
        for (int ic = 0; ic < c; ++ic) {
          dx.at(ic, ia) += (1.0 - t) * g.at(ic, j);
          dx.at(ic, ib) += t * g.at(ic, j);
        }
      }
    };
  }
  return wrap(id);
}

Value Tape::select_channel(Value x, int c) {
  check_mine(x);
  const Tensor& xv = nodes_[x.id].value;
  if (xv.ndim() != 2 || c < 0 || c >= xv.dim(0)) {
    throw std::invalid_argument("select_channel: bad args");
  }
  const int w = xv.dim(1);
  Tensor out({w});
  for (int u = 0; u < w; ++u) out[u] = xv.at(c, u);
  const bool req = wants_grad(x);
  const int id = push(std::move(out), req);
  if (req) {
    nodes_[id].backprop = [this, id, xi = x.id, c, w] {
      const Tensor& g = nodes_[id].grad;
      Tensor& dx = grad_buf(xi);
      for (int u = 0; u < w; ++u) dx.at(c, u) += g[u];
    };
  }
  return wrap(id);
}

Value Tape::mul_const(Value x, Tensor m) {
  check_mine(x);
  const Tensor& xv = nodes_[x.id].value;
  if (!xv.same_shape(m)) throw std::invalid_argument("mul_const: shape mismatch");
  Tensor out = xv;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= m.data[i];
  const bool req = wants_grad(x);
  const int id = push(std::move(out), req);
  if (req) {
    nodes_[id].backprop = [this, id, xi = x.id, m = std::move(m)] {
      const Tensor& g = nodes_[id].grad;
      Tensor& dx = grad_buf(xi);
      for (size_t i = 0; i < g.data.size(); ++i) dx.data[i] += g.data[i] * m.data[i];
    };
  }
  return wrap(id);
}

Value Tape::softplus(Value x) {
  check_mine(x);
  Tensor out = nodes_[x.id].value;
  for (double& v : out.data) v = softplus_scalar(v);
  const bool req = wants_grad(x);
  const int id = push(std::move(out), req);
  if (req) {
    nodes_[id].backprop = [this, id, xi = x.id] {
      const Tensor& g = nodes_[id].grad;
      const Tensor& xv = nodes_[xi].value;
      Tensor& dx = grad_buf(xi);
      for (size_t i = 0; i < g.data.size(); ++i) {
        dx.data[i] += g.data[i] * sigmoid_scalar(xv.data[i]);
      }
    };
  }
  return wrap(id);
}

Value Tape::sigmoid(Value x) {
  check_mine(x);
  Tensor out = nodes_[x.id].value;
  for (double& v : out.data) v = sigmoid_scalar(v);
  const bool req = wants_grad(x);
  const int id = push(std::move(out), req);
  if (req) {
    nodes_[id].backprop = [this, id, xi = x.id] {
      const Tensor& g = nodes_[id].grad;
      const Tensor& ov = nodes_[id].value;
      Tensor& dx = grad_buf(xi);
      for (size_t i = 0; i < g.data.size(); ++i) {
        dx.data[i] += g.data[i] * ov.data[i] * (1.0 - ov.data[i]);
      }
    };
  }
  return wrap(id);
}

namespace {
void check_binary(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("elementwise op: shape mismatch");
}
}  // namespace

Value Tape::add(Value a, Value b) {
  check_mine(a);
  check_mine(b);
  const Tensor& av = nodes_[a.id].value;
  const Tensor& bv = nodes_[b.id].value;
  check_binary(av, bv);
  Tensor out = av;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
  const bool req = wants_grad(a, b);
  const int id = push(std::move(out), req);
  if (req) {
    nodes_[id].backprop = [this, id, ai = a.id, bi = b.id] {
      const Tensor& g = nodes_[id].grad;
      if (nodes_[ai].requires_grad) {
        Tensor& da = grad_buf(ai);
        for (size_t i = 0; i < g.data.size(); ++i) da.data[i] += g.data[i];
      }
      if (nodes_[bi].requires_grad) {
        Tensor& db = grad_buf(bi);
        for (size_t i = 0; i < g.data.size(); ++i) db.data[i] += g.data[i];
      }
    };
  }
  return wrap(id);
}

Value Tape::sub(Value a, Value b) {
  check_mine(a);
  check_mine(b);
  const Tensor& av = nodes_[a.id].value;
  const Tensor& bv = nodes_[b.id].value;
  check_binary(av, bv);
  Tensor out = av;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= bv.data[i];
  const bool req = wants_grad(a, b);
  const int id = push(std::move(out), req);
  if (req) {
    nodes_[id].backprop = [this, id, ai = a.id, bi = b.id] {
      const Tensor& g = nodes_[id].grad;
      if (nodes_[ai].requires_grad) {
        Tensor& da = grad_buf(ai);
        for (size_t i = 0; i < g.data.size(); ++i) da.data[i] += g.data[i];
      }
      if (nodes_[bi].requires_grad) {
        Tensor& db = grad_buf(bi);
        for (size_t i = 0; i < g.data.size(); ++i) db.data[i] -= g.data[i];
      }
    };
  }
  return wrap(id);
}

Value Tape::mul(Value a, Value b) {
  check_mine(a);
  check_mine(b);
  const Tensor& av = nodes_[a.id].value;
  const Tensor& bv = nodes_[b.id].value;
  check_binary(av, bv);
  Tensor out = av;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bv.data[i];
  const bool req = wants_grad(a, b);
  const int id = push(std::move(out), req);
  if (req) {
    nodes_[id].backprop = [this, id, ai = a.id, bi = b.id] {
      const Tensor& g = nodes_[id].grad;
      const Tensor& av = nodes_[ai].value;
      const Tensor& bv = nodes_[bi].value;
      if (nodes_[ai].requires_grad) {
        Tensor& da = grad_buf(ai);
        for (size_t i = 0; i < g.data.size(); ++i) da.data[i] += g.data[i] * bv.data[i];
      }
      if (nodes_[bi].requires_grad) {
        Tensor& db = grad_buf(bi);
        for (size_t i = 0; i < g.data.size(); ++i) db.data[i] += g.data[i] * av.data[i];
      }
    };
  }
  return wrap(id);
}

Value Tape::div(Value a, Value b) {
  check_mine(a);
  check_mine(b);
  const Tensor& av = nodes_[a.id].value;
  const Tensor& bv = nodes_[b.id].value;
  check_binary(av, bv);
  Tensor out = av;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] /= bv.data[i];
  const bool req = wants_grad(a, b);
  const int id = push(std::move(out), req);
  if (req) {
    nodes_[id].backprop = [this, id, ai = a.id, bi = b.id] {
      const Tensor& g = nodes_[id].grad;
      const Tensor& ov = nodes_[id].value;
      const Tensor& bv = nodes_[bi].value;
      if (nodes_[ai].requires_grad) {
        Tensor& da = grad_buf(ai);
        for (size_t i = 0; i < g.data.size(); ++i) da.data[i] += g.data[i] / bv.data[i];
      }
      if (nodes_[bi].requires_grad) {
        Tensor& db = grad_buf(bi);
        for (size_t i = 0; i < g.data.size(); ++i) {
          db.data[i] -= g.data[i] * ov.data[i] / bv.data[i];
        }
      }
    };
  }
  return wrap(id);
}

Value Tape::add_scalar(Value x, double c) {
  check_mine(x);
  Tensor out = nodes_[x.id].value;
  for (double& v : out.data) v += c;
  const bool req = wants_grad(x);
  const int id = push(std::move(out), req);
  if (req) {
    nodes_[id].backprop = [this, id, xi = x.id] {
      const Tensor& g = nodes_[id].grad;
      Tensor& dx = grad_buf(xi);
      for (size_t i = 0; i < g.data.size(); ++i) dx.data[i] += g.data[i];
    };
  }
  return wrap(id);
}

Value Tape::mul_scalar(Value x, double c) {
  check_mine(x);
  Tensor out = nodes_[x.id].value;
  for (double& v : out.data) v *= c;
  const bool req = wants_grad(x);
  const int id = push(std::move(out), req);
  if (req) {
    nodes_[id].backprop = [this, id, xi = x.id, c] {
      const Tensor& g = nodes_[id].grad;
      Tensor& dx = grad_buf(xi);
      for (size_t i = 0; i < g.data.size(); ++i) dx.data[i] += g.data[i] * c;
    };
  }
  return wrap(id);
}

Value Tape::abs(Value x) {
  check_mine(x);
  if (kink_tracking_) track_signs(nodes_[x.id].value);
  Tensor out = nodes_[x.id].value;
  for (double& v : out.data) v = std::abs(v);
  const bool req = wants_grad(x);
  const int id = push(std::move(out), req);
  if (req) {
    nodes_[id].backprop = [this, id, xi = x.id] {
      const Tensor& g = nodes_[id].grad;
      const Tensor& xv = nodes_[xi].value;
      Tensor& dx = grad_buf(xi);
      for (size_t i = 0; i < g.data.size(); ++i) {
        const double s = xv.data[i] > 0.0 ? 1.0 : (xv.data[i] < 0.0 ? -1.0 : 0.0);
        dx.data[i] += g.data[i] * s;
      }
    };
  }
  return wrap(id);
}

Value Tape::sqrt(Value x) {
  check_mine(x);
  Tensor out = nodes_[x.id].value;
  for (double& v : out.data) v = std::sqrt(v);
  const bool req = wants_grad(x);
  const int id = push(std::move(out), req);
  if (req) {
    nodes_[id].backprop = [this, id, xi = x.id] {
      const Tensor& g = nodes_[id].grad;
      const Tensor& ov = nodes_[id].value;
      Tensor& dx = grad_buf(xi);
      for (size_t i = 0; i < g.data.size(); ++i) {
        dx.data[i] += g.data[i] * 0.5 / ov.data[i];
      }
    };
  }
  return wrap(id);
}

Value Tape::roll(Value x, int shift) {
  check_mine(x);
  const Tensor& xv = nodes_[x.id].value;
  const int n = xv.dim(xv.ndim() - 1);
  const int outer = xv.numel() / n;
  const int s = ((shift % n) + n) % n;
  Tensor out(xv.shape);
  for (int o = 0; o < outer; ++o) {
    const double* src = &xv.data[static_cast<size_t>(o) * n];
    double* dst = &out.data[static_cast<size_t>(o) * n];
    for (int i = 0; i < n; ++i) dst[(i + s) % n] = src[i];
  }
  const bool req = wants_grad(x);
  const int id = push(std::move(out), req);
  if (req) {
    nodes_[id].backprop = [this, id, xi = x.id, n, outer, s] {
      const Tensor& g = nodes_[id].grad;
      Tensor& dx = grad_buf(xi);
      for (int o = 0; o < outer; ++o) {
        const double* gp = &g.data[static_cast<size_t>(o) * n];
        double* dp = &dx.data[static_cast<size_t>(o) * n];
        for (int i = 0; i < n; ++i) dp[i] += gp[(i + s) % n];
      }
    };
  }
  return wrap(id);
}

Value Tape::sum_all(Value x) {
  check_mine(x);
  const Tensor& xv = nodes_[x.id].value;
  double acc = 0.0;
  for (double v : xv.data) acc += v;
  const bool req = wants_grad(x);
  const int id = push(Tensor::scalar(acc), req);
  if (req) {
    nodes_[id].backprop = [this, id, xi = x.id] {
      const double g = nodes_[id].grad[0];
      Tensor& dx = grad_buf(xi);
      for (double& v : dx.data) v += g;
    };
  }
  return wrap(id);
}

Value Tape::mean_all(Value x) {
  check_mine(x);
  const Tensor& xv = nodes_[x.id].value;
  double acc = 0.0;
  for (double v : xv.data) acc += v;
  const double inv_n = 1.0 / xv.numel();
  const bool req = wants_grad(x);
  const int id = push(Tensor::scalar(acc * inv_n), req);
  if (req) {
    nodes_[id].backprop = [this, id, xi = x.id, inv_n] {
      const double g = nodes_[id].grad[0] * inv_n;
      Tensor& dx = grad_buf(xi);
      for (double& v : dx.data) v += g;
    };
  }
  return wrap(id);
}

}  // namespace panolayout::nn
