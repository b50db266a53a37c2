#pragma once

// Dense double-precision tensors and a single-pass reverse-mode tape.
// Layout is NCTHW for video tensors and [C_out, C_in/groups, kt, kh, kw] for
// convolution kernels. Ops compute eagerly; each op appends one node whose
// closure accumulates into its parents' grads. Replaying nodes in reverse
// creation order is a valid topological order, so backward() is one sweep.
//
// Convolution padding follows the ceil-mode convention used by the cost
// model: out = ceil(in / stride), pad_total = max((out - 1) * stride + k - in,
// 0), pad_begin = pad_total / 2. For stride 1 and odd k this is the familiar
// symmetric (k - 1) / 2. Positions that read padding still count as real
// output positions, matching the analytical FLOPs.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "nasforge/rng.hpp"

namespace nasforge {

struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    v.assign(static_cast<std::size_t>(count(shape)), 0.0);
  }
  Tensor(std::vector<int> s, std::vector<double> data) : shape(std::move(s)), v(std::move(data)) {
    if (static_cast<std::int64_t>(v.size()) != count(shape)) {
      throw std::invalid_argument("tensor: data size does not match shape");
    }
  }

  static std::int64_t count(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int d : s) {
      if (d < 1) throw std::invalid_argument("tensor: nonpositive dimension");
      n *= d;
    }
    return n;
  }

  std::int64_t numel() const { return static_cast<std::int64_t>(v.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  int ndim() const { return static_cast<int>(shape.size()); }

  void fill_normal(Rng& rng, double stddev) {
    for (double& x : v) x = rng.normal() * stddev;
  }
};

inline bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

struct Var {
  int id = -1;
};

struct BatchStats {
  std::vector<double> mean;
  std::vector<double> var;  // biased
};

struct LossResult {
  Var loss;
  std::vector<double> loglik;  // per-sample log-probability of the label
};

class Tape {
 public:
  Var input(Tensor value, bool requires_grad) {
    return push(std::move(value), requires_grad, nullptr);
  }

  const Tensor& value(Var x) const { return nodes_[check(x)].value; }
  bool requires_grad(Var x) const { return nodes_[check(x)].needs; }

  // Grad of a node after backward(); zeros if the node was never reached.
  const Tensor& grad(Var x) {
    Node& n = nodes_[check(x)];
    ensure_grad(n);
    return n.grad;
  }

  Var add(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (!same_shape(av, bv)) throw std::invalid_argument("add: shape mismatch");
    Tensor out = av;
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += bv.v[i];
    const int ida = a.id, idb = b.id;
    return push(std::move(out), requires_grad(a) || requires_grad(b),
                [ida, idb](Tape& t, const Tensor& dy) {
                  t.accumulate(ida, dy);
                  t.accumulate(idb, dy);
                });
  }

  Var mul_scalar(Var a, double s) {
    Tensor out = value(a);
    for (double& x : out.v) x *= s;
    const int ida = a.id;
    return push(std::move(out), requires_grad(a), [ida, s](Tape& t, const Tensor& dy) {
      if (!t.wants(ida)) return;
      Tensor& da = t.grad_buf(ida);
      for (std::size_t i = 0; i < dy.v.size(); ++i) da.v[i] += s * dy.v[i];
    });
  }

  Var relu(Var a) {
    Tensor out = value(a);
    for (double& x : out.v) x = x > 0.0 ? x : 0.0;
    const int ida = a.id;
    return push(std::move(out), requires_grad(a), [ida](Tape& t, const Tensor& dy) {
      if (!t.wants(ida)) return;
      const Tensor& x = t.nodes_[static_cast<std::size_t>(ida)].value;
      Tensor& da = t.grad_buf(ida);
      for (std::size_t i = 0; i < dy.v.size(); ++i) {
        if (x.v[i] > 0.0) da.v[i] += dy.v[i];
      }
    });
  }

  // x * sigmoid(x)
  Var swish(Var a) {
    const Tensor& x = value(a);
    Tensor out = x;
    for (double& t : out.v) t = t / (1.0 + std::exp(-t));
    const int ida = a.id;
    return push(std::move(out), requires_grad(a), [ida](Tape& t, const Tensor& dy) {
      if (!t.wants(ida)) return;
      const Tensor& x = t.nodes_[static_cast<std::size_t>(ida)].value;
      Tensor& da = t.grad_buf(ida);
      for (std::size_t i = 0; i < dy.v.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-x.v[i]));
        da.v[i] += dy.v[i] * s * (1.0 + x.v[i] * (1.0 - s));
      }
    });
  }

  // x: [N, Ci, T, H, W], w: [Co, Ci/groups, kt, kh, kw]. Spatial stride only;
  // the temporal dimension is never strided.
  Var conv3d(Var xv, Var wv, int stride, int groups) {
    const Tensor& x = value(xv);
    const Tensor& w = value(wv);
    if (x.ndim() != 5 || w.ndim() != 5) throw std::invalid_argument("conv3d: rank must be 5");
    if (stride != 1 && stride != 2) throw std::invalid_argument("conv3d: stride must be 1 or 2");
    const int N = x.dim(0), Ci = x.dim(1), T = x.dim(2), H = x.dim(3), W = x.dim(4);
    const int Co = w.dim(0), Cig = w.dim(1), kt = w.dim(2), kh = w.dim(3), kw = w.dim(4);
    if (Ci % groups != 0 || Co % groups != 0 || Ci / groups != Cig) {
      throw std::invalid_argument("conv3d: channel/group mismatch");
    }
    const int Ho = (H + stride - 1) / stride;
    const int Wo = (W + stride - 1) / stride;
    const int pt = (kt - 1) / 2;
    const int ph = pad_begin(H, Ho, stride, kh);
    const int pw = pad_begin(W, Wo, stride, kw);

    Tensor out({N, Co, T, Ho, Wo});
    const bool pointwise = kt == 1 && kh == 1 && kw == 1 && stride == 1 && groups == 1;
    if (pointwise) {
      const std::int64_t L = static_cast<std::int64_t>(T) * H * W;
      for (int n = 0; n < N; ++n) {
        const double* xn = x.v.data() + static_cast<std::int64_t>(n) * Ci * L;
        double* yn = out.v.data() + static_cast<std::int64_t>(n) * Co * L;
        for (int co = 0; co < Co; ++co) {
          double* yrow = yn + static_cast<std::int64_t>(co) * L;
          for (int ci = 0; ci < Ci; ++ci) {
            const double wv_ = w.v[static_cast<std::size_t>(co) * Ci + ci];
            const double* xrow = xn + static_cast<std::int64_t>(ci) * L;
            for (std::int64_t l = 0; l < L; ++l) yrow[l] += wv_ * xrow[l];
          }
        }
      }
    } else {
      conv3d_general(x, w, out, N, Ci, T, H, W, Co, Cig, kt, kh, kw, stride, groups, pt, ph, pw,
                     nullptr, nullptr, nullptr);
    }

    const int idx = xv.id, idw = wv.id;
    return push(std::move(out), requires_grad(xv) || requires_grad(wv),
                [idx, idw, stride, groups, pointwise, pt, ph, pw](Tape& t, const Tensor& dy) {
                  const Tensor& x = t.nodes_[static_cast<std::size_t>(idx)].value;
                  const Tensor& w = t.nodes_[static_cast<std::size_t>(idw)].value;
                  const bool wx = t.wants(idx);
                  const bool ww = t.wants(idw);
                  if (!wx && !ww) return;
                  Tensor* dx = wx ? &t.grad_buf(idx) : nullptr;
                  Tensor* dw = ww ? &t.grad_buf(idw) : nullptr;
                  const int N = x.dim(0), Ci = x.dim(1), T = x.dim(2), H = x.dim(3), W = x.dim(4);
                  const int Co = w.dim(0), Cig = w.dim(1), kt = w.dim(2), kh = w.dim(3),
                            kw = w.dim(4);
                  if (pointwise) {
                    const std::int64_t L = static_cast<std::int64_t>(T) * H * W;
                    for (int n = 0; n < N; ++n) {
                      const double* xn = x.v.data() + static_cast<std::int64_t>(n) * Ci * L;
                      const double* gn = dy.v.data() + static_cast<std::int64_t>(n) * Co * L;
                      double* dxn = dx ? dx->v.data() + static_cast<std::int64_t>(n) * Ci * L
                                       : nullptr;
                      for (int co = 0; co < Co; ++co) {
                        const double* grow = gn + static_cast<std::int64_t>(co) * L;
                        for (int ci = 0; ci < Ci; ++ci) {
                          const double wv_ = w.v[static_cast<std::size_t>(co) * Ci + ci];
                          const double* xrow = xn + static_cast<std::int64_t>(ci) * L;
                          double acc = 0.0;
                          if (dxn) {
                            double* dxrow = dxn + static_cast<std::int64_t>(ci) * L;
                            for (std::int64_t l = 0; l < L; ++l) {
                              dxrow[l] += wv_ * grow[l];
                              acc += xrow[l] * grow[l];
                            }
                          } else {
                            for (std::int64_t l = 0; l < L; ++l) acc += xrow[l] * grow[l];
                          }
                          if (dw) dw->v[static_cast<std::size_t>(co) * Ci + ci] += acc;
                        }
                      }
                    }
                  } else {
                    conv3d_general(x, w, const_cast<Tensor&>(dy), N, Ci, T, H, W, Co, Cig, kt, kh,
                                   kw, stride, groups, pt, ph, pw, &dy, dx, dw);
                  }
                });
  }

  // Train-mode batch normalization over (N, T, H, W) per channel with biased
  // variance. out_stats, when given, receives the batch statistics so a
  // caller can maintain running averages.
  Var batchnorm3d(Var xv, Var gv, Var bv, double eps = 1e-5, BatchStats* out_stats = nullptr) {
    const Tensor& x = value(xv);
    const Tensor& g = value(gv);
    const Tensor& b = value(bv);
    if (x.ndim() != 5) throw std::invalid_argument("batchnorm3d: rank must be 5");
    const int N = x.dim(0), C = x.dim(1);
    const std::int64_t L = static_cast<std::int64_t>(x.dim(2)) * x.dim(3) * x.dim(4);
    if (g.numel() != C || b.numel() != C) throw std::invalid_argument("batchnorm3d: param size");
    const double M = static_cast<double>(N) * static_cast<double>(L);

    std::vector<double> mean(static_cast<std::size_t>(C), 0.0);
    std::vector<double> var(static_cast<std::size_t>(C), 0.0);
    for (int n = 0; n < N; ++n) {
      for (int c = 0; c < C; ++c) {
        const double* row = x.v.data() + (static_cast<std::int64_t>(n) * C + c) * L;
        double s = 0.0;
        for (std::int64_t l = 0; l < L; ++l) s += row[l];
        mean[static_cast<std::size_t>(c)] += s;
      }
    }
    for (double& m : mean) m /= M;
    for (int n = 0; n < N; ++n) {
      for (int c = 0; c < C; ++c) {
        const double* row = x.v.data() + (static_cast<std::int64_t>(n) * C + c) * L;
        const double mu = mean[static_cast<std::size_t>(c)];
        double s = 0.0;
        for (std::int64_t l = 0; l < L; ++l) {
          const double d = row[l] - mu;
          s += d * d;
        }
        var[static_cast<std::size_t>(c)] += s;
      }
    }
    for (double& s : var) s /= M;
    if (out_stats) {
      out_stats->mean = mean;
      out_stats->var = var;
    }

    auto xhat = std::make_shared<std::vector<double>>(x.v.size());
    Tensor out(x.shape);
    std::vector<double> inv_std(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) {
      inv_std[static_cast<std::size_t>(c)] = 1.0 / std::sqrt(var[static_cast<std::size_t>(c)] + eps);
    }
    for (int n = 0; n < N; ++n) {
      for (int c = 0; c < C; ++c) {
        const std::int64_t base = (static_cast<std::int64_t>(n) * C + c) * L;
        const double mu = mean[static_cast<std::size_t>(c)];
        const double is = inv_std[static_cast<std::size_t>(c)];
        const double ga = g.v[static_cast<std::size_t>(c)];
        const double be = b.v[static_cast<std::size_t>(c)];
        for (std::int64_t l = 0; l < L; ++l) {
          const double h = (x.v[static_cast<std::size_t>(base + l)] - mu) * is;
          (*xhat)[static_cast<std::size_t>(base + l)] = h;
          out.v[static_cast<std::size_t>(base + l)] = ga * h + be;
        }
      }
    }

    const int idx = xv.id, idg = gv.id, idb = bv.id;
    auto inv = std::make_shared<std::vector<double>>(std::move(inv_std));
    return push(std::move(out), requires_grad(xv) || requires_grad(gv) || requires_grad(bv),
                [idx, idg, idb, xhat, inv, N, C, L, M](Tape& t, const Tensor& dy) {
                  const Tensor& g = t.nodes_[static_cast<std::size_t>(idg)].value;
                  const bool wx = t.wants(idx);
                  std::vector<double> sum_dy(static_cast<std::size_t>(C), 0.0);
                  std::vector<double> sum_dy_xh(static_cast<std::size_t>(C), 0.0);
                  for (int n = 0; n < N; ++n) {
                    for (int c = 0; c < C; ++c) {
                      const std::int64_t base = (static_cast<std::int64_t>(n) * C + c) * L;
                      double a = 0.0, bb = 0.0;
                      for (std::int64_t l = 0; l < L; ++l) {
                        const double d = dy.v[static_cast<std::size_t>(base + l)];
                        a += d;
                        bb += d * (*xhat)[static_cast<std::size_t>(base + l)];
                      }
                      sum_dy[static_cast<std::size_t>(c)] += a;
                      sum_dy_xh[static_cast<std::size_t>(c)] += bb;
                    }
                  }
                  if (t.wants(idg)) {
                    Tensor& dg = t.grad_buf(idg);
                    for (int c = 0; c < C; ++c) dg.v[static_cast<std::size_t>(c)] += sum_dy_xh[static_cast<std::size_t>(c)];
                  }
                  if (t.wants(idb)) {
                    Tensor& db = t.grad_buf(idb);
                    for (int c = 0; c < C; ++c) db.v[static_cast<std::size_t>(c)] += sum_dy[static_cast<std::size_t>(c)];
                  }
                  if (!wx) return;
                  Tensor& dx = t.grad_buf(idx);
                  for (int n = 0; n < N; ++n) {
                    for (int c = 0; c < C; ++c) {
                      const std::int64_t base = (static_cast<std::int64_t>(n) * C + c) * L;
                      const double k = g.v[static_cast<std::size_t>(c)] * (*inv)[static_cast<std::size_t>(c)];
                      const double mdy = sum_dy[static_cast<std::size_t>(c)] / M;
                      const double mdyxh = sum_dy_xh[static_cast<std::size_t>(c)] / M;
                      for (std::int64_t l = 0; l < L; ++l) {
                        const std::size_t i = static_cast<std::size_t>(base + l);
                        dx.v[i] += k * (dy.v[i] - mdy - (*xhat)[i] * mdyxh);
                      }
                    }
                  }
                });
  }

  // Normalize with fixed statistics (inference path of a trained network).
  Var batchnorm3d_eval(Var xv, Var gv, Var bv, const Tensor& mean, const Tensor& var,
                       double eps = 1e-5) {
    const Tensor& x = value(xv);
    if (x.ndim() != 5) throw std::invalid_argument("batchnorm3d_eval: rank must be 5");
    const int N = x.dim(0), C = x.dim(1);
    const std::int64_t L = static_cast<std::int64_t>(x.dim(2)) * x.dim(3) * x.dim(4);
    if (mean.numel() != C || var.numel() != C) {
      throw std::invalid_argument("batchnorm3d_eval: stats size");
    }
    const Tensor& g = value(gv);
    const Tensor& b = value(bv);
    Tensor out(x.shape);
    auto mu = std::make_shared<std::vector<double>>(mean.v);
    auto inv = std::make_shared<std::vector<double>>(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) {
      (*inv)[static_cast<std::size_t>(c)] = 1.0 / std::sqrt(var.v[static_cast<std::size_t>(c)] + eps);
    }
    for (int n = 0; n < N; ++n) {
      for (int c = 0; c < C; ++c) {
        const std::int64_t base = (static_cast<std::int64_t>(n) * C + c) * L;
        const double sc = g.v[static_cast<std::size_t>(c)] * (*inv)[static_cast<std::size_t>(c)];
        const double off = b.v[static_cast<std::size_t>(c)] - (*mu)[static_cast<std::size_t>(c)] * sc;
        for (std::int64_t l = 0; l < L; ++l) {
          out.v[static_cast<std::size_t>(base + l)] = x.v[static_cast<std::size_t>(base + l)] * sc + off;
        }
      }
    }
    const int idx = xv.id, idg = gv.id, idb = bv.id;
    return push(std::move(out), requires_grad(xv) || requires_grad(gv) || requires_grad(bv),
                [idx, idg, idb, mu, inv, N, C, L](Tape& t, const Tensor& dy) {
                  const Tensor& x = t.nodes_[static_cast<std::size_t>(idx)].value;
                  const Tensor& g = t.nodes_[static_cast<std::size_t>(idg)].value;
                  const bool wx = t.wants(idx), wg = t.wants(idg), wb = t.wants(idb);
                  Tensor* dx = wx ? &t.grad_buf(idx) : nullptr;
                  Tensor* dg = wg ? &t.grad_buf(idg) : nullptr;
                  Tensor* db = wb ? &t.grad_buf(idb) : nullptr;
                  for (int n = 0; n < N; ++n) {
                    for (int c = 0; c < C; ++c) {
                      const std::int64_t base = (static_cast<std::int64_t>(n) * C + c) * L;
                      const double is = (*inv)[static_cast<std::size_t>(c)];
                      const double m = (*mu)[static_cast<std::size_t>(c)];
                      const double sc = g.v[static_cast<std::size_t>(c)] * is;
                      double sdy = 0.0, sdyxh = 0.0;
                      for (std::int64_t l = 0; l < L; ++l) {
                        const std::size_t i = static_cast<std::size_t>(base + l);
                        const double d = dy.v[i];
                        sdy += d;
                        sdyxh += d * (x.v[i] - m) * is;
                        if (dx) dx->v[i] += sc * d;
                      }
                      if (dg) dg->v[static_cast<std::size_t>(c)] += sdyxh;
                      if (db) db->v[static_cast<std::size_t>(c)] += sdy;
                    }
                  }
                });
  }

  // Scalar projection sum_i weights_i * x_i; handy for exposing a full
  // Jacobian through a scalar loss in gradient checks.
  Var weighted_sum(Var xv, const Tensor& weights) {
    const Tensor& x = value(xv);
    if (!same_shape(x, weights)) throw std::invalid_argument("weighted_sum: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.v.size(); ++i) s += x.v[i] * weights.v[i];
    Tensor out({1});
    out.v[0] = s;
    const int idx = xv.id;
    auto wcopy = std::make_shared<Tensor>(weights);
    return push(std::move(out), requires_grad(xv), [idx, wcopy](Tape& t, const Tensor& dy) {
      if (!t.wants(idx)) return;
      Tensor& dx = t.grad_buf(idx);
      for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += dy.v[0] * wcopy->v[i];
    });
  }

  // [N, C, T, H, W] -> [N, C]
  Var global_avg_pool(Var xv) {
    const Tensor& x = value(xv);
    if (x.ndim() != 5) throw std::invalid_argument("global_avg_pool: rank must be 5");
    const int N = x.dim(0), C = x.dim(1);
    const std::int64_t L = static_cast<std::int64_t>(x.dim(2)) * x.dim(3) * x.dim(4);
    Tensor out({N, C});
    for (int n = 0; n < N; ++n) {
      for (int c = 0; c < C; ++c) {
        const double* row = x.v.data() + (static_cast<std::int64_t>(n) * C + c) * L;
        double s = 0.0;
        for (std::int64_t l = 0; l < L; ++l) s += row[l];
        out.v[static_cast<std::size_t>(n) * C + c] = s / static_cast<double>(L);
      }
    }
    const int idx = xv.id;
    return push(std::move(out), requires_grad(xv), [idx, N, C, L](Tape& t, const Tensor& dy) {
      if (!t.wants(idx)) return;
      Tensor& dx = t.grad_buf(idx);
      const double inv = 1.0 / static_cast<double>(L);
      for (int n = 0; n < N; ++n) {
        for (int c = 0; c < C; ++c) {
          const double d = dy.v[static_cast<std::size_t>(n) * C + c] * inv;
          double* row = dx.v.data() + (static_cast<std::int64_t>(n) * C + c) * L;
          for (std::int64_t l = 0; l < L; ++l) row[l] += d;
        }
      }
    });
  }

  // x: [N, Fi], w: [Fo, Fi], b: [Fo]
  Var linear(Var xv, Var wv, Var bv) {
    const Tensor& x = value(xv);
    const Tensor& w = value(wv);
    const Tensor& b = value(bv);
    if (x.ndim() != 2 || w.ndim() != 2) throw std::invalid_argument("linear: rank must be 2");
    const int N = x.dim(0), Fi = x.dim(1), Fo = w.dim(0);
    if (w.dim(1) != Fi || b.numel() != Fo) throw std::invalid_argument("linear: shape mismatch");
    Tensor out({N, Fo});
    for (int n = 0; n < N; ++n) {
      for (int fo = 0; fo < Fo; ++fo) {
        double s = b.v[static_cast<std::size_t>(fo)];
        const double* wr = w.v.data() + static_cast<std::int64_t>(fo) * Fi;
        const double* xr = x.v.data() + static_cast<std::int64_t>(n) * Fi;
        for (int fi = 0; fi < Fi; ++fi) s += wr[fi] * xr[fi];
        out.v[static_cast<std::size_t>(n) * Fo + fo] = s;
      }
    }
    const int idx = xv.id, idw = wv.id, idb = bv.id;
    return push(std::move(out),
                requires_grad(xv) || requires_grad(wv) || requires_grad(bv),
                [idx, idw, idb, N, Fi, Fo](Tape& t, const Tensor& dy) {
                  const Tensor& x = t.nodes_[static_cast<std::size_t>(idx)].value;
                  const Tensor& w = t.nodes_[static_cast<std::size_t>(idw)].value;
                  if (t.wants(idb)) {
                    Tensor& db = t.grad_buf(idb);
                    for (int n = 0; n < N; ++n) {
                      for (int fo = 0; fo < Fo; ++fo) {
                        db.v[static_cast<std::size_t>(fo)] += dy.v[static_cast<std::size_t>(n) * Fo + fo];
                      }
                    }
                  }
                  if (t.wants(idw)) {
                    Tensor& dw = t.grad_buf(idw);
                    for (int n = 0; n < N; ++n) {
                      const double* xr = x.v.data() + static_cast<std::int64_t>(n) * Fi;
                      for (int fo = 0; fo < Fo; ++fo) {
                        const double d = dy.v[static_cast<std::size_t>(n) * Fo + fo];
                        double* dwr = dw.v.data() + static_cast<std::int64_t>(fo) * Fi;
                        for (int fi = 0; fi < Fi; ++fi) dwr[fi] += d * xr[fi];
                      }
                    }
                  }
                  if (t.wants(idx)) {
                    Tensor& dx = t.grad_buf(idx);
                    for (int n = 0; n < N; ++n) {
                      double* dxr = dx.v.data() + static_cast<std::int64_t>(n) * Fi;
                      for (int fo = 0; fo < Fo; ++fo) {
                        const double d = dy.v[static_cast<std::size_t>(n) * Fo + fo];
                        const double* wr = w.v.data() + static_cast<std::int64_t>(fo) * Fi;
                        for (int fi = 0; fi < Fi; ++fi) dxr[fi] += d * wr[fi];
                      }
                    }
                  }
                });
  }

  Var reshape(Var xv, std::vector<int> new_shape) {
    const Tensor& x = value(xv);
    if (Tensor::count(new_shape) != x.numel()) throw std::invalid_argument("reshape: numel");
    Tensor out(std::move(new_shape), x.v);
    const int idx = xv.id;
    return push(std::move(out), requires_grad(xv), [idx](Tape& t, const Tensor& dy) {
      if (!t.wants(idx)) return;
      Tensor& dx = t.grad_buf(idx);
      for (std::size_t i = 0; i < dy.v.size(); ++i) dx.v[i] += dy.v[i];
    });
  }

  // [N, A, B] -> [N, B, A]
  Var transpose12(Var xv) {
    const Tensor& x = value(xv);
    if (x.ndim() != 3) throw std::invalid_argument("transpose12: rank must be 3");
    const int N = x.dim(0), A = x.dim(1), B = x.dim(2);
    Tensor out({N, B, A});
    for (int n = 0; n < N; ++n) {
      for (int a = 0; a < A; ++a) {
        for (int b = 0; b < B; ++b) {
          out.v[(static_cast<std::size_t>(n) * B + b) * A + a] =
              x.v[(static_cast<std::size_t>(n) * A + a) * B + b];
        }
      }
    }
    const int idx = xv.id;
    return push(std::move(out), requires_grad(xv), [idx, N, A, B](Tape& t, const Tensor& dy) {
      if (!t.wants(idx)) return;
      Tensor& dx = t.grad_buf(idx);
      for (int n = 0; n < N; ++n) {
        for (int a = 0; a < A; ++a) {
          for (int b = 0; b < B; ++b) {
            dx.v[(static_cast<std::size_t>(n) * A + a) * B + b] +=
                dy.v[(static_cast<std::size_t>(n) * B + b) * A + a];
          }
        }
      }
    });
  }

  // [N, A, B] x [N, B, C] -> [N, A, C]
  Var bmm(Var av, Var bv) {
    const Tensor& a = value(av);
    const Tensor& b = value(bv);
    if (a.ndim() != 3 || b.ndim() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1)) {
      throw std::invalid_argument("bmm: shape mismatch");
    }
    const int N = a.dim(0), A = a.dim(1), B = a.dim(2), C = b.dim(2);
    Tensor out({N, A, C});
    for (int n = 0; n < N; ++n) {
      for (int i = 0; i < A; ++i) {
        for (int k = 0; k < B; ++k) {
          const double aa = a.v[(static_cast<std::size_t>(n) * A + i) * B + k];
          const double* br = b.v.data() + (static_cast<std::int64_t>(n) * B + k) * C;
          double* yr = out.v.data() + (static_cast<std::int64_t>(n) * A + i) * C;
          for (int j = 0; j < C; ++j) yr[j] += aa * br[j];
        }
      }
    }
    const int ida = av.id, idb = bv.id;
    return push(std::move(out), requires_grad(av) || requires_grad(bv),
                [ida, idb, N, A, B, C](Tape& t, const Tensor& dy) {
                  const Tensor& a = t.nodes_[static_cast<std::size_t>(ida)].value;
                  const Tensor& b = t.nodes_[static_cast<std::size_t>(idb)].value;
                  if (t.wants(ida)) {
                    Tensor& da = t.grad_buf(ida);
                    for (int n = 0; n < N; ++n) {
                      for (int i = 0; i < A; ++i) {
                        for (int k = 0; k < B; ++k) {
                          const double* br = b.v.data() + (static_cast<std::int64_t>(n) * B + k) * C;
                          const double* gr = dy.v.data() + (static_cast<std::int64_t>(n) * A + i) * C;
                          double s = 0.0;
                          for (int j = 0; j < C; ++j) s += gr[j] * br[j];
                          da.v[(static_cast<std::size_t>(n) * A + i) * B + k] += s;
                        }
                      }
                    }
                  }
                  if (t.wants(idb)) {
                    Tensor& db = t.grad_buf(idb);
                    for (int n = 0; n < N; ++n) {
                      for (int i = 0; i < A; ++i) {
                        for (int k = 0; k < B; ++k) {
                          const double aa = a.v[(static_cast<std::size_t>(n) * A + i) * B + k];
                          const double* gr = dy.v.data() + (static_cast<std::int64_t>(n) * A + i) * C;
                          double* dbr = db.v.data() + (static_cast<std::int64_t>(n) * B + k) * C;
                          for (int j = 0; j < C; ++j) dbr[j] += aa * gr[j];
                        }
                      }
                    }
                  }
                });
  }

  // [N, A, B] x [B, C] -> [N, A, C]; the weight is shared over the batch.
  Var matmul_w(Var xv, Var wv) {
    const Tensor& x = value(xv);
    const Tensor& w = value(wv);
    if (x.ndim() != 3 || w.ndim() != 2 || x.dim(2) != w.dim(0)) {
      throw std::invalid_argument("matmul_w: shape mismatch");
    }
    const int N = x.dim(0), A = x.dim(1), B = x.dim(2), C = w.dim(1);
    Tensor out({N, A, C});
    for (int n = 0; n < N; ++n) {
      for (int i = 0; i < A; ++i) {
        const double* xr = x.v.data() + (static_cast<std::int64_t>(n) * A + i) * B;
        double* yr = out.v.data() + (static_cast<std::int64_t>(n) * A + i) * C;
        for (int k = 0; k < B; ++k) {
          const double xx = xr[k];
          const double* wr = w.v.data() + static_cast<std::int64_t>(k) * C;
          for (int j = 0; j < C; ++j) yr[j] += xx * wr[j];
        }
      }
    }
    const int idx = xv.id, idw = wv.id;
    return push(std::move(out), requires_grad(xv) || requires_grad(wv),
                [idx, idw, N, A, B, C](Tape& t, const Tensor& dy) {
                  const Tensor& x = t.nodes_[static_cast<std::size_t>(idx)].value;
                  const Tensor& w = t.nodes_[static_cast<std::size_t>(idw)].value;
                  if (t.wants(idx)) {
                    Tensor& dx = t.grad_buf(idx);
                    for (int n = 0; n < N; ++n) {
                      for (int i = 0; i < A; ++i) {
                        const double* gr = dy.v.data() + (static_cast<std::int64_t>(n) * A + i) * C;
                        double* dxr = dx.v.data() + (static_cast<std::int64_t>(n) * A + i) * B;
                        for (int k = 0; k < B; ++k) {
                          const double* wr = w.v.data() + static_cast<std::int64_t>(k) * C;
                          double s = 0.0;
                          for (int j = 0; j < C; ++j) s += gr[j] * wr[j];
                          dxr[k] += s;
                        }
                      }
                    }
                  }
                  if (t.wants(idw)) {
                    Tensor& dw = t.grad_buf(idw);
                    for (int n = 0; n < N; ++n) {
                      for (int i = 0; i < A; ++i) {
                        const double* xr = x.v.data() + (static_cast<std::int64_t>(n) * A + i) * B;
                        const double* gr = dy.v.data() + (static_cast<std::int64_t>(n) * A + i) * C;
                        for (int k = 0; k < B; ++k) {
                          double* dwr = dw.v.data() + static_cast<std::int64_t>(k) * C;
                          const double xx = xr[k];
                          for (int j = 0; j < C; ++j) dwr[j] += xx * gr[j];
                        }
                      }
                    }
                  }
                });
  }

  // [A, B] x [N, B, C] -> [N, A, C]
  Var matmul_w_left(Var wv, Var xv) {
    Var xt = transpose12(xv);                       // [N, C, B]
    Var wt = transpose_w(wv);                       // [B, A]
    Var yt = matmul_w(xt, wt);                      // [N, C, A]
    return transpose12(yt);                         // [N, A, C]
  }

  // Softmax over the last dimension of [N, A, B].
  Var softmax_lastdim(Var xv) {
    const Tensor& x = value(xv);
    if (x.ndim() != 3) throw std::invalid_argument("softmax_lastdim: rank must be 3");
    const std::int64_t R = static_cast<std::int64_t>(x.dim(0)) * x.dim(1);
    const int D = x.dim(2);
    Tensor out(x.shape);
    for (std::int64_t r = 0; r < R; ++r) {
      const double* row = x.v.data() + r * D;
      double* yr = out.v.data() + r * D;
      double m = row[0];
      for (int j = 1; j < D; ++j) m = std::max(m, row[j]);
      double s = 0.0;
      for (int j = 0; j < D; ++j) {
        yr[j] = std::exp(row[j] - m);
        s += yr[j];
      }
      for (int j = 0; j < D; ++j) yr[j] /= s;
    }
    const int idx = xv.id;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(out), requires_grad(xv), [idx, self, R, D](Tape& t, const Tensor& dy) {
      if (!t.wants(idx)) return;
      const Tensor& y = t.nodes_[static_cast<std::size_t>(self)].value;
      Tensor& dx = t.grad_buf(idx);
      for (std::int64_t r = 0; r < R; ++r) {
        const double* yr = y.v.data() + r * D;
        const double* gr = dy.v.data() + r * D;
        double dot = 0.0;
        for (int j = 0; j < D; ++j) dot += yr[j] * gr[j];
        double* dxr = dx.v.data() + r * D;
        for (int j = 0; j < D; ++j) dxr[j] += yr[j] * (gr[j] - dot);
      }
    });
  }

  // Mean cross-entropy over the batch plus per-sample label log-probability.
  LossResult softmax_cross_entropy(Var logits, const std::vector<int>& labels) {
    const Tensor& x = value(logits);
    if (x.ndim() != 2) throw std::invalid_argument("softmax_cross_entropy: rank must be 2");
    const int N = x.dim(0), K = x.dim(1);
    if (static_cast<int>(labels.size()) != N) {
      throw std::invalid_argument("softmax_cross_entropy: label count");
    }
    auto probs = std::make_shared<std::vector<double>>(x.v.size());
    std::vector<double> loglik(static_cast<std::size_t>(N));
    double loss = 0.0;
    for (int n = 0; n < N; ++n) {
      const int lab = labels[static_cast<std::size_t>(n)];
      if (lab < 0 || lab >= K) throw std::invalid_argument("softmax_cross_entropy: label range");
      const double* row = x.v.data() + static_cast<std::int64_t>(n) * K;
      double m = row[0];
      for (int j = 1; j < K; ++j) m = std::max(m, row[j]);
      double s = 0.0;
      for (int j = 0; j < K; ++j) s += std::exp(row[j] - m);
      const double lse = m + std::log(s);
      for (int j = 0; j < K; ++j) {
        (*probs)[static_cast<std::size_t>(n) * K + j] = std::exp(row[j] - lse);
      }
      loglik[static_cast<std::size_t>(n)] = row[lab] - lse;
      loss -= loglik[static_cast<std::size_t>(n)];
    }
    loss /= static_cast<double>(N);

    const int idx = logits.id;
    auto labs = std::make_shared<std::vector<int>>(labels);
    Tensor lt({1});
    lt.v[0] = loss;
    Var lv = push(std::move(lt), requires_grad(logits),
                  [idx, probs, labs, N, K](Tape& t, const Tensor& dy) {
                    if (!t.wants(idx)) return;
                    Tensor& dx = t.grad_buf(idx);
                    const double scale = dy.v[0] / static_cast<double>(N);
                    for (int n = 0; n < N; ++n) {
                      for (int j = 0; j < K; ++j) {
                        const std::size_t i = static_cast<std::size_t>(n) * K + j;
                        const double onehot = j == (*labs)[static_cast<std::size_t>(n)] ? 1.0 : 0.0;
                        dx.v[i] += scale * ((*probs)[i] - onehot);
                      }
                    }
                  });
    return {lv, std::move(loglik)};
  }

  void backward(Var loss) {
    Node& ln = nodes_[check(loss)];
    if (ln.value.numel() != 1) throw std::invalid_argument("backward: loss must be scalar");
    ensure_grad(ln);
    ln.grad.v[0] = 1.0;
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.back && n.has_grad) n.back(*this, n.grad);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs = false;
    bool has_grad = false;
    std::function<void(Tape&, const Tensor&)> back;
  };

  std::vector<Node> nodes_;

  std::size_t check(Var x) const {
    if (x.id < 0 || static_cast<std::size_t>(x.id) >= nodes_.size()) {
      throw std::invalid_argument("tape: bad var");
    }
    return static_cast<std::size_t>(x.id);
  }

  Var push(Tensor value, bool needs, std::function<void(Tape&, const Tensor&)> back) {
    Node n;
    n.value = std::move(value);
    n.needs = needs;
    n.back = needs ? std::move(back) : nullptr;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  void ensure_grad(Node& n) {
    if (!n.has_grad) {
      n.grad = Tensor(n.value.shape);
      n.has_grad = true;
    }
  }

  // A node wants grad accumulation if it requires grad; allocate on demand.
  bool wants(int id) {
    return nodes_[static_cast<std::size_t>(id)].needs;
  }

  void accumulate(int id, const Tensor& dy) {
    if (!wants(id)) return;
    Tensor& g = grad_buf(id);
    for (std::size_t i = 0; i < dy.v.size(); ++i) g.v[i] += dy.v[i];
  }

  Tensor& grad_buf(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    ensure_grad(n);
    return n.grad;
  }

  // [A, B] -> [B, A] as a tape op.
  Var transpose_w(Var wv) {
    const Tensor& w = value(wv);
    if (w.ndim() != 2) throw std::invalid_argument("transpose_w: rank must be 2");
    const int A = w.dim(0), B = w.dim(1);
    Tensor out({B, A});
    for (int a = 0; a < A; ++a) {
      for (int b = 0; b < B; ++b) {
        out.v[static_cast<std::size_t>(b) * A + a] = w.v[static_cast<std::size_t>(a) * B + b];
      }
    }
    const int idw = wv.id;
    return push(std::move(out), requires_grad(wv), [idw, A, B](Tape& t, const Tensor& dy) {
      if (!t.wants(idw)) return;
      Tensor& dw = t.grad_buf(idw);
      for (int a = 0; a < A; ++a) {
        for (int b = 0; b < B; ++b) {
          dw.v[static_cast<std::size_t>(a) * B + b] += dy.v[static_cast<std::size_t>(b) * A + a];
        }
      }
    });
  }

  static int pad_begin(int in, int out, int stride, int k) {
    const int total = std::max((out - 1) * stride + k - in, 0);
    return total / 2;
  }

  // Shared loop shell. With dy == nullptr computes the forward into `out`;
  // otherwise accumulates dx/dw (either may be null).
  static void conv3d_general(const Tensor& x, const Tensor& w, Tensor& out, int N, int Ci, int T,
                             int H, int W, int Co, int Cig, int kt, int kh, int kw, int stride,
                             int groups, int pt, int ph, int pw, const Tensor* dy, Tensor* dx,
                             Tensor* dw) {
    const int Cog = Co / groups;
    const int Ho = (H + stride - 1) / stride;
    const int Wo = (W + stride - 1) / stride;
    const std::int64_t xs_c = static_cast<std::int64_t>(T) * H * W;
    const std::int64_t ys_c = static_cast<std::int64_t>(T) * Ho * Wo;
    const std::int64_t ws_co = static_cast<std::int64_t>(Cig) * kt * kh * kw;
    for (int n = 0; n < N; ++n) {
      for (int g = 0; g < groups; ++g) {
        for (int cog = 0; cog < Cog; ++cog) {
          const int co = g * Cog + cog;
          const double* wbase = w.v.data() + co * ws_co;
          double* dwbase = dw ? dw->v.data() + co * ws_co : nullptr;
          for (int to = 0; to < T; ++to) {
            for (int ho = 0; ho < Ho; ++ho) {
              for (int wo = 0; wo < Wo; ++wo) {
                const std::int64_t yidx =
                    (static_cast<std::int64_t>(n) * Co + co) * ys_c +
                    (static_cast<std::int64_t>(to) * Ho + ho) * Wo + wo;
                double acc = 0.0;
                const double dyv = dy ? dy->v[static_cast<std::size_t>(yidx)] : 0.0;
                for (int cig = 0; cig < Cig; ++cig) {
                  const int ci = g * Cig + cig;
                  const double* xbase = x.v.data() + (static_cast<std::int64_t>(n) * Ci + ci) * xs_c;
                  double* dxbase =
                      dx ? dx->v.data() + (static_cast<std::int64_t>(n) * Ci + ci) * xs_c : nullptr;
                  for (int ikt = 0; ikt < kt; ++ikt) {
                    const int ti = to + ikt - pt;
                    if (ti < 0 || ti >= T) continue;
                    for (int ikh = 0; ikh < kh; ++ikh) {
                      const int hi = ho * stride + ikh - ph;
                      if (hi < 0 || hi >= H) continue;
                      for (int ikw = 0; ikw < kw; ++ikw) {
                        const int wi = wo * stride + ikw - pw;
                        if (wi < 0 || wi >= W) continue;
                        const std::int64_t xi = (static_cast<std::int64_t>(ti) * H + hi) * W + wi;
                        const std::int64_t wi2 =
                            ((static_cast<std::int64_t>(cig) * kt + ikt) * kh + ikh) * kw + ikw;
                        if (!dy) {
                          acc += xbase[xi] * wbase[wi2];
                        } else {
                          if (dxbase) dxbase[xi] += wbase[wi2] * dyv;
                          if (dwbase) dwbase[wi2] += xbase[xi] * dyv;
                        }
                      }
                    }
                  }
                }
                if (!dy) out.v[static_cast<std::size_t>(yidx)] = acc;
              }
            }
          }
        }
      }
    }
  }
};

// Per-coordinate update kernels; the dense wrappers loop every coordinate,
// the masked supernet path calls them only on touched indices so untouched
// weights stay bit-identical.
struct SgdConfig {
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
};

inline void sgd_update_at(double& w, double g, double& vel, const SgdConfig& cfg) {
  const double eff = g + cfg.weight_decay * w;
  vel = cfg.momentum * vel + eff;
  w -= cfg.lr * vel;
}

inline void sgd_update(Tensor& w, const Tensor& g, Tensor& vel, const SgdConfig& cfg) {
  if (!same_shape(w, g) || !same_shape(w, vel)) throw std::invalid_argument("sgd: shape");
  for (std::size_t i = 0; i < w.v.size(); ++i) sgd_update_at(w.v[i], g.v[i], vel.v[i], cfg);
}

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// t is the 1-based step count after this update.
inline void adam_update(Tensor& w, const Tensor& g, Tensor& m, Tensor& v, int t,
                        const AdamConfig& cfg) {
  if (!same_shape(w, g) || !same_shape(w, m) || !same_shape(w, v)) {
    throw std::invalid_argument("adam: shape");
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < w.v.size(); ++i) {
    m.v[i] = cfg.beta1 * m.v[i] + (1.0 - cfg.beta1) * g.v[i];
    v.v[i] = cfg.beta2 * v.v[i] + (1.0 - cfg.beta2) * g.v[i] * g.v[i];
    w.v[i] -= cfg.lr * (m.v[i] / bc1) / (std::sqrt(v.v[i] / bc2) + cfg.eps);
  }
}

// Central-difference gradient check. f maps the inputs to a scalar loss;
// analytic[i] must hold d loss / d inputs[i]. Checks up to max_coords
// randomly chosen coordinates per tensor and returns the largest relative
// error |fd - an| / max(|fd|, |an|, 1e-6).
inline double finite_diff_check(const std::function<double(const std::vector<Tensor>&)>& f,
                                std::vector<Tensor> inputs,
                                const std::vector<Tensor>& analytic, Rng& rng,
                                double eps = 1e-4, int max_coords = 24) {
  if (inputs.size() != analytic.size()) throw std::invalid_argument("fd: tensor count");
  double worst = 0.0;
  for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
    const std::int64_t n = inputs[ti].numel();
    std::vector<std::int64_t> coords;
    if (n <= max_coords) {
      for (std::int64_t i = 0; i < n; ++i) coords.push_back(i);
    } else {
      for (int i = 0; i < max_coords; ++i) coords.push_back(rng.uniform_int(n));
    }
    for (std::int64_t c : coords) {
      const double orig = inputs[ti].v[static_cast<std::size_t>(c)];
      inputs[ti].v[static_cast<std::size_t>(c)] = orig + eps;
      const double fp = f(inputs);
      inputs[ti].v[static_cast<std::size_t>(c)] = orig - eps;
      const double fm = f(inputs);
      inputs[ti].v[static_cast<std::size_t>(c)] = orig;
      const double fd = (fp - fm) / (2.0 * eps);
      const double an = analytic[ti].v[static_cast<std::size_t>(c)];
      const double rel = std::fabs(fd - an) / std::max({std::fabs(fd), std::fabs(an), 1e-6});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace nasforge
