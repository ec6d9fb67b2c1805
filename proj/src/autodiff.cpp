#include "shapetask/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>

namespace shapetask::ad {

namespace {

void require_3d(const Tensor& t, const char* op) {
  if (t.rank() != 3) throw InvalidShapeError(std::string(op) + ": expected C×H×W, got " + t.shape_string());
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

int Tape::push(Tensor value, std::function<void(Tape&, int)> backprop) {
  nodes_.push_back(Node{std::move(value), Tensor{}, std::move(backprop), nullptr});
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::require_same_shape(Var a, Var b, const char* op) const {
  if (!cnode(a).value.same_shape(cnode(b).value))
    throw InvalidShapeError(std::string(op) + ": shape mismatch " + cnode(a).value.shape_string() +
                            " vs " + cnode(b).value.shape_string());
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericalError("tape leaf holds non-finite values");
  return Var{push(std::move(value), nullptr)};
}

Var Tape::param(Parameter& p) {
  if (!p.value.all_finite())
    throw NumericalError("parameter '" + p.name + "' holds non-finite values");
  Var v{push(p.value, nullptr)};
  nodes_[v.id].bound = &p;
  return v;
}

Var Tape::conv2d(Var input, Var weights, Var bias) {
  const Tensor& x = cnode(input).value;
  const Tensor& w = cnode(weights).value;
  const Tensor& b = cnode(bias).value;
  require_3d(x, "conv2d");
  if (w.rank() != 4 || w.extent(2) != w.extent(3) || (w.extent(2) != 1 && w.extent(2) != 3))
    throw InvalidShapeError("conv2d: weights must be C_out×C_in×k×k with k in {1,3}, got " +
                            w.shape_string());
  if (w.extent(1) != x.extent(0))
    throw InvalidShapeError("conv2d: input channels " + std::to_string(x.extent(0)) +
                            " do not match weights " + w.shape_string());
  if (b.rank() != 1 || b.extent(0) != w.extent(0))
    throw InvalidShapeError("conv2d: bias must be C_out, got " + b.shape_string());

  const int cin = x.extent(0), h = x.extent(1), wd = x.extent(2);
  const int cout = w.extent(0), k = w.extent(2), pad = (k - 1) / 2;

  Tensor out({cout, h, wd});
  for (int co = 0; co < cout; ++co) {
    double* op = &out.at(co, 0, 0);
    const double bv = b[co];
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(h) * wd; ++i) op[i] = bv;
    for (int ci = 0; ci < cin; ++ci) {
      for (int ky = 0; ky < k; ++ky) {
        const int oy = ky - pad;
        const int y0 = std::max(0, -oy), y1 = std::min(h, h - oy);
        for (int kx = 0; kx < k; ++kx) {
          const int ox = kx - pad;
          const int x0 = std::max(0, -ox), x1 = std::min(wd, wd - ox);
          const double wv = w[((static_cast<std::int64_t>(co) * cin + ci) * k + ky) * k + kx];
          for (int y = y0; y < y1; ++y) {
            double* orow = &out.at(co, y, 0);
            const double* irow = &x.at(ci, y + oy, ox);
            for (int xx = x0; xx < x1; ++xx) orow[xx] += wv * irow[xx];
          }
        }
      }
    }
  }

  auto back = [input, weights, bias, cin, cout, h, wd, k, pad](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& x = t.nodes_[input.id].value;
    const Tensor& w = t.nodes_[weights.id].value;
    Tensor& gx = t.nodes_[input.id].grad;
    Tensor& gw = t.nodes_[weights.id].grad;
    Tensor& gb = t.nodes_[bias.id].grad;

    for (int co = 0; co < cout; ++co) {
      const double* gp = &g.at(co, 0, 0);
      double acc = 0.0;
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(h) * wd; ++i) acc += gp[i];
      gb[co] += acc;
      for (int ci = 0; ci < cin; ++ci) {
        for (int ky = 0; ky < k; ++ky) {
          const int oy = ky - pad;
          const int y0 = std::max(0, -oy), y1 = std::min(h, h - oy);
          for (int kx = 0; kx < k; ++kx) {
            const int ox = kx - pad;
            const int x0 = std::max(0, -ox), x1 = std::min(wd, wd - ox);
            const std::int64_t widx = ((static_cast<std::int64_t>(co) * cin + ci) * k + ky) * k + kx;
            const double wv = w[widx];
            double wacc = 0.0;
            for (int y = y0; y < y1; ++y) {
              const double* grow = &g.at(co, y, 0);
              const double* irow = &x.at(ci, y + oy, ox);
              double* gxrow = &gx.at(ci, y + oy, ox);
              for (int xx = x0; xx < x1; ++xx) {
                gxrow[xx] += wv * grow[xx];
                wacc += irow[xx] * grow[xx];
              }
            }
            gw[widx] += wacc;
          }
        }
      }
    }
  };
  return Var{push(std::move(out), back)};
}

Var Tape::max_pool2(Var input) {
  const Tensor& x = cnode(input).value;
  require_3d(x, "max_pool2");
  const int c = x.extent(0), h = x.extent(1), w = x.extent(2);
  if (h % 2 != 0 || w % 2 != 0)
    throw InvalidShapeError("max_pool2: spatial extents must be even, got " + x.shape_string());

  const int oh = h / 2, ow = w / 2;
  Tensor out({c, oh, ow});
  std::vector<std::int64_t> argmax(static_cast<size_t>(c) * oh * ow);
  std::int64_t oi = 0;
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < oh; ++y) {
      for (int xx = 0; xx < ow; ++xx, ++oi) {
        double best = -std::numeric_limits<double>::infinity();
        std::int64_t best_idx = -1;
        for (int ky = 0; ky < 2; ++ky) {
          for (int kx = 0; kx < 2; ++kx) {
            const std::int64_t idx =
                (static_cast<std::int64_t>(ch) * h + 2 * y + ky) * w + 2 * xx + kx;
            if (x[idx] > best) {
              best = x[idx];
              best_idx = idx;
            }
          }
        }
        out[oi] = best;
        argmax[oi] = best_idx;
      }
    }
  }

  auto back = [input, argmax = std::move(argmax)](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& gx = t.nodes_[input.id].grad;
    for (std::int64_t i = 0; i < g.numel(); ++i) gx[argmax[i]] += g[i];
  };
  return Var{push(std::move(out), back)};
}

Var Tape::up_conv2(Var input, Var weights) {
  const Tensor& x = cnode(input).value;
  const Tensor& w = cnode(weights).value;
  require_3d(x, "up_conv2");
  if (w.rank() != 4 || w.extent(2) != 2 || w.extent(3) != 2)
    throw InvalidShapeError("up_conv2: weights must be C_in×C_out×2×2, got " + w.shape_string());
  if (w.extent(0) != x.extent(0))
    throw InvalidShapeError("up_conv2: input channels " + std::to_string(x.extent(0)) +
                            " do not match weights " + w.shape_string());

  const int cin = x.extent(0), h = x.extent(1), wd = x.extent(2);
  const int cout = w.extent(1);
  Tensor out({cout, 2 * h, 2 * wd});
  for (int ci = 0; ci < cin; ++ci) {
    for (int co = 0; co < cout; ++co) {
      for (int ky = 0; ky < 2; ++ky) {
        for (int kx = 0; kx < 2; ++kx) {
          const double wv = w[((static_cast<std::int64_t>(ci) * cout + co) * 2 + ky) * 2 + kx];
          for (int y = 0; y < h; ++y) {
            const double* irow = &x.at(ci, y, 0);
            double* orow = &out.at(co, 2 * y + ky, kx);
            for (int xx = 0; xx < wd; ++xx) orow[2 * xx] += wv * irow[xx];
          }
        }
      }
    }
  }

  auto back = [input, weights, cin, cout, h, wd](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& x = t.nodes_[input.id].value;
    const Tensor& w = t.nodes_[weights.id].value;
    Tensor& gx = t.nodes_[input.id].grad;
    Tensor& gw = t.nodes_[weights.id].grad;
    for (int ci = 0; ci < cin; ++ci) {
      for (int co = 0; co < cout; ++co) {
        for (int ky = 0; ky < 2; ++ky) {
          for (int kx = 0; kx < 2; ++kx) {
            const std::int64_t widx = ((static_cast<std::int64_t>(ci) * cout + co) * 2 + ky) * 2 + kx;
            const double wv = w[widx];
            double wacc = 0.0;
            for (int y = 0; y < h; ++y) {
              const double* irow = &x.at(ci, y, 0);
              double* gxrow = &gx.at(ci, y, 0);
              const double* grow = &g.at(co, 2 * y + ky, kx);
              for (int xx = 0; xx < wd; ++xx) {
                const double gv = grow[2 * xx];
                gxrow[xx] += wv * gv;
                wacc += irow[xx] * gv;
              }
            }
            gw[widx] += wacc;
          }
        }
      }
    }
  };
  return Var{push(std::move(out), back)};
}

Var Tape::concat_channels(Var a, Var b) {
  const Tensor& ta = cnode(a).value;
  const Tensor& tb = cnode(b).value;
  require_3d(ta, "concat_channels");
  require_3d(tb, "concat_channels");
  if (ta.extent(1) != tb.extent(1) || ta.extent(2) != tb.extent(2))
    throw InvalidShapeError("concat_channels: spatial mismatch " + ta.shape_string() + " vs " +
                            tb.shape_string());

  Tensor out({ta.extent(0) + tb.extent(0), ta.extent(1), ta.extent(2)});
  std::copy(ta.values().begin(), ta.values().end(), out.values().begin());
  std::copy(tb.values().begin(), tb.values().end(), out.values().begin() + ta.numel());

  const std::int64_t na = ta.numel();
  auto back = [a, b, na](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& ga = t.nodes_[a.id].grad;
    Tensor& gb = t.nodes_[b.id].grad;
    for (std::int64_t i = 0; i < na; ++i) ga[i] += g[i];
    for (std::int64_t i = na; i < g.numel(); ++i) gb[i - na] += g[i];
  };
  return Var{push(std::move(out), back)};
}

Var Tape::relu(Var x) {
  const Tensor& in = cnode(x).value;
  Tensor out(in.shape());
  for (std::int64_t i = 0; i < in.numel(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
  auto back = [x](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& in = t.nodes_[x.id].value;
    Tensor& gx = t.nodes_[x.id].grad;
    for (std::int64_t i = 0; i < g.numel(); ++i)
      if (in[i] > 0.0) gx[i] += g[i];
  };
  return Var{push(std::move(out), back)};
}

Var Tape::sigmoid(Var x) {
  const Tensor& in = cnode(x).value;
  Tensor out(in.shape());
  for (std::int64_t i = 0; i < in.numel(); ++i) out[i] = stable_sigmoid(in[i]);
  auto back = [x](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& s = t.nodes_[self].value;
    Tensor& gx = t.nodes_[x.id].grad;
    for (std::int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * s[i] * (1.0 - s[i]);
  };
  return Var{push(std::move(out), back)};
}

Var Tape::softmax_channel(Var x) {
  const Tensor& in = cnode(x).value;
  require_3d(in, "softmax_channel");
  const int l = in.extent(0), h = in.extent(1), w = in.extent(2);
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;

  Tensor out(in.shape());
  for (std::int64_t p = 0; p < plane; ++p) {
    double m = in[p];
    for (int c = 1; c < l; ++c) m = std::max(m, in[c * plane + p]);
    double total = 0.0;
    for (int c = 0; c < l; ++c) {
      const double e = std::exp(in[c * plane + p] - m);
      out[c * plane + p] = e;
      total += e;
    }
    for (int c = 0; c < l; ++c) out[c * plane + p] /= total;
  }

  auto back = [x, l, plane](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& s = t.nodes_[self].value;
    Tensor& gx = t.nodes_[x.id].grad;
    for (std::int64_t p = 0; p < plane; ++p) {
      double dot = 0.0;
      for (int c = 0; c < l; ++c) dot += g[c * plane + p] * s[c * plane + p];
      for (int c = 0; c < l; ++c)
        gx[c * plane + p] += s[c * plane + p] * (g[c * plane + p] - dot);
    }
  };
  return Var{push(std::move(out), back)};
}

Var Tape::add(Var a, Var b) {
  require_same_shape(a, b, "add");
  const Tensor& ta = cnode(a).value;
  const Tensor& tb = cnode(b).value;
  Tensor out(ta.shape());
  for (std::int64_t i = 0; i < ta.numel(); ++i) out[i] = ta[i] + tb[i];
  auto back = [a, b](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& ga = t.nodes_[a.id].grad;
    Tensor& gb = t.nodes_[b.id].grad;
    for (std::int64_t i = 0; i < g.numel(); ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  };
  return Var{push(std::move(out), back)};
}

Var Tape::sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  const Tensor& ta = cnode(a).value;
  const Tensor& tb = cnode(b).value;
  Tensor out(ta.shape());
  for (std::int64_t i = 0; i < ta.numel(); ++i) out[i] = ta[i] - tb[i];
  auto back = [a, b](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& ga = t.nodes_[a.id].grad;
    Tensor& gb = t.nodes_[b.id].grad;
    for (std::int64_t i = 0; i < g.numel(); ++i) {
      ga[i] += g[i];
      gb[i] -= g[i];
    }
  };
  return Var{push(std::move(out), back)};
}

Var Tape::mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  const Tensor& ta = cnode(a).value;
  const Tensor& tb = cnode(b).value;
  Tensor out(ta.shape());
  for (std::int64_t i = 0; i < ta.numel(); ++i) out[i] = ta[i] * tb[i];
  auto back = [a, b](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& ta = t.nodes_[a.id].value;
    const Tensor& tb = t.nodes_[b.id].value;
    Tensor& ga = t.nodes_[a.id].grad;
    Tensor& gb = t.nodes_[b.id].grad;
    for (std::int64_t i = 0; i < g.numel(); ++i) {
      ga[i] += g[i] * tb[i];
      gb[i] += g[i] * ta[i];
    }
  };
  return Var{push(std::move(out), back)};
}

Var Tape::div(Var a, Var b) {
  require_same_shape(a, b, "div");
  const Tensor& ta = cnode(a).value;
  const Tensor& tb = cnode(b).value;
  Tensor out(ta.shape());
  for (std::int64_t i = 0; i < ta.numel(); ++i) out[i] = ta[i] / tb[i];
  auto back = [a, b](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& ta = t.nodes_[a.id].value;
    const Tensor& tb = t.nodes_[b.id].value;
    Tensor& ga = t.nodes_[a.id].grad;
    Tensor& gb = t.nodes_[b.id].grad;
    for (std::int64_t i = 0; i < g.numel(); ++i) {
      ga[i] += g[i] / tb[i];
      gb[i] -= g[i] * ta[i] / (tb[i] * tb[i]);
    }
  };
  return Var{push(std::move(out), back)};
}

Var Tape::scale(Var x, double factor) {
  const Tensor& in = cnode(x).value;
  Tensor out(in.shape());
  for (std::int64_t i = 0; i < in.numel(); ++i) out[i] = factor * in[i];
  auto back = [x, factor](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& gx = t.nodes_[x.id].grad;
    for (std::int64_t i = 0; i < g.numel(); ++i) gx[i] += factor * g[i];
  };
  return Var{push(std::move(out), back)};
}

Var Tape::add_scalar(Var x, double addend) {
  const Tensor& in = cnode(x).value;
  Tensor out(in.shape());
  for (std::int64_t i = 0; i < in.numel(); ++i) out[i] = in[i] + addend;
  auto back = [x](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& gx = t.nodes_[x.id].grad;
    for (std::int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
  };
  return Var{push(std::move(out), back)};
}

Var Tape::log_clamped(Var x, double floor) {
  if (!(floor > 0.0)) throw InvalidArgumentError("log_clamped: floor must be positive");
  const Tensor& in = cnode(x).value;
  Tensor out(in.shape());
  for (std::int64_t i = 0; i < in.numel(); ++i) out[i] = std::log(std::max(in[i], floor));
  auto back = [x, floor](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& in = t.nodes_[x.id].value;
    Tensor& gx = t.nodes_[x.id].grad;
    for (std::int64_t i = 0; i < g.numel(); ++i)
      if (in[i] > floor) gx[i] += g[i] / in[i];
  };
  return Var{push(std::move(out), back)};
}

Var Tape::sum(Var x) {
  const Tensor& in = cnode(x).value;
  double acc = 0.0;
  for (std::int64_t i = 0; i < in.numel(); ++i) acc += in[i];
  auto back = [x](Tape& t, int self) {
    const double g = t.nodes_[self].grad[0];
    Tensor& gx = t.nodes_[x.id].grad;
    for (std::int64_t i = 0; i < gx.numel(); ++i) gx[i] += g;
  };
  return Var{push(Tensor::scalar(acc), back)};
}

Var Tape::mean(Var x) {
  const Tensor& in = cnode(x).value;
  if (in.numel() == 0) throw InvalidArgumentError("mean: empty tensor");
  double acc = 0.0;
  for (std::int64_t i = 0; i < in.numel(); ++i) acc += in[i];
  const double inv_n = 1.0 / static_cast<double>(in.numel());
  auto back = [x, inv_n](Tape& t, int self) {
    const double g = t.nodes_[self].grad[0] * inv_n;
    Tensor& gx = t.nodes_[x.id].grad;
    for (std::int64_t i = 0; i < gx.numel(); ++i) gx[i] += g;
  };
  return Var{push(Tensor::scalar(acc * inv_n), back)};
}

Var Tape::sum_spatial(Var x) {
  const Tensor& in = cnode(x).value;
  require_3d(in, "sum_spatial");
  const int c = in.extent(0);
  const std::int64_t plane = static_cast<std::int64_t>(in.extent(1)) * in.extent(2);
  Tensor out({c});
  for (int ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    const double* p = in.data() + ch * plane;
    for (std::int64_t i = 0; i < plane; ++i) acc += p[i];
    out[ch] = acc;
  }
  auto back = [x, c, plane](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& gx = t.nodes_[x.id].grad;
    for (int ch = 0; ch < c; ++ch) {
      const double gv = g[ch];
      double* p = gx.data() + ch * plane;
      for (std::int64_t i = 0; i < plane; ++i) p[i] += gv;
    }
  };
  return Var{push(std::move(out), back)};
}

void Tape::backward(Var loss) {
  if (loss.id < 0 || loss.id >= static_cast<int>(nodes_.size()))
    throw InvalidArgumentError("backward: loss is not on this tape");
  if (!nodes_[loss.id].value.is_scalar())
    throw InvalidArgumentError("backward: loss must be a scalar, got " +
                               nodes_[loss.id].value.shape_string());

  for (auto& n : nodes_)
    if (n.grad.numel() != n.value.numel()) n.grad = Tensor(n.value.shape());

  nodes_[loss.id].grad[0] = 1.0;
  for (int i = loss.id; i >= 0; --i)
    if (nodes_[i].backprop) nodes_[i].backprop(*this, i);

  for (auto& n : nodes_) {
    if (!n.bound) continue;
    for (std::int64_t i = 0; i < n.grad.numel(); ++i) n.bound->grad[i] += n.grad[i];
  }
}

double grad_check(const ScalarFn& fn, const Tensor& point, double eps) {
  if (!(eps > 0.0 && eps <= 1e-2))
    throw InvalidArgumentError("grad_check: eps must be in (0, 1e-2]");

  Tape tape;
  Var x = tape.constant(point);
  Var loss = fn(tape, x);
  if (!std::isfinite(tape.value(loss)[0]))
    throw NumericalError("grad_check: non-finite loss at evaluation point");
  tape.backward(loss);
  const Tensor analytic = tape.grad(x);
  if (!analytic.all_finite()) throw NumericalError("grad_check: non-finite analytic gradient");

  auto eval = [&fn](const Tensor& at) {
    Tape t;
    Var in = t.constant(at);
    const double v = t.value(fn(t, in))[0];
    if (!std::isfinite(v)) throw NumericalError("grad_check: non-finite evaluation");
    return v;
  };

  Tensor probe = point;
  double worst = 0.0;
  for (std::int64_t i = 0; i < point.numel(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double fp = eval(probe);
    probe[i] = orig - eps;
    const double fm = eval(probe);
    probe[i] = orig;
    const double numeric = (fp - fm) / (2.0 * eps);
    const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace shapetask::ad
