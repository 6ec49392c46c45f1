#include "diffplan/autograd.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "diffplan/error.hpp"

namespace diffplan::grad {

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Graph::parameter(Parameter& p) {
  Node n;
  n.external = &p.value;
  n.param = &p;
  n.requires_grad = track_;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Graph::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const Var& v : inputs) {
    if (v.graph != this) throw std::invalid_argument("variable belongs to a different graph");
    n.inputs.push_back(v.id);
    n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

const Tensor& Graph::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.value;
}

Tensor& Graph::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && value(id).size() > 0) n.grad = Tensor(value(id).shape());
  return n.grad;
}

void Graph::backward(Var loss) {
  if (loss.graph != this) throw std::invalid_argument("loss belongs to a different graph");
  if (value(loss.id).size() != 1) throw ShapeMismatch("backward() needs a scalar loss");
  grad(loss.id)[0] += 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.param) {
      n.param->grad.mat() += n.grad.mat();
    } else if (n.backward) {
      n.backward(*this, i);
    }
  }
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeMismatch(std::string(op) + ": " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

Shape with_cols(const Shape& s, std::size_t cols) {
  Shape out = s.empty() ? Shape{1} : s;
  out.back() = cols;
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (bv.rank() != 2 || av.cols() != bv.dim(0)) {
    throw ShapeMismatch("matmul: " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  }
  Tensor out(with_cols(av.shape(), bv.dim(1)));
  out.mat().noalias() = av.mat() * bv.mat();
  return a.graph->record(std::move(out), {a, b}, [a = a.id, b = b.id](Graph& g, std::size_t self) {
    const auto go = g.grad(self).mat();
    if (g.requires_grad(a)) g.grad(a).mat().noalias() += go * g.value(b).mat().transpose();
    if (g.requires_grad(b)) g.grad(b).mat().noalias() += g.value(a).mat().transpose() * go;
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  out.mat() += b.value().mat();
  return a.graph->record(std::move(out), {a, b}, [a = a.id, b = b.id](Graph& g, std::size_t self) {
    if (g.requires_grad(a)) g.grad(a).mat() += g.grad(self).mat();
    if (g.requires_grad(b)) g.grad(b).mat() += g.grad(self).mat();
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  out.mat() -= b.value().mat();
  return a.graph->record(std::move(out), {a, b}, [a = a.id, b = b.id](Graph& g, std::size_t self) {
    if (g.requires_grad(a)) g.grad(a).mat() += g.grad(self).mat();
    if (g.requires_grad(b)) g.grad(b).mat() -= g.grad(self).mat();
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  out.mat().array() *= b.value().mat().array();
  return a.graph->record(std::move(out), {a, b}, [a = a.id, b = b.id](Graph& g, std::size_t self) {
    const auto go = g.grad(self).mat().array();
    if (g.requires_grad(a)) g.grad(a).mat().array() += go * g.value(b).mat().array();
    if (g.requires_grad(b)) g.grad(b).mat().array() += go * g.value(a).mat().array();
  });
}

Var scale(Var a, double s) {
  Tensor out = a.value();
  out.mat() *= s;
  return a.graph->record(std::move(out), {a}, [a = a.id, s](Graph& g, std::size_t self) {
    g.grad(a).mat() += s * g.grad(self).mat();
  });
}

Var add_bias(Var a, Var bias) {
  const Tensor& av = a.value();
  if (bias.value().size() != av.cols()) {
    throw ShapeMismatch("add_bias: " + shape_string(av.shape()) + " + " + shape_string(bias.value().shape()));
  }
  Tensor out = av;
  const Eigen::Map<const Eigen::RowVectorXd> bv(bias.value().data().data(), static_cast<Eigen::Index>(av.cols()));
  out.mat().rowwise() += bv;
  return a.graph->record(std::move(out), {a, bias}, [a = a.id, b = bias.id](Graph& g, std::size_t self) {
    const auto go = g.grad(self).mat();
    if (g.requires_grad(a)) g.grad(a).mat() += go;
    if (g.requires_grad(b)) {
      Eigen::Map<Eigen::RowVectorXd> gb(g.grad(b).data().data(), go.cols());
      gb += go.colwise().sum();
    }
  });
}

Var linear(Var x, Var w, Var b) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  if (wv.rank() != 2 || xv.cols() != wv.dim(0) || b.value().size() != wv.dim(1)) {
    throw ShapeMismatch("linear: x " + shape_string(xv.shape()) + ", W " + shape_string(wv.shape()) + ", b " +
                        shape_string(b.value().shape()));
  }
  Tensor out(with_cols(xv.shape(), wv.dim(1)));
  const Eigen::Map<const Eigen::RowVectorXd> bv(b.value().data().data(), static_cast<Eigen::Index>(wv.dim(1)));
  auto om = out.mat();
  om.noalias() = xv.mat() * wv.mat();
  om.rowwise() += bv;
  return x.graph->record(std::move(out), {x, w, b}, [x = x.id, w = w.id, b = b.id](Graph& g, std::size_t self) {
    const auto go = g.grad(self).mat();
    if (g.requires_grad(x)) g.grad(x).mat().noalias() += go * g.value(w).mat().transpose();
    if (g.requires_grad(w)) g.grad(w).mat().noalias() += g.value(x).mat().transpose() * go;
    if (g.requires_grad(b)) {
      Eigen::Map<Eigen::RowVectorXd> gb(g.grad(b).data().data(), go.cols());
      gb += go.colwise().sum();
    }
  });
}

Var gelu(Var x) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double v = xv[i];
    out[i] = 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
  }
  return x.graph->record(std::move(out), {x}, [x = x.id](Graph& g, std::size_t self) {
    const Tensor& xv = g.value(x);
    const Tensor& go = g.grad(self);
    Tensor& gx = g.grad(x);
    constexpr double kInvSqrt2Pi = 0.3989422804014327;
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const double v = xv[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      gx[i] += go[i] * (cdf + v * pdf);
    }
  });
}

Var softmax(Var x) {
  Tensor out = x.value();
  auto m = out.mat();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mx = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - mx).exp();
    m.row(r) /= m.row(r).sum();
  }
  return x.graph->record(std::move(out), {x}, [x = x.id](Graph& g, std::size_t self) {
    const auto y = g.value(self).mat();
    const auto go = g.grad(self).mat();
    auto gx = g.grad(x).mat();
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double dotp = go.row(r).dot(y.row(r));
      gx.row(r).array() += y.row(r).array() * (go.row(r).array() - dotp);
    }
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  const Tensor& xv = x.value();
  const std::size_t n = xv.cols();
  if (gamma.value().size() != n || beta.value().size() != n) {
    throw ShapeMismatch("layer_norm: gain/bias length must equal " + std::to_string(n));
  }
  auto xhat = std::make_shared<Tensor>(xv.shape());
  auto inv = std::make_shared<std::vector<double>>(xv.rows());
  Tensor out(xv.shape());
  const auto xm = xv.mat();
  auto hm = xhat->mat();
  auto om = out.mat();
  const Eigen::Map<const Eigen::RowVectorXd> gv(gamma.value().data().data(), static_cast<Eigen::Index>(n));
  const Eigen::Map<const Eigen::RowVectorXd> bv(beta.value().data().data(), static_cast<Eigen::Index>(n));
  for (Eigen::Index r = 0; r < xm.rows(); ++r) {
    const double mu = xm.row(r).mean();
    const double var = (xm.row(r).array() - mu).square().mean();
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv)[static_cast<std::size_t>(r)] = is;
    hm.row(r) = (xm.row(r).array() - mu) * is;
    om.row(r) = hm.row(r).cwiseProduct(gv) + bv;
  }
  return x.graph->record(
      std::move(out), {x, gamma, beta},
      [x = x.id, gm = gamma.id, bt = beta.id, xhat, inv, n](Graph& g, std::size_t self) {
        const auto go = g.grad(self).mat();
        const auto hm = xhat->mat();
        const auto cols = static_cast<Eigen::Index>(n);
        if (g.requires_grad(gm)) {
          Eigen::Map<Eigen::RowVectorXd> gg(g.grad(gm).data().data(), cols);
          gg += go.cwiseProduct(hm).colwise().sum();
        }
        if (g.requires_grad(bt)) {
          Eigen::Map<Eigen::RowVectorXd> gb(g.grad(bt).data().data(), cols);
          gb += go.colwise().sum();
        }
        if (g.requires_grad(x)) {
          const Eigen::Map<const Eigen::RowVectorXd> gv(g.value(gm).data().data(), cols);
          auto gx = g.grad(x).mat();
          for (Eigen::Index r = 0; r < go.rows(); ++r) {
            const Eigen::RowVectorXd dh = go.row(r).cwiseProduct(gv);
            const double m1 = dh.mean();
            const double m2 = dh.cwiseProduct(hm.row(r)).mean();
            gx.row(r).array() += (*inv)[static_cast<std::size_t>(r)] * (dh.array() - m1 - hm.row(r).array() * m2);
          }
        }
      });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.graph->record(std::move(out), {x}, [x = x.id](Graph& g, std::size_t self) {
    const Tensor& go = g.grad(self);
    Tensor& gx = g.grad(x);
    for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
  });
}

Var add_tiled(Var x, Var p) {
  const Tensor& xv = x.value();
  const Tensor& pv = p.value();
  if (pv.cols() != xv.cols() || pv.rows() == 0 || xv.rows() % pv.rows() != 0) {
    throw ShapeMismatch("add_tiled: " + shape_string(xv.shape()) + " + " + shape_string(pv.shape()));
  }
  const auto group = static_cast<Eigen::Index>(pv.rows());
  Tensor out = xv;
  auto om = out.mat();
  for (Eigen::Index r = 0; r < om.rows(); r += group) om.middleRows(r, group) += pv.mat();
  return x.graph->record(std::move(out), {x, p}, [x = x.id, p = p.id, group](Graph& g, std::size_t self) {
    const auto go = g.grad(self).mat();
    if (g.requires_grad(x)) g.grad(x).mat() += go;
    if (g.requires_grad(p)) {
      auto gp = g.grad(p).mat();
      for (Eigen::Index r = 0; r < go.rows(); r += group) gp += go.middleRows(r, group);
    }
  });
}

Var repeat_rows(Var x, std::size_t times) {
  const Tensor& xv = x.value();
  Tensor out({xv.rows() * times, xv.cols()});
  auto om = out.mat();
  const auto xm = xv.mat();
  const auto t = static_cast<Eigen::Index>(times);
  for (Eigen::Index r = 0; r < xm.rows(); ++r) {
    for (Eigen::Index k = 0; k < t; ++k) om.row(r * t + k) = xm.row(r);
  }
  return x.graph->record(std::move(out), {x}, [x = x.id, t](Graph& g, std::size_t self) {
    const auto go = g.grad(self).mat();
    auto gx = g.grad(x).mat();
    for (Eigen::Index r = 0; r < gx.rows(); ++r) gx.row(r) += go.middleRows(r * t, t).colwise().sum();
  });
}

Var group_mean(Var x, std::size_t group) {
  const Tensor& xv = x.value();
  if (group == 0 || xv.rows() % group != 0) {
    throw ShapeMismatch("group_mean: rows " + std::to_string(xv.rows()) + " not divisible by " + std::to_string(group));
  }
  const auto gsz = static_cast<Eigen::Index>(group);
  Tensor out({xv.rows() / group, xv.cols()});
  auto om = out.mat();
  const auto xm = xv.mat();
  for (Eigen::Index r = 0; r < om.rows(); ++r) om.row(r) = xm.middleRows(r * gsz, gsz).colwise().mean();
  return x.graph->record(std::move(out), {x}, [x = x.id, gsz](Graph& g, std::size_t self) {
    const auto go = g.grad(self).mat();
    auto gx = g.grad(x).mat();
    const double inv = 1.0 / static_cast<double>(gsz);
    for (Eigen::Index r = 0; r < go.rows(); ++r) {
      for (Eigen::Index k = 0; k < gsz; ++k) gx.row(r * gsz + k) += inv * go.row(r);
    }
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return x.graph->record(Tensor::scalar(s), {x}, [x = x.id](Graph& g, std::size_t self) {
    const double go = g.grad(self)[0];
    g.grad(x).mat().array() += go;
  });
}

Var mean(Var x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var mse(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mse");
  const auto n = static_cast<double>(a.value().size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.value().size(); ++i) {
    const double d = a.value()[i] - b.value()[i];
    s += d * d;
  }
  return a.graph->record(Tensor::scalar(s / n), {a, b}, [a = a.id, b = b.id, n](Graph& g, std::size_t self) {
    const double go = g.grad(self)[0];
    const auto diff = (g.value(a).mat() - g.value(b).mat()).eval();
    if (g.requires_grad(a)) g.grad(a).mat() += (2.0 * go / n) * diff;
    if (g.requires_grad(b)) g.grad(b).mat() -= (2.0 * go / n) * diff;
  });
}

Var attention(Var q, Var k, Var v, std::size_t batch, std::size_t heads) {
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  const Tensor& vv = v.value();
  const std::size_t d = qv.cols();
  if (kv.cols() != d || vv.cols() != d || kv.rows() != vv.rows() || heads == 0 || d % heads != 0 || batch == 0 ||
      qv.rows() % batch != 0 || kv.rows() % batch != 0) {
    throw ShapeMismatch("attention: q " + shape_string(qv.shape()) + ", k " + shape_string(kv.shape()) + ", v " +
                        shape_string(vv.shape()) + ", batch " + std::to_string(batch) + ", heads " +
                        std::to_string(heads));
  }
  const auto lq = static_cast<Eigen::Index>(qv.rows() / batch);
  const auto lk = static_cast<Eigen::Index>(kv.rows() / batch);
  const auto dh = static_cast<Eigen::Index>(d / heads);
  const auto nh = static_cast<Eigen::Index>(heads);
  const auto nb = static_cast<Eigen::Index>(batch);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // Attention probabilities, one (lq x lk) block per (sample, head).
  auto probs = std::make_shared<RowMatrix>(nb * nh * lq, lk);
  Tensor out(qv.shape());
  auto om = out.mat();
  const auto qm = qv.mat();
  const auto km = kv.mat();
  const auto vm = vv.mat();
  for (Eigen::Index b = 0; b < nb; ++b) {
    for (Eigen::Index h = 0; h < nh; ++h) {
      auto p = probs->middleRows((b * nh + h) * lq, lq);
      p.noalias() = scale * qm.block(b * lq, h * dh, lq, dh) * km.block(b * lk, h * dh, lk, dh).transpose();
      for (Eigen::Index r = 0; r < lq; ++r) {
        const double mx = p.row(r).maxCoeff();
        p.row(r) = (p.row(r).array() - mx).exp();
        p.row(r) /= p.row(r).sum();
      }
      om.block(b * lq, h * dh, lq, dh).noalias() = p * vm.block(b * lk, h * dh, lk, dh);
    }
  }

  return q.graph->record(
      std::move(out), {q, k, v},
      [q = q.id, k = k.id, v = v.id, probs, lq, lk, dh, nh, nb, scale](Graph& g, std::size_t self) {
        const auto go = g.grad(self).mat();
        const auto qm = g.value(q).mat();
        const auto km = g.value(k).mat();
        const auto vm = g.value(v).mat();
        const bool need_q = g.requires_grad(q);
        const bool need_k = g.requires_grad(k);
        const bool need_v = g.requires_grad(v);
        RowMatrix dp(lq, lk);
        for (Eigen::Index b = 0; b < nb; ++b) {
          for (Eigen::Index h = 0; h < nh; ++h) {
            const auto p = probs->middleRows((b * nh + h) * lq, lq);
            const auto dout = go.block(b * lq, h * dh, lq, dh);
            if (need_v) g.grad(v).mat().block(b * lk, h * dh, lk, dh).noalias() += p.transpose() * dout;
            dp.noalias() = dout * vm.block(b * lk, h * dh, lk, dh).transpose();
            for (Eigen::Index r = 0; r < lq; ++r) {
              const double dotp = dp.row(r).dot(p.row(r));
              dp.row(r) = p.row(r).array() * (dp.row(r).array() - dotp);
            }
            if (need_q) {
              g.grad(q).mat().block(b * lq, h * dh, lq, dh).noalias() +=
                  scale * dp * km.block(b * lk, h * dh, lk, dh);
            }
            if (need_k) {
              g.grad(k).mat().block(b * lk, h * dh, lk, dh).noalias() +=
                  scale * dp.transpose() * qm.block(b * lq, h * dh, lq, dh);
            }
          }
        }
      });
}

Var multi_head_cross_attention(Var q_tokens, Var kv_tokens, const AttentionWeights& w, std::size_t batch,
                               std::size_t heads) {
  const Var q = linear(q_tokens, w.wq, w.bq);
  const Var k = linear(kv_tokens, w.wk, w.bk);
  const Var v = linear(kv_tokens, w.wv, w.bv);
  return linear(attention(q, k, v, batch, heads), w.wo, w.bo);
}

}  // namespace diffplan::grad
