#include "latentflow/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "latentflow/error.hpp"

namespace latentflow {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Tensor2& t) { return ConstMap(t.values().data(), t.rows(), t.cols()); }
MutMap view(Tensor2& t) { return MutMap(t.values().data(), t.rows(), t.cols()); }

Graph& graph_of(Var a) {
  if (a.graph == nullptr) throw StateError("variable is not attached to a graph");
  return *a.graph;
}

Graph& graph_of(Var a, Var b) {
  if (a.graph != b.graph) throw StateError("variables belong to different graphs");
  return graph_of(a);
}

void require_same_shape(const Tensor2& a, const Tensor2& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": " + a.shape_string() + " vs " + b.shape_string());
  }
}

void accumulate(Tensor2& dst, const Tensor2& src) {
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

const Tensor2& Var::value() const { return graph_of(*this).value(id); }

Var Graph::constant(Tensor2 value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false, -1});
  return Var{this, nodes_.size() - 1};
}

Var Graph::parameter(const PredictorParams& params, std::size_t group) {
  if (params_ != nullptr && params_ != &params) {
    throw StateError("a graph can bind only one parameter set");
  }
  params_ = &params;
  if (auto it = param_nodes_.find(group); it != param_nodes_.end()) return Var{this, it->second};
  nodes_.push_back(Node{params.tensor(group), {}, {}, record_, static_cast<std::ptrdiff_t>(group)});
  param_nodes_[group] = nodes_.size() - 1;
  return Var{this, nodes_.size() - 1};
}

Var Graph::parameter(const PredictorParams& params, std::string_view name) {
  return parameter(params, params.index_of(name));
}

Tensor2 Graph::gradient(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.grad.empty()) return Tensor2(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Graph::emit(Tensor2 value, std::initializer_list<std::size_t> parents, Backward backward) {
  return emit(std::move(value), std::vector<std::size_t>(parents), std::move(backward));
}

Var Graph::emit(Tensor2 value, const std::vector<std::size_t>& parents, Backward backward) {
  Node n{std::move(value), {}, {}, false, -1};
  if (record_) {
    n.requires_grad = std::any_of(parents.begin(), parents.end(),
                                  [&](std::size_t p) { return nodes_[p].requires_grad; });
    if (n.requires_grad) n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Tensor2& Graph::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Tensor2(n.value.rows(), n.value.cols());
  return n.grad;
}

Gradients backward(Graph& tape, Var loss) {
  if (!tape.record_ || tape.nodes_.empty()) {
    throw StateError("backward called without a recorded forward pass");
  }
  if (loss.graph != &tape) throw StateError("loss does not belong to this tape");
  const Tensor2& lv = tape.value(loss.id);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward needs a scalar loss, got " + lv.shape_string());
  }
  for (auto& n : tape.nodes_) n.grad = Tensor2();
  tape.grad(loss.id)(0, 0) = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    auto& n = tape.nodes_[i];
    if (n.backward && !n.grad.empty()) n.backward(tape, i);
  }
  tape.has_run_backward_ = true;

  Gradients out;
  if (tape.params_ == nullptr) return out;
  out.values.assign(tape.params_->size(), 0.0);
  for (const auto& [group, id] : tape.param_nodes_) {
    const auto& n = tape.nodes_[id];
    if (n.grad.empty()) continue;
    const std::size_t offset = tape.params_->group(group).offset;
    std::copy(n.grad.values().begin(), n.grad.values().end(), out.values.begin() + offset);
  }
  return out;
}

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Tensor2& av = a.value();
  const Tensor2& bv = b.value();
  Tensor2 out = latentflow::matmul(av, bv);
  return g.emit(std::move(out), {a.id, b.id}, [a = a.id, b = b.id](Graph& g, std::size_t self) {
    const Tensor2& dy = g.grad(self);
    if (g.requires_grad(a)) view(g.grad(a)).noalias() += view(dy) * view(g.value(b)).transpose();
    if (g.requires_grad(b)) view(g.grad(b)).noalias() += view(g.value(a)).transpose() * view(dy);
  });
}

Var add_row(Var x, Var row) {
  Graph& g = graph_of(x, row);
  const Tensor2& xv = x.value();
  const Tensor2& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != xv.cols()) {
    throw ShapeError("add_row: " + xv.shape_string() + " + " + rv.shape_string());
  }
  Tensor2 out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto o = out.row(r);
    for (std::size_t c = 0; c < o.size(); ++c) o[c] += rv(0, c);
  }
  return g.emit(std::move(out), {x.id, row.id}, [x = x.id, row = row.id](Graph& g, std::size_t self) {
    const Tensor2& dy = g.grad(self);
    if (g.requires_grad(x)) accumulate(g.grad(x), dy);
    if (g.requires_grad(row)) {
      Tensor2& dr = g.grad(row);
      for (std::size_t r = 0; r < dy.rows(); ++r) {
        for (std::size_t c = 0; c < dy.cols(); ++c) dr(0, c) += dy(r, c);
      }
    }
  });
}

Var operator+(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor2 out = a.value() + b.value();
  return g.emit(std::move(out), {a.id, b.id}, [a = a.id, b = b.id](Graph& g, std::size_t self) {
    const Tensor2& dy = g.grad(self);
    if (g.requires_grad(a)) accumulate(g.grad(a), dy);
    if (g.requires_grad(b)) accumulate(g.grad(b), dy);
  });
}

Var operator-(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor2 out = a.value() - b.value();
  return g.emit(std::move(out), {a.id, b.id}, [a = a.id, b = b.id](Graph& g, std::size_t self) {
    const Tensor2& dy = g.grad(self);
    if (g.requires_grad(a)) accumulate(g.grad(a), dy);
    if (g.requires_grad(b)) view(g.grad(b)) -= view(dy);
  });
}

Var hadamard(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape(a.value(), b.value(), "hadamard");
  Tensor2 out = a.value();
  view(out).array() *= view(b.value()).array();
  return g.emit(std::move(out), {a.id, b.id}, [a = a.id, b = b.id](Graph& g, std::size_t self) {
    const Tensor2& dy = g.grad(self);
    if (g.requires_grad(a)) view(g.grad(a)).array() += view(dy).array() * view(g.value(b)).array();
    if (g.requires_grad(b)) view(g.grad(b)).array() += view(dy).array() * view(g.value(a)).array();
  });
}

Var scale(Var x, double s) {
  Graph& g = graph_of(x);
  Tensor2 out = s * x.value();
  return g.emit(std::move(out), {x.id}, [x = x.id, s](Graph& g, std::size_t self) {
    view(g.grad(x)) += s * view(g.grad(self));
  });
}

Var add_scalar(Var x, double s) {
  Graph& g = graph_of(x);
  Tensor2 out = x.value();
  for (double& v : out.values()) v += s;
  return g.emit(std::move(out), {x.id}, [x = x.id](Graph& g, std::size_t self) {
    accumulate(g.grad(x), g.grad(self));
  });
}

Var slice_cols(Var x, std::size_t begin, std::size_t end) {
  Graph& g = graph_of(x);
  const Tensor2& xv = x.value();
  if (begin > end || end > xv.cols()) {
    throw ShapeError("slice_cols [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") of " + xv.shape_string());
  }
  Tensor2 out(xv.rows(), end - begin);
  view(out) = view(xv).middleCols(begin, end - begin);
  return g.emit(std::move(out), {x.id}, [x = x.id, begin, end](Graph& g, std::size_t self) {
    view(g.grad(x)).middleCols(begin, end - begin) += view(g.grad(self));
  });
}

Var slice_rows(Var x, std::size_t begin, std::size_t end) {
  Graph& g = graph_of(x);
  Tensor2 out = x.value().slice_rows(begin, end);
  return g.emit(std::move(out), {x.id}, [x = x.id, begin, end](Graph& g, std::size_t self) {
    view(g.grad(x)).middleRows(begin, end - begin) += view(g.grad(self));
  });
}

Var concat_rows(Var top, Var bottom) {
  Graph& g = graph_of(top, bottom);
  Tensor2 out = latentflow::concat_rows(top.value(), bottom.value());
  const std::size_t split = top.value().rows();
  return g.emit(std::move(out), {top.id, bottom.id},
                [t = top.id, b = bottom.id, split](Graph& g, std::size_t self) {
                  const Tensor2& dy = g.grad(self);
                  if (g.requires_grad(t)) view(g.grad(t)) += view(dy).topRows(split);
                  if (g.requires_grad(b)) view(g.grad(b)) += view(dy).bottomRows(dy.rows() - split);
                });
}

Var layer_norm(Var x, double eps) {
  Graph& g = graph_of(x);
  const Tensor2& xv = x.value();
  const std::size_t n = xv.cols();
  if (n == 0) throw ShapeError("layer_norm on zero columns");
  Tensor2 out(xv.rows(), n);
  std::vector<double> inv_std(xv.rows());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    const auto row = xv.row(r);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    auto o = out.row(r);
    for (std::size_t c = 0; c < n; ++c) o[c] = (row[c] - mean) * inv_std[r];
  }
  return g.emit(std::move(out), {x.id},
                [x = x.id, inv_std = std::move(inv_std)](Graph& g, std::size_t self) {
                  const Tensor2& dy = g.grad(self);
                  const Tensor2& y = g.value(self);
                  Tensor2& dx = g.grad(x);
                  const double n = static_cast<double>(dy.cols());
                  for (std::size_t r = 0; r < dy.rows(); ++r) {
                    double mean_dy = 0.0;
                    double mean_dy_y = 0.0;
                    for (std::size_t c = 0; c < dy.cols(); ++c) {
                      mean_dy += dy(r, c);
                      mean_dy_y += dy(r, c) * y(r, c);
                    }
                    mean_dy /= n;
                    mean_dy_y /= n;
                    for (std::size_t c = 0; c < dy.cols(); ++c) {
                      dx(r, c) += inv_std[r] * (dy(r, c) - mean_dy - y(r, c) * mean_dy_y);
                    }
                  }
                });
}

Var gelu(Var x) {
  Graph& g = graph_of(x);
  Tensor2 out = x.value();
  for (double& v : out.values()) v = 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
  return g.emit(std::move(out), {x.id}, [x = x.id](Graph& g, std::size_t self) {
    const auto dy = g.grad(self).values();
    const auto xv = g.value(x).values();
    auto dx = g.grad(x).values();
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < dy.size(); ++i) {
      const double cdf = 0.5 * (1.0 + std::erf(xv[i] * std::numbers::sqrt2 / 2.0));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * xv[i] * xv[i]);
      dx[i] += dy[i] * (cdf + xv[i] * pdf);
    }
  });
}

Var sum(Var x) {
  Graph& g = graph_of(x);
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return g.emit(Tensor2(1, 1, s), {x.id}, [x = x.id](Graph& g, std::size_t self) {
    const double dy = g.grad(self)(0, 0);
    for (double& v : g.grad(x).values()) v += dy;
  });
}

Var mean_abs(Var x) {
  Graph& g = graph_of(x);
  const auto v = x.value().values();
  if (v.empty()) throw ShapeError("mean_abs of empty tensor");
  double s = 0.0;
  for (double e : v) s += std::abs(e);
  return g.emit(Tensor2(1, 1, s / static_cast<double>(v.size())), {x.id},
                [x = x.id](Graph& g, std::size_t self) {
                  const auto xv = g.value(x).values();
                  const double dy = g.grad(self)(0, 0) / static_cast<double>(xv.size());
                  auto dx = g.grad(x).values();
                  for (std::size_t i = 0; i < xv.size(); ++i) {
                    dx[i] += dy * static_cast<double>((xv[i] > 0.0) - (xv[i] < 0.0));
                  }
                });
}

Var mean_square(Var x) {
  Graph& g = graph_of(x);
  const auto v = x.value().values();
  if (v.empty()) throw ShapeError("mean_square of empty tensor");
  double s = 0.0;
  for (double e : v) s += e * e;
  return g.emit(Tensor2(1, 1, s / static_cast<double>(v.size())), {x.id},
                [x = x.id](Graph& g, std::size_t self) {
                  const auto xv = g.value(x).values();
                  const double dy = 2.0 * g.grad(self)(0, 0) / static_cast<double>(xv.size());
                  auto dx = g.grad(x).values();
                  for (std::size_t i = 0; i < xv.size(); ++i) dx[i] += dy * xv[i];
                });
}

Var row_diff(Var x) {
  Graph& g = graph_of(x);
  const Tensor2& xv = x.value();
  if (xv.rows() < 2) throw ShapeError("row_diff needs at least 2 rows, got " + xv.shape_string());
  Tensor2 out(xv.rows() - 1, xv.cols());
  view(out) = view(xv).bottomRows(xv.rows() - 1) - view(xv).topRows(xv.rows() - 1);
  return g.emit(std::move(out), {x.id}, [x = x.id](Graph& g, std::size_t self) {
    const Tensor2& dy = g.grad(self);
    auto dx = view(g.grad(x));
    dx.bottomRows(dy.rows()) += view(dy);
    dx.topRows(dy.rows()) -= view(dy);
  });
}

Var banded_attention(Var q, Var k, Var v, std::size_t heads, std::size_t half_width) {
  Graph& g = graph_of(q, k);
  graph_of(q, v);
  const Tensor2& qv = q.value();
  const Tensor2& kv = k.value();
  const Tensor2& vv = v.value();
  if (heads == 0 || qv.cols() % heads != 0) {
    throw ConfigError("hidden width " + std::to_string(qv.cols()) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  if (kv.cols() != qv.cols() || !kv.same_shape(vv)) {
    throw ShapeError("attention operands " + qv.shape_string() + ", " + kv.shape_string() + ", " +
                     vv.shape_string());
  }
  const std::size_t nq = qv.rows();
  const std::size_t nk = kv.rows();
  const std::size_t dh = qv.cols() / heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));

  auto window = [half_width, nk](std::size_t l) {
    const std::size_t lo = l > half_width ? l - half_width : 0;
    const std::size_t hi = std::min(nk, l + half_width + 1 < l ? nk : l + half_width + 1);
    return std::pair{lo, std::max(lo, hi)};
  };

  // probs[(head * nq + l) * width + (j - lo)]
  const std::size_t width = std::min(nk, 2 * std::min(half_width, nk) + 1);
  std::vector<double> probs(heads * nq * width, 0.0);
  Tensor2 out(nq, qv.cols());
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t c0 = h * dh;
    for (std::size_t l = 0; l < nq; ++l) {
      const auto [lo, hi] = window(l);
      if (lo >= hi) continue;
      double* p = &probs[(h * nq + l) * width];
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = lo; j < hi; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) s += qv(l, c0 + c) * kv(j, c0 + c);
        p[j - lo] = s * inv_scale;
        mx = std::max(mx, p[j - lo]);
      }
      double z = 0.0;
      for (std::size_t j = lo; j < hi; ++j) z += (p[j - lo] = std::exp(p[j - lo] - mx));
      for (std::size_t j = lo; j < hi; ++j) {
        p[j - lo] /= z;
        for (std::size_t c = 0; c < dh; ++c) out(l, c0 + c) += p[j - lo] * vv(j, c0 + c);
      }
    }
  }

  return g.emit(
      std::move(out), {q.id, k.id, v.id},
      [q = q.id, k = k.id, v = v.id, heads, dh, width, inv_scale, window,
       probs = std::move(probs)](Graph& g, std::size_t self) {
        const Tensor2& dy = g.grad(self);
        const Tensor2& qv = g.value(q);
        const Tensor2& kv = g.value(k);
        const Tensor2& vv = g.value(v);
        const bool need_q = g.requires_grad(q);
        const bool need_k = g.requires_grad(k);
        const bool need_v = g.requires_grad(v);
        Tensor2 dq_unused, dk_unused, dv_unused;
        Tensor2& dq = need_q ? g.grad(q) : dq_unused;
        Tensor2& dk = need_k ? g.grad(k) : dk_unused;
        Tensor2& dv = need_v ? g.grad(v) : dv_unused;
        const std::size_t nq = qv.rows();
        std::vector<double> dp(width);
        for (std::size_t h = 0; h < heads; ++h) {
          const std::size_t c0 = h * dh;
          for (std::size_t l = 0; l < nq; ++l) {
            const auto [lo, hi] = window(l);
            if (lo >= hi) continue;
            const double* p = &probs[(h * nq + l) * width];
            double weighted = 0.0;
            for (std::size_t j = lo; j < hi; ++j) {
              double s = 0.0;
              for (std::size_t c = 0; c < dh; ++c) s += dy(l, c0 + c) * vv(j, c0 + c);
              dp[j - lo] = s;
              weighted += p[j - lo] * s;
              if (need_v) {
                for (std::size_t c = 0; c < dh; ++c) dv(j, c0 + c) += p[j - lo] * dy(l, c0 + c);
              }
            }
            for (std::size_t j = lo; j < hi; ++j) {
              const double ds = p[j - lo] * (dp[j - lo] - weighted) * inv_scale;
              for (std::size_t c = 0; c < dh; ++c) {
                if (need_q) dq(l, c0 + c) += ds * kv(j, c0 + c);
                if (need_k) dk(j, c0 + c) += ds * qv(l, c0 + c);
              }
            }
          }
        }
      });
}

}  // namespace latentflow
