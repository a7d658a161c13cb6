#include "slu/ops.hpp"

#include <algorithm>
#include <cmath>

namespace slu {

namespace {

bool any_grad(const TensorPtr& a) { return a->requires_grad; }
bool any_grad(const TensorPtr& a, const TensorPtr& b) {
  return a->requires_grad || b->requires_grad;
}

void require_2d(const TensorPtr& t, const char* op) {
  if (t->shape.size() != 2) throw ShapeError(std::string(op) + ": expected 2-D tensor, got " + t->shape_str());
}

}  // namespace

void check_finite(const Tensor& t, const char* what) {
  if (!all_finite(t)) throw NumericError(std::string("non-finite values in ") + what);
}

TensorPtr matmul(Graph& g, const TensorPtr& a, const TensorPtr& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const int m = a->shape[0], k = a->shape[1], k2 = b->shape[0], n = b->shape[1];
  if (k != k2)
    throw ShapeError("matmul: inner dimensions differ, " + a->shape_str() + " vs " + b->shape_str());
  auto out = make_tensor({m, n}, any_grad(a, b));
  const double* av = a->v.data();
  const double* bv = b->v.data();
  double* ov = out->v.data();
  for (int i = 0; i < m; ++i) {
    const double* arow = av + static_cast<std::size_t>(i) * k;
    double* orow = ov + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double aik = arow[p];
      const double* brow = bv + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
  if (out->requires_grad) {
    g.record([a, b, out, m, k, n] {
      const double* gv = out->grad.data();
      if (a->requires_grad) {
        // a.grad += g . b^T
        double* ag = a->grad.data();
        const double* bv = b->v.data();
        for (int i = 0; i < m; ++i)
          for (int p = 0; p < k; ++p) {
            double acc = 0.0;
            const double* grow = gv + static_cast<std::size_t>(i) * n;
            const double* brow = bv + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
            ag[static_cast<std::size_t>(i) * k + p] += acc;
          }
      }
      if (b->requires_grad) {
        // b.grad += a^T . g
        double* bg = b->grad.data();
        const double* av = a->v.data();
        for (int p = 0; p < k; ++p) {
          double* bgrow = bg + static_cast<std::size_t>(p) * n;
          for (int i = 0; i < m; ++i) {
            const double aip = av[static_cast<std::size_t>(i) * k + p];
            const double* grow = gv + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) bgrow[j] += aip * grow[j];
          }
        }
      }
    });
  }
  return out;
}

TensorPtr transpose(Graph& g, const TensorPtr& a) {
  require_2d(a, "transpose");
  const int m = a->shape[0], n = a->shape[1];
  auto out = make_tensor({n, m}, any_grad(a));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out->v[static_cast<std::size_t>(j) * m + i] = a->at(i, j);
  if (out->requires_grad) {
    g.record([a, out, m, n] {
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          a->grad[static_cast<std::size_t>(i) * n + j] += out->grad[static_cast<std::size_t>(j) * m + i];
    });
  }
  return out;
}

TensorPtr add(Graph& g, const TensorPtr& a, const TensorPtr& b) {
  if (a->shape != b->shape)
    throw ShapeError("add: shape mismatch, " + a->shape_str() + " vs " + b->shape_str());
  auto out = make_tensor(a->shape, any_grad(a, b));
  for (std::size_t i = 0; i < out->size(); ++i) out->v[i] = a->v[i] + b->v[i];
  if (out->requires_grad) {
    g.record([a, b, out] {
      if (a->requires_grad)
        for (std::size_t i = 0; i < out->size(); ++i) a->grad[i] += out->grad[i];
      if (b->requires_grad)
        for (std::size_t i = 0; i < out->size(); ++i) b->grad[i] += out->grad[i];
    });
  }
  return out;
}

TensorPtr add_bias(Graph& g, const TensorPtr& a, const TensorPtr& bias) {
  require_2d(a, "add_bias");
  const int m = a->shape[0], n = a->shape[1];
  if (static_cast<int>(bias->size()) != n)
    throw ShapeError("add_bias: bias " + bias->shape_str() + " does not match cols of " + a->shape_str());
  auto out = make_tensor(a->shape, any_grad(a, bias));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out->at(i, j) = a->at(i, j) + bias->v[j];
  if (out->requires_grad) {
    g.record([a, bias, out, m, n] {
      if (a->requires_grad)
        for (std::size_t i = 0; i < out->size(); ++i) a->grad[i] += out->grad[i];
      if (bias->requires_grad)
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) bias->grad[j] += out->grad[static_cast<std::size_t>(i) * n + j];
    });
  }
  return out;
}

TensorPtr mul(Graph& g, const TensorPtr& a, const TensorPtr& b) {
  if (a->shape != b->shape)
    throw ShapeError("mul: shape mismatch, " + a->shape_str() + " vs " + b->shape_str());
  auto out = make_tensor(a->shape, any_grad(a, b));
  for (std::size_t i = 0; i < out->size(); ++i) out->v[i] = a->v[i] * b->v[i];
  if (out->requires_grad) {
    g.record([a, b, out] {
      if (a->requires_grad)
        for (std::size_t i = 0; i < out->size(); ++i) a->grad[i] += out->grad[i] * b->v[i];
      if (b->requires_grad)
        for (std::size_t i = 0; i < out->size(); ++i) b->grad[i] += out->grad[i] * a->v[i];
    });
  }
  return out;
}

TensorPtr scale(Graph& g, const TensorPtr& a, double c) {
  auto out = make_tensor(a->shape, any_grad(a));
  for (std::size_t i = 0; i < out->size(); ++i) out->v[i] = a->v[i] * c;
  if (out->requires_grad) {
    g.record([a, out, c] {
      for (std::size_t i = 0; i < out->size(); ++i) a->grad[i] += out->grad[i] * c;
    });
  }
  return out;
}

TensorPtr sum(Graph& g, const TensorPtr& a) {
  auto out = make_scalar(0.0, any_grad(a));
  double acc = 0.0;
  for (double x : a->v) acc += x;
  out->v[0] = acc;
  if (out->requires_grad) {
    g.record([a, out] {
      for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += out->grad[0];
    });
  }
  return out;
}

TensorPtr softmax_rows(Graph& g, const TensorPtr& a) {
  require_2d(a, "softmax");
  const int m = a->shape[0], n = a->shape[1];
  auto out = make_tensor(a->shape, any_grad(a));
  for (int i = 0; i < m; ++i) {
    double mx = a->at(i, 0);
    for (int j = 1; j < n; ++j) mx = std::max(mx, a->at(i, j));
    double z = 0.0;
    for (int j = 0; j < n; ++j) {
      double e = std::exp(a->at(i, j) - mx);
      out->at(i, j) = e;
      z += e;
    }
    for (int j = 0; j < n; ++j) out->at(i, j) /= z;
  }
  if (out->requires_grad) {
    g.record([a, out, m, n] {
      // dx_j = p_j * (g_j - sum_k g_k p_k)
      for (int i = 0; i < m; ++i) {
        double dot = 0.0;
        for (int j = 0; j < n; ++j)
          dot += out->grad[static_cast<std::size_t>(i) * n + j] * out->v[static_cast<std::size_t>(i) * n + j];
        for (int j = 0; j < n; ++j) {
          std::size_t idx = static_cast<std::size_t>(i) * n + j;
          a->grad[idx] += out->v[idx] * (out->grad[idx] - dot);
        }
      }
    });
  }
  return out;
}

TensorPtr layer_norm(Graph& g, const TensorPtr& x, const TensorPtr& gain, const TensorPtr& bias) {
  require_2d(x, "layer_norm");
  const int m = x->shape[0], n = x->shape[1];
  if (static_cast<int>(gain->size()) != n || static_cast<int>(bias->size()) != n)
    throw ShapeError("layer_norm: affine params do not match " + x->shape_str());
  constexpr double kEps = 1e-5;
  auto out = make_tensor(x->shape, x->requires_grad || gain->requires_grad || bias->requires_grad);
  auto xhat = std::make_shared<std::vector<double>>(out->size());
  auto inv_sigma = std::make_shared<std::vector<double>>(m);
  for (int i = 0; i < m; ++i) {
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += x->at(i, j);
    mean /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
      double d = x->at(i, j) - mean;
      var += d * d;
    }
    var /= n;
    double is = 1.0 / std::sqrt(var + kEps);
    (*inv_sigma)[i] = is;
    for (int j = 0; j < n; ++j) {
      std::size_t idx = static_cast<std::size_t>(i) * n + j;
      (*xhat)[idx] = (x->at(i, j) - mean) * is;
      out->v[idx] = (*xhat)[idx] * gain->v[j] + bias->v[j];
    }
  }
  if (out->requires_grad) {
    g.record([x, gain, bias, out, xhat, inv_sigma, m, n] {
      for (int i = 0; i < m; ++i) {
        double mean_gy = 0.0, mean_gyx = 0.0;
        for (int j = 0; j < n; ++j) {
          std::size_t idx = static_cast<std::size_t>(i) * n + j;
          double gy = out->grad[idx] * gain->v[j];
          mean_gy += gy;
          mean_gyx += gy * (*xhat)[idx];
        }
        mean_gy /= n;
        mean_gyx /= n;
        for (int j = 0; j < n; ++j) {
          std::size_t idx = static_cast<std::size_t>(i) * n + j;
          if (x->requires_grad) {
            double gy = out->grad[idx] * gain->v[j];
            x->grad[idx] += (gy - mean_gy - (*xhat)[idx] * mean_gyx) * (*inv_sigma)[i];
          }
          if (gain->requires_grad) gain->grad[j] += out->grad[idx] * (*xhat)[idx];
          if (bias->requires_grad) bias->grad[j] += out->grad[idx];
        }
      }
    });
  }
  return out;
}

TensorPtr gelu(Graph& g, const TensorPtr& x) {
  // tanh approximation
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kA = 0.044715;
  auto out = make_tensor(x->shape, any_grad(x));
  for (std::size_t i = 0; i < out->size(); ++i) {
    double xi = x->v[i];
    double t = std::tanh(kC * (xi + kA * xi * xi * xi));
    out->v[i] = 0.5 * xi * (1.0 + t);
  }
  if (out->requires_grad) {
    g.record([x, out] {
      for (std::size_t i = 0; i < out->size(); ++i) {
        double xi = x->v[i];
        double u = kC * (xi + kA * xi * xi * xi);
        double t = std::tanh(u);
        double du = kC * (1.0 + 3.0 * kA * xi * xi);
        double d = 0.5 * (1.0 + t) + 0.5 * xi * (1.0 - t * t) * du;
        x->grad[i] += out->grad[i] * d;
      }
    });
  }
  return out;
}

TensorPtr embedding_lookup(Graph& g, const TensorPtr& table, const std::vector<int>& ids) {
  require_2d(table, "embedding_lookup");
  const int v = table->shape[0], d = table->shape[1];
  auto out = make_tensor({static_cast<int>(ids.size()), d}, any_grad(table));
  for (std::size_t t = 0; t < ids.size(); ++t) {
    int id = ids[t];
    if (id < 0 || id >= v)
      throw IndexError("embedding_lookup: id " + std::to_string(id) + " out of range [0," +
                       std::to_string(v) + ")");
    std::copy_n(table->v.begin() + static_cast<std::size_t>(id) * d, d,
                out->v.begin() + t * static_cast<std::size_t>(d));
  }
  if (out->requires_grad) {
    g.record([table, out, ids, d] {
      for (std::size_t t = 0; t < ids.size(); ++t)
        for (int j = 0; j < d; ++j)
          table->grad[static_cast<std::size_t>(ids[t]) * d + j] +=
              out->grad[t * static_cast<std::size_t>(d) + j];
    });
  }
  return out;
}

TensorPtr dropout(Graph& g, const TensorPtr& x, double p, bool train, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("dropout: p must be in [0,1)");
  if (!train || p == 0.0) return x;
  auto mask = std::make_shared<std::vector<double>>(x->size());
  const double keep = 1.0 - p;
  for (std::size_t i = 0; i < x->size(); ++i) (*mask)[i] = rng.uniform() < p ? 0.0 : 1.0 / keep;
  auto out = make_tensor(x->shape, any_grad(x));
  for (std::size_t i = 0; i < x->size(); ++i) out->v[i] = x->v[i] * (*mask)[i];
  if (out->requires_grad) {
    g.record([x, out, mask] {
      for (std::size_t i = 0; i < x->size(); ++i) x->grad[i] += out->grad[i] * (*mask)[i];
    });
  }
  return out;
}

TensorPtr slice_rows(Graph& g, const TensorPtr& a, int r0, int r1) {
  require_2d(a, "slice_rows");
  const int m = a->shape[0], n = a->shape[1];
  if (r0 < 0 || r1 > m || r0 > r1) throw ShapeError("slice_rows: bad range");
  auto out = make_tensor({r1 - r0, n}, any_grad(a));
  std::copy_n(a->v.begin() + static_cast<std::size_t>(r0) * n,
              static_cast<std::size_t>(r1 - r0) * n, out->v.begin());
  if (out->requires_grad) {
    g.record([a, out, r0, n] {
      for (std::size_t i = 0; i < out->size(); ++i)
        a->grad[static_cast<std::size_t>(r0) * n + i] += out->grad[i];
    });
  }
  return out;
}

TensorPtr slice_cols(Graph& g, const TensorPtr& a, int c0, int c1) {
  require_2d(a, "slice_cols");
  const int m = a->shape[0], n = a->shape[1];
  if (c0 < 0 || c1 > n || c0 > c1) throw ShapeError("slice_cols: bad range");
  const int w = c1 - c0;
  auto out = make_tensor({m, w}, any_grad(a));
  for (int i = 0; i < m; ++i)
    std::copy_n(a->v.begin() + static_cast<std::size_t>(i) * n + c0, w,
                out->v.begin() + static_cast<std::size_t>(i) * w);
  if (out->requires_grad) {
    g.record([a, out, c0, n, w, m] {
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < w; ++j)
          a->grad[static_cast<std::size_t>(i) * n + c0 + j] +=
              out->grad[static_cast<std::size_t>(i) * w + j];
    });
  }
  return out;
}

TensorPtr concat_rows(Graph& g, const std::vector<TensorPtr>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no parts");
  const int n = parts[0]->cols();
  int m = 0;
  bool rg = false;
  for (const auto& p : parts) {
    require_2d(p, "concat_rows");
    if (p->shape[1] != n) throw ShapeError("concat_rows: column mismatch");
    m += p->shape[0];
    rg = rg || p->requires_grad;
  }
  auto out = make_tensor({m, n}, rg);
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p->v.begin(), p->v.end(), out->v.begin() + off);
    off += p->size();
  }
  if (rg) {
    g.record([parts, out] {
      std::size_t off = 0;
      for (const auto& p : parts) {
        if (p->requires_grad)
          for (std::size_t i = 0; i < p->size(); ++i) p->grad[i] += out->grad[off + i];
        off += p->size();
      }
    });
  }
  return out;
}

TensorPtr concat_cols(Graph& g, const std::vector<TensorPtr>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no parts");
  const int m = parts[0]->rows();
  int n = 0;
  bool rg = false;
  for (const auto& p : parts) {
    require_2d(p, "concat_cols");
    if (p->shape[0] != m) throw ShapeError("concat_cols: row mismatch");
    n += p->shape[1];
    rg = rg || p->requires_grad;
  }
  auto out = make_tensor({m, n}, rg);
  int coff = 0;
  for (const auto& p : parts) {
    const int w = p->shape[1];
    for (int i = 0; i < m; ++i)
      std::copy_n(p->v.begin() + static_cast<std::size_t>(i) * w, w,
                  out->v.begin() + static_cast<std::size_t>(i) * n + coff);
    coff += w;
  }
  if (rg) {
    g.record([parts, out, m, n] {
      int coff = 0;
      for (const auto& p : parts) {
        const int w = p->shape[1];
        if (p->requires_grad)
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < w; ++j)
              p->grad[static_cast<std::size_t>(i) * w + j] +=
                  out->grad[static_cast<std::size_t>(i) * n + coff + j];
        coff += w;
      }
    });
  }
  return out;
}

TensorPtr cross_entropy(Graph& g, const TensorPtr& logits, const std::vector<int>& targets,
                        int ignore_index) {
  require_2d(logits, "cross_entropy");
  const int n = logits->shape[0], c = logits->shape[1];
  if (static_cast<int>(targets.size()) != n)
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                     std::to_string(n) + " logit rows");
  auto probs = std::make_shared<std::vector<double>>(logits->size());
  int valid = 0;
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    int t = targets[i];
    if (t == ignore_index) continue;
    if (t < 0 || t >= c)
      throw IndexError("cross_entropy: target " + std::to_string(t) + " out of range [0," +
                       std::to_string(c) + ")");
    double mx = logits->at(i, 0);
    for (int j = 1; j < c; ++j) mx = std::max(mx, logits->at(i, j));
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += std::exp(logits->at(i, j) - mx);
    for (int j = 0; j < c; ++j)
      (*probs)[static_cast<std::size_t>(i) * c + j] = std::exp(logits->at(i, j) - mx) / z;
    loss -= logits->at(i, t) - mx - std::log(z);
    ++valid;
  }
  auto out = make_scalar(valid > 0 ? loss / valid : 0.0, any_grad(logits));
  if (out->requires_grad && valid > 0) {
    g.record([logits, out, probs, targets, ignore_index, n, c, valid] {
      const double go = out->grad[0] / valid;
      for (int i = 0; i < n; ++i) {
        int t = targets[i];
        if (t == ignore_index) continue;
        for (int j = 0; j < c; ++j) {
          std::size_t idx = static_cast<std::size_t>(i) * c + j;
          logits->grad[idx] += go * ((*probs)[idx] - (j == t ? 1.0 : 0.0));
        }
      }
    });
  }
  return out;
}

TensorPtr attention(Graph& g, const TensorPtr& q, const TensorPtr& k, const TensorPtr& v,
                    bool causal) {
  require_2d(q, "attention");
  require_2d(k, "attention");
  require_2d(v, "attention");
  if (q->shape[1] != k->shape[1])
    throw ShapeError("attention: q/k width mismatch, " + q->shape_str() + " vs " + k->shape_str());
  if (k->shape[0] != v->shape[0])
    throw ShapeError("attention: k/v length mismatch, " + k->shape_str() + " vs " + v->shape_str());
  if (causal && q->shape[0] != k->shape[0])
    throw ShapeError("attention: causal mask needs equal query/key lengths");
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q->shape[1]));
  auto scores = scale(g, matmul(g, q, transpose(g, k)), inv_sqrt_d);
  if (causal) {
    auto mask = make_tensor(scores->shape, false);
    const int t = scores->shape[0];
    for (int i = 0; i < t; ++i)
      for (int j = i + 1; j < t; ++j) mask->at(i, j) = -1e30;
    scores = add(g, scores, mask);
  }
  return matmul(g, softmax_rows(g, scores), v);
}

}  // namespace slu
