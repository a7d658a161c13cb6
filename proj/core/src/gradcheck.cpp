#include "slu/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "slu/ops.hpp"

namespace slu {

namespace {

double eval_forward(const std::function<TensorPtr(Graph&)>& f) {
  Graph g;
  auto loss = f(g);
  if (loss->size() != 1) throw ShapeError("grad_check: f must return a scalar");
  if (!std::isfinite(loss->v[0])) throw NumericError("grad_check: non-finite loss");
  return loss->v[0];
}

}  // namespace

GradCheckReport grad_check(const std::function<TensorPtr(Graph&)>& f, ParamMap& params,
                           const GradCheckOptions& opt) {
  // Analytic pass.
  zero_grads(params);
  {
    Graph g;
    auto loss = f(g);
    if (!std::isfinite(loss->v[0])) throw NumericError("grad_check: non-finite loss");
    g.backward(loss);
  }
  std::map<std::string, std::vector<double>> analytic;
  for (auto& [name, p] : params)
    if (p->requires_grad) analytic[name] = p->grad;

  GradCheckReport report;
  Rng sampler(opt.sample_seed);
  const double h = opt.step;
  for (auto& [name, p] : params) {
    if (!p->requires_grad) continue;
    std::vector<std::size_t> coords;
    const std::size_t n = p->size();
    if (opt.max_coords_per_param <= 0 || n <= static_cast<std::size_t>(opt.max_coords_per_param)) {
      coords.resize(n);
      for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    } else {
      for (int i = 0; i < opt.max_coords_per_param; ++i)
        coords.push_back(static_cast<std::size_t>(sampler.uniform_int(static_cast<int>(n))));
      std::sort(coords.begin(), coords.end());
      coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    }
    GradCheckEntry entry;
    entry.param = name;
    for (std::size_t idx : coords) {
      const double saved = p->v[idx];
      p->v[idx] = saved + h;
      const double lp = eval_forward(f);
      p->v[idx] = saved - h;
      const double lm = eval_forward(f);
      p->v[idx] = saved;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = analytic[name][idx];
      const double denom = std::max(std::abs(an), std::abs(fd));
      const double err = denom < 1e-6 ? std::abs(an - fd) : std::abs(an - fd) / denom;
      if (err > entry.max_err) {
        entry.max_err = err;
        entry.worst_coord = idx;
        entry.analytic_at_worst = an;
        entry.fd_at_worst = fd;
      }
      ++entry.coords_checked;
    }
    if (entry.max_err > report.max_err) {
      report.max_err = entry.max_err;
      report.worst_param = name;
    }
    report.entries.push_back(std::move(entry));
  }
  zero_grads(params);
  return report;
}

}  // namespace slu
