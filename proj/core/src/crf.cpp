#include "slu/crf.hpp"

#include <algorithm>
#include <cmath>

namespace slu {

namespace {

double logsumexp(const std::vector<double>& xs) {
  double mx = *std::max_element(xs.begin(), xs.end());
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - mx);
  return mx + std::log(acc);
}

void require_nonempty(const TensorPtr& emissions) {
  if (emissions->shape.size() != 2 || emissions->shape[0] < 1)
    throw ShapeError("crf: emissions must be T x K with T >= 1, got " + emissions->shape_str());
}

}  // namespace

CrfParams CrfParams::create(int num_tags, bool requires_grad) {
  CrfParams p;
  p.transitions = make_tensor({num_tags, num_tags}, requires_grad);
  p.start = make_tensor({num_tags}, requires_grad);
  p.end = make_tensor({num_tags}, requires_grad);
  return p;
}

void CrfParams::check(const TensorPtr& emissions) const {
  require_nonempty(emissions);
  const int k = emissions->shape[1];
  if (k != num_tags() || static_cast<int>(start->size()) != k ||
      static_cast<int>(end->size()) != k)
    throw ShapeError("crf: emissions " + emissions->shape_str() + " do not match " +
                     std::to_string(num_tags()) + " tags");
}

double crf_path_score(const TensorPtr& emissions, const std::vector<int>& tags,
                      const CrfParams& params) {
  params.check(emissions);
  const int t_len = emissions->shape[0];
  if (static_cast<int>(tags.size()) != t_len)
    throw ShapeError("crf: tag count does not match emission rows");
  const int k = params.num_tags();
  for (int tag : tags)
    if (tag < 0 || tag >= k) throw IndexError("crf: tag id " + std::to_string(tag) + " out of range");
  double score = params.start->v[tags[0]] + emissions->at(0, tags[0]);
  for (int t = 1; t < t_len; ++t)
    score += params.transitions->at(tags[t - 1], tags[t]) + emissions->at(t, tags[t]);
  return score + params.end->v[tags[t_len - 1]];
}

double crf_log_partition(const TensorPtr& emissions, const CrfParams& params) {
  params.check(emissions);
  const int t_len = emissions->shape[0], k = params.num_tags();
  std::vector<double> alpha(k), next(k), tmp(k);
  for (int j = 0; j < k; ++j) alpha[j] = params.start->v[j] + emissions->at(0, j);
  for (int t = 1; t < t_len; ++t) {
    for (int j = 0; j < k; ++j) {
      for (int i = 0; i < k; ++i) tmp[i] = alpha[i] + params.transitions->at(i, j);
      next[j] = logsumexp(tmp) + emissions->at(t, j);
    }
    alpha = next;
  }
  for (int j = 0; j < k; ++j) alpha[j] += params.end->v[j];
  return logsumexp(alpha);
}

TensorPtr crf_log_likelihood(Graph& g, const TensorPtr& emissions, const std::vector<int>& tags,
                             const CrfParams& params) {
  params.check(emissions);
  const int t_len = emissions->shape[0], k = params.num_tags();
  const double gold = crf_path_score(emissions, tags, params);

  // Forward and backward tables in log space.
  auto alpha = std::make_shared<std::vector<double>>(static_cast<std::size_t>(t_len) * k);
  auto beta = std::make_shared<std::vector<double>>(static_cast<std::size_t>(t_len) * k);
  std::vector<double> tmp(k);
  for (int j = 0; j < k; ++j) (*alpha)[j] = params.start->v[j] + emissions->at(0, j);
  for (int t = 1; t < t_len; ++t)
    for (int j = 0; j < k; ++j) {
      for (int i = 0; i < k; ++i)
        tmp[i] = (*alpha)[static_cast<std::size_t>(t - 1) * k + i] + params.transitions->at(i, j);
      (*alpha)[static_cast<std::size_t>(t) * k + j] = logsumexp(tmp) + emissions->at(t, j);
    }
  for (int j = 0; j < k; ++j)
    (*beta)[static_cast<std::size_t>(t_len - 1) * k + j] = params.end->v[j];
  for (int t = t_len - 2; t >= 0; --t)
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j)
        tmp[j] = params.transitions->at(i, j) + emissions->at(t + 1, j) +
                 (*beta)[static_cast<std::size_t>(t + 1) * k + j];
      (*beta)[static_cast<std::size_t>(t) * k + i] = logsumexp(tmp);
    }
  for (int j = 0; j < k; ++j) tmp[j] = (*alpha)[static_cast<std::size_t>(t_len - 1) * k + j] +
                                       params.end->v[j];
  const double log_z = logsumexp(tmp);

  const bool rg = emissions->requires_grad || params.transitions->requires_grad ||
                  params.start->requires_grad || params.end->requires_grad;
  auto out = make_scalar(gold - log_z, rg);
  if (rg) {
    auto tags_copy = tags;
    auto em = emissions;
    auto p = params;
    g.record([em, p, out, alpha, beta, tags_copy, t_len, k, log_z] {
      const double go = out->grad[0];
      // Unary marginals.
      for (int t = 0; t < t_len; ++t)
        for (int j = 0; j < k; ++j) {
          const double m = std::exp((*alpha)[static_cast<std::size_t>(t) * k + j] +
                                    (*beta)[static_cast<std::size_t>(t) * k + j] - log_z);
          const double ind = tags_copy[t] == j ? 1.0 : 0.0;
          if (em->requires_grad)
            em->grad[static_cast<std::size_t>(t) * k + j] += go * (ind - m);
          if (t == 0 && p.start->requires_grad) p.start->grad[j] += go * (ind - m);
          if (t == t_len - 1 && p.end->requires_grad) p.end->grad[j] += go * (ind - m);
        }
      // Pairwise marginals for transitions.
      if (p.transitions->requires_grad) {
        for (int t = 0; t + 1 < t_len; ++t)
          for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
              const double m = std::exp((*alpha)[static_cast<std::size_t>(t) * k + i] +
                                        p.transitions->at(i, j) + em->at(t + 1, j) +
                                        (*beta)[static_cast<std::size_t>(t + 1) * k + j] - log_z);
              const double ind =
                  (tags_copy[t] == i && tags_copy[t + 1] == j) ? 1.0 : 0.0;
              p.transitions->grad[static_cast<std::size_t>(i) * k + j] += go * (ind - m);
            }
      }
    });
  }
  return out;
}

std::pair<std::vector<int>, double> crf_viterbi(const TensorPtr& emissions,
                                                const CrfParams& params) {
  params.check(emissions);
  const int t_len = emissions->shape[0], k = params.num_tags();
  std::vector<double> best(k);
  std::vector<std::vector<int>> back(t_len, std::vector<int>(k, 0));
  for (int j = 0; j < k; ++j) best[j] = params.start->v[j] + emissions->at(0, j);
  std::vector<double> next(k);
  for (int t = 1; t < t_len; ++t) {
    for (int j = 0; j < k; ++j) {
      int arg = 0;
      double mx = best[0] + params.transitions->at(0, j);
      for (int i = 1; i < k; ++i) {
        const double s = best[i] + params.transitions->at(i, j);
        if (s > mx) {  // strict: ties keep the lower tag id
          mx = s;
          arg = i;
        }
      }
      next[j] = mx + emissions->at(t, j);
      back[t][j] = arg;
    }
    best = next;
  }
  int arg = 0;
  double mx = best[0] + params.end->v[0];
  for (int j = 1; j < k; ++j) {
    const double s = best[j] + params.end->v[j];
    if (s > mx) {
      mx = s;
      arg = j;
    }
  }
  std::vector<int> path(t_len);
  path[t_len - 1] = arg;
  for (int t = t_len - 1; t > 0; --t) path[t - 1] = back[t][path[t]];
  return {path, mx};
}

double crf_brute_force_log_partition(const TensorPtr& emissions, const CrfParams& params) {
  params.check(emissions);
  const int t_len = emissions->shape[0], k = params.num_tags();
  std::vector<int> path(t_len, 0);
  std::vector<double> scores;
  while (true) {
    scores.push_back(crf_path_score(emissions, path, params));
    int pos = t_len - 1;
    while (pos >= 0 && ++path[pos] == k) path[pos--] = 0;
    if (pos < 0) break;
  }
  return logsumexp(scores);
}

std::pair<std::vector<int>, double> crf_brute_force_best_path(const TensorPtr& emissions,
                                                              const CrfParams& params) {
  params.check(emissions);
  const int t_len = emissions->shape[0], k = params.num_tags();
  std::vector<int> path(t_len, 0), best_path;
  double best = -1e300;
  while (true) {
    const double s = crf_path_score(emissions, path, params);
    if (s > best) {
      best = s;
      best_path = path;
    }
    int pos = t_len - 1;
    while (pos >= 0 && ++path[pos] == k) path[pos--] = 0;
    if (pos < 0) break;
  }
  return {best_path, best};
}

}  // namespace slu
