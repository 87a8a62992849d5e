#include "inoc/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

#include "inoc/errors.hpp"
#include "inoc/rng.hpp"
#include "inoc/text.hpp"

namespace inoc {

namespace {

constexpr double kRankThreshold = 1e-9;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// log e[l][n] over eigenvalue prefixes; log-space so that large-N prefixes
// cannot overflow (e.g. choosing 1500 of 2000 near-unit eigenvalues).
std::vector<double> log_esp_table(const std::vector<double>& lambda, std::size_t k_max) {
  const std::size_t n = lambda.size();
  std::vector<double> table((k_max + 1) * (n + 1), kNegInf);
  auto at = [&](std::size_t k, std::size_t m) -> double& { return table[k * (n + 1) + m]; };
  for (std::size_t m = 0; m <= n; ++m) at(0, m) = 0.0;  // log 1
  for (std::size_t k = 1; k <= k_max; ++k) {
    for (std::size_t m = 1; m <= n; ++m) {
      double with = (lambda[m - 1] > 0.0)
                        ? std::log(lambda[m - 1]) + at(k - 1, m - 1)
                        : kNegInf;
      at(k, m) = log_add_exp(at(k, m - 1), with);
    }
  }
  return table;
}

// Phase 1: choose exactly k eigenvector indices, eigenvalue n included with
// probability lambda_n * e[l-1][n-1] / e[l][n].
std::vector<std::size_t> select_eigenvectors(const std::vector<double>& lambda,
                                             std::size_t k, Rng& rng) {
  const std::size_t n = lambda.size();
  std::vector<double> loge = log_esp_table(lambda, k);
  auto at = [&](std::size_t kk, std::size_t m) { return loge[kk * (n + 1) + m]; };

  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  std::size_t need = k;
  for (std::size_t m = n; m > 0 && need > 0; --m) {
    double p;
    if (need == m) {
      p = 1.0;  // must take everything that remains
    } else if (lambda[m - 1] <= 0.0 || at(need, m) == kNegInf) {
      p = 0.0;
    } else {
      p = std::exp(std::log(lambda[m - 1]) + at(need - 1, m - 1) - at(need, m));
    }
    if (rng.uniform() < p) {
      chosen.push_back(m - 1);
      --need;
    }
  }
  return chosen;
}

// Phase 2: sample a projection DPP with marginal kernel V V^T by the chain
// rule on determinants; each step picks an item with probability
// proportional to its residual leverage and then conditions on it.
std::vector<std::size_t> sample_projection_dpp(const EigenSystem& es,
                                               const std::vector<std::size_t>& cols,
                                               Rng& rng) {
  const std::size_t n = es.n;
  const std::size_t k = cols.size();
  std::vector<double> residual(n, 0.0);
  for (std::size_t c : cols)
    for (std::size_t i = 0; i < n; ++i) residual[i] += es.vec(c, i) * es.vec(c, i);

  std::vector<std::vector<double>> feats;  // conditional Cholesky columns
  feats.reserve(k);
  std::vector<std::size_t> picked;
  picked.reserve(k);

  for (std::size_t step = 0; step < k; ++step) {
    double total = 0.0;
    for (double r : residual) total += r;
    if (total <= 0.0) throw RankDeficientError(k, picked.size());

    double u = rng.uniform() * total;
    std::size_t j = n - 1;
    double csum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      csum += residual[i];
      if (u < csum) {
        j = i;
        break;
      }
    }
    if (residual[j] <= 0.0) {
      // Cumulative-walk overrun onto an exhausted item; take the best live one.
      j = static_cast<std::size_t>(
          std::max_element(residual.begin(), residual.end()) - residual.begin());
    }

    // Column j of K = V V^T, conditioned on everything picked so far.
    std::vector<double> col(n, 0.0);
    for (std::size_t c : cols) {
      double vj = es.vec(c, j);
      if (vj == 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) col[i] += es.vec(c, i) * vj;
    }
    for (const auto& f : feats) {
      double fj = f[j];
      if (fj == 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) col[i] -= f[i] * fj;
    }
    double norm = std::sqrt(std::max(residual[j], 0.0));
    for (double& v : col) v /= norm;

    for (std::size_t i = 0; i < n; ++i) {
      residual[i] -= col[i] * col[i];
      if (residual[i] < 0.0) residual[i] = 0.0;
    }
    residual[j] = 0.0;
    feats.push_back(std::move(col));
    picked.push_back(j);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

}  // namespace

Kernel build_kernel(const std::vector<std::string>& items, const FeaturizerConfig& config) {
  if (items.empty()) throw ValidationError("build_kernel requires at least one item");

  // Sparse n-gram count vectors, L2-normalized, as sorted (feature id, weight).
  std::map<std::string, std::size_t> vocab;
  std::vector<std::vector<std::pair<std::size_t, double>>> vecs(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::map<std::string, double> counts;
    std::string padded = "^" + to_lower(items[i]) + "$";
    if (padded.size() >= config.ngram) {
      for (std::size_t p = 0; p + config.ngram <= padded.size(); ++p) {
        counts[padded.substr(p, config.ngram)] += 1.0;
      }
    }
    double norm = 0.0;
    for (const auto& [g, c] : counts) norm += c * c;
    norm = std::sqrt(norm);
    for (const auto& [g, c] : counts) {
      auto [it, _] = vocab.emplace(g, vocab.size());
      vecs[i].emplace_back(it->second, norm > 0 ? c / norm : 0.0);
    }
    std::sort(vecs[i].begin(), vecs[i].end());
  }

  Kernel k;
  k.size = items.size();
  k.entries.assign(k.size * k.size, 0.0);
  for (std::size_t i = 0; i < k.size; ++i) {
    k.at(i, i) = 1.0;
    for (std::size_t j = i + 1; j < k.size; ++j) {
      double dot = 0.0;
      auto a = vecs[i].begin();
      auto b = vecs[j].begin();
      while (a != vecs[i].end() && b != vecs[j].end()) {
        if (a->first == b->first) {
          dot += a->second * b->second;
          ++a;
          ++b;
        } else if (a->first < b->first) {
          ++a;
        } else {
          ++b;
        }
      }
      k.at(i, j) = dot;
      k.at(j, i) = dot;
    }
  }
  return k;
}

ESPTable elementary_symmetric(const std::vector<double>& eigenvalues, std::size_t k_max) {
  const std::size_t n = eigenvalues.size();
  if (k_max > n) throw ValidationError("elementary_symmetric: k_max exceeds eigenvalue count");
  ESPTable t;
  t.k_max = k_max;
  t.n = n;
  t.e.assign((k_max + 1) * (n + 1), 0.0);
  for (std::size_t m = 0; m <= n; ++m) t.e[m] = 1.0;  // e[0][m] = 1
  for (std::size_t k = 1; k <= k_max; ++k) {
    for (std::size_t m = 1; m <= n; ++m) {
      t.e[k * (n + 1) + m] =
          t.e[k * (n + 1) + (m - 1)] + eigenvalues[m - 1] * t.e[(k - 1) * (n + 1) + (m - 1)];
    }
  }
  return t;
}

std::size_t kernel_rank(const EigenSystem& es) {
  std::size_t rank = 0;
  for (double v : es.values) {
    if (v > kRankThreshold) ++rank;
  }
  return rank;
}

std::vector<std::size_t> sample_k_dpp(const EigenSystem& es, std::size_t k,
                                      std::uint64_t seed) {
  if (k == 0) throw ValidationError("sample_k_dpp requires k >= 1");
  std::size_t rank = kernel_rank(es);
  if (k > rank) throw RankDeficientError(k, rank);

  // Only the spectrum above the rank threshold participates.
  std::vector<double> lambda;
  std::vector<std::size_t> live_cols;
  for (std::size_t j = 0; j < es.n; ++j) {
    if (es.values[j] > kRankThreshold) {
      lambda.push_back(es.values[j]);
      live_cols.push_back(j);
    }
  }

  Rng rng(seed);
  std::vector<std::size_t> picked_eigs = select_eigenvectors(lambda, k, rng);
  std::vector<std::size_t> cols;
  cols.reserve(k);
  for (std::size_t p : picked_eigs) cols.push_back(live_cols[p]);
  return sample_projection_dpp(es, cols, rng);
}

std::vector<std::size_t> sample_k_dpp(const Kernel& kernel, std::size_t k,
                                      std::uint64_t seed) {
  return sample_k_dpp(eigen_symmetric(kernel), k, seed);
}

std::vector<std::size_t> greedy_map(const Kernel& kernel, std::size_t k) {
  const std::size_t n = kernel.size;
  if (k > n) throw ValidationError("greedy_map: k exceeds kernel size");

  // Incremental Cholesky: residual[i] is the det gain of adding item i.
  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) residual[i] = kernel.at(i, i);
  std::vector<bool> chosen(n, false);
  std::vector<std::vector<double>> feats;
  std::vector<std::size_t> picked;
  picked.reserve(k);

  for (std::size_t step = 0; step < k; ++step) {
    std::size_t best = n;
    double best_gain = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!chosen[i] && residual[i] > best_gain) {
        best = i;
        best_gain = residual[i];
      }
    }
    chosen[best] = true;
    picked.push_back(best);

    if (best_gain <= kRankThreshold) continue;  // rank exhausted; gains are all zero

    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = kernel.at(i, best);
    for (const auto& f : feats) {
      double fb = f[best];
      if (fb == 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) col[i] -= f[i] * fb;
    }
    double norm = std::sqrt(best_gain);
    for (double& v : col) v /= norm;
    for (std::size_t i = 0; i < n; ++i) {
      residual[i] -= col[i] * col[i];
      if (residual[i] < 0.0) residual[i] = 0.0;
    }
    feats.push_back(std::move(col));
  }
  return picked;
}

void dump_kernel_csv(const Kernel& kernel, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write kernel CSV: " + path);
  char buf[64];
  for (std::size_t i = 0; i < kernel.size; ++i) {
    for (std::size_t j = 0; j < kernel.size; ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", kernel.at(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace inoc
