// Self-contained symmetric eigensolvers. The tridiagonal pair follows the
// classic EISPACK tred2/tql2 formulation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "inoc/errors.hpp"
#include "inoc/sampling.hpp"

namespace inoc {

namespace {

constexpr std::size_t kJacobiCutoff = 96;

void sort_ascending(EigenSystem& es) {
  const std::size_t n = es.n;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return es.values[a] < es.values[b]; });
  std::vector<double> values(n);
  std::vector<double> vectors(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    values[j] = es.values[order[j]];
    for (std::size_t i = 0; i < n; ++i) vectors[j * n + i] = es.vectors[order[j] * n + i];
  }
  es.values = std::move(values);
  es.vectors = std::move(vectors);
}

}  // namespace

EigenSystem eigen_symmetric_jacobi(const std::vector<double>& matrix, std::size_t n) {
  std::vector<double> a = matrix;  // row-major working copy
  EigenSystem es;
  es.n = n;
  es.vectors.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) es.vectors[i * n + i] = 1.0;  // column-major identity

  auto off_norm = [&]() {
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) s += 2.0 * a[p * n + q] * a[p * n + q];
    return std::sqrt(s);
  };

  const double tol = 1e-10;
  for (int sweep = 0; sweep < 100 && off_norm() >= tol; ++sweep) {
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        double app = a[p * n + p];
        double aqq = a[q * n + q];
        double theta = (aqq - app) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;

        for (std::size_t i = 0; i < n; ++i) {
          double aip = a[i * n + p];
          double aiq = a[i * n + q];
          a[i * n + p] = c * aip - s * aiq;
          a[i * n + q] = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          double api = a[p * n + i];
          double aqi = a[q * n + i];
          a[p * n + i] = c * api - s * aqi;
          a[q * n + i] = s * api + c * aqi;
        }
        // Eigenvector columns p and q rotate the same way.
        for (std::size_t i = 0; i < n; ++i) {
          double vip = es.vectors[p * n + i];
          double viq = es.vectors[q * n + i];
          es.vectors[p * n + i] = c * vip - s * viq;
          es.vectors[q * n + i] = s * vip + c * viq;
        }
      }
    }
  }

  es.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) es.values[i] = a[i * n + i];
  sort_ascending(es);
  return es;
}

EigenSystem eigen_symmetric_tridiagonal(const std::vector<double>& matrix, std::size_t n) {
  // Reduction works on the row-major symmetric matrix; hot loops are
  // arranged so the inner index walks a contiguous row.
  std::vector<double> V = matrix;
  std::vector<double> d(n, 0.0), e(n, 0.0);

  // --- Householder reduction (tred2) ---
  for (std::size_t j = 0; j < n; ++j) d[j] = V[(n - 1) * n + j];
  for (std::size_t i = n - 1; i > 0; --i) {
    double scale = 0.0, h = 0.0;
    for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = V[(i - 1) * n + j];
        V[i * n + j] = 0.0;
        V[j * n + i] = 0.0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;

      // e[0..i-1] = A d over the lower triangle; store the Householder
      // vector in column i.
      for (std::size_t j = 0; j < i; ++j) V[j * n + i] = d[j];
      for (std::size_t k = 0; k < i; ++k) {
        const double dk = d[k];
        const double* rowk = &V[k * n];
        double acc = rowk[k] * dk;
        for (std::size_t j = 0; j < k; ++j) {
          acc += rowk[j] * d[j];
          e[j] += rowk[j] * dk;
        }
        e[k] += acc;
      }
      f = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      double hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      // Rank-2 update of the lower triangle.
      for (std::size_t k = 0; k < i; ++k) {
        const double ek = e[k], dk = d[k];
        double* rowk = &V[k * n];
        for (std::size_t j = 0; j <= k; ++j) rowk[j] -= (d[j] * ek + e[j] * dk);
      }
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = V[(i - 1) * n + j];
        V[i * n + j] = 0.0;
      }
    }
    d[i] = h;
  }

  // Accumulation and QL run on column-major storage (contiguous columns),
  // which is also the output layout.
  std::vector<double> Q(n * n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) Q[c * n + r] = V[r * n + c];

  for (std::size_t i = 0; i + 1 < n; ++i) {
    Q[i * n + (n - 1)] = Q[i * n + i];
    Q[i * n + i] = 1.0;
    double h = d[i + 1];
    double* col_next = &Q[(i + 1) * n];
    if (h != 0.0) {
      for (std::size_t k = 0; k <= i; ++k) d[k] = col_next[k] / h;
      for (std::size_t j = 0; j <= i; ++j) {
        double g = 0.0;
        double* col_j = &Q[j * n];
        for (std::size_t k = 0; k <= i; ++k) g += col_next[k] * col_j[k];
        for (std::size_t k = 0; k <= i; ++k) col_j[k] -= g * d[k];
      }
    }
    for (std::size_t k = 0; k <= i; ++k) col_next[k] = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = Q[j * n + (n - 1)];
    Q[j * n + (n - 1)] = 0.0;
  }
  Q[(n - 1) * n + (n - 1)] = 1.0;
  e[0] = 0.0;

  // --- Implicit-shift QL (tql2) ---
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  double f = 0.0, tst1 = 0.0;
  const double eps = std::ldexp(1.0, -52);
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n && std::abs(e[m]) > eps * tst1) ++m;
    if (m == n) m = n - 1;

    if (m > l) {
      int iter = 0;
      do {
        ++iter;
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0, c2 = c, c3 = c;
        double el1 = e[l + 1], s = 0.0, s2 = 0.0;
        for (std::size_t i = m; i-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = std::hypot(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          double* col_i = &Q[i * n];
          double* col_i1 = &Q[(i + 1) * n];
          for (std::size_t k = 0; k < n; ++k) {
            h = col_i1[k];
            col_i1[k] = s * col_i[k] + c * h;
            col_i[k] = c * col_i[k] - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1 && iter < 64);
    }
    d[l] += f;
    e[l] = 0.0;
  }

  EigenSystem es;
  es.n = n;
  es.values = std::move(d);
  es.vectors = std::move(Q);
  sort_ascending(es);
  return es;
}

EigenSystem eigen_symmetric(const Kernel& kernel) {
  const std::size_t n = kernel.size;
  if (n == 0) throw ValidationError("cannot decompose an empty kernel");
  // Symmetry gate per the kernel contract.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(kernel.at(i, j) - kernel.at(j, i)) > 1e-9) {
        throw ValidationError("kernel is not symmetric at (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
      }
    }
  }
  // Work on the symmetrized matrix so tiny asymmetries cannot bias results.
  std::vector<double> sym(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      sym[i * n + j] = 0.5 * (kernel.at(i, j) + kernel.at(j, i));

  EigenSystem es = (n <= kJacobiCutoff) ? eigen_symmetric_jacobi(sym, n)
                                        : eigen_symmetric_tridiagonal(sym, n);
  // Clamp floating-point noise at zero (threshold 1e-9, scaled by the
  // spectral radius for large kernels); anything clearly below is a
  // genuinely indefinite matrix and gets rejected.
  const double spread = std::max(1.0, std::abs(es.values.back()));
  for (double& v : es.values) {
    if (v < 0.0) {
      if (v < -1e-9 * spread) {
        throw ValidationError("kernel is not positive semidefinite (eigenvalue " +
                              std::to_string(v) + ")");
      }
      v = 0.0;
    }
  }
  return es;
}

}  // namespace inoc
