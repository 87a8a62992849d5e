#ifndef INOC_SAMPLING_HPP
#define INOC_SAMPLING_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace inoc {

// Dense symmetric PSD similarity kernel.
struct Kernel {
  std::size_t size = 0;
  std::vector<double> entries;  // row-major, size*size

  double at(std::size_t i, std::size_t j) const { return entries[i * size + j]; }
  double& at(std::size_t i, std::size_t j) { return entries[i * size + j]; }
};

// Eigendecomposition of a symmetric matrix. values are ascending;
// column j of `vectors` (vectors[j*n + i]) pairs with values[j].
struct EigenSystem {
  std::size_t n = 0;
  std::vector<double> values;
  std::vector<double> vectors;

  double vec(std::size_t col, std::size_t row) const { return vectors[col * n + row]; }
};

// Cyclic Jacobi rotations for small matrices (convergence: off-diagonal
// Frobenius norm < 1e-10); Householder tridiagonalization + implicit-shift
// QL above the size cutoff, where Jacobi's per-sweep cost is impractical.
EigenSystem eigen_symmetric(const Kernel& kernel);
EigenSystem eigen_symmetric_jacobi(const std::vector<double>& matrix, std::size_t n);
EigenSystem eigen_symmetric_tridiagonal(const std::vector<double>& matrix, std::size_t n);

struct FeaturizerConfig {
  std::size_t ngram = 3;
};

// Gram matrix of L2-normalized character n-gram count vectors; diagonal
// forced to exactly 1.
Kernel build_kernel(const std::vector<std::string>& items,
                    const FeaturizerConfig& config = {});

// e[k][n] = elementary symmetric polynomial of degree k over the first n
// eigenvalues; e[0][n] = 1, e[k][n] = 0 for k > n.
struct ESPTable {
  std::size_t k_max = 0;
  std::size_t n = 0;
  std::vector<double> e;  // (k_max+1) x (n+1)

  double at(std::size_t k, std::size_t n_prefix) const { return e[k * (n + 1) + n_prefix]; }
};

ESPTable elementary_symmetric(const std::vector<double>& eigenvalues, std::size_t k_max);

// Number of eigenvalues above the rank threshold (1e-9).
std::size_t kernel_rank(const EigenSystem& es);

// Exact fixed-size DPP sample: k distinct indices (ascending) drawn with
// probability proportional to det(L_S). Throws RankDeficientError when
// k exceeds the kernel rank.
std::vector<std::size_t> sample_k_dpp(const Kernel& kernel, std::size_t k,
                                      std::uint64_t seed);

// Same but reusing a precomputed eigendecomposition (for repeated draws).
std::vector<std::size_t> sample_k_dpp(const EigenSystem& es, std::size_t k,
                                      std::uint64_t seed);

// Deterministic greedy log-det maximization; ties broken by lowest index.
std::vector<std::size_t> greedy_map(const Kernel& kernel, std::size_t k);

// Debug dump: row-major CSV, 9 significant digits.
void dump_kernel_csv(const Kernel& kernel, const std::string& path);

}  // namespace inoc

#endif
