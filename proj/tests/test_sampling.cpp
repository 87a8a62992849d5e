#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "inoc/errors.hpp"
#include "inoc/rng.hpp"
#include "inoc/sampling.hpp"
#include "test_support.hpp"

using namespace inoc;

namespace {

// Brute-force determinant (Gaussian elimination, partial pivoting).
double brute_det(std::vector<std::vector<double>> m) {
  const std::size_t n = m.size();
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(m[r][c]) > std::abs(m[pivot][c])) pivot = r;
    }
    if (std::abs(m[pivot][c]) < 1e-14) return 0.0;
    if (pivot != c) {
      std::swap(m[pivot], m[c]);
      det = -det;
    }
    det *= m[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      double factor = m[r][c] / m[c][c];
      for (std::size_t cc = c; cc < n; ++cc) m[r][cc] -= factor * m[c][cc];
    }
  }
  return det;
}

double subset_det(const Kernel& k, const std::vector<std::size_t>& subset) {
  std::vector<std::vector<double>> sub(subset.size(),
                                       std::vector<double>(subset.size()));
  for (std::size_t i = 0; i < subset.size(); ++i)
    for (std::size_t j = 0; j < subset.size(); ++j)
      sub[i][j] = k.at(subset[i], subset[j]);
  return brute_det(sub);
}

std::vector<std::vector<std::size_t>> subsets_of_size(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (cur.size() == k) {
      out.push_back(cur);
      return;
    }
    for (std::size_t i = start; i < n; ++i) {
      cur.push_back(i);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

// Correlated PSD test kernel: scaled Kac-Murdock-Szego matrix.
Kernel test_kernel_6() {
  Kernel k;
  k.size = 6;
  k.entries.resize(36);
  const double diag[6] = {1.0, 1.1, 1.2, 1.3, 1.4, 1.5};
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      double base = std::pow(0.5, static_cast<double>(i > j ? i - j : j - i));
      k.at(i, j) = diag[i] * base * diag[j];
    }
  }
  return k;
}

}  // namespace

TEST_CASE("build_kernel: identical items have similarity 1") {
  Kernel k = build_kernel({"same text", "same text", "other words"});
  CHECK(k.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(k.at(0, 0) == 1.0);
  CHECK(k.at(2, 2) == 1.0);
}

TEST_CASE("build_kernel: disjoint trigram sets are orthogonal") {
  Kernel k = build_kernel({"aaaa", "bbbb"});
  CHECK(k.at(0, 1) == 0.0);
}

TEST_CASE("build_kernel: eigenvalues are nonnegative within tolerance") {
  Dataset ds = test::synthetic_corpus(40, 3, true);
  std::vector<std::string> items;
  for (const auto& ex : ds.examples) items.push_back(ex.hypothesis);
  Kernel k = build_kernel(items);
  EigenSystem es = eigen_symmetric(k);
  for (double v : es.values) CHECK(v >= 0.0);
}

TEST_CASE("build_kernel: permuting items conjugates the kernel") {
  std::vector<std::string> items = {"alpha bravo", "charlie delta", "echo foxtrot",
                                    "golf hotel"};
  std::vector<std::size_t> perm = {2, 0, 3, 1};
  std::vector<std::string> permuted;
  for (std::size_t p : perm) permuted.push_back(items[p]);
  Kernel a = build_kernel(items);
  Kernel b = build_kernel(permuted);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(b.at(i, j) == doctest::Approx(a.at(perm[i], perm[j])).epsilon(1e-12));
}

TEST_CASE("elementary_symmetric: first-degree row is the eigenvalue sum") {
  std::vector<double> lambda = {0.5, 1.25, 2.0, 3.5};
  ESPTable t = elementary_symmetric(lambda, 2);
  CHECK(t.at(0, 4) == 1.0);
  CHECK(t.at(1, 4) == doctest::Approx(7.25).epsilon(1e-12));
}

TEST_CASE("elementary_symmetric: product case {2,3} k=2") {
  ESPTable t = elementary_symmetric({2.0, 3.0}, 2);
  CHECK(t.at(2, 2) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("elementary_symmetric: zero above the prefix length") {
  ESPTable t = elementary_symmetric({1.0, 2.0, 3.0}, 3);
  CHECK(t.at(2, 1) == 0.0);
  CHECK(t.at(3, 2) == 0.0);
}

TEST_CASE("elementary_symmetric: matches brute-force subset sums for N <= 10") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t n = 2 + rng.below(9);  // 2..10
    std::vector<double> lambda;
    for (std::size_t i = 0; i < n; ++i) lambda.push_back(rng.uniform() * 3.0);
    ESPTable t = elementary_symmetric(lambda, n);
    for (std::size_t k = 0; k <= n; ++k) {
      double expected = 0.0;
      for (const auto& subset : subsets_of_size(n, k)) {
        double prod = 1.0;
        for (std::size_t idx : subset) prod *= lambda[idx];
        expected += prod;
      }
      CHECK(t.at(k, n) == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("eigensolvers: Jacobi and tridiagonal agree on random PSD matrices") {
  Rng rng(7);
  for (std::size_t n : {3u, 8u, 17u, 33u}) {
    // Random Gram matrix (PSD by construction).
    std::vector<std::vector<double>> b(n, std::vector<double>(n));
    for (auto& row : b)
      for (auto& v : row) v = rng.uniform() * 2.0 - 1.0;
    std::vector<double> m(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double dot = 0.0;
        for (std::size_t k = 0; k < n; ++k) dot += b[i][k] * b[j][k];
        m[i * n + j] = dot;
      }
    EigenSystem ja = eigen_symmetric_jacobi(m, n);
    EigenSystem tq = eigen_symmetric_tridiagonal(m, n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(ja.values[i] == doctest::Approx(tq.values[i]).epsilon(1e-7));
    }
    // Both reconstruct the input: ||V diag(w) V^T - M||_max small.
    for (const EigenSystem& es : {ja, tq}) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          double rec = 0.0;
          for (std::size_t c = 0; c < n; ++c) {
            rec += es.values[c] * es.vec(c, i) * es.vec(c, j);
          }
          CHECK(rec == doctest::Approx(m[i * n + j]).epsilon(1e-6));
        }
      }
    }
  }
}

TEST_CASE("sample_k_dpp: k = N with full rank returns everything") {
  Kernel k = test_kernel_6();
  auto s = sample_k_dpp(k, 6, 123);
  REQUIRE(s.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(s[i] == i);
}

TEST_CASE("sample_k_dpp: k = 1 draws proportional to the diagonal") {
  Kernel k;
  k.size = 3;
  k.entries = {4.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0};
  std::size_t hits[3] = {0, 0, 0};
  const int draws = 30000;
  for (int i = 0; i < draws; ++i) {
    auto s = sample_k_dpp(k, 1, 1000 + static_cast<std::uint64_t>(i));
    ++hits[s[0]];
  }
  // Expected 4/6, 1/6, 1/6.
  CHECK(std::abs(hits[0] / double(draws) - 4.0 / 6.0) < 0.02);
  CHECK(std::abs(hits[1] / double(draws) - 1.0 / 6.0) < 0.02);
  CHECK(std::abs(hits[2] / double(draws) - 1.0 / 6.0) < 0.02);
}

TEST_CASE("sample_k_dpp: deterministic in (kernel, k, seed)") {
  Kernel k = test_kernel_6();
  auto a = sample_k_dpp(k, 3, 42);
  auto b = sample_k_dpp(k, 3, 42);
  auto c = sample_k_dpp(k, 3, 43);
  CHECK(a == b);
  CHECK(a.size() == 3);
  // Different seeds eventually differ (not guaranteed per draw; check many).
  bool any_diff = (a != c);
  for (std::uint64_t s = 44; !any_diff && s < 64; ++s) {
    any_diff = (sample_k_dpp(k, 3, s) != a);
  }
  CHECK(any_diff);
}

TEST_CASE("sample_k_dpp: always k distinct in-range indices") {
  Kernel k = test_kernel_6();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    for (std::size_t kk = 1; kk <= 6; ++kk) {
      auto s = sample_k_dpp(k, kk, seed);
      REQUIRE(s.size() == kk);
      std::set<std::size_t> uniq(s.begin(), s.end());
      CHECK(uniq.size() == kk);
      for (std::size_t idx : s) CHECK(idx < 6);
    }
  }
}

TEST_CASE("sample_k_dpp: rank deficiency is rejected with (k, rank)") {
  Kernel k;
  k.size = 3;
  // Rank 1: all rows identical.
  k.entries = {1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  try {
    sample_k_dpp(k, 2, 5);
    FAIL("expected RankDeficientError");
  } catch (const RankDeficientError& e) {
    CHECK(e.k == 2);
    CHECK(e.rank == 1);
  }
}

TEST_CASE("sample_k_dpp: permutation equivariance of subset frequencies") {
  std::vector<std::string> items = {"aaa bbb", "ccc ddd", "eee fff", "ggg hhh"};
  std::vector<std::size_t> perm = {3, 1, 0, 2};
  std::vector<std::string> permuted;
  for (std::size_t p : perm) permuted.push_back(items[p]);

  // The trigram kernel of these items is near-diagonal; add correlation by
  // overlapping tokens so the test is not vacuous.
  items[1] = "aaa ddd";
  permuted[static_cast<std::size_t>(
      std::find(perm.begin(), perm.end(), 1) - perm.begin())] = "aaa ddd";

  Kernel a = build_kernel(items);
  Kernel b = build_kernel(permuted);
  std::map<std::vector<std::size_t>, int> freq_a, freq_b;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    auto sa = sample_k_dpp(a, 2, 10000 + static_cast<std::uint64_t>(i));
    freq_a[sa] += 1;
    auto sb = sample_k_dpp(b, 2, 10000 + static_cast<std::uint64_t>(i));
    // Map back through the permutation.
    std::vector<std::size_t> mapped;
    for (std::size_t idx : sb) mapped.push_back(perm[idx]);
    std::sort(mapped.begin(), mapped.end());
    freq_b[mapped] += 1;
  }
  double tv = 0.0;
  for (const auto& [subset, count] : freq_a) {
    tv += std::abs(count - freq_b[subset]) / double(draws);
  }
  for (const auto& [subset, count] : freq_b) {
    if (!freq_a.count(subset)) tv += count / double(draws);
  }
  CHECK(tv / 2.0 < 0.03);
}

TEST_CASE("greedy_map: k = 1 picks the diagonal argmax") {
  Kernel k;
  k.size = 3;
  k.entries = {0.5, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0};
  auto s = greedy_map(k, 1);
  REQUIRE(s.size() == 1);
  CHECK(s[0] == 1);
}

TEST_CASE("greedy_map: identity kernel ties break to lowest index") {
  Kernel k;
  k.size = 5;
  k.entries.assign(25, 0.0);
  for (std::size_t i = 0; i < 5; ++i) k.at(i, i) = 1.0;
  auto s = greedy_map(k, 3);
  CHECK(s == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("greedy_map: greedy log-det never beats the exhaustive maximum") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::size_t n = 4 + rng.below(3);  // 4..6
    std::vector<std::string> items;
    for (std::size_t i = 0; i < n; ++i) {
      std::string s;
      for (int c = 0; c < 6; ++c) s.push_back(static_cast<char>('a' + rng.below(10)));
      items.push_back(s);
    }
    Kernel k = build_kernel(items);
    for (std::size_t kk = 1; kk <= 3; ++kk) {
      auto picked = greedy_map(k, kk);
      std::vector<std::size_t> sorted_pick = picked;
      std::sort(sorted_pick.begin(), sorted_pick.end());
      double greedy_det = subset_det(k, sorted_pick);
      double best = 0.0;
      for (const auto& subset : subsets_of_size(n, kk)) {
        best = std::max(best, subset_det(k, subset));
      }
      CHECK(greedy_det <= best + 1e-9);
    }
  }
}

TEST_CASE("kernel CSV dump: row-major, 9 significant digits") {
  test::TempDir tmp("kernel_csv");
  Kernel k;
  k.size = 2;
  k.entries = {1.0, 0.123456789123, 0.123456789123, 1.0};
  dump_kernel_csv(k, tmp.file("k.csv"));
  std::string contents = test::read_file(tmp.file("k.csv"));
  CHECK(contents == "1,0.123456789\n0.123456789,1\n");
}
