#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

namespace vbpg::markov {

/// Square compressed-sparse-row matrix with sorted column indices.
struct CsrMatrix {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> col;
  std::vector<double> val;

  std::size_t nnz() const { return val.size(); }

  double at(std::size_t i, std::size_t j) const {
    auto b = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
    auto e = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
    auto it = std::lower_bound(b, e, static_cast<std::uint32_t>(j));
    return (it != e && *it == j) ? val[static_cast<std::size_t>(it - col.begin())] : 0.0;
  }

  double row_sum(std::size_t i) const {
    double s = 0.0;
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k];
    return s;
  }

  static CsrMatrix identity(std::size_t n) {
    CsrMatrix m;
    m.n = n;
    m.row_ptr.resize(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
      m.row_ptr[i + 1] = i + 1;
      m.col.push_back(static_cast<std::uint32_t>(i));
      m.val.push_back(1.0);
    }
    return m;
  }
};

/// Incremental row-by-row builder. Rows must be appended in order; entries
/// within a row may come in any order and duplicates are summed.
class CsrBuilder {
 public:
  explicit CsrBuilder(std::size_t n) { m_.n = n; m_.row_ptr.reserve(n + 1); }

  void add_row(std::vector<std::pair<std::uint32_t, double>> entries) {
    std::sort(entries.begin(), entries.end(), [](auto& a, auto& b) { return a.first < b.first; });
    for (std::size_t k = 0; k < entries.size(); ++k) {
      if (!m_.col.empty() && m_.row_ptr.back() < m_.col.size() && m_.col.back() == entries[k].first) {
        m_.val.back() += entries[k].second;
        continue;
      }
      m_.col.push_back(entries[k].first);
      m_.val.push_back(entries[k].second);
    }
    m_.row_ptr.push_back(m_.col.size());
  }

  CsrMatrix finish() && { return std::move(m_); }

 private:
  CsrMatrix m_;
};

/// Gustavson row-wise product with a dense accumulator. Accumulation order is
/// fixed by the input ordering, so results are bit-reproducible.
inline CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b) {
  const std::size_t n = a.n;
  CsrMatrix c;
  c.n = n;
  c.row_ptr.assign(1, 0);
  std::vector<double> acc(n, 0.0);
  std::vector<char> used(n, 0);
  std::vector<std::uint32_t> touched;
  touched.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    touched.clear();
    for (std::size_t ka = a.row_ptr[i]; ka < a.row_ptr[i + 1]; ++ka) {
      const std::uint32_t k = a.col[ka];
      const double aik = a.val[ka];
      for (std::size_t kb = b.row_ptr[k]; kb < b.row_ptr[k + 1]; ++kb) {
        const std::uint32_t j = b.col[kb];
        if (!used[j]) {
          used[j] = 1;
          touched.push_back(j);
        }
        acc[j] += aik * b.val[kb];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (std::uint32_t j : touched) {
      c.col.push_back(j);
      c.val.push_back(acc[j]);
      acc[j] = 0.0;
      used[j] = 0;
    }
    c.row_ptr.push_back(c.col.size());
  }
  return c;
}

/// P^steps by binary exponentiation: floor(log2 n) squarings plus one
/// product per set bit, so exactly `steps` transitions are taken.
inline CsrMatrix power(const CsrMatrix& p, unsigned steps) {
  CsrMatrix result = CsrMatrix::identity(p.n);
  CsrMatrix base = p;
  bool first = true;
  while (steps > 0) {
    if (steps & 1u) {
      result = first ? base : multiply(result, base);
      first = false;
    }
    steps >>= 1u;
    if (steps > 0) base = multiply(base, base);
  }
  return result;
}

inline std::vector<double> multiply(const CsrMatrix& a, std::span<const double> x) {
  std::vector<double> y(a.n, 0.0);
  for (std::size_t i = 0; i < a.n; ++i) {
    double s = 0.0;
    for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) s += a.val[k] * x[a.col[k]];
    y[i] = s;
  }
  return y;
}

}  // namespace vbpg::markov
