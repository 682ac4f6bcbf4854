#include "pmc/fft.hpp"

#include <unordered_map>
#include <vector>

namespace pmc::fft {
namespace {

using C = std::complex<double>;

constexpr double pi = 3.14159265358979323846;

// Component-wise complex multiply; keeps the butterflies free of the
// NaN-propagating __muldc3 library call.
inline C cmul(const C a, const C b) {
  return C(a.real() * b.real() - a.imag() * b.imag(),
           a.real() * b.imag() + a.imag() * b.real());
}

struct Plan {
  Eigen::Index n = 0;
  bool pow2 = false;
  int log2n = 0;
  std::vector<int> factors;   // smallest first, non-pow2 path
  std::vector<C> fwd;         // exp(-2*pi*i*k/n), k in [0, n)
  std::vector<C> inv;         // conjugates
  std::vector<int> bitrev;    // pow2 path
  std::size_t scratch = 0;    // elements needed by the mixed-radix path
};

Plan make_plan(Eigen::Index n) {
  Plan p;
  p.n = n;
  p.fwd.resize(n);
  p.inv.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double a = -2.0 * pi * static_cast<double>(k) / static_cast<double>(n);
    p.fwd[k] = C(std::cos(a), std::sin(a));
    p.inv[k] = std::conj(p.fwd[k]);
  }
  p.pow2 = (n & (n - 1)) == 0;
  if (p.pow2) {
    while ((Eigen::Index{1} << p.log2n) < n) ++p.log2n;
    p.bitrev.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index r = 0;
      for (int b = 0; b < p.log2n; ++b) r |= ((i >> b) & 1) << (p.log2n - 1 - b);
      p.bitrev[i] = static_cast<int>(r);
    }
  } else {
    Eigen::Index m = n;
    int max_factor = 1;
    for (int f = 2; static_cast<Eigen::Index>(f) * f <= m; ++f) {
      while (m % f == 0) {
        p.factors.push_back(f);
        m /= f;
      }
    }
    if (m > 1) p.factors.push_back(static_cast<int>(m));
    for (int f : p.factors) max_factor = std::max(max_factor, f);
    p.scratch = static_cast<std::size_t>(n) + max_factor;
  }
  return p;
}

const Plan& plan_for(Eigen::Index n) {
  thread_local std::unordered_map<Eigen::Index, Plan> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_plan(n)).first;
  return it->second;
}

void pow2_transform(C* x, const Plan& plan, bool inverse) {
  const Eigen::Index n = plan.n;
  const C* tw = inverse ? plan.inv.data() : plan.fwd.data();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = plan.bitrev[i];
    if (i < j) std::swap(x[i], x[j]);
  }
  // First stage has unit twiddles.
  for (Eigen::Index base = 0; base + 1 < n; base += 2) {
    const C a = x[base];
    const C b = x[base + 1];
    x[base] = a + b;
    x[base + 1] = a - b;
  }
  for (Eigen::Index len = 4; len <= n; len <<= 1) {
    const Eigen::Index half = len >> 1;
    const Eigen::Index step = n / len;
    for (Eigen::Index base = 0; base < n; base += len) {
      Eigen::Index t = 0;
      for (Eigen::Index k = 0; k < half; ++k, t += step) {
        const C a = x[base + k];
        const C b = cmul(x[base + k + half], tw[t]);
        x[base + k] = a + b;
        x[base + k + half] = a - b;
      }
    }
  }
}

// Recursive decimation-in-time over the factor list. Writes the DFT of
// in[0], in[stride], ... into out[0..n). tw_stride maps exponents of W_n
// onto the full-size twiddle table.
void mixed_radix(const C* in, C* out, Eigen::Index n, Eigen::Index stride,
                 const C* tw, Eigen::Index tw_stride, const int* factors,
                 C* scratch) {
  const Eigen::Index p = *factors;
  const Eigen::Index m = n / p;
  if (m == 1) {
    for (Eigen::Index q = 0; q < p; ++q) out[q] = in[q * stride];
  } else {
    for (Eigen::Index q = 0; q < p; ++q)
      mixed_radix(in + q * stride, out + q * m, m, stride * p, tw,
                  tw_stride * p, factors + 1, scratch);
  }
  if (p == 2) {
    for (Eigen::Index k = 0; k < m; ++k) {
      const C a = out[k];
      const C b = cmul(out[m + k], tw[k * tw_stride]);
      out[k] = a + b;
      out[m + k] = a - b;
    }
    return;
  }
  C* t = scratch;
  for (Eigen::Index k = 0; k < m; ++k) {
    for (Eigen::Index q = 0; q < p; ++q) t[q] = out[q * m + k];
    for (Eigen::Index j = 0; j < p; ++j) {
      const Eigen::Index e = k + j * m;
      C acc = t[0];
      for (Eigen::Index q = 1; q < p; ++q)
        acc += cmul(t[q], tw[((q * e) % n) * tw_stride]);
      out[j * m + k] = acc;
    }
  }
}

void run(C* data, const Plan& plan, bool inverse, std::vector<C>& scratch) {
  if (plan.n == 1) return;
  if (plan.pow2) {
    pow2_transform(data, plan, inverse);
    return;
  }
  if (scratch.size() < plan.scratch) scratch.resize(plan.scratch);
  std::copy(data, data + plan.n, scratch.data());
  const C* tw = inverse ? plan.inv.data() : plan.fwd.data();
  mixed_radix(scratch.data(), data, plan.n, 1, tw, 1, plan.factors.data(),
              scratch.data() + plan.n);
}

std::vector<C>& local_scratch() {
  thread_local std::vector<C> s;
  return s;
}

void transform_rows(PlaneC& grid, bool inverse) {
  const Plan& plan = plan_for(grid.cols());
  auto& scratch = local_scratch();
  for (Eigen::Index r = 0; r < grid.rows(); ++r)
    run(grid.data() + r * grid.cols(), plan, inverse, scratch);
}

void transform_cols(PlaneC& grid, bool inverse) {
  const Eigen::Index rows = grid.rows();
  const Eigen::Index cols = grid.cols();
  const Plan& plan = plan_for(rows);
  auto& scratch = local_scratch();
  thread_local std::vector<C> column;
  if (column.size() < static_cast<std::size_t>(rows)) column.resize(rows);
  for (Eigen::Index c = 0; c < cols; ++c) {
    C* base = grid.data() + c;
    for (Eigen::Index r = 0; r < rows; ++r) column[r] = base[r * cols];
    run(column.data(), plan, inverse, scratch);
    for (Eigen::Index r = 0; r < rows; ++r) base[r * cols] = column[r];
  }
}

}  // namespace

void transform(std::complex<double>* data, Eigen::Index n, bool inverse) {
  if (n < 1) throw InvalidArgument("fft: transform length must be positive");
  run(data, plan_for(n), inverse, local_scratch());
}

void forward2d(PlaneC& grid) {
  transform_rows(grid, false);
  transform_cols(grid, false);
}

PlaneC forward2d(const PlaneD& real_input) {
  PlaneC grid = real_input.cast<C>();
  forward2d(grid);
  return grid;
}

void inverse2d(PlaneC& grid) {
  transform_rows(grid, true);
  transform_cols(grid, true);
  grid *= 1.0 / (static_cast<double>(grid.rows()) * static_cast<double>(grid.cols()));
}

}  // namespace pmc::fft
