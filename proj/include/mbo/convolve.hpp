#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include <fftw3.h>

#include "mbo/grid.hpp"
#include "mbo/kernels.hpp"

namespace mbo {

namespace detail {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace detail

// Periodic convolution on one grid spec through real-to-complex FFTs.
// Plans, buffers and the transform of the last kernels are reused.  An
// instance must not be used from two threads at once.
class Convolver {
 public:
  explicit Convolver(const GridSpec& spec) : spec_(spec) {
    n_ = static_cast<int>(spec.size());
    int last = spec.dim(spec.d() - 1);
    nc_ = static_cast<int>(spec.size() / last) * (last / 2 + 1);
    real_.reset(fftw_alloc_real(n_));
    spec_buf_.reset(fftw_alloc_complex(nc_));
    int dims[3] = {spec.dim(0), spec.dim(1), spec.dim(2)};
    fwd_ = fftw_plan_dft_r2c(spec.d(), dims, real_.get(), spec_buf_.get(), FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r(spec.d(), dims, spec_buf_.get(), real_.get(), FFTW_ESTIMATE);
  }
  ~Convolver() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
  }
  Convolver(const Convolver&) = delete;
  Convolver& operator=(const Convolver&) = delete;

  const GridSpec& spec() const { return spec_; }

  ScalarField convolve(const SampledKernel& K, const BinarySetField& E) {
    require_same(K.spec, spec_, "convolve");
    require_same(E.spec, spec_, "convolve");
    for (int i = 0; i < n_; ++i) real_.get()[i] = E.mask[i];
    return finish(K);
  }

  ScalarField convolve(const SampledKernel& K, const ScalarField& f) {
    require_same(K.spec, spec_, "convolve");
    require_same(f.spec, spec_, "convolve");
    for (int i = 0; i < n_; ++i) real_.get()[i] = f.values[i];
    return finish(K);
  }

 private:
  const std::vector<std::complex<double>>& kernel_transform(const SampledKernel& K) {
    auto it = cache_.find(K.id);
    if (it != cache_.end()) return it->second;
    if (cache_.size() >= 4) cache_.erase(cache_.begin());
    for (int i = 0; i < n_; ++i) real_.get()[i] = K.values[i];
    fftw_execute(fwd_);
    std::vector<std::complex<double>> t(nc_);
    auto* c = reinterpret_cast<std::complex<double>*>(spec_buf_.get());
    for (int i = 0; i < nc_; ++i) t[i] = c[i];
    return cache_.emplace(K.id, std::move(t)).first->second;
  }

  ScalarField finish(const SampledKernel& K) {
    std::vector<double> input(real_.get(), real_.get() + n_);
    const auto& kt = kernel_transform(K);
    for (int i = 0; i < n_; ++i) real_.get()[i] = input[i];
    fftw_execute(fwd_);
    auto* c = reinterpret_cast<std::complex<double>*>(spec_buf_.get());
    for (int i = 0; i < nc_; ++i) c[i] *= kt[i];
    fftw_execute(inv_);
    ScalarField out(spec_);
    const double s = spec_.cell_volume() / n_;
    for (int i = 0; i < n_; ++i) out.values[i] = real_.get()[i] * s;
    return out;
  }

  GridSpec spec_;
  int n_ = 0, nc_ = 0;
  std::unique_ptr<double, detail::FftwFree> real_;
  std::unique_ptr<fftw_complex, detail::FftwFree> spec_buf_;
  fftw_plan fwd_ = nullptr, inv_ = nullptr;
  std::map<std::uint64_t, std::vector<std::complex<double>>> cache_;
};

// Direct O(N * |E|) circular convolution, the oracle for the FFT path.
inline ScalarField convolve_direct(const SampledKernel& K, const BinarySetField& E) {
  require_same(K.spec, E.spec, "convolve_direct");
  const auto& s = E.spec;
  ScalarField out(s);
  const int n0 = s.dim(0), n1 = s.dim(1), n2 = s.dim(2);
  const double vol = s.cell_volume();
  for (std::size_t g = 0; g < E.mask.size(); ++g) {
    if (!E.mask[g]) continue;
    auto y = s.index(g);
    if (n2 == 1) {
      // 2D: rows along axis 1 are contiguous
      const int cut = y[1];
      for (int i = 0; i < n0; ++i) {
        int di = i - y[0];
        if (di < 0) di += n0;
        double* o = &out.values[s.flat(i, 0, 0)];
        const double* kr = &K.values[s.flat(di, 0, 0)];
        for (int j = 0; j < cut; ++j) o[j] += kr[j - cut + n1] * vol;
        for (int j = cut; j < n1; ++j) o[j] += kr[j - cut] * vol;
      }
      continue;
    }
    for (int i = 0; i < n0; ++i) {
      int di = i - y[0];
      if (di < 0) di += n0;
      for (int j = 0; j < n1; ++j) {
        int dj = j - y[1];
        if (dj < 0) dj += n1;
        double* o = &out.values[s.flat(i, j, 0)];
        const double* kr = &K.values[s.flat(di, dj, 0)];
        // k - y2 wraps once
        const int cut = y[2];
        for (int k = 0; k < cut; ++k) o[k] += kr[k - cut + n2] * vol;
        for (int k = cut; k < n2; ++k) o[k] += kr[k - cut] * vol;
      }
    }
  }
  return out;
}

inline bool uses_direct_path(const GridSpec& s) {
  for (int a = 0; a < s.d(); ++a)
    if (s.dim(a) > 32) return false;
  return s.size() <= 4096;
}

// One engine per grid spec, shared by the free functions below.
inline Convolver& engine_for(const GridSpec& s) {
  static std::vector<std::unique_ptr<Convolver>> engines;
  for (auto& e : engines)
    if (e->spec() == s) return *e;
  if (engines.size() >= 8) engines.erase(engines.begin());
  engines.push_back(std::make_unique<Convolver>(s));
  return *engines.back();
}

inline ScalarField convolve_fft(const SampledKernel& K, const BinarySetField& E) {
  require_same(K.spec, E.spec, "convolve");
  return engine_for(E.spec).convolve(K, E);
}

// K * chi_E; small grids take the direct path.
inline ScalarField convolve(const SampledKernel& K, const BinarySetField& E) {
  require_same(K.spec, E.spec, "convolve");
  if (uses_direct_path(E.spec)) return convolve_direct(K, E);
  return convolve_fft(K, E);
}

// Masked compensated sum of f over A, times the cell volume.
inline double inner_product(const BinarySetField& A, const ScalarField& f) {
  require_same(A.spec, f.spec, "inner_product");
  double sum = 0, c = 0;
  for (std::size_t i = 0; i < A.mask.size(); ++i) {
    if (!A.mask[i]) continue;
    double y = f.values[i] - c, t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
  return sum * A.spec.cell_volume();
}

}  // namespace mbo
