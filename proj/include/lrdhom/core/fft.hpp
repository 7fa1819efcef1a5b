#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <utility>

namespace lrdhom::fft {

namespace detail {

enum class PlanKind { dft_forward, dft_backward, dst1 };

// FFTW planning is not thread-safe; executing a plan on new arrays is.
// Plans are created once per (size, kind) and kept for the process lifetime.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t n, PlanKind kind) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, kind);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    const int size = static_cast<int>(n);
    fftw_plan plan = nullptr;
    if (kind == PlanKind::dst1) {
      auto* buf = static_cast<double*>(fftw_malloc(sizeof(double) * n));
      plan = fftw_plan_r2r_1d(size, buf, buf, FFTW_RODFT00, flags);
      fftw_free(buf);
    } else {
      auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
      plan = fftw_plan_dft_1d(size, buf, buf,
                              kind == PlanKind::dft_forward ? FFTW_FORWARD : FFTW_BACKWARD,
                              flags);
      fftw_free(buf);
    }
    if (plan == nullptr) throw std::runtime_error("fftw planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::pair<std::size_t, PlanKind>, fftw_plan> plans_;
};

}  // namespace detail

/// In-place unnormalized forward DFT: X_k = sum_j x_j exp(-2 pi i jk/n).
inline void forward(std::span<std::complex<double>> data) {
  if (data.empty()) return;
  auto plan = detail::PlanCache::instance().get(data.size(), detail::PlanKind::dft_forward);
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, ptr, ptr);
}

/// In-place unnormalized inverse DFT (no 1/n factor).
inline void backward(std::span<std::complex<double>> data) {
  if (data.empty()) return;
  auto plan = detail::PlanCache::instance().get(data.size(), detail::PlanKind::dft_backward);
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, ptr, ptr);
}

/// In-place orthonormal DST-I on n points:
/// y_k = sqrt(2/(n+1)) sum_j x_j sin(pi (j+1)(k+1)/(n+1)). Involutive.
inline void dst1(std::span<double> data) {
  if (data.empty()) return;
  const std::size_t n = data.size();
  auto plan = detail::PlanCache::instance().get(n, detail::PlanKind::dst1);
  fftw_execute_r2r(plan, data.data(), data.data());
  const double scale = 1.0 / std::sqrt(2.0 * static_cast<double>(n + 1));
  for (double& v : data) v *= scale;
}

}  // namespace lrdhom::fft
