#include "semiclab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "semiclab/error.hpp"

namespace semiclab::fft {

namespace {

using PlanKey = std::tuple<std::size_t, std::size_t, int>;

struct PlanCache {
  std::mutex mutex;
  std::map<PlanKey, fftw_plan> plans;

  ~PlanCache() {
    for (auto& entry : plans) fftw_destroy_plan(entry.second);
  }

  fftw_plan get(std::size_t n, std::size_t inner, int sign) {
    std::lock_guard<std::mutex> lock(mutex);
    const PlanKey key{n, inner, sign};
    auto it = plans.find(key);
    if (it != plans.end()) return it->second;
    const std::size_t count = n * inner;
    auto* scratch = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * count));
    const int dims[1] = {static_cast<int>(n)};
    const int stride = static_cast<int>(inner);
    fftw_plan plan = fftw_plan_many_dft(1, dims, static_cast<int>(inner), scratch, nullptr, stride, 1, scratch,
                                        nullptr, stride, 1, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    if (plan == nullptr) throw Error(ErrorCode::Config, "FFTW planning failed");
    plans.emplace(key, plan);
    return plan;
  }
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

void transform_axis(Complex* data, std::size_t outer, std::size_t n, std::size_t inner, int sign) {
  if (n <= 1) return;
  fftw_plan plan = cache().get(n, inner, sign);
  const std::size_t block = n * inner;
  for (std::size_t o = 0; o < outer; ++o) {
    auto* p = reinterpret_cast<fftw_complex*>(data + o * block);
    fftw_execute_dft(plan, p, p);
  }
}

void transform(std::vector<Complex>& data, const std::vector<std::size_t>& shape, std::size_t axis, int sign) {
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
  for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
  transform_axis(data.data(), outer, shape[axis], inner, sign);
}

void transform_matrix(Complex* data, std::size_t n, int sign) {
  transform_axis(data, n, n, 1, sign);
  transform_axis(data, 1, n, n, sign);
}

}  // namespace semiclab::fft
