// Serial twins against their OpenMP kernels on synthetic-corpus inputs.
#include <benchmark/benchmark.h>

#include "mhc/experiment.hpp"
#include "mhc/synthetic.hpp"

namespace {

const mhc::PreparedData& corpus() {
  static const mhc::PreparedData data = [] {
    auto config = mhc::default_experiment();
    return mhc::prepare_records(mhc::generate_corpus(mhc::binary_synthetic_spec(4000, 7)), config);
  }();
  return data;
}

void BM_TransformSerial(benchmark::State& state) {
  const auto& d = corpus();
  for (auto _ : state) benchmark::DoNotOptimize(mhc::transform_batch_serial(d.tfidf, d.train.tokens));
}
void BM_TransformParallel(benchmark::State& state) {
  const auto& d = corpus();
  for (auto _ : state) benchmark::DoNotOptimize(mhc::transform_batch(d.tfidf, d.train.tokens));
}

mhc::LinearModel random_linear(std::size_t dim) {
  auto m = mhc::LinearModel::zeros(2, dim);
  mhc::Rng rng(1);
  for (auto& v : m.coef.data()) v = rng.uniform(-0.1, 0.1);
  return m;
}

void BM_LossSerial(benchmark::State& state) {
  const auto& d = corpus();
  const auto m = random_linear(d.train.x.cols);
  const std::vector<double> w{1.0, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(mhc::loss_and_gradient_serial(m, d.train.x, d.train.y, 1e-3, w));
}
void BM_LossParallel(benchmark::State& state) {
  const auto& d = corpus();
  const auto m = random_linear(d.train.x.cols);
  const std::vector<double> w{1.0, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(mhc::loss_and_gradient(m, d.train.x, d.train.y, 1e-3, w));
}

mhc::SparseMatrix head_rows(std::size_t n) {
  const auto& x = corpus().train.x;
  mhc::SparseMatrix out;
  out.cols = x.cols;
  out.rows.assign(x.rows.begin(), x.rows.begin() + static_cast<std::ptrdiff_t>(std::min(n, x.rows.size())));
  return out;
}

void BM_GramSerial(benchmark::State& state) {
  const auto x = head_rows(800);
  const auto spec = mhc::resolve_kernel(mhc::KernelSpec{}, x);
  for (auto _ : state) benchmark::DoNotOptimize(mhc::gram_matrix_serial(spec, x));
}
void BM_GramParallel(benchmark::State& state) {
  const auto x = head_rows(800);
  const auto spec = mhc::resolve_kernel(mhc::KernelSpec{}, x);
  for (auto _ : state) benchmark::DoNotOptimize(mhc::gram_matrix(spec, x));
}

mhc::TreeConfig forest_config() {
  mhc::TreeConfig cfg;
  cfg.n_estimators = 16;
  cfg.max_depth = 12;
  return cfg;
}

void BM_ForestSerial(benchmark::State& state) {
  const auto& d = corpus();
  const mhc::FeatureColumns cols(d.train.x);
  for (auto _ : state) benchmark::DoNotOptimize(mhc::fit_forest_serial(cols, d.train.y, 2, forest_config(), 3));
}
void BM_ForestParallel(benchmark::State& state) {
  const auto& d = corpus();
  const mhc::FeatureColumns cols(d.train.x);
  for (auto _ : state) benchmark::DoNotOptimize(mhc::fit_forest(cols, d.train.y, 2, forest_config(), 3));
}

struct HistInput {
  mhc::BinnedMatrix binned;
  mhc::SparseBinIndex index;
  std::vector<double> g, h;
  std::vector<std::uint32_t> samples;
};

const HistInput& hist_input() {
  static const HistInput in = [] {
    HistInput r;
    const auto& d = corpus();
    r.binned = mhc::bin_features(mhc::FeatureColumns(d.train.x), 255);
    r.index = mhc::SparseBinIndex::build(r.binned);
    mhc::Rng rng(2);
    for (std::size_t i = 0; i < r.binned.rows; ++i) {
      r.g.push_back(rng.uniform(-1, 1));
      r.h.push_back(0.25);
      r.samples.push_back(static_cast<std::uint32_t>(i));
    }
    return r;
  }();
  return in;
}

void BM_HistogramSerial(benchmark::State& state) {
  const auto& in = hist_input();
  for (auto _ : state) benchmark::DoNotOptimize(mhc::build_histogram_serial(in.binned, in.g, in.h, in.samples));
}
void BM_HistogramParallel(benchmark::State& state) {
  const auto& in = hist_input();
  for (auto _ : state) benchmark::DoNotOptimize(mhc::build_histogram(in.binned, in.g, in.h, in.samples));
}
void BM_HistogramSparse(benchmark::State& state) {
  const auto& in = hist_input();
  for (auto _ : state) {
    benchmark::DoNotOptimize(mhc::build_histogram_sparse(in.binned, in.index, in.g, in.h, in.samples));
  }
}

}  // namespace

BENCHMARK(BM_TransformSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TransformParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LossSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LossParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForestSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForestParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HistogramSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HistogramParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HistogramSparse)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
