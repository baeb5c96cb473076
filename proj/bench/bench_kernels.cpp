// Times the per-step reference LSTM against the GEMM-hoisted kernel, serial
// and under OpenMP, on synthetic episodes.
//
//   bench_kernels [episodes] [cells] [threads]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <omp.h>

#include "pheno/kernels.hpp"
#include "pheno/model.hpp"
#include "pheno/synth.hpp"

using namespace pheno;

template <class F>
double seconds(F&& f, int reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / reps;
}

int main(int argc, char** argv) {
  const int episodes = argc > 1 ? std::atoi(argv[1]) : 256;
  const int cells = argc > 2 ? std::atoi(argv[2]) : 32;
  const int threads = argc > 3 ? std::atoi(argv[3]) : omp_get_max_threads();

  SynthConfig sc;
  sc.episode_count = std::max(episodes, 10);
  const auto raw = generate_synthetic(sc, 7, threads);
  const Dataset data = build_dataset(raw, sc.channels, 16, 8, std::nullopt, threads);

  ObjectiveConfig obj;
  obj.primary_label_count = 16;
  obj.aux_label_count = 8;
  Rng rng(stream_key(7, "init"));
  const LstmParams params = init_lstm_params({13, {cells, cells}, obj.output_width()}, rng);

  std::vector<Eigen::VectorXd> targets;
  for (int i = 0; i < data.size(); ++i) {
    Eigen::VectorXd y(obj.output_width());
    for (int l = 0; l < obj.output_width(); ++l) y(l) = data.labels(i, l);
    targets.push_back(y);
  }
  std::vector<kernels::SequenceItem> items;
  std::vector<const Eigen::MatrixXd*> inputs;
  long steps = 0;
  for (int i = 0; i < data.size(); ++i) {
    items.push_back({&data.sequences[i], &targets[i], {}});
    inputs.push_back(&data.sequences[i]);
    steps += data.sequences[i].cols();
  }
  std::printf("episodes %d, total steps %ld, 2x%d cells, %d threads\n", data.size(), steps, cells, threads);

  LstmGradients g = zero_lstm_params(params.arch());
  const double t_ref = seconds([&] { kernels::lstm_batch_gradient_serial(params, items, obj, g); }, 1);
  const double t_fast1 = seconds([&] { kernels::lstm_batch_gradient(params, items, obj, g, 1); }, 3);
  const double t_fastn = seconds([&] { kernels::lstm_batch_gradient(params, items, obj, g, threads); }, 3);
  const double p_ref = seconds([&] { kernels::lstm_predict_final_serial(params, inputs); }, 1);
  const double p_fastn = seconds([&] { kernels::lstm_predict_final(params, inputs, threads); }, 3);

  std::printf("%-34s %10s %12s\n", "kernel", "seconds", "us/step");
  auto row = [&](const char* name, double t) {
    std::printf("%-34s %10.4f %12.3f\n", name, t, 1e6 * t / static_cast<double>(steps));
  };
  row("gradient, per-step reference", t_ref);
  row("gradient, hoisted, 1 thread", t_fast1);
  row("gradient, hoisted, OpenMP", t_fastn);
  row("predict, per-step reference", p_ref);
  row("predict, hoisted, OpenMP", p_fastn);
  return 0;
}
