#include <benchmark/benchmark.h>

#include "panolayout/augment.hpp"
#include "panolayout/losses.hpp"
#include "panolayout/metrics.hpp"
#include "panolayout/model.hpp"

using namespace panolayout;

namespace {

Panorama bench_panorama(int h, int w) {
  const RoomLayout room = generate_room(1);
  Rng style_rng(2);
  const SceneStyle style = SceneStyle::random(style_rng, 0.01);
  return render_panorama(room, style, h, w, 3);
}

void BM_render(benchmark::State& state) {
  const RoomLayout room = generate_room(1);
  Rng style_rng(2);
  const SceneStyle style = SceneStyle::random(style_rng, 0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_panorama(room, style, 64, 128, 3));
  }
}
BENCHMARK(BM_render);

void BM_forward(benchmark::State& state) {
  Model model(ModelConfig{}, 5);
  const Panorama img = bench_panorama(64, 128);
  for (auto _ : state) {
    nn::Tape tape;
    tape.set_grad_enabled(false);
    benchmark::DoNotOptimize(model.bind(tape).forward(img).depth.val()[0]);
  }
}
BENCHMARK(BM_forward);

void BM_forward_backward(benchmark::State& state) {
  Model model(ModelConfig{}, 5);
  const Panorama img = bench_panorama(64, 128);
  const LayoutTarget target = target_from_layout(generate_room(1), 128);
  const LossWeights w;
  for (auto _ : state) {
    nn::Tape tape;
    const ModelBinding b = model.bind(tape);
    const nn::Value loss = supervised_loss(tape, b.forward(img), target, w);
    tape.backward(loss);
    b.accumulate_grads(model.params());
    model.params().zero_grads();
  }
}
BENCHMARK(BM_forward_backward);

void BM_weak_augment(benchmark::State& state) {
  const Panorama img = bench_panorama(64, 128);
  WeakAugParams p;
  p.flip = true;
  p.k_x = 1.4;
  p.k_z = 0.8;
  p.rotate_cols = 37;
  for (auto _ : state) {
    benchmark::DoNotOptimize(weak_augment_image(img, p));
  }
}
BENCHMARK(BM_weak_augment);

void BM_strong_augment(benchmark::State& state) {
  const Panorama img = bench_panorama(64, 128);
  const StrongAugParams p;
  for (auto _ : state) {
    benchmark::DoNotOptimize(strong_augment(img, p));
  }
}
BENCHMARK(BM_strong_augment);

void BM_iou2d(benchmark::State& state) {
  const std::vector<double> a = horizon_depth(generate_room(1), 128);
  const std::vector<double> b = horizon_depth(generate_room(2), 128);
  for (auto _ : state) {
    benchmark::DoNotOptimize(iou2d(a, b));
  }
}
BENCHMARK(BM_iou2d);

}  // namespace

BENCHMARK_MAIN();
