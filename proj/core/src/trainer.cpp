#include "panolayout/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace panolayout {

AblationMode ablation_mode_from(std::string_view name) {
  if (name == "none") return AblationMode::None;
  if (name == "image_only") return AblationMode::ImageOnly;
  if (name == "naive_both") return AblationMode::NaiveBoth;
  if (name == "collaborative") return AblationMode::Collaborative;
  throw std::invalid_argument("unknown ablation mode: " + std::string(name));
}

const char* to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::None: return "none";
    case AblationMode::ImageOnly: return "image_only";
    case AblationMode::NaiveBoth: return "naive_both";
    case AblationMode::Collaborative: return "collaborative";
  }
  return "?";
}

TrainerConfig trainer_config_from(const ExperimentConfig& cfg) {
  TrainerConfig t;
  t.ema_decay = cfg.ema_decay;
  t.adam.lr = cfg.lr;
  t.batch_labeled = cfg.batch_labeled;
  t.batch_unlabeled = cfg.batch_unlabeled;
  t.total_iters = cfg.total_iters;
  t.eval_interval = cfg.eval_interval;
  t.ramp = RampSchedule::fraction(cfg.ramp_frac, cfg.total_iters);
  t.lambda_max = cfg.lambda_max;
  t.mode = ablation_mode_from(cfg.ablation_mode);
  t.seed = cfg.seed;
  t.loss_w = cfg.loss_w;
  t.mask = cfg.mask;
  t.strong = cfg.strong;
  return t;
}

TrainState::TrainState(const ModelConfig& cfg, std::uint64_t model_seed)
    : model(cfg, model_seed), teacher(model.params()), adam(model.params()) {
  teacher.update_count = 0;
}

TrainStreams TrainStreams::from_seed(std::uint64_t seed) {
  const Rng base(seed);
  return TrainStreams{base.fork(101), base.fork(102), base.fork(103), base.fork(104),
                      base.fork(105)};
}

void ema_update(ParamStore& teacher, const ParamStore& student, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("ema decay outside [0, 1]");
  if (!teacher.same_manifest(student)) {
    throw std::invalid_argument("ema_update: parameter manifests do not match");
  }
  for (size_t i = 0; i < teacher.slots().size(); ++i) {
    nn::Tensor& t = teacher.slots()[i].value;
    const nn::Tensor& s = student.slots()[i].value;
    for (size_t j = 0; j < t.data.size(); ++j) {
      t.data[j] = alpha * t.data[j] + (1.0 - alpha) * s.data[j];
    }
  }
  ++teacher.update_count;
}

IterationStats train_iteration(TrainState& st, const std::vector<LabeledView>& labeled,
                               const std::vector<const Panorama*>& unlabeled,
                               const TrainerConfig& cfg, TrainStreams& streams) {
  if (labeled.empty()) throw std::invalid_argument("train_iteration: empty labeled batch");
  const ModelConfig& mc = st.model.config();
  const int w = mc.input_width;

  IterationStats out;
  out.lambda = cfg.lambda_max * ramp_weight(st.model.params().update_count, cfg.ramp);

  nn::Tape tape;
  const ModelBinding student = st.model.bind(tape);

  // Supervised stream: weak augmentation with targets recomputed from the
  // transformed layout.
  nn::Value l_sup;
  for (const LabeledView& s : labeled) {
    const WeakAugParams p = sample_weak_params_labeled(streams.labeled_aug, w);
    const Panorama img = weak_augment_image(*s.image, p);
    const RoomLayout moved = weak_augment_layout(*s.layout, p, w);
    const LayoutTarget target = target_from_layout(moved, w);
    const Prediction z_stu = student.forward(img);
    const nn::Value li = supervised_loss(tape, z_stu, target, cfg.loss_w);
    l_sup = l_sup.defined() ? tape.add(l_sup, li) : li;
  }
  l_sup = tape.mul_scalar(l_sup, 1.0 / static_cast<double>(labeled.size()));

  // Consistency stream: one shared weak augmentation per sample feeds the
  // teacher pass and both student passes.
  nn::Value l_con;
  if (!unlabeled.empty()) {
    tape.set_grad_enabled(false);
    const ModelBinding teacher = st.model.bind(tape, st.teacher);
    tape.set_grad_enabled(true);

    for (const Panorama* img : unlabeled) {
      const WeakAugParams p = sample_weak_params(streams.unlabeled_aug, w);
      const Panorama weak = weak_augment_image(*img, p);
      const Prediction z_tea = teacher.forward(weak);

      const bool mask_weak_branch =
          cfg.mode == AblationMode::Collaborative || cfg.mode == AblationMode::NaiveBoth;
      const bool strong_branch_active = cfg.mode != AblationMode::None;
      const bool mask_strong_branch = cfg.mode == AblationMode::NaiveBoth;

      Prediction z_feat;
      if (mask_weak_branch) {
        const FeatureMask mask = build_mask(mc.feature_channels(), mc.feature_rows(),
                                            mc.feature_cols(), cfg.mask, streams.mask);
        z_feat = student.forward(weak, &mask);
      } else {
        z_feat = student.forward(weak);
      }

      Prediction z_img;
      const Panorama strong = strong_branch_active ? strong_augment(weak, cfg.strong) : weak;
      if (mask_strong_branch) {
        const FeatureMask mask = build_mask(mc.feature_channels(), mc.feature_rows(),
                                            mc.feature_cols(), cfg.mask, streams.mask);
        z_img = student.forward(strong, &mask);
      } else {
        z_img = student.forward(strong);
      }

      const nn::Value li = consistency_loss(tape, z_tea, z_feat, z_img, cfg.loss_w);
      l_con = l_con.defined() ? tape.add(l_con, li) : li;
    }
    l_con = tape.mul_scalar(l_con, 1.0 / static_cast<double>(unlabeled.size()));
  }

  const nn::Value total =
      l_con.defined() ? tape.add(l_sup, tape.mul_scalar(l_con, out.lambda)) : l_sup;

  out.loss_sup = l_sup.val()[0];
  out.loss_con = l_con.defined() ? l_con.val()[0] : 0.0;
  out.loss_total = total.val()[0];

  auto skip = [&](const char* why) {
    std::fprintf(stderr, "iteration %lld skipped: %s\n",
                 static_cast<long long>(st.iteration), why);
    st.model.params().zero_grads();
    out.skipped = true;
    if (++st.consecutive_failures >= 3) {
      throw std::runtime_error("three consecutive failed iterations, aborting");
    }
    ++st.iteration;
    return out;
  };

  if (!std::isfinite(out.loss_total)) return skip("non-finite loss");

  tape.backward(total);
  student.accumulate_grads(st.model.params());
  try {
    st.adam.step(st.model.params(), cfg.adam);
  } catch (const std::runtime_error& e) {
    return skip(e.what());
  }
  ema_update(st.teacher, st.model.params(), cfg.ema_decay);
  st.consecutive_failures = 0;
  ++st.iteration;
  return out;
}

MetricsReport evaluate_split(const ModelConfig& mc, const ParamStore& params, const Dataset& ds,
                             const std::vector<int>& ids, const RasterConfig& rc) {
  Model shell(mc, 0);  // architecture only; weights come from `params`
  std::vector<MetricsReport> reports;
  reports.reserve(ids.size());
  for (int id : ids) {
    nn::Tape tape;
    tape.set_grad_enabled(false);
    const ModelBinding b = shell.bind(tape, params);
    const Prediction z = b.forward(ds.image(id));
    reports.push_back(
        evaluate_sample(decode_values(z), ds.target(id), mc.input_height, mc.input_width, rc));
  }
  return mean_report(reports);
}

namespace {

// Shuffled epoch sampler; tops up a short final batch with replacement.
class PoolSampler {
 public:
  PoolSampler(std::vector<int> ids, Rng rng) : ids_(std::move(ids)), rng_(rng) { reshuffle(); }

  std::vector<int> draw(int k) {
    std::vector<int> out;
    out.reserve(k);
    while (static_cast<int>(out.size()) < k) {
      if (cursor_ == ids_.size()) {
        // finish the epoch with replacement, then reshuffle
        while (static_cast<int>(out.size()) < k) {
          out.push_back(ids_[rng_.uniform_int(ids_.size())]);
        }
        reshuffle();
        return out;
      }
      out.push_back(ids_[cursor_++]);
    }
    return out;
  }

 private:
  void reshuffle() {
    for (size_t i = ids_.size() - 1; i > 0; --i) {
      const size_t j = rng_.uniform_int(i + 1);
      std::swap(ids_[i], ids_[j]);
    }
    cursor_ = 0;
  }

  std::vector<int> ids_;
  Rng rng_;
  size_t cursor_ = 0;
};

void check_disjoint(const std::vector<int>& a, const std::vector<int>& b, const char* what) {
  for (int x : a) {
    if (std::find(b.begin(), b.end(), x) != b.end()) {
      throw std::invalid_argument(std::string("splits not disjoint: ") + what);
    }
  }
}

}  // namespace

RunResult run_training(TrainState& st, const Dataset& ds, const std::vector<int>& labeled_ids,
                       const std::vector<int>& unlabeled_ids, const std::vector<int>& val_ids,
                       const TrainerConfig& cfg, const RunHooks& hooks) {
  if (labeled_ids.empty()) throw std::invalid_argument("run_training: no labeled samples");
  if (val_ids.empty()) throw std::invalid_argument("run_training: no validation samples");
  check_disjoint(labeled_ids, unlabeled_ids, "labeled/unlabeled");
  check_disjoint(labeled_ids, val_ids, "labeled/val");
  check_disjoint(unlabeled_ids, val_ids, "unlabeled/val");

  const ModelConfig& mc = st.model.config();
  if (ds.height() != mc.input_height || ds.width() != mc.input_width) {
    throw std::invalid_argument("dataset resolution does not match the model");
  }

  TrainStreams streams = TrainStreams::from_seed(cfg.seed);
  PoolSampler labeled_pool(labeled_ids, streams.labeled_sampler);
  PoolSampler unlabeled_pool(unlabeled_ids.empty() ? std::vector<int>{0} : unlabeled_ids,
                             streams.unlabeled_sampler);

  // Keep borrowed images alive for the duration of an iteration.
  std::vector<Panorama> labeled_imgs, unlabeled_imgs;

  RunResult result;
  auto evaluate_both = [&](const IterationStats& last) {
    EvalRecord rec;
    rec.iteration = st.iteration;
    rec.lambda = cfg.lambda_max * ramp_weight(st.model.params().update_count, cfg.ramp);
    rec.last = last;
    rec.student = evaluate_split(mc, st.model.params(), ds, val_ids, cfg.raster);
    rec.teacher = evaluate_split(mc, st.teacher, ds, val_ids, cfg.raster);
    const bool teacher_better =
        rec.teacher.iou3d != rec.student.iou3d ? rec.teacher.iou3d > rec.student.iou3d
                                               : rec.teacher.rmse < rec.student.rmse;
    const MetricsReport& better = teacher_better ? rec.teacher : rec.student;
    if (st.best.improved_by(better.iou3d, better.rmse)) {
      st.best.iou3d = better.iou3d;
      st.best.rmse = better.rmse;
      st.best.iteration = st.iteration;
      st.best.teacher = teacher_better;
      if (hooks.on_best) hooks.on_best(st, rec);
    }
    if (hooks.on_eval) hooks.on_eval(rec);
    result.history.push_back(rec);
  };

  evaluate_both(IterationStats{});

  const std::int64_t start = st.iteration;
  for (std::int64_t it = start; it < cfg.total_iters; ++it) {
    const std::vector<int> lb = labeled_pool.draw(cfg.batch_labeled);
    labeled_imgs.clear();
    std::vector<LabeledView> labeled_batch;
    for (int id : lb) {
      labeled_imgs.push_back(ds.image(id));
    }
    for (size_t i = 0; i < lb.size(); ++i) {
      labeled_batch.push_back(LabeledView{&labeled_imgs[i], &ds.record(lb[i]).layout});
    }

    std::vector<const Panorama*> unlabeled_batch;
    unlabeled_imgs.clear();
    if (!unlabeled_ids.empty()) {
      const std::vector<int> ub = unlabeled_pool.draw(cfg.batch_unlabeled);
      for (int id : ub) unlabeled_imgs.push_back(ds.image(id));
      for (const Panorama& img : unlabeled_imgs) unlabeled_batch.push_back(&img);
    }

    const IterationStats stats = train_iteration(st, labeled_batch, unlabeled_batch, cfg, streams);
    if ((it + 1) % cfg.eval_interval == 0) evaluate_both(stats);
  }

  result.best = st.best;
  return result;
}

}  // namespace panolayout
