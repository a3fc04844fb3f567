#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <limits>

#include "panolayout/selfcheck.hpp"
#include "panolayout/trainer.hpp"

using namespace panolayout;

namespace {

DatasetConfig tiny_dataset_config(std::uint64_t seed = 1) {
  DatasetConfig cfg;
  cfg.n_train = 10;
  cfg.n_val = 3;
  cfg.n_test = 3;
  cfg.height = 16;
  cfg.width = 32;
  cfg.seed = seed;
  return cfg;
}

ModelConfig tiny_model_config() {
  ModelConfig mc;
  mc.input_height = 16;
  mc.input_width = 32;
  return mc;
}

TrainerConfig tiny_trainer_config(std::int64_t iters = 10) {
  TrainerConfig tc;
  tc.total_iters = iters;
  tc.eval_interval = 5;
  tc.ramp = RampSchedule::fraction(0.3, iters);
  tc.batch_labeled = 2;
  tc.batch_unlabeled = 2;
  tc.adam.lr = 1e-3;
  return tc;
}

bool stores_equal(const ParamStore& a, const ParamStore& b) {
  if (a.slots().size() != b.slots().size()) return false;
  for (size_t i = 0; i < a.slots().size(); ++i) {
    if (a.slots()[i].value.data != b.slots()[i].value.data) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("ema update arithmetic") {
  Model m(tiny_model_config(), 1);
  ParamStore teacher = m.params();

  // fixed point
  ema_update(teacher, m.params(), 0.999);
  bool drifted = false;
  for (size_t i = 0; i < teacher.slots().size(); ++i) {
    for (size_t j = 0; j < teacher.slots()[i].value.data.size(); ++j) {
      const double t = teacher.slots()[i].value.data[j];
      const double s = m.params().slots()[i].value.data[j];
      if (std::abs(t - s) > 1e-15) drifted = true;
    }
  }
  CHECK(!drifted);

  // scalar single step: teacher 0, student 1, alpha 0.999
  ParamStore zero = m.params();
  for (ParamSlot& s : zero.slots()) std::fill(s.value.data.begin(), s.value.data.end(), 0.0);
  ParamStore one = m.params();
  for (ParamSlot& s : one.slots()) std::fill(s.value.data.begin(), s.value.data.end(), 1.0);
  ema_update(zero, one, 0.999);
  const double expected = 0.999 * 0.0 + (1.0 - 0.999) * 1.0;
  CHECK(zero.slots()[0].value.data[0] == expected);
  CHECK(zero.slots()[0].value.data[0] == doctest::Approx(0.001).epsilon(1e-9));

  CHECK_THROWS_AS(ema_update(zero, one, 1.5), std::invalid_argument);

  ModelConfig wide = tiny_model_config();
  wide.enc1 = 8;
  Model mismatched(wide, 3);
  CHECK_THROWS_AS(ema_update(mismatched.params(), m.params(), 0.999), std::invalid_argument);
}

TEST_CASE("ema matches the geometric closed form over 1000 steps") {
  const CheckResult r = check_ema_closed_form(3);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("teacher starts as an exact student copy and its gradients stay zero") {
  const Dataset ds = Dataset::generate(tiny_dataset_config());
  TrainState st(tiny_model_config(), 5);
  CHECK(stores_equal(st.model.params(), st.teacher));

  const TrainerConfig tc = tiny_trainer_config(6);
  run_training(st, ds, {0, 1, 2}, {3, 4, 5, 6}, ds.split_ids(Split::Val), tc);
  CHECK(!stores_equal(st.model.params(), st.teacher));  // EMA lags the student
  for (const ParamSlot& s : st.teacher.slots()) {
    for (double g : s.grad.data) CHECK(g == 0.0);
  }
}

TEST_CASE("alpha = 1 freezes the teacher at initialization") {
  const Dataset ds = Dataset::generate(tiny_dataset_config());
  TrainState st(tiny_model_config(), 7);
  const ParamStore initial = st.model.params();
  TrainerConfig tc = tiny_trainer_config(6);
  tc.ema_decay = 1.0;
  run_training(st, ds, {0, 1, 2}, {3, 4, 5}, ds.split_ids(Split::Val), tc);
  CHECK(stores_equal(st.teacher, initial));
  CHECK(!stores_equal(st.model.params(), initial));
}

TEST_CASE("lambda_max = 0 reproduces the supervised-only trajectory bitwise") {
  const Dataset ds = Dataset::generate(tiny_dataset_config(11));
  const std::vector<int> labeled{0, 1, 2, 3};
  const std::vector<int> unlabeled{4, 5, 6, 7};
  const std::vector<int> val = ds.split_ids(Split::Val);

  TrainerConfig tc = tiny_trainer_config(10);
  tc.lambda_max = 0.0;
  TrainState with_unlabeled(tiny_model_config(), 13);
  const RunResult ra = run_training(with_unlabeled, ds, labeled, unlabeled, val, tc);

  TrainerConfig tc2 = tiny_trainer_config(10);
  TrainState supervised_only(tiny_model_config(), 13);
  const RunResult rb = run_training(supervised_only, ds, labeled, {}, val, tc2);

  CHECK(stores_equal(with_unlabeled.model.params(), supervised_only.model.params()));
  REQUIRE(ra.history.size() == rb.history.size());
  for (size_t i = 0; i < ra.history.size(); ++i) {
    CHECK(ra.history[i].last.loss_sup == rb.history[i].last.loss_sup);
    CHECK(ra.history[i].student.rmse == rb.history[i].student.rmse);
  }
}

TEST_CASE("training is deterministic per seed") {
  const Dataset ds = Dataset::generate(tiny_dataset_config(17));
  const std::vector<int> labeled{0, 1, 2};
  const std::vector<int> unlabeled{3, 4, 5, 6};
  const std::vector<int> val = ds.split_ids(Split::Val);
  const TrainerConfig tc = tiny_trainer_config(8);

  TrainState a(tiny_model_config(), 19);
  TrainState b(tiny_model_config(), 19);
  const RunResult ra = run_training(a, ds, labeled, unlabeled, val, tc);
  const RunResult rb = run_training(b, ds, labeled, unlabeled, val, tc);
  CHECK(stores_equal(a.model.params(), b.model.params()));
  CHECK(stores_equal(a.teacher, b.teacher));
  REQUIRE(ra.history.size() == rb.history.size());
  for (size_t i = 0; i < ra.history.size(); ++i) {
    CHECK(ra.history[i].student.iou3d == rb.history[i].student.iou3d);
    CHECK(ra.history[i].teacher.rmse == rb.history[i].teacher.rmse);
    CHECK(ra.history[i].last.loss_total == rb.history[i].last.loss_total);
  }
}

TEST_CASE("history cadence and split validation") {
  const Dataset ds = Dataset::generate(tiny_dataset_config(23));
  const std::vector<int> val = ds.split_ids(Split::Val);
  const TrainerConfig tc = tiny_trainer_config(10);  // eval interval 5

  TrainState st(tiny_model_config(), 29);
  const RunResult r = run_training(st, ds, {0, 1}, {2, 3}, val, tc);
  CHECK(r.history.size() == 3);  // iterations 0, 5, 10
  CHECK(r.history.front().iteration == 0);
  CHECK(r.history.back().iteration == 10);
  CHECK(r.best.iteration >= 0);

  TrainState st2(tiny_model_config(), 29);
  CHECK_THROWS_AS(run_training(st2, ds, {0, 1}, {1, 2}, val, tc), std::invalid_argument);
  CHECK_THROWS_AS(run_training(st2, ds, {}, {1, 2}, val, tc), std::invalid_argument);
  CHECK_THROWS_AS(run_training(st2, ds, {0}, {1}, {}, tc), std::invalid_argument);
}

TEST_CASE("zero unlabeled degenerates to supervised training") {
  const Dataset ds = Dataset::generate(tiny_dataset_config(31));
  TrainState st(tiny_model_config(), 37);
  const TrainerConfig tc = tiny_trainer_config(6);
  const RunResult r = run_training(st, ds, {0, 1, 2}, {}, ds.split_ids(Split::Val), tc);
  for (const EvalRecord& rec : r.history) {
    CHECK(rec.last.loss_con == 0.0);
  }
}

TEST_CASE("ablation modes share the labeled stream at the first iteration") {
  const Dataset ds = Dataset::generate(tiny_dataset_config(41));
  std::vector<double> first_sup;
  for (const char* mode : {"none", "image_only", "naive_both", "collaborative"}) {
    TrainState st(tiny_model_config(), 43);
    TrainerConfig tc = tiny_trainer_config(1);
    tc.eval_interval = 1;
    tc.mode = ablation_mode_from(mode);
    const RunResult r = run_training(st, ds, {0, 1}, {2, 3}, ds.split_ids(Split::Val), tc);
    first_sup.push_back(r.history.back().last.loss_sup);
  }
  for (size_t i = 1; i < first_sup.size(); ++i) CHECK(first_sup[i] == first_sup[0]);
}

TEST_CASE("non-finite loss skips the update and aborts after three failures") {
  const Dataset ds = Dataset::generate(tiny_dataset_config(47));
  TrainState st(tiny_model_config(), 53);
  // poison the head bias so every forward produces NaN (a poisoned conv
  // weight would be silenced by the rectifier)
  st.model.params().find("head.b")->value.data[0] = std::numeric_limits<double>::quiet_NaN();

  const TrainerConfig tc = tiny_trainer_config(10);
  TrainStreams streams = TrainStreams::from_seed(1);
  const Panorama img = ds.image(0);
  const std::vector<LabeledView> batch{{&img, &ds.record(0).layout}};

  const IterationStats s1 = train_iteration(st, batch, {}, tc, streams);
  CHECK(s1.skipped);
  CHECK(st.model.params().update_count == 0);
  const IterationStats s2 = train_iteration(st, batch, {}, tc, streams);
  CHECK(s2.skipped);
  CHECK_THROWS_AS(train_iteration(st, batch, {}, tc, streams), std::runtime_error);
}
