#include "panolayout/commands.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "panolayout/checkpoint.hpp"
#include "panolayout/hashing.hpp"
#include "panolayout/selfcheck.hpp"

namespace panolayout {

namespace {

std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

std::string file_header(const ExperimentConfig& cfg) {
  return fmt("# config_hash=%016" PRIx64 " seed=%" PRIu64 "\n", config_hash(cfg), cfg.seed);
}

struct SplitPlan {
  std::vector<int> labeled, unlabeled, val, test;
};

SplitPlan make_splits(const Dataset& ds, const ExperimentConfig& cfg) {
  SplitPlan plan;
  plan.labeled = pick_labeled(ds, cfg.label_budget, cfg.seed);
  const std::vector<int> train_pool = ds.split_ids(Split::Train);
  for (int id : train_pool) {
    if (!std::binary_search(plan.labeled.begin(), plan.labeled.end(), id)) {
      plan.unlabeled.push_back(id);
    }
  }
  if (cfg.unlabeled_budget >= 0 &&
      cfg.unlabeled_budget < static_cast<int>(plan.unlabeled.size())) {
    plan.unlabeled.resize(cfg.unlabeled_budget);
  }
  plan.val = ds.split_ids(Split::Val);
  plan.test = ds.split_ids(Split::Test);
  return plan;
}

Dataset load_matching_dataset(const ExperimentConfig& cfg) {
  Dataset ds = Dataset::load(cfg.dataset_dir);
  if (ds.height() != cfg.height || ds.width() != cfg.width) {
    throw std::invalid_argument(
        fmt("dataset resolution %dx%d does not match the config %dx%d", ds.height(), ds.width(),
            cfg.height, cfg.width));
  }
  return ds;
}

std::string metrics_fields(const char* prefix, const MetricsReport& m) {
  return fmt(" %s_iou3d=%.17g %s_iou2d=%.17g %s_ce=%.17g %s_pe=%.17g %s_rmse=%.17g %s_delta1=%.17g",
             prefix, m.iou3d, prefix, m.iou2d, prefix, m.corner_error_pct, prefix,
             m.pixel_error_pct, prefix, m.rmse, prefix, m.delta1);
}

void write_summary(const std::filesystem::path& txt, const std::filesystem::path& csv,
                   const ExperimentConfig& cfg, const BestRecord& best,
                   const MetricsReport& student, const MetricsReport& teacher) {
  std::ofstream t(txt, std::ios::binary);
  if (!t) throw std::runtime_error("cannot write " + txt.string());
  t << file_header(cfg);
  t << fmt("best_iteration = %lld\n", static_cast<long long>(best.iteration));
  t << fmt("best_model = %s\n", best.teacher ? "teacher" : "student");
  t << fmt("best_val_iou3d = %.17g\n", best.iou3d);
  t << fmt("best_val_rmse = %.17g\n", best.rmse);
  t << "\nmodel    iou3d    iou2d    ce%      pe%      rmse     delta1\n";
  auto row = [](const char* name, const MetricsReport& m) {
    return fmt("%-8s %-8.4f %-8.4f %-8.4f %-8.4f %-8.4f %-8.4f\n", name, m.iou3d, m.iou2d,
               m.corner_error_pct, m.pixel_error_pct, m.rmse, m.delta1);
  };
  t << row("student", student);
  t << row("teacher", teacher);

  std::ofstream c(csv, std::ios::binary);
  if (!c) throw std::runtime_error("cannot write " + csv.string());
  c << file_header(cfg);
  c << "model,iou3d,iou2d,corner_error_pct,pixel_error_pct,rmse,delta1\n";
  auto crow = [](const char* name, const MetricsReport& m) {
    return fmt("%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", name, m.iou3d, m.iou2d,
               m.corner_error_pct, m.pixel_error_pct, m.rmse, m.delta1);
  };
  c << crow("student", student);
  c << crow("teacher", teacher);
}

}  // namespace

std::string metrics_history_line(const EvalRecord& rec) {
  std::string line = fmt("iter=%lld lambda=%.17g loss_sup=%.17g loss_con=%.17g loss_total=%.17g",
                         static_cast<long long>(rec.iteration), rec.lambda, rec.last.loss_sup,
                         rec.last.loss_con, rec.last.loss_total);
  line += metrics_fields("val_stu", rec.student);
  line += metrics_fields("val_tea", rec.teacher);
  line += "\n";
  return line;
}

void save_train_checkpoint(const std::filesystem::path& path, const TrainState& st) {
  std::vector<std::pair<std::string, const nn::Tensor*>> entries;
  std::vector<nn::Tensor> scratch;
  scratch.reserve(4);
  for (const ParamSlot& s : st.model.params().slots()) {
    entries.push_back({"student." + s.name, &s.value});
  }
  for (const ParamSlot& s : st.teacher.slots()) entries.push_back({"teacher." + s.name, &s.value});
  for (size_t i = 0; i < st.model.params().slots().size(); ++i) {
    entries.push_back({"adam.m." + st.model.params().slots()[i].name, &st.adam.first_moments()[i]});
    entries.push_back({"adam.v." + st.model.params().slots()[i].name, &st.adam.second_moments()[i]});
  }
  scratch.push_back(nn::Tensor::scalar(static_cast<double>(st.iteration)));
  scratch.push_back(nn::Tensor::scalar(static_cast<double>(st.adam.t())));
  scratch.push_back(nn::Tensor::from(
      {4}, {st.best.iou3d, st.best.rmse, static_cast<double>(st.best.iteration),
            st.best.teacher ? 1.0 : 0.0}));
  scratch.push_back(nn::Tensor::scalar(static_cast<double>(st.model.params().update_count)));
  entries.push_back({"meta.iteration", &scratch[0]});
  entries.push_back({"meta.adam_t", &scratch[1]});
  entries.push_back({"meta.best", &scratch[2]});
  entries.push_back({"meta.update_count", &scratch[3]});
  save_checkpoint(path, entries);
}

void load_train_checkpoint(const std::filesystem::path& path, TrainState& st) {
  const auto entries = load_checkpoint(path);
  auto want = [&entries, &path](const std::string& name) -> const nn::Tensor& {
    const auto it = entries.find(name);
    if (it == entries.end()) {
      throw std::runtime_error("checkpoint " + path.string() + " is missing entry " + name);
    }
    return it->second;
  };
  for (ParamSlot& s : st.model.params().slots()) {
    const nn::Tensor& t = want("student." + s.name);
    if (t.shape != s.value.shape) throw std::runtime_error("checkpoint shape mismatch: " + s.name);
    s.value = t;
  }
  for (ParamSlot& s : st.teacher.slots()) s.value = want("teacher." + s.name);
  for (size_t i = 0; i < st.model.params().slots().size(); ++i) {
    st.adam.first_moments()[i] = want("adam.m." + st.model.params().slots()[i].name);
    st.adam.second_moments()[i] = want("adam.v." + st.model.params().slots()[i].name);
  }
  st.iteration = static_cast<std::int64_t>(want("meta.iteration")[0]);
  st.adam.set_t(static_cast<std::int64_t>(want("meta.adam_t")[0]));
  const nn::Tensor& best = want("meta.best");
  st.best.iou3d = best[0];
  st.best.rmse = best[1];
  st.best.iteration = static_cast<std::int64_t>(best[2]);
  st.best.teacher = best[3] != 0.0;
  st.model.params().update_count = static_cast<std::int64_t>(want("meta.update_count")[0]);
}

void cmd_generate(const ExperimentConfig& cfg, bool force) {
  const Dataset ds = Dataset::generate(dataset_config_from(cfg));
  ds.write(cfg.dataset_dir, force);
}

TrainResultFiles cmd_train(const ExperimentConfig& cfg, bool resume) {
  const Dataset ds = load_matching_dataset(cfg);
  if (cfg.label_budget > static_cast<int>(ds.split_ids(Split::Train).size())) {
    throw std::invalid_argument("label budget exceeds the train pool");
  }
  const SplitPlan plan = make_splits(ds, cfg);

  ModelConfig mc;
  mc.input_height = cfg.height;
  mc.input_width = cfg.width;
  TrainState st(mc, Rng(cfg.seed).fork(1).next_u64());
  const TrainerConfig tc = trainer_config_from(cfg);

  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  TrainResultFiles files;
  files.history = fs::path(cfg.out_dir) / "metrics_history.txt";
  files.summary_text = fs::path(cfg.out_dir) / "summary.txt";
  files.summary_csv = fs::path(cfg.out_dir) / "summary.csv";
  files.best_checkpoint = fs::path(cfg.out_dir) / "best_checkpoint.bin";
  files.last_checkpoint = fs::path(cfg.out_dir) / "last_checkpoint.bin";

  std::ofstream history;
  if (resume) {
    if (!fs::exists(files.last_checkpoint)) {
      throw std::invalid_argument("resume requested but no checkpoint at " +
                                  files.last_checkpoint.string());
    }
    load_train_checkpoint(files.last_checkpoint, st);
    history.open(files.history, std::ios::binary | std::ios::app);
  } else {
    history.open(files.history, std::ios::binary | std::ios::trunc);
    history << file_header(cfg);
  }
  if (!history) throw std::runtime_error("cannot write " + files.history.string());

  RunHooks hooks;
  hooks.on_eval = [&history](const EvalRecord& rec) { history << metrics_history_line(rec); };
  hooks.on_best = [&files](const TrainState& state, const EvalRecord&) {
    save_train_checkpoint(files.best_checkpoint, state);
  };

  run_training(st, ds, plan.labeled, plan.unlabeled, plan.val, tc, hooks);
  history.close();
  save_train_checkpoint(files.last_checkpoint, st);

  files.best = st.best;
  files.final_student = evaluate_split(mc, st.model.params(), ds, plan.val, tc.raster);
  files.final_teacher = evaluate_split(mc, st.teacher, ds, plan.val, tc.raster);
  write_summary(files.summary_text, files.summary_csv, cfg, st.best, files.final_student,
                files.final_teacher);
  return files;
}

EvaluateResult cmd_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
                            const std::string& split_name, std::ostream& out) {
  Split split;
  if (split_name == "train") {
    split = Split::Train;
  } else if (split_name == "val") {
    split = Split::Val;
  } else if (split_name == "test") {
    split = Split::Test;
  } else {
    throw std::invalid_argument("unknown split name: " + split_name);
  }
  const Dataset ds = load_matching_dataset(cfg);
  const std::vector<int> ids = ds.split_ids(split);

  ModelConfig mc;
  mc.input_height = cfg.height;
  mc.input_width = cfg.width;
  TrainState st(mc, 0);
  load_train_checkpoint(checkpoint, st);

  EvaluateResult r;
  const RasterConfig rc;
  r.student = evaluate_split(mc, st.model.params(), ds, ids, rc);
  r.teacher = evaluate_split(mc, st.teacher, ds, ids, rc);
  r.teacher_better = r.teacher.iou3d != r.student.iou3d ? r.teacher.iou3d > r.student.iou3d
                                                        : r.teacher.rmse < r.student.rmse;

  auto line = [&out, &split_name](const char* name, const MetricsReport& m) {
    out << fmt("%s %s: iou3d=%.4f iou2d=%.4f ce=%.4f pe=%.4f rmse=%.4f delta1=%.4f n=%d\n",
               split_name.c_str(), name, m.iou3d, m.iou2d, m.corner_error_pct, m.pixel_error_pct,
               m.rmse, m.delta1, m.n_samples);
  };
  line("student", r.student);
  line("teacher", r.teacher);
  out << "better: " << (r.teacher_better ? "teacher" : "student") << "\n";
  return r;
}

AblateResult cmd_ablate(const ExperimentConfig& cfg, std::ostream& out) {
  const Dataset ds = load_matching_dataset(cfg);
  const SplitPlan plan = make_splits(ds, cfg);

  ModelConfig mc;
  mc.input_height = cfg.height;
  mc.input_width = cfg.width;

  AblateResult result;
  out << "mode            iou3d    iou2d    ce%      pe%\n";
  for (const AblationMode mode :
       {AblationMode::None, AblationMode::ImageOnly, AblationMode::NaiveBoth,
        AblationMode::Collaborative}) {
    ExperimentConfig run_cfg = cfg;
    run_cfg.ablation_mode = to_string(mode);
    TrainerConfig tc = trainer_config_from(run_cfg);

    TrainState st(mc, Rng(cfg.seed).fork(1).next_u64());
    // snapshot of the best-so-far weights for the final test-split report
    ParamStore best_student = st.model.params();
    ParamStore best_teacher = st.teacher;
    bool best_is_teacher = false;
    RunHooks hooks;
    hooks.on_best = [&](const TrainState& state, const EvalRecord&) {
      best_student = state.model.params();
      best_teacher = state.teacher;
      best_is_teacher = state.best.teacher;
    };
    run_training(st, ds, plan.labeled, plan.unlabeled, plan.val, tc, hooks);

    const ParamStore& chosen = best_is_teacher ? best_teacher : best_student;
    const MetricsReport test = evaluate_split(mc, chosen, ds, plan.test, tc.raster);
    result.rows.push_back(AblateRow{mode, test});
    out << fmt("%-15s %-8.4f %-8.4f %-8.4f %-8.4f\n", to_string(mode), test.iou3d, test.iou2d,
               test.corner_error_pct, test.pixel_error_pct);
  }

  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  std::ofstream csv(fs::path(cfg.out_dir) / "ablation.csv", std::ios::binary);
  csv << file_header(cfg);
  csv << "mode,iou3d,iou2d,corner_error_pct,pixel_error_pct\n";
  for (const AblateRow& row : result.rows) {
    csv << fmt("%s,%.17g,%.17g,%.17g,%.17g\n", to_string(row.mode), row.test.iou3d, row.test.iou2d,
               row.test.corner_error_pct, row.test.pixel_error_pct);
  }
  return result;
}

int cmd_verify(std::ostream& out) {
  const std::vector<CheckResult> checks = run_selfchecks();
  int failures = 0;
  for (const CheckResult& c : checks) {
    out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    failures += !c.pass;
  }
  out << (failures == 0 ? "verify: all checks passed\n"
                        : fmt("verify: %d check(s) FAILED\n", failures));
  return failures;
}

}  // namespace panolayout
