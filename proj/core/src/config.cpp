#include "panolayout/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "panolayout/hashing.hpp"

namespace panolayout {

namespace {

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  size_t e = s.find_last_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': cannot parse number '" + v + "'");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw std::invalid_argument("config key '" + key + "': cannot parse integer '" + v + "'");
  }
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw std::invalid_argument("config key '" + key + "': cannot parse unsigned '" + v + "'");
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"dataset_dir", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.dataset_dir = v; }},
      {"out_dir", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.out_dir = v; }},
      {"seed", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.seed = parse_u64(k, v); }},
      {"data.train_samples", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.data_train = static_cast<int>(parse_int(k, v)); }},
      {"data.val_samples", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.data_val = static_cast<int>(parse_int(k, v)); }},
      {"data.test_samples", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.data_test = static_cast<int>(parse_int(k, v)); }},
      {"data.height", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.height = static_cast<int>(parse_int(k, v)); }},
      {"data.width", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.width = static_cast<int>(parse_int(k, v)); }},
      {"data.min_extent", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gen.min_extent = parse_double(k, v); }},
      {"data.max_extent", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gen.max_extent = parse_double(k, v); }},
      {"data.min_room_height", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gen.min_room_height = parse_double(k, v); }},
      {"data.max_room_height", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gen.max_room_height = parse_double(k, v); }},
      {"data.camera_height", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gen.camera_height = parse_double(k, v); }},
      {"data.l_shape_prob", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gen.l_shape_prob = parse_double(k, v); }},
      {"data.camera_margin", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gen.camera_margin = parse_double(k, v); }},
      {"data.noise_sigma", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.noise_sigma = parse_double(k, v); }},
      {"aug.hp_cutoff", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.strong.hp_cutoff = parse_double(k, v); }},
      {"aug.hp_floor", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.strong.hp_floor = parse_double(k, v); }},
      {"aug.hp_blend", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.strong.hp_blend = parse_double(k, v); }},
      {"aug.hist_eq", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.strong.hist_eq = parse_int(k, v) != 0; }},
      {"mask.p_center", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.mask.p_center = parse_double(k, v); }},
      {"mask.p_edge", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.mask.p_edge = parse_double(k, v); }},
      {"mask.p_channel", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.mask.p_channel = parse_double(k, v); }},
      {"loss.w_depth", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.loss_w.depth = parse_double(k, v); }},
      {"loss.w_height", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.loss_w.height = parse_double(k, v); }},
      {"loss.w_normal_grad", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.loss_w.normal_grad = parse_double(k, v); }},
      {"train.total_iters", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.total_iters = parse_int(k, v); }},
      {"train.eval_interval", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.eval_interval = parse_int(k, v); }},
      {"train.lr", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.lr = parse_double(k, v); }},
      {"train.ema_decay", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.ema_decay = parse_double(k, v); }},
      {"train.batch_labeled", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.batch_labeled = static_cast<int>(parse_int(k, v)); }},
      {"train.batch_unlabeled", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.batch_unlabeled = static_cast<int>(parse_int(k, v)); }},
      {"train.label_budget", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.label_budget = static_cast<int>(parse_int(k, v)); }},
      {"train.unlabeled_budget", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.unlabeled_budget = static_cast<int>(parse_int(k, v)); }},
      {"train.ramp_frac", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.ramp_frac = parse_double(k, v); }},
      {"train.lambda_max", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.lambda_max = parse_double(k, v); }},
      {"train.ablation_mode", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.ablation_mode = v; }},
  };
  return table;
}

void check(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument("config: " + message);
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    it->second(cfg, key, value);
  }
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void validate_config(const ExperimentConfig& c) {
  check(c.data_train > 0 && c.data_val > 0 && c.data_test > 0, "sample counts must be positive");
  check(c.height >= 16 && c.height % 8 == 0, "data.height must be >= 16 and divisible by 8");
  check(c.width >= 32 && c.width % 8 == 0 && c.width % 4 == 0,
        "data.width must be >= 32 and divisible by 8");
  check(c.gen.min_extent > 0.0 && c.gen.max_extent >= c.gen.min_extent, "bad extent range");
  check(c.gen.camera_height > 0.0, "camera height must be positive");
  check(c.gen.min_room_height > c.gen.camera_height, "room height must exceed camera height");
  check(c.gen.max_room_height >= c.gen.min_room_height, "bad room height range");
  check(c.gen.l_shape_prob >= 0.0 && c.gen.l_shape_prob <= 1.0, "l_shape_prob outside [0, 1]");
  check(c.gen.camera_margin > 0.0 && 2.0 * c.gen.camera_margin < c.gen.min_extent,
        "camera margin too large for the smallest room");
  check(c.noise_sigma >= 0.0, "noise sigma must be >= 0");
  check(c.strong.hp_cutoff > 0.0 && c.strong.hp_cutoff <= 1.0, "aug.hp_cutoff outside (0, 1]");
  check(c.strong.hp_floor >= 0.0 && c.strong.hp_floor <= 1.0, "aug.hp_floor outside [0, 1]");
  check(c.strong.hp_blend >= 0.0 && c.strong.hp_blend <= 1.0, "aug.hp_blend outside [0, 1]");
  auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  check(in01(c.mask.p_center) && in01(c.mask.p_edge) && in01(c.mask.p_channel),
        "mask probabilities outside [0, 1]");
  check(c.loss_w.depth >= 0.0 && c.loss_w.height >= 0.0 && c.loss_w.normal_grad >= 0.0,
        "loss weights must be >= 0");
  check(c.total_iters > 0, "train.total_iters must be positive");
  check(c.eval_interval > 0, "train.eval_interval must be positive");
  check(c.lr > 0.0, "train.lr must be positive");
  check(in01(c.ema_decay), "train.ema_decay outside [0, 1]");
  check(c.batch_labeled >= 1 && c.batch_unlabeled >= 1, "batch sizes must be >= 1");
  check(c.label_budget >= 1, "train.label_budget must be >= 1");
  check(c.unlabeled_budget >= -1, "train.unlabeled_budget must be >= -1");
  check(c.ramp_frac > 0.0 && c.ramp_frac <= 1.0, "train.ramp_frac outside (0, 1]");
  check(in01(c.lambda_max), "train.lambda_max outside [0, 1]");
  check(c.ablation_mode == "none" || c.ablation_mode == "image_only" ||
            c.ablation_mode == "naive_both" || c.ablation_mode == "collaborative",
        "train.ablation_mode must be one of none|image_only|naive_both|collaborative");
}

std::string canonical_config_text(const ExperimentConfig& c) {
  char buf[128];
  std::string out;
  auto put = [&out, &buf](const char* key, const char* fmt, auto v) {
    std::snprintf(buf, sizeof buf, fmt, v);
    out += key;
    out += " = ";
    out += buf;
    out += '\n';
  };
  auto putd = [&put](const char* key, double v) { put(key, "%.17g", v); };
  out += "dataset_dir = " + c.dataset_dir + "\n";
  out += "out_dir = " + c.out_dir + "\n";
  put("seed", "%llu", static_cast<unsigned long long>(c.seed));
  put("data.train_samples", "%d", c.data_train);
  put("data.val_samples", "%d", c.data_val);
  put("data.test_samples", "%d", c.data_test);
  put("data.height", "%d", c.height);
  put("data.width", "%d", c.width);
  putd("data.min_extent", c.gen.min_extent);
  putd("data.max_extent", c.gen.max_extent);
  putd("data.min_room_height", c.gen.min_room_height);
  putd("data.max_room_height", c.gen.max_room_height);
  putd("data.camera_height", c.gen.camera_height);
  putd("data.l_shape_prob", c.gen.l_shape_prob);
  putd("data.camera_margin", c.gen.camera_margin);
  putd("data.noise_sigma", c.noise_sigma);
  put("aug.hist_eq", "%d", c.strong.hist_eq ? 1 : 0);
  putd("aug.hp_cutoff", c.strong.hp_cutoff);
  putd("aug.hp_floor", c.strong.hp_floor);
  putd("aug.hp_blend", c.strong.hp_blend);
  putd("mask.p_center", c.mask.p_center);
  putd("mask.p_edge", c.mask.p_edge);
  putd("mask.p_channel", c.mask.p_channel);
  putd("loss.w_depth", c.loss_w.depth);
  putd("loss.w_height", c.loss_w.height);
  putd("loss.w_normal_grad", c.loss_w.normal_grad);
  put("train.total_iters", "%lld", static_cast<long long>(c.total_iters));
  put("train.eval_interval", "%lld", static_cast<long long>(c.eval_interval));
  putd("train.lr", c.lr);
  putd("train.ema_decay", c.ema_decay);
  put("train.batch_labeled", "%d", c.batch_labeled);
  put("train.batch_unlabeled", "%d", c.batch_unlabeled);
  put("train.label_budget", "%d", c.label_budget);
  put("train.unlabeled_budget", "%d", c.unlabeled_budget);
  putd("train.ramp_frac", c.ramp_frac);
  putd("train.lambda_max", c.lambda_max);
  out += "train.ablation_mode = " + c.ablation_mode + "\n";
  return out;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  return fnv1a64(canonical_config_text(cfg));
}

}  // namespace panolayout
