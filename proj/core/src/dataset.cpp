#include "panolayout/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "panolayout/hashing.hpp"
#include "panolayout/rng.hpp"

namespace panolayout {

const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

DatasetConfig dataset_config_from(const ExperimentConfig& cfg) {
  DatasetConfig d;
  d.n_train = cfg.data_train;
  d.n_val = cfg.data_val;
  d.n_test = cfg.data_test;
  d.height = cfg.height;
  d.width = cfg.width;
  d.gen = cfg.gen;
  d.noise_sigma = cfg.noise_sigma;
  d.seed = cfg.seed;
  return d;
}

Panorama Dataset::image(int id) const {
  const std::vector<float>& src = images_[id];
  Panorama img(cfg_.height, cfg_.width);
  for (size_t i = 0; i < src.size(); ++i) img.pixels[i] = static_cast<double>(src[i]);
  return img;
}

const LayoutTarget& Dataset::target(int id) const {
  if (targets_.empty()) targets_.resize(records_.size());
  if (!targets_[id]) {
    targets_[id] = std::make_unique<LayoutTarget>(target_from_layout(records_[id].layout, cfg_.width));
  }
  return *targets_[id];
}

std::vector<int> Dataset::split_ids(Split s) const {
  std::vector<int> ids;
  for (const SampleRecord& r : records_) {
    if (r.split == s) ids.push_back(r.id);
  }
  return ids;
}

Dataset Dataset::generate(const DatasetConfig& cfg) {
  Dataset ds;
  ds.cfg_ = cfg;
  const int total = cfg.n_train + cfg.n_val + cfg.n_test;
  const Rng base(cfg.seed);
  ds.records_.reserve(total);
  ds.images_.reserve(total);
  for (int i = 0; i < total; ++i) {
    const std::uint64_t room_seed = Rng(base.fork(3 * static_cast<std::uint64_t>(i)).next_u64()).next_u64();
    Rng style_rng = base.fork(3 * static_cast<std::uint64_t>(i) + 1);
    const std::uint64_t noise_seed = base.fork(3 * static_cast<std::uint64_t>(i) + 2).next_u64();

    RoomLayout layout = generate_room(room_seed, cfg.gen);
    const SceneStyle style = SceneStyle::random(style_rng, cfg.noise_sigma);
    const Panorama img = render_panorama(layout, style, cfg.height, cfg.width, noise_seed);

    Split split = Split::Train;
    if (i >= cfg.n_train + cfg.n_val) {
      split = Split::Test;
    } else if (i >= cfg.n_train) {
      split = Split::Val;
    }
    ds.records_.push_back(SampleRecord{i, split, style_rng.fork(0).next_u64(), std::move(layout)});
    std::vector<float> f32(img.pixels.size());
    for (size_t j = 0; j < img.pixels.size(); ++j) f32[j] = static_cast<float>(img.pixels[j]);
    ds.images_.push_back(std::move(f32));
  }
  return ds;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string Dataset::manifest_text() const {
  std::ostringstream out;
  out << "# panolayout dataset manifest\n";
  out << "format_version = 1\n";
  out << "seed = " << cfg_.seed << "\n";
  out << "samples = " << size() << "\n";
  out << "height = " << cfg_.height << "\n";
  out << "width = " << cfg_.width << "\n";
  out << "train = " << cfg_.n_train << "\n";
  out << "val = " << cfg_.n_val << "\n";
  out << "test = " << cfg_.n_test << "\n";
  std::string gen_text;
  gen_text += "min_extent = " + format_double(cfg_.gen.min_extent) + "\n";
  gen_text += "max_extent = " + format_double(cfg_.gen.max_extent) + "\n";
  gen_text += "min_room_height = " + format_double(cfg_.gen.min_room_height) + "\n";
  gen_text += "max_room_height = " + format_double(cfg_.gen.max_room_height) + "\n";
  gen_text += "camera_height = " + format_double(cfg_.gen.camera_height) + "\n";
  gen_text += "l_shape_prob = " + format_double(cfg_.gen.l_shape_prob) + "\n";
  gen_text += "camera_margin = " + format_double(cfg_.gen.camera_margin) + "\n";
  gen_text += "noise_sigma = " + format_double(cfg_.noise_sigma) + "\n";
  out << gen_text;
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(gen_text)));
  out << "gen_config_hash = " << hex << "\n";

  const std::int64_t pixel_bytes =
      static_cast<std::int64_t>(cfg_.height) * cfg_.width * 3 * static_cast<std::int64_t>(sizeof(float));
  std::int64_t offset = 0;
  for (const SampleRecord& r : records_) {
    std::ostringstream header;
    header << "sample " << r.id << "\n";
    header << "split " << to_string(r.split) << "\n";
    header << "style_seed " << r.style_seed << "\n";
    header << "room_height " << format_double(r.layout.room_height()) << "\n";
    header << "camera_height " << format_double(r.layout.camera_height()) << "\n";
    header << "corners " << r.layout.corners().size();
    for (const Vec2& c : r.layout.corners()) {
      header << " " << format_double(c.x) << " " << format_double(c.z);
    }
    header << "\npixels " << cfg_.height << " " << cfg_.width << " 3\n";

    out << "entry " << r.id << " " << to_string(r.split) << " offset " << offset << " style_seed "
        << r.style_seed << " room_height " << format_double(r.layout.room_height())
        << " camera_height " << format_double(r.layout.camera_height()) << " corners "
        << r.layout.corners().size();
    for (const Vec2& c : r.layout.corners()) {
      out << " " << format_double(c.x) << " " << format_double(c.z);
    }
    out << "\n";
    offset += static_cast<std::int64_t>(header.str().size()) + pixel_bytes;
  }
  return out.str();
}

std::uint64_t Dataset::manifest_hash() const { return fnv1a64(manifest_text()); }

void Dataset::write(const std::filesystem::path& dir, bool force) const {
  namespace fs = std::filesystem;
  if (fs::exists(dir) && !fs::is_empty(dir) && !force) {
    throw std::runtime_error("dataset directory exists and is not empty (use --force): " +
                             dir.string());
  }
  fs::create_directories(dir);

  std::ofstream manifest(dir / "manifest.txt", std::ios::binary);
  if (!manifest) throw std::runtime_error("cannot write manifest");
  manifest << manifest_text();
  manifest.close();

  std::ofstream dat(dir / "samples.dat", std::ios::binary);
  if (!dat) throw std::runtime_error("cannot write samples.dat");
  for (const SampleRecord& r : records_) {
    std::ostringstream header;
    header << "sample " << r.id << "\n";
    header << "split " << to_string(r.split) << "\n";
    header << "style_seed " << r.style_seed << "\n";
    header << "room_height " << format_double(r.layout.room_height()) << "\n";
    header << "camera_height " << format_double(r.layout.camera_height()) << "\n";
    header << "corners " << r.layout.corners().size();
    for (const Vec2& c : r.layout.corners()) {
      header << " " << format_double(c.x) << " " << format_double(c.z);
    }
    header << "\npixels " << cfg_.height << " " << cfg_.width << " 3\n";
    dat << header.str();
    const std::vector<float>& img = images_[r.id];
    dat.write(reinterpret_cast<const char*>(img.data()),
              static_cast<std::streamsize>(img.size() * sizeof(float)));
  }
}

namespace {

std::string expect_token(std::istringstream& in, const char* what, int id) {
  std::string tok;
  if (!(in >> tok)) {
    throw std::runtime_error(std::string("dataset: missing ") + what + " for sample " +
                             std::to_string(id));
  }
  return tok;
}

Split split_from(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw std::runtime_error("dataset: unknown split name '" + s + "'");
}

}  // namespace

Dataset Dataset::load(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::ifstream manifest(dir / "manifest.txt", std::ios::binary);
  if (!manifest) throw std::runtime_error("cannot open manifest: " + (dir / "manifest.txt").string());

  Dataset ds;
  int declared_samples = -1;
  struct Entry {
    int id;
    Split split;
    std::int64_t offset;
    std::uint64_t style_seed;
    double room_height, camera_height;
    std::vector<Vec2> corners;
  };
  std::vector<Entry> entries;

  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream in(line);
    std::string key;
    in >> key;
    if (key == "entry") {
      Entry e;
      std::string tok;
      in >> e.id >> tok;
      e.split = split_from(tok);
      in >> tok >> e.offset;          // "offset" N
      in >> tok >> e.style_seed;      // "style_seed" N
      in >> tok >> e.room_height;     // "room_height" x
      in >> tok >> e.camera_height;   // "camera_height" x
      size_t n_corners = 0;
      in >> tok >> n_corners;         // "corners" n
      e.corners.resize(n_corners);
      for (size_t i = 0; i < n_corners; ++i) in >> e.corners[i].x >> e.corners[i].z;
      if (!in) throw std::runtime_error("dataset: malformed manifest entry");
      entries.push_back(std::move(e));
    } else if (key == "seed") {
      std::string eq;
      in >> eq >> ds.cfg_.seed;
    } else if (key == "samples") {
      std::string eq;
      in >> eq >> declared_samples;
    } else if (key == "height") {
      std::string eq;
      in >> eq >> ds.cfg_.height;
    } else if (key == "width") {
      std::string eq;
      in >> eq >> ds.cfg_.width;
    } else if (key == "train") {
      std::string eq;
      in >> eq >> ds.cfg_.n_train;
    } else if (key == "val") {
      std::string eq;
      in >> eq >> ds.cfg_.n_val;
    } else if (key == "test") {
      std::string eq;
      in >> eq >> ds.cfg_.n_test;
    } else if (key == "min_extent") {
      std::string eq;
      in >> eq >> ds.cfg_.gen.min_extent;
    } else if (key == "max_extent") {
      std::string eq;
      in >> eq >> ds.cfg_.gen.max_extent;
    } else if (key == "min_room_height") {
      std::string eq;
      in >> eq >> ds.cfg_.gen.min_room_height;
    } else if (key == "max_room_height") {
      std::string eq;
      in >> eq >> ds.cfg_.gen.max_room_height;
    } else if (key == "camera_height") {
      std::string eq;
      in >> eq >> ds.cfg_.gen.camera_height;
    } else if (key == "l_shape_prob") {
      std::string eq;
      in >> eq >> ds.cfg_.gen.l_shape_prob;
    } else if (key == "camera_margin") {
      std::string eq;
      in >> eq >> ds.cfg_.gen.camera_margin;
    } else if (key == "noise_sigma") {
      std::string eq;
      in >> eq >> ds.cfg_.noise_sigma;
    }
  }
  if (declared_samples != static_cast<int>(entries.size())) {
    throw std::runtime_error("dataset: manifest sample count mismatch");
  }

  std::ifstream dat(dir / "samples.dat", std::ios::binary);
  if (!dat) throw std::runtime_error("cannot open samples.dat");
  const size_t n_pixels = static_cast<size_t>(ds.cfg_.height) * ds.cfg_.width * 3;

  for (const Entry& e : entries) {
    dat.seekg(e.offset);
    std::string l;
    // "sample <id>"
    if (!std::getline(dat, l)) throw std::runtime_error("dataset: truncated header for sample " + std::to_string(e.id));
    {
      std::istringstream in(l);
      std::string tok;
      int id = -1;
      in >> tok >> id;
      if (tok != "sample" || id != e.id) {
        throw std::runtime_error("dataset: record/manifest id mismatch for sample " +
                                 std::to_string(e.id));
      }
    }
    Split split = e.split;
    std::uint64_t style_seed = 0;
    double room_height = 0.0, camera_height = 0.0;
    std::vector<Vec2> corners;
    for (;;) {
      if (!std::getline(dat, l)) {
        throw std::runtime_error("dataset: truncated header for sample " + std::to_string(e.id));
      }
      std::istringstream in(l);
      std::string key;
      in >> key;
      if (key == "split") {
        std::string s;
        in >> s;
        split = split_from(s);
      } else if (key == "style_seed") {
        in >> style_seed;
      } else if (key == "room_height") {
        in >> room_height;
      } else if (key == "camera_height") {
        in >> camera_height;
      } else if (key == "corners") {
        size_t n = 0;
        in >> n;
        corners.resize(n);
        for (size_t i = 0; i < n; ++i) in >> corners[i].x >> corners[i].z;
      } else if (key == "pixels") {
        break;
      } else {
        throw std::runtime_error("dataset: unknown record key '" + key + "'");
      }
    }
    // Cross-check the record header against the manifest entry.
    if (style_seed != e.style_seed || room_height != e.room_height ||
        camera_height != e.camera_height || corners.size() != e.corners.size()) {
      throw std::runtime_error("dataset: record header disagrees with manifest for sample " +
                               std::to_string(e.id));
    }
    for (size_t i = 0; i < corners.size(); ++i) {
      if (corners[i].x != e.corners[i].x || corners[i].z != e.corners[i].z) {
        throw std::runtime_error("dataset: corner mismatch for sample " + std::to_string(e.id));
      }
    }
    std::vector<float> img(n_pixels);
    dat.read(reinterpret_cast<char*>(img.data()), static_cast<std::streamsize>(n_pixels * sizeof(float)));
    if (dat.gcount() != static_cast<std::streamsize>(n_pixels * sizeof(float))) {
      throw std::runtime_error("dataset: truncated image block for sample " + std::to_string(e.id));
    }
    ds.records_.push_back(SampleRecord{e.id, split, style_seed,
                                       RoomLayout(std::move(corners), camera_height, room_height)});
    ds.images_.push_back(std::move(img));
  }
  return ds;
}

std::vector<int> pick_labeled(const Dataset& ds, int label_budget, std::uint64_t seed) {
  std::vector<int> pool = ds.split_ids(Split::Train);
  if (label_budget < 1 || label_budget > static_cast<int>(pool.size())) {
    throw std::invalid_argument("label budget outside the train pool size");
  }
  Rng rng(Rng(ds.manifest_hash()).fork(seed).fork(static_cast<std::uint64_t>(label_budget)).next_u64());
  for (size_t i = pool.size() - 1; i > 0; --i) {
    const size_t j = rng.uniform_int(i + 1);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(label_budget);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace panolayout
