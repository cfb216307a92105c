#include "nbdiff/semantics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "nbdiff/io.hpp"
#include "nbdiff/rng.hpp"

namespace nbdiff {

namespace {

// Per-class RGB palette in [-1, 1]. Background/road contrast is kept below
// the default edge threshold so the horizon line stays soft.
constexpr float kPalette[kSceneClasses][3] = {
    {-0.10f, -0.15f, -0.20f},  // background
    {-0.55f, -0.55f, -0.50f},  // road
    {0.70f, -0.40f, -0.40f},   // vehicle
    {0.80f, 0.65f, -0.30f},    // pedestrian
    {-0.35f, 0.30f, 0.85f},    // sky
};

void fill_rect(LabelMap& labels, int y0, int x0, int bh, int bw, std::uint8_t cls) {
  for (int y = y0; y < y0 + bh; ++y)
    for (int x = x0; x < x0 + bw; ++x) labels.at(y, x) = cls;
}

void fill_ellipse(LabelMap& labels, int cy, int cx, int ry, int rx, std::uint8_t cls) {
  for (int y = std::max(0, cy - ry); y <= std::min(labels.h - 1, cy + ry); ++y)
    for (int x = std::max(0, cx - rx); x <= std::min(labels.w - 1, cx + rx); ++x) {
      double dy = static_cast<double>(y - cy) / ry;
      double dx = static_cast<double>(x - cx) / rx;
      if (dy * dy + dx * dx <= 1.0) labels.at(y, x) = cls;
    }
}

}  // namespace

Scene generate_scene(std::uint64_t seed, const SceneParams& params) {
  const int h = params.height, w = params.width;
  if (h < 16 || w < 16) throw ConfigError("generate_scene: dims must be >= 16");
  if (params.channels != 1 && params.channels != 3)
    throw ConfigError("generate_scene: channels must be 1 or 3");
  if (params.min_objects < 0 || params.max_objects < params.min_objects)
    throw ConfigError("generate_scene: bad object count range");

  Rng rng(seed);
  Scene scene;
  scene.seed = seed;
  scene.labels = LabelMap(h, w);

  // Sky band, background strip, road plane.
  int sky_h = h / 6 + static_cast<int>(rng.next_below(std::max(1, h / 8)));
  int horizon = h / 2 + static_cast<int>(rng.next_below(std::max(1, h / 4)));
  for (int y = 0; y < h; ++y) {
    std::uint8_t cls = y < sky_h ? kSky : (y < horizon ? kBackground : kRoad);
    for (int x = 0; x < w; ++x) scene.labels.at(y, x) = cls;
  }

  int span = params.max_objects - params.min_objects + 1;
  int n_obj = params.min_objects + static_cast<int>(rng.next_below(span));
  scene.object_count = n_obj;
  for (int k = 0; k < n_obj; ++k) {
    if (rng.next_bernoulli(0.5)) {
      // Vehicle: small axis-aligned rectangle on the road.
      int bw = 4 + static_cast<int>(rng.next_below(3));
      int bh = 2 + static_cast<int>(rng.next_below(3));
      int y0 = horizon + static_cast<int>(rng.next_below(std::max(1, h - horizon - bh)));
      int x0 = static_cast<int>(rng.next_below(w - bw + 1));
      fill_rect(scene.labels, y0, x0, bh, bw, kVehicle);
    } else {
      // Pedestrian: narrow upright ellipse near the horizon.
      int rx = 1 + static_cast<int>(rng.next_below(2));
      int ry = 2 + static_cast<int>(rng.next_below(3));
      int cy = horizon - 1 + static_cast<int>(rng.next_below(std::max(1, h - horizon - ry)));
      cy = std::clamp(cy, ry, h - 1 - ry);
      int cx = rx + static_cast<int>(rng.next_below(std::max(1, w - 2 * rx)));
      fill_ellipse(scene.labels, cy, cx, ry, rx, kPedestrian);
    }
  }

  scene.image = Image(TensorShape{params.channels, h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float* rgb = kPalette[scene.labels.at(y, x)];
      if (params.channels == 3) {
        for (int c = 0; c < 3; ++c) scene.image.at(c, y, x) = rgb[c];
      } else {
        scene.image.at(0, y, x) = (rgb[0] + rgb[1] + rgb[2]) / 3.0f;
      }
    }
  return scene;
}

SemanticCondition extract_conditions(const Image& image, const LabelMap& labels,
                                     double tau) {
  const int h = image.shape.h, w = image.shape.w;
  if (labels.h != h || labels.w != w)
    throw Error("extract_conditions: label dimensions " + std::to_string(labels.h) +
                "x" + std::to_string(labels.w) + " do not match image " +
                image.shape.str());

  SemanticCondition cond;
  cond.segmentation = labels;
  cond.edges = BitMap(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double best = 0.0;
      for (int c = 0; c < image.shape.c; ++c) {
        int xl = std::max(0, x - 1), xr = std::min(w - 1, x + 1);
        int yu = std::max(0, y - 1), yd = std::min(h - 1, y + 1);
        double gx = (image.at(c, y, xr) - image.at(c, y, xl)) / 2.0;
        double gy = (image.at(c, yd, x) - image.at(c, yu, x)) / 2.0;
        best = std::max(best, std::sqrt(gx * gx + gy * gy));
      }
      cond.edges.at(y, x) = best > tau ? 1 : 0;
    }
  return cond;
}

void save_scene(const Scene& scene, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  out.write("SCN1", 4);
  io::write_u32(out, 1);
  io::write_u64(out, scene.seed);
  io::write_u32(out, static_cast<std::uint32_t>(scene.image.shape.c));
  io::write_u32(out, static_cast<std::uint32_t>(scene.image.shape.h));
  io::write_u32(out, static_cast<std::uint32_t>(scene.image.shape.w));
  io::write_u32(out, kSceneClasses);
  io::write_u32(out, static_cast<std::uint32_t>(scene.object_count));
  io::write_f32_array(out, scene.image.data.data(),
                      static_cast<std::size_t>(scene.image.data.size()));
  out.write(reinterpret_cast<const char*>(scene.labels.v.data()),
            static_cast<std::streamsize>(scene.labels.v.size()));
  if (!out) throw FormatError("write failed for " + path);
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  io::expect_magic(in, "SCN1", "scene record");
  std::uint32_t version = io::read_u32(in, "scene version");
  if (version != 1)
    throw FormatError("scene record: unsupported version " + std::to_string(version));
  Scene scene;
  scene.seed = io::read_u64(in, "scene seed");
  TensorShape shape;
  shape.c = static_cast<int>(io::read_u32(in, "scene dims"));
  shape.h = static_cast<int>(io::read_u32(in, "scene dims"));
  shape.w = static_cast<int>(io::read_u32(in, "scene dims"));
  if (shape.size() <= 0) throw FormatError("scene record: degenerate shape");
  std::uint32_t classes = io::read_u32(in, "scene classes");
  if (classes != kSceneClasses)
    throw FormatError("scene record: unexpected class count " + std::to_string(classes));
  scene.object_count = static_cast<int>(io::read_u32(in, "scene objects"));
  scene.image = Image(shape);
  io::read_f32_array(in, scene.image.data.data(),
                     static_cast<std::size_t>(shape.size()), "scene image");
  scene.labels = LabelMap(shape.h, shape.w);
  in.read(reinterpret_cast<char*>(scene.labels.v.data()),
          static_cast<std::streamsize>(scene.labels.v.size()));
  if (static_cast<std::size_t>(in.gcount()) != scene.labels.v.size())
    throw FormatError("scene record: truncated labels");
  for (std::uint8_t l : scene.labels.v)
    if (l >= kSceneClasses) throw FormatError("scene record: label out of range");
  return scene;
}

void save_dataset(const std::vector<Scene>& scenes, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream index(dir + "/index.txt", std::ios::trunc);
  if (!index) throw FormatError("cannot write " + dir + "/index.txt");
  char name[32];
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    std::snprintf(name, sizeof(name), "scene_%06zu.bin", i);
    save_scene(scenes[i], dir + "/" + name);
    index << name << "\n";
  }
}

std::vector<Scene> load_dataset(const std::string& dir) {
  std::ifstream index(dir + "/index.txt");
  if (!index) throw FormatError("cannot open " + dir + "/index.txt");
  std::vector<Scene> scenes;
  std::string name;
  while (std::getline(index, name)) {
    if (name.empty()) continue;
    scenes.push_back(load_scene(dir + "/" + name));
  }
  if (scenes.empty()) throw FormatError("dataset " + dir + " lists no records");
  return scenes;
}

std::vector<Scene> generate_dataset(std::uint64_t base_seed, int count,
                                    const SceneParams& params) {
  if (count < 1) throw ConfigError("generate_dataset: count must be >= 1");
  std::vector<Scene> scenes;
  scenes.reserve(count);
  for (int i = 0; i < count; ++i)
    scenes.push_back(generate_scene(derive_seed(base_seed, streams::kScene, i), params));
  return scenes;
}

}  // namespace nbdiff
