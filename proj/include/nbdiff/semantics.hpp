#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nbdiff/tensor.hpp"

namespace nbdiff {

// Label classes of the synthetic street scenes.
enum SceneClass : std::uint8_t {
  kBackground = 0,
  kRoad = 1,
  kVehicle = 2,
  kPedestrian = 3,
  kSky = 4,
};
constexpr int kSceneClasses = 5;

struct SceneParams {
  int height = 32;
  int width = 32;
  int channels = 3;
  int min_objects = 1;
  int max_objects = 5;
};

/// A rendered scene plus its ground-truth labels.
struct Scene {
  std::uint64_t seed = 0;
  Image image;      // channels x H x W in [-1, 1]
  LabelMap labels;  // H x W class ids
  int object_count = 0;
};

/// Goal-oriented conditions extracted from an image: segmentation labels and
/// an edge bitmap.
struct SemanticCondition {
  LabelMap segmentation;
  BitMap edges;
};

Scene generate_scene(std::uint64_t seed, const SceneParams& params);

/// Segmentation is the provided label map passed through; edges fire where
/// the max-channel gradient magnitude (central differences, replicated
/// borders) exceeds tau.
SemanticCondition extract_conditions(const Image& image, const LabelMap& labels,
                                     double tau = 0.25);

/// K one-hot label channels followed by one edge channel, values in {0, 1}.
template <typename Scalar>
ImageT<Scalar> condition_tensor(const SemanticCondition& cond, int num_classes) {
  if (num_classes < 1 || num_classes > 16)
    throw ConfigError("condition_tensor: class count must be in [1, 16]");
  const int h = cond.segmentation.h, w = cond.segmentation.w;
  if (cond.edges.h != h || cond.edges.w != w)
    throw Error("condition_tensor: segmentation/edge dimensions disagree");
  ImageT<Scalar> out(TensorShape{num_classes + 1, h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int label = cond.segmentation.at(y, x);
      if (label >= num_classes)
        throw Error("condition_tensor: label " + std::to_string(label) +
                    " outside [0, " + std::to_string(num_classes) + ")");
      out.at(label, y, x) = Scalar(1);
      if (cond.edges.at(y, x)) out.at(num_classes, y, x) = Scalar(1);
    }
  return out;
}

// Scene record (binary, little-endian): magic "SCN1", version u32, seed u64,
// C/H/W u32, class count u32, object count u32, image f32 x (C*H*W),
// labels u8 x (H*W). A dataset directory holds one record per scene plus an
// index.txt listing record filenames in order.

void save_scene(const Scene& scene, const std::string& path);
Scene load_scene(const std::string& path);

void save_dataset(const std::vector<Scene>& scenes, const std::string& dir);
std::vector<Scene> load_dataset(const std::string& dir);

/// Generates `count` scenes with per-scene seeds derived from `base_seed`.
std::vector<Scene> generate_dataset(std::uint64_t base_seed, int count,
                                    const SceneParams& params);

}  // namespace nbdiff
