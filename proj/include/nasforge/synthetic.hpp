#pragma once

// Synthetic video classification task: a bright Gaussian blob drifts in one
// of four directions (left, right, up, down), so the label is only readable
// from temporal structure and temporal kernels carry real signal. With 8 or
// 16 classes the label gains a speed factor and then a blob-size factor, so
// wider networks keep finding new usable features instead of saturating on
// direction alone. Labels are assigned round-robin before shuffling, which
// keeps the class histogram balanced within one clip for any count. All
// randomness derives from the given seed.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nasforge/rng.hpp"
#include "nasforge/tensor.hpp"

namespace nasforge {

struct SyntheticConfig {
  int num_clips = 64;
  int frames = 8;
  int spatial = 16;
  int num_classes = 4;
  double noise = 0.1;
};

struct SyntheticVideoTask {
  std::vector<Tensor> clips;  // each [3, frames, spatial, spatial]
  std::vector<int> labels;
  std::string rule = "moving_blob_v1";
  std::uint64_t seed = 0;
};

// Direction unit vectors per class: left, right, up, down (x grows rightward,
// y grows downward).
inline void class_direction(int label, double& dx, double& dy) {
  switch (label) {
    case 0: dx = -1.0; dy = 0.0; break;
    case 1: dx = 1.0; dy = 0.0; break;
    case 2: dx = 0.0; dy = -1.0; break;
    default: dx = 0.0; dy = 1.0; break;
  }
}

inline SyntheticVideoTask generate_dataset(const SyntheticConfig& cfg, std::uint64_t seed) {
  if (cfg.num_classes != 2 && cfg.num_classes != 4 && cfg.num_classes != 8 &&
      cfg.num_classes != 16) {
    throw std::invalid_argument("synthetic: num_classes must be 2, 4, 8, or 16");
  }
  if (cfg.frames < 4) throw std::invalid_argument("synthetic: frames must be >= 4");
  if (cfg.spatial < 8) throw std::invalid_argument("synthetic: spatial must be >= 8");
  if (cfg.num_clips < 1) throw std::invalid_argument("synthetic: num_clips must be >= 1");
  if (cfg.noise < 0.0) throw std::invalid_argument("synthetic: noise must be >= 0");

  const Rng root(seed);
  SyntheticVideoTask task;
  task.seed = seed;
  if (cfg.num_classes > 4) task.rule = "moving_blob_v2";

  std::vector<int> order(static_cast<std::size_t>(cfg.num_clips));
  for (int i = 0; i < cfg.num_clips; ++i) order[static_cast<std::size_t>(i)] = i;
  {
    Rng shuffle_rng = root.split("order");
    shuffle_rng.shuffle(order);
  }

  const double s = cfg.spatial;

  for (int i = 0; i < cfg.num_clips; ++i) {
    const int label = order[static_cast<std::size_t>(i)] % cfg.num_classes;
    Rng rng = root.split("clip", static_cast<std::uint64_t>(i));
    double dx = 0.0, dy = 0.0;
    class_direction(label % 4, dx, dy);
    // Total travel of a third of the frame keeps the blob inside the image for
    // any start jitter below and gives a per-frame shift well above noise. The
    // slow variant travels s/5, still several pixels end to end.
    const bool fast = cfg.num_classes < 8 || ((label / 4) & 1) == 0;
    const double speed = (fast ? s / 3.0 : s / 5.0) / (cfg.frames - 1);
    const double sigma = cfg.num_classes < 16 ? s / 6.0 : (((label / 8) & 1) ? s / 4.5 : s / 8.0);
    const double jx = (rng.uniform() - 0.5) * s / 4.0;
    const double jy = (rng.uniform() - 0.5) * s / 4.0;
    const double cx0 = s / 2.0 + jx - dx * speed * (cfg.frames - 1) / 2.0;
    const double cy0 = s / 2.0 + jy - dy * speed * (cfg.frames - 1) / 2.0;

    Tensor clip({3, cfg.frames, cfg.spatial, cfg.spatial});
    const std::size_t plane = static_cast<std::size_t>(cfg.spatial) * cfg.spatial;
    const std::size_t chan = static_cast<std::size_t>(cfg.frames) * plane;
    for (int t = 0; t < cfg.frames; ++t) {
      const double cx = cx0 + dx * speed * t;
      const double cy = cy0 + dy * speed * t;
      for (int y = 0; y < cfg.spatial; ++y) {
        for (int x = 0; x < cfg.spatial; ++x) {
          const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
          const double v = std::exp(-d2 / (2.0 * sigma * sigma));
          const std::size_t at = static_cast<std::size_t>(t) * plane +
                                 static_cast<std::size_t>(y) * cfg.spatial +
                                 static_cast<std::size_t>(x);
          clip.v[at] = v;
          clip.v[chan + at] = v;
          clip.v[2 * chan + at] = v;
        }
      }
    }
    if (cfg.noise > 0.0) {
      Rng noise_rng = root.split("noise", static_cast<std::uint64_t>(i));
      for (double& v : clip.v) v += cfg.noise * noise_rng.normal();
    }
    task.clips.push_back(std::move(clip));
    task.labels.push_back(label);
  }
  return task;
}

// Stacks the chosen clips into one [N, 3, T, S, S] batch.
inline Tensor make_batch(const SyntheticVideoTask& task, const std::vector<int>& indices) {
  if (indices.empty()) throw std::invalid_argument("make_batch: empty index list");
  const Tensor& first = task.clips.at(static_cast<std::size_t>(indices[0]));
  std::vector<int> shape = {static_cast<int>(indices.size())};
  for (int d : first.shape) shape.push_back(d);
  Tensor out(std::move(shape));
  const std::size_t stride = first.v.size();
  for (std::size_t n = 0; n < indices.size(); ++n) {
    const Tensor& clip = task.clips.at(static_cast<std::size_t>(indices[n]));
    if (clip.v.size() != stride) throw std::invalid_argument("make_batch: clip shape mismatch");
    std::copy(clip.v.begin(), clip.v.end(), out.v.begin() + static_cast<std::ptrdiff_t>(n * stride));
  }
  return out;
}

// Direction read off the first-to-last frame shift of the intensity centroid
// (channel 0). At zero noise this classifies every clip correctly; it is the
// reference the learned models are compared against.
inline int direction_oracle(const Tensor& clip, int num_classes) {
  const int frames = clip.dim(1);
  const int s = clip.dim(2);
  const std::size_t plane = static_cast<std::size_t>(s) * s;
  auto centroid = [&](int t, double& cx, double& cy) {
    double total = 0.0;
    cx = 0.0;
    cy = 0.0;
    for (int y = 0; y < s; ++y) {
      for (int x = 0; x < s; ++x) {
        const double v =
            clip.v[static_cast<std::size_t>(t) * plane + static_cast<std::size_t>(y) * s +
                   static_cast<std::size_t>(x)];
        total += v;
        cx += v * x;
        cy += v * y;
      }
    }
    cx /= total;
    cy /= total;
  };
  double x0, y0, x1, y1;
  centroid(0, x0, y0);
  centroid(frames - 1, x1, y1);
  const double dx = x1 - x0;
  const double dy = y1 - y0;
  if (num_classes == 2 || std::abs(dx) >= std::abs(dy)) return dx < 0.0 ? 0 : 1;
  return dy < 0.0 ? 2 : 3;
}

}  // namespace nasforge
