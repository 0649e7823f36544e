#pragma once

// Ray-batch training loop over a posed dataset, with resumable binary
// checkpoints (parameters + optimizer state + RNG stream) and an append-only
// CSV metrics log.

#include <functional>

#include "glassfield/adam.hpp"
#include "glassfield/dataset.hpp"
#include "glassfield/losses.hpp"
#include "glassfield/renderer.hpp"

namespace gf {

// Raised when the loss goes non-finite; carries the diagnostic snapshot.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TrainConfig {
  int rays_per_batch = 1024;
  int n_coarse = 128;
  int n_importance_glass = 32;
  int n_importance_vi = 32;
  int iterations = 200000;
  double epsilon = 1e-5;  // offset regularization weight
  double lr_initial = 5e-4;
  double lr_final = 5e-5;
  int net_width = 64;
  int feature_dim = 64;
  int l_pos = 10;
  int l_dir = 4;
  double scene_scale = 40.0;
  double density_bias = -3.0;
  bool disable_glass = false;
  bool disable_view_dependent = false;
  bool offsets_in_coarse = true;
  bool offset_loss_coarse = true;  // include coarse-pass offsets in Eq.12's sum
  bool offset_loss_fine = true;
  int offset_warmup_iters = 500;  // freeze the offset head early on
  bool white_background = true;
  uint64_t seed = 0;
  int log_every = 25;
  int checkpoint_every = 1000;

  FieldConfig field_config() const;
  RenderConfig render_config(bool jitter) const;
};

// 256 rays, 32+8+8 samples, 5k iterations on 64x64 inputs; lr scaled to the
// smaller batch.
TrainConfig desk_train_config();
// 1024 rays, 128+32+32 samples, 200k iterations.
TrainConfig paper_train_config();

struct TrainProgress {
  int64_t iteration = 0;
  double total = 0, render = 0, offset = 0, lr = 0;
};

class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg);

  // Runs up to cfg.iterations (absolute), appending to the metrics CSV and
  // writing checkpoints under out_dir. Returns the final checkpoint path.
  std::string run(const DatasetManifest& dataset, const std::string& out_dir,
                  const std::function<void(const TrainProgress&)>& on_log = {});

  TrainProgress step(const std::vector<LoadedView>& train_views);

  void save_checkpoint(const std::string& path) const;
  static Trainer load_checkpoint(const std::string& path);

  Model& model() { return model_; }
  const TrainConfig& config() const { return cfg_; }
  int64_t iteration() const { return iteration_; }
  double learning_rate(int64_t iter) const;
  Rng& rng() { return rng_; }

 private:
  TrainConfig cfg_;
  Model model_;
  std::vector<AdamState> opt_;  // parallel to model_.named_params() order
  Rng rng_;
  int64_t iteration_ = 0;
};

// Process-wide thread budget for rendering and GEMM.
void set_num_threads(int n);
int num_threads();

}  // namespace gf
