#include "glassfield/trainer.hpp"

#include <Eigen/Core>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace gf {

namespace {
int g_threads = 1;
}

void set_num_threads(int n) {
  g_threads = std::max(1, n);
  Eigen::setNbThreads(g_threads);
#ifdef _OPENMP
  omp_set_num_threads(g_threads);
#endif
}

int num_threads() { return g_threads; }

FieldConfig TrainConfig::field_config() const {
  FieldConfig fc;
  fc.width = net_width;
  fc.feature_dim = feature_dim;
  fc.encoding.l_pos = l_pos;
  fc.encoding.l_dir = l_dir;
  fc.scene_scale = scene_scale;
  fc.density_bias = density_bias;
  return fc;
}

RenderConfig TrainConfig::render_config(bool jitter) const {
  RenderConfig rc;
  rc.n_coarse = n_coarse;
  rc.n_importance_glass = n_importance_glass;
  rc.n_importance_vi = n_importance_vi;
  rc.jitter = jitter;
  rc.offsets_in_coarse = offsets_in_coarse;
  rc.disable_glass = disable_glass;
  rc.disable_view_dependent = disable_view_dependent;
  rc.white_background = white_background;
  return rc;
}

TrainConfig desk_train_config() {
  TrainConfig c;
  c.rays_per_batch = 256;
  c.n_coarse = 32;
  c.n_importance_glass = 8;
  c.n_importance_vi = 8;
  c.iterations = 5000;
  c.lr_initial = 5e-4 * (256.0 / 1024.0);  // Eq.11 is a sum; scale lr with batch
  c.lr_final = 5e-5;
  c.log_every = 25;
  c.checkpoint_every = 1000;
  return c;
}

TrainConfig paper_train_config() { return TrainConfig{}; }

namespace {

json config_to_json(const TrainConfig& c) {
  return json{{"rays_per_batch", c.rays_per_batch},
              {"n_coarse", c.n_coarse},
              {"n_importance_glass", c.n_importance_glass},
              {"n_importance_vi", c.n_importance_vi},
              {"iterations", c.iterations},
              {"epsilon", c.epsilon},
              {"lr_initial", c.lr_initial},
              {"lr_final", c.lr_final},
              {"net_width", c.net_width},
              {"feature_dim", c.feature_dim},
              {"l_pos", c.l_pos},
              {"l_dir", c.l_dir},
              {"scene_scale", c.scene_scale},
              {"density_bias", c.density_bias},
              {"disable_glass", c.disable_glass},
              {"disable_view_dependent", c.disable_view_dependent},
              {"offsets_in_coarse", c.offsets_in_coarse},
              {"offset_loss_coarse", c.offset_loss_coarse},
              {"offset_loss_fine", c.offset_loss_fine},
              {"offset_warmup_iters", c.offset_warmup_iters},
              {"white_background", c.white_background},
              {"seed", c.seed},
              {"log_every", c.log_every},
              {"checkpoint_every", c.checkpoint_every}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.rays_per_batch = j.at("rays_per_batch");
  c.n_coarse = j.at("n_coarse");
  c.n_importance_glass = j.at("n_importance_glass");
  c.n_importance_vi = j.at("n_importance_vi");
  c.iterations = j.at("iterations");
  c.epsilon = j.at("epsilon");
  c.lr_initial = j.at("lr_initial");
  c.lr_final = j.at("lr_final");
  c.net_width = j.at("net_width");
  c.feature_dim = j.at("feature_dim");
  c.l_pos = j.at("l_pos");
  c.l_dir = j.at("l_dir");
  c.scene_scale = j.at("scene_scale");
  c.density_bias = j.at("density_bias");
  c.disable_glass = j.at("disable_glass");
  c.disable_view_dependent = j.at("disable_view_dependent");
  c.offsets_in_coarse = j.at("offsets_in_coarse");
  c.offset_loss_coarse = j.at("offset_loss_coarse");
  c.offset_loss_fine = j.at("offset_loss_fine");
  c.offset_warmup_iters = j.at("offset_warmup_iters");
  c.white_background = j.at("white_background");
  c.seed = j.at("seed");
  c.log_every = j.at("log_every");
  c.checkpoint_every = j.at("checkpoint_every");
  return c;
}

constexpr char kMagic[8] = {'G', 'F', 'C', 'K', 'P', 'T', '0', '1'};

}  // namespace

Trainer::Trainer(const TrainConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
  model_ = Model(cfg_.field_config(), rng_);
  opt_.resize(model_.named_params().size());
}

double Trainer::learning_rate(int64_t iter) const {
  if (cfg_.iterations <= 1) return cfg_.lr_initial;
  double f = double(iter) / double(cfg_.iterations);
  return cfg_.lr_initial * std::pow(cfg_.lr_final / cfg_.lr_initial, f);
}

TrainProgress Trainer::step(const std::vector<LoadedView>& train_views) {
  if (train_views.empty())
    throw std::invalid_argument("train: dataset has no training views");
  const double lr = learning_rate(iteration_);

  // one image, rays_per_batch pixels, both uniform
  const auto& view = train_views[rng_.uniform_int(0, (int64_t)train_views.size() - 1)];
  RayBatch batch;
  std::vector<float> target;
  target.reserve(cfg_.rays_per_batch * 3);
  for (int i = 0; i < cfg_.rays_per_batch; ++i) {
    int px = (int)rng_.uniform_int(0, view.cam.width - 1);
    int py = (int)rng_.uniform_int(0, view.cam.height - 1);
    batch.push_back(generate_ray(view.cam, px + 0.5, py + 0.5));
    for (int c = 0; c < 3; ++c) target.push_back(view.image.at(px, py, c));
  }
  auto target_t =
      Tensor::from_vector({(int64_t)cfg_.rays_per_batch, 3}, std::move(target));

  auto res = render_rays(model_, batch, cfg_.render_config(true), &rng_);
  auto render = render_loss(res.color, target_t) +
                render_loss(res.coarse_color, target_t);
  std::vector<Tensor> offset_terms;
  if (!cfg_.disable_glass) {
    if (cfg_.offset_loss_coarse) offset_terms.push_back(res.coarse_offsets);
    if (cfg_.offset_loss_fine) offset_terms.push_back(res.offsets);
  }
  auto offset = offset_terms.empty() ? Tensor::scalar(0.f)
                                     : offset_loss(offset_terms);
  auto loss = total_loss(render, offset, cfg_.epsilon);

  TrainProgress prog;
  prog.iteration = iteration_ + 1;
  prog.total = loss.item();
  prog.render = render.item();
  prog.offset = offset.item();
  prog.lr = lr;

  if (!std::isfinite(prog.total)) {
    double pnorm = 0;
    model_.visit_params([&](const std::string&, Tensor& p) {
      for (float v : p.values()) pnorm += double(v) * v;
    });
    throw NumericError("non-finite loss at iteration " +
                       std::to_string(prog.iteration) + " (lr " +
                       std::to_string(lr) + ", render " +
                       std::to_string(prog.render) + ", offset " +
                       std::to_string(prog.offset) + ", param l2 " +
                       std::to_string(std::sqrt(pnorm)) + ")");
  }

  loss.backward();

  // early iterations: keep the offset head frozen so the view-independent
  // geometry settles before refraction starts moving samples
  if (iteration_ < cfg_.offset_warmup_iters && !cfg_.disable_glass) {
    model_.glass.offset_hidden.weight.zero_grad();
    model_.glass.offset_hidden.bias.zero_grad();
    model_.glass.offset_out.weight.zero_grad();
    model_.glass.offset_out.bias.zero_grad();
  }

  auto params = model_.named_params();
  for (size_t i = 0; i < params.size(); ++i) {
    adam_step(*params[i].second, opt_[i], lr);
    params[i].second->zero_grad();
  }
  iteration_ += 1;
  return prog;
}

std::string Trainer::run(const DatasetManifest& dataset,
                         const std::string& out_dir,
                         const std::function<void(const TrainProgress&)>& on_log) {
  auto train_views = load_views(dataset, "train");
  fs::create_directories(out_dir);
  std::string csv_path = (fs::path(out_dir) / "metrics.csv").string();
  bool fresh = !fs::exists(csv_path) || iteration_ == 0;
  std::ofstream csv(csv_path, fresh ? std::ios::trunc : std::ios::app);
  if (!csv) throw std::runtime_error("train: cannot write " + csv_path);
  if (fresh) csv << "iteration,total_loss,render_loss,offset_loss,lr,wall_time_s\n";

  auto t0 = std::chrono::steady_clock::now();
  std::string ckpt_path = (fs::path(out_dir) / "checkpoint.gfc").string();
  while (iteration_ < cfg_.iterations) {
    auto prog = step(train_views);
    if (prog.iteration % cfg_.log_every == 0 || prog.iteration == cfg_.iterations) {
      double secs = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t0).count();
      csv << prog.iteration << "," << prog.total << "," << prog.render << ","
          << prog.offset << "," << prog.lr << "," << secs << "\n";
      csv.flush();
      if (on_log) on_log(prog);
    }
    if (prog.iteration % cfg_.checkpoint_every == 0 ||
        prog.iteration == cfg_.iterations)
      save_checkpoint(ckpt_path);
  }
  if (iteration_ == 0) save_checkpoint(ckpt_path);  // 0-iteration run still yields a model
  return ckpt_path;
}

void Trainer::save_checkpoint(const std::string& path) const {
  json header;
  header["version"] = 1;
  header["iteration"] = iteration_;
  header["config"] = config_to_json(cfg_);
  header["rng_state"] = rng_.save_state();

  // blob layout: every parameter, then adam m/v pairs, all float32 LE
  json params = json::array();
  int64_t offset = 0;
  auto& self = const_cast<Trainer&>(*this);
  auto named = self.model_.named_params();
  for (auto& [name, t] : named) {
    params.push_back({{"name", name}, {"shape", t->shape()}, {"offset", offset}});
    offset += t->size();
  }
  header["params"] = params;
  json opt = json::array();
  for (size_t i = 0; i < named.size(); ++i) {
    opt.push_back({{"m_offset", offset}, {"v_offset", offset + named[i].second->size()},
                   {"step", opt_[i].step}});
    offset += 2 * named[i].second->size();
  }
  header["optimizer"] = opt;
  std::string htext = header.dump();

  std::ofstream out(path + ".tmp", std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out.write(kMagic, 8);
  uint64_t hlen = htext.size();
  out.write(reinterpret_cast<const char*>(&hlen), 8);
  out.write(htext.data(), (std::streamsize)htext.size());
  auto write_blob = [&](const std::vector<float>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              (std::streamsize)(v.size() * sizeof(float)));
  };
  for (auto& [name, t] : named) write_blob(t->values());
  for (size_t i = 0; i < named.size(); ++i) {
    auto& st = opt_[i];
    std::vector<float> m = st.m, v = st.v;
    m.resize(named[i].second->size(), 0.f);
    v.resize(named[i].second->size(), 0.f);
    write_blob(m);
    write_blob(v);
  }
  out.close();
  fs::rename(path + ".tmp", path);
}

Trainer Trainer::load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 8);
  std::string htext(hlen, '\0');
  in.read(htext.data(), (std::streamsize)hlen);
  if (!in) throw std::runtime_error("checkpoint: truncated header in " + path);
  json header;
  try {
    header = json::parse(htext);
  } catch (const json::exception&) {
    throw std::runtime_error("checkpoint: corrupt header in " + path);
  }
  if (header.value("version", 0) != 1)
    throw std::runtime_error("checkpoint: unsupported version in " + path);

  TrainConfig cfg = config_from_json(header.at("config"));
  Trainer tr(cfg);
  tr.iteration_ = header.at("iteration");
  tr.rng_.load_state(header.at("rng_state"));

  auto named = tr.model_.named_params();
  auto& params_meta = header.at("params");
  if (params_meta.size() != named.size())
    throw std::runtime_error("checkpoint: parameter count mismatch in " + path);
  auto read_blob = [&](std::vector<float>& v) {
    in.read(reinterpret_cast<char*>(v.data()),
            (std::streamsize)(v.size() * sizeof(float)));
    if (!in) throw std::runtime_error("checkpoint: truncated blobs in " + path);
  };
  for (size_t i = 0; i < named.size(); ++i) {
    if (params_meta[i].at("name") != named[i].first)
      throw std::runtime_error("checkpoint: parameter order mismatch in " + path);
    Shape shape = params_meta[i].at("shape").get<Shape>();
    if (shape != named[i].second->shape())
      throw std::runtime_error("checkpoint: shape mismatch for " +
                               named[i].first + " in " + path);
    read_blob(named[i].second->values());
  }
  auto& opt_meta = header.at("optimizer");
  for (size_t i = 0; i < named.size(); ++i) {
    auto& st = tr.opt_[i];
    st.step = opt_meta[i].at("step");
    st.m.assign(named[i].second->size(), 0.f);
    st.v.assign(named[i].second->size(), 0.f);
    read_blob(st.m);
    read_blob(st.v);
    if (st.step == 0) {
      st.m.clear();
      st.v.clear();
    }
  }
  return tr;
}

}  // namespace gf
