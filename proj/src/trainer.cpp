#include "gcpress/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "gcpress/autograd.hpp"
#include "gcpress/checkpoint.hpp"
#include "gcpress/errors.hpp"
#include "gcpress/model_store.hpp"
#include "gcpress/objectives.hpp"
#include "gcpress/quantizer.hpp"

namespace gcpress {

namespace {

HeatmapSample from_mask(int width, int height, int block, std::vector<std::uint8_t> mask) {
  HeatmapSample s;
  s.width = width;
  s.height = height;
  s.heatmap = heatmap_from_pixel_mask(mask, width, height, block);
  s.pixel_mask = std::move(mask);
  return s;
}

std::vector<Tensor> params_of(const std::vector<Param<float>>& ps) {
  std::vector<Tensor> out;
  for (const auto& p : ps) out.push_back(p.tensor);
  return out;
}

AdamOptions adam_options(const TrainConfig& cfg) {
  AdamOptions o;
  o.lr = cfg.lr;
  o.beta1 = cfg.beta1;
  o.beta2 = cfg.beta2;
  return o;
}

}  // namespace

std::vector<std::pair<int, int>> list_instances(const LabelGrids& grids) {
  std::vector<std::pair<int, int>> out;
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < grids.instances.size(); ++i) {
    const std::pair<int, int> key{grids.classes[i], grids.instances[i]};
    if (key.second > 0 && seen.insert(key).second) out.push_back(key);
  }
  return out;
}

HeatmapSample instance_heatmap(const LabelGrids& grids, int block, const std::vector<std::pair<int, int>>& keep) {
  const std::set<std::pair<int, int>> chosen(keep.begin(), keep.end());
  std::vector<std::uint8_t> mask(grids.instances.size(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask[i] = chosen.count({grids.classes[i], grids.instances[i]}) ? 1 : 0;
  return from_mask(grids.width, grids.height, block, std::move(mask));
}

HeatmapSample sample_heatmap_ri(const LabelGrids& grids, int block, std::mt19937_64& rng, double fraction) {
  if (!(fraction > 0 && fraction <= 1)) throw UsageError("random instances: fraction must lie in (0, 1]");
  auto instances = list_instances(grids);
  const auto n = instances.size();
  // The epsilon keeps exact products such as 0.25 * 4 from rounding up.
  const auto k = std::min(n, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9)));
  // Partial Fisher-Yates: the first k entries are a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(std::uniform_int_distribution<std::size_t>(0, n - 1 - i)(rng));
    std::swap(instances[i], instances[j]);
  }
  instances.resize(k);
  return instance_heatmap(grids, block, instances);
}

HeatmapSample box_heatmap(int width, int height, int block, int x0, int y0, int box_width, int box_height) {
  if (width < 1 || height < 1) throw UsageError("box heatmap: empty frame");
  const int xa = std::clamp(x0, 0, width), ya = std::clamp(y0, 0, height);
  const int xb = std::clamp(x0 + std::max(box_width, 0), 0, width);
  const int yb = std::clamp(y0 + std::max(box_height, 0), 0, height);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(width) * height, 0);
  for (int y = ya; y < yb; ++y)
    std::fill(mask.begin() + static_cast<long long>(y) * width + xa, mask.begin() + static_cast<long long>(y) * width + xb,
              std::uint8_t{1});
  return from_mask(width, height, block, std::move(mask));
}

HeatmapSample sample_heatmap_rb(int width, int height, int block, std::mt19937_64& rng, double min_side,
                                double max_side) {
  if (!(min_side > 0 && min_side <= max_side && max_side <= 1)) throw UsageError("random box: bad side range");
  std::uniform_real_distribution<double> side(min_side, max_side);
  const int bw = std::clamp(static_cast<int>(std::lround(side(rng) * width)), 1, width);
  const int bh = std::clamp(static_cast<int>(std::lround(side(rng) * height)), 1, height);
  const int x0 = std::uniform_int_distribution<int>(0, width - bw)(rng);
  const int y0 = std::uniform_int_distribution<int>(0, height - bh)(rng);
  return box_heatmap(width, height, block, x0, y0, bw, bh);
}

TrainExample make_example(const Sample& sample, int num_classes) {
  TrainExample ex;
  ex.x = image_to_tensor(sample.image);
  if (sample.labels) {
    ex.grids = rasterize_label_map(*sample.labels, sample.image.width, sample.image.height);
    if (num_classes > 0) ex.semantics = one_hot<float>(*ex.grids, num_classes);
  }
  return ex;
}

struct Trainer::Forward {
  std::unique_ptr<Tape<float>> tape;
  Tensor x_hat;
  Tensor pixel_mask;  // undefined: unmasked distortion
  double preserved = 1.0;
};

Trainer::Trainer(TrainConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))),
      net_(cfg_.model_config()),
      model_(net_, cfg_.seed),
      adam_eg_(params_of(model_.eg_parameters()), adam_options(cfg_)),
      adam_d_(params_of(model_.d_parameters()), adam_options(cfg_)),
      heatmap_rng_(cfg_.seed + 2),
      noise_rng_(cfg_.seed + 3) {}

void Trainer::zero_grad() {
  adam_eg_.zero_grad();
  adam_d_.zero_grad();
}

Tensor Trainer::d_conditioning(const TrainExample& ex) const {
  if (!net_.conditional_d) return {};
  if (!ex.semantics.defined()) throw UsageError(to_string(cfg_.mode) + " training needs label maps");
  return ex.semantics;
}

HeatmapSample Trainer::draw_heatmap(const TrainExample& ex) {
  const int w = ex.x.dim(3), h = ex.x.dim(2);
  if (cfg_.mode == TrainMode::kSCRandomInstance) {
    if (!ex.grids) throw UsageError("SC_RI training needs label maps");
    return sample_heatmap_ri(*ex.grids, net_.downsample, heatmap_rng_, cfg_.ri_fraction);
  }
  return sample_heatmap_rb(w, h, net_.downsample, heatmap_rng_, cfg_.rb_min, cfg_.rb_max);
}

Trainer::Forward Trainer::forward(const TrainExample& ex, const HeatmapSample* heatmap) {
  Forward f;
  f.tape = std::make_unique<Tape<float>>();
  RecordScope<float> scope(*f.tape);
  Tensor w_hat = quantize_soft_st(model_.encode(ex.x), net_.centers);
  Tensor semantics;
  if (net_.semantic) {
    if (!ex.semantics.defined()) throw UsageError("SC training needs label maps");
    semantics = ex.semantics;
    if (sc_masking_) {
      if (!heatmap) throw UsageError("SC step without a heatmap");
      const Heatmap& hm = heatmap->heatmap;
      if (hm.height != w_hat.dim(2) || hm.width != w_hat.dim(3))
        throw UsageError("heatmap does not match the code grid");
      const std::size_t plane = hm.cells.size();
      std::vector<float> code_mask(plane * static_cast<std::size_t>(net_.channels));
      for (std::size_t c = 0; c < static_cast<std::size_t>(net_.channels); ++c)
        for (std::size_t i = 0; i < plane; ++i) code_mask[c * plane + i] = hm.cells[i];
      w_hat = mul(w_hat, Tensor::from(w_hat.shape(), std::move(code_mask)));
      std::vector<float> pm(heatmap->pixel_mask.begin(), heatmap->pixel_mask.end());
      f.pixel_mask = Tensor::from({1, 1, heatmap->height, heatmap->width}, std::move(pm));
      f.preserved = hm.preserved_fraction();
    }
  } else if (cfg_.mode == TrainMode::kGCDplus) {
    // Handed over only to show that the GC generator ignores it.
    semantics = ex.semantics;
  }
  Tensor noise;
  if (net_.use_noise) noise = noise_grid(net_.noise_dim, w_hat.dim(2), w_hat.dim(3), noise_rng_());
  f.x_hat = model_.generate(w_hat, semantics, noise);
  return f;
}

StepReport Trainer::generator_gradients(const TrainExample& ex, const Tensor& d_semantics,
                                        const HeatmapSample* heatmap) {
  HeatmapSample drawn;
  if (net_.semantic && sc_masking_ && !heatmap) {
    drawn = draw_heatmap(ex);
    heatmap = &drawn;
  }
  Forward f = forward(ex, heatmap);
  RecordScope<float> scope(*f.tape);
  StepReport r;
  GeneratorLosses<float> losses;
  losses.distortion = f.pixel_mask.defined() ? masked_distortion(ex.x, f.x_hat, f.pixel_mask)
                                             : distortion_mse(ex.x, f.x_hat);
  if (cfg_.mode != TrainMode::kMSEBaseline) {
    const auto fake = model_.discriminate(f.x_hat, d_semantics);
    DiscriminatorOutput<float> real;
    {
      NoRecordScope<float> off;
      real = model_.discriminate(ex.x, d_semantics);
    }
    losses.gan = lsgan_g_loss(fake.logits, cfg_.gan_form);
    losses.fm = feature_matching_loss(real.features, fake.features);
    r.g_gan = losses.gan.item();
    r.fm = losses.fm.item();
  }
  const Tensor total = gc_generator_total(losses, cfg_.weights);
  r.distortion = losses.distortion.item();
  r.total = total.item();
  r.preserved = f.preserved;
  f.tape->backward(total);
  return r;
}

StepReport Trainer::step(const std::vector<TrainExample>& batch, const std::vector<HeatmapSample>* forced) {
  if (batch.empty()) throw UsageError("empty batch");
  if (forced && forced->size() != batch.size()) throw UsageError("one forced heatmap per example required");
  const std::size_t n = batch.size();
  const float inv = 1.0f / static_cast<float>(n);
  zero_grad();

  std::vector<HeatmapSample> heatmaps(n);
  std::vector<Forward> fwd;
  for (std::size_t b = 0; b < n; ++b) {
    const HeatmapSample* hm = nullptr;
    if (net_.semantic && sc_masking_) {
      heatmaps[b] = forced ? (*forced)[b] : draw_heatmap(batch[b]);
      hm = &heatmaps[b];
    }
    fwd.push_back(forward(batch[b], hm));
  }

  StepReport r;
  r.iteration = ++iteration_;
  const bool adversarial = cfg_.mode != TrainMode::kMSEBaseline;
  if (adversarial) {
    Tape<float> tape;
    RecordScope<float> scope(tape);
    Tensor d_total;
    for (std::size_t b = 0; b < n; ++b) {
      const Tensor cond = d_conditioning(batch[b]);
      const auto real = model_.discriminate(batch[b].x, cond);
      const auto fake = model_.discriminate(fwd[b].x_hat.detach(), cond);
      const Tensor l = scale(lsgan_d_loss(real.logits, fake.logits), inv);
      d_total = d_total.defined() ? add(d_total, l) : l;
    }
    r.d_loss = d_total.item();
    tape.backward(d_total);
    adam_d_.step();
  }

  for (std::size_t b = 0; b < n; ++b) {
    Forward& f = fwd[b];
    RecordScope<float> scope(*f.tape);
    GeneratorLosses<float> losses;
    losses.distortion = f.pixel_mask.defined() ? masked_distortion(batch[b].x, f.x_hat, f.pixel_mask)
                                               : distortion_mse(batch[b].x, f.x_hat);
    if (adversarial) {
      const Tensor cond = d_conditioning(batch[b]);
      const auto fake = model_.discriminate(f.x_hat, cond);
      DiscriminatorOutput<float> real;
      {
        NoRecordScope<float> off;
        real = model_.discriminate(batch[b].x, cond);
      }
      losses.gan = lsgan_g_loss(fake.logits, cfg_.gan_form);
      losses.fm = feature_matching_loss(real.features, fake.features);
      r.g_gan += losses.gan.item() / n;
      r.fm += losses.fm.item() / n;
    }
    const Tensor total = gc_generator_total(losses, cfg_.weights);
    r.distortion += losses.distortion.item() / n;
    r.total += total.item() / n;
    r.preserved += (f.preserved - 1.0) / n;
    f.tape->backward(scale(total, inv));
  }
  adam_eg_.step();
  // The generator pass also reached the discriminator weights.
  adam_d_.zero_grad();
  return r;
}

std::string loss_csv(const std::vector<StepReport>& log) {
  std::ostringstream o;
  o.precision(9);
  o << "iteration,d_loss,g_gan,distortion,fm,total\n";
  for (const auto& r : log)
    o << r.iteration << ',' << r.d_loss << ',' << r.g_gan << ',' << r.distortion << ',' << r.fm << ',' << r.total
      << '\n';
  return o.str();
}

Dataset load_training_data(const TrainConfig& cfg) {
  if (!cfg.data_dir.empty()) {
    FolderSpec spec;
    spec.dir = cfg.data_dir;
    spec.crop = cfg.crop;
    spec.seed = cfg.seed + 1;
    return ingest_folder(spec);
  }
  SyntheticSpec spec;
  spec.count = cfg.synthetic_count;
  spec.width = spec.height = cfg.crop > 0 ? cfg.crop : 64;
  spec.seed = cfg.seed;
  return synthetic_corpus(spec);
}

TrainResult train_loop(const Dataset& data, const TrainConfig& cfg, const TrainOptions& options) {
  if (data.empty()) throw UsageError("training set is empty");
  TrainResult result;
  result.trainer = std::make_unique<Trainer>(cfg);
  Trainer& trainer = *result.trainer;
  const int classes = trainer.model().config().num_classes;
  const auto& out = options.out_dir;
  if (!out.empty()) std::filesystem::create_directories(out);

  std::mt19937_64 shuffle_rng(cfg.seed + 1);
  std::vector<std::size_t> order(data.size());
  std::size_t cursor = order.size();
  auto next_index = [&] {
    if (cursor == order.size()) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      cursor = 0;
    }
    return order[cursor++];
  };

  for (int it = 1; it <= cfg.iterations; ++it) {
    std::vector<TrainExample> batch;
    for (int b = 0; b < cfg.batch; ++b) batch.push_back(make_example(data[next_index()], classes));
    try {
      result.log.push_back(trainer.step(batch));
    } catch (const NumericalError& e) {
      if (!out.empty()) {
        save_weights(out / "nan_snapshot.gcw", named_parameters(trainer.model()));
        write_text_atomic(out / "nan_snapshot.txt",
                          "iteration=" + std::to_string(it) + "\nerror=" + e.what() + "\n");
        write_text_atomic(out / "loss.csv", loss_csv(result.log));
      }
      throw;
    }
    if (options.on_step) options.on_step(result.log.back());
    if (!out.empty() && cfg.checkpoint_every > 0 && it % cfg.checkpoint_every == 0 && it != cfg.iterations) {
      save_weights(out / ("checkpoint_" + std::to_string(it) + ".gcw"), named_parameters(trainer.model()));
      write_text_atomic(out / "loss.csv", loss_csv(result.log));
    }
  }
  if (!out.empty()) {
    save_model_dir(out, cfg, trainer.model());
    write_text_atomic(out / "loss.csv", loss_csv(result.log));
  }
  return result;
}

}  // namespace gcpress
