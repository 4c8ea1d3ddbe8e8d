#include "gcpress/objectives.hpp"

#include <cmath>

namespace gcpress {

void LossWeights::validate() const {
  if (!(lambda_d > 0.0)) throw ConfigError("lambda_d must be positive");
  if (w_fm < 0.0) throw ConfigError("w_fm must be non-negative");
  if (beta != 0.0) throw ConfigError("only beta = 0 is supported");
}

namespace {

template <class T>
BasicTensor<T> average(const std::vector<BasicTensor<T>>& terms) {
  BasicTensor<T> acc = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return terms.size() == 1 ? acc : scale(acc, T(1) / static_cast<T>(terms.size()));
}

template <class T>
void check_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* what) {
  if (a.shape() != b.shape())
    throw UsageError(std::string(what) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
}

template <class T>
void check_finite_component(const BasicTensor<T>& t, const char* name) {
  if (t.defined() && !std::isfinite(static_cast<double>(t.item())))
    throw NumericalError(std::string("loss component '") + name + "' is not finite");
}

}  // namespace

template <class T>
BasicTensor<T> lsgan_d_loss(const std::vector<BasicTensor<T>>& d_real, const std::vector<BasicTensor<T>>& d_fake) {
  if (d_real.size() != d_fake.size() || d_real.empty())
    throw UsageError("lsgan_d_loss: real and fake scale counts differ");
  std::vector<BasicTensor<T>> per_scale;
  for (std::size_t s = 0; s < d_real.size(); ++s)
    per_scale.push_back(add(mean(square(add_scalar(d_real[s], T(-1)))), mean(square(d_fake[s]))));
  return average(per_scale);
}

template <class T>
BasicTensor<T> lsgan_g_loss(const std::vector<BasicTensor<T>>& d_fake, GeneratorGanForm form) {
  if (d_fake.empty()) throw UsageError("lsgan_g_loss: no discriminator outputs");
  std::vector<BasicTensor<T>> per_scale;
  for (const auto& d : d_fake)
    per_scale.push_back(mean(square(form == GeneratorGanForm::kNonSaturating ? add_scalar(d, T(-1)) : d)));
  return average(per_scale);
}

template <class T>
BasicTensor<T> distortion_mse(const BasicTensor<T>& x, const BasicTensor<T>& x_hat) {
  check_same_shape(x, x_hat, "distortion_mse");
  return scale(sum(square(sub(x_hat, x))), T(1) / static_cast<T>(x.numel()));
}

template <class T>
BasicTensor<T> masked_distortion(const BasicTensor<T>& x, const BasicTensor<T>& x_hat, const BasicTensor<T>& mask) {
  check_same_shape(x, x_hat, "masked_distortion");
  if (x.rank() != 4 || mask.shape() != Shape{x.dim(0), 1, x.dim(2), x.dim(3)})
    throw UsageError("masked_distortion: mask must be N x 1 x H x W, got " + shape_to_string(mask.shape()));
  // Broadcast the mask over channels.
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  std::vector<T> full(x.numel());
  std::size_t kept = 0;
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < plane; ++i) {
        const T m = mask.values()[static_cast<std::size_t>(b) * plane + i];
        if (m != T(0) && m != T(1)) throw UsageError("masked_distortion: mask must be binary");
        full[(static_cast<std::size_t>(b) * c + ch) * plane + i] = m;
        kept += m == T(1);
      }
  const auto m = BasicTensor<T>::from(x.shape(), std::move(full));
  const auto total = sum(mul(m, square(sub(x_hat, x))));
  return kept == 0 ? total : scale(total, T(1) / static_cast<T>(kept));
}

template <class T>
BasicTensor<T> feature_matching_loss(const std::vector<std::vector<BasicTensor<T>>>& real,
                                     const std::vector<std::vector<BasicTensor<T>>>& fake) {
  if (real.size() != fake.size() || real.empty()) throw UsageError("feature_matching_loss: scale counts differ");
  std::vector<BasicTensor<T>> per_scale;
  for (std::size_t s = 0; s < real.size(); ++s) {
    if (real[s].size() != fake[s].size() || real[s].empty())
      throw UsageError("feature_matching_loss: layer counts differ at scale " + std::to_string(s));
    std::vector<BasicTensor<T>> per_layer;
    for (std::size_t l = 0; l < real[s].size(); ++l) {
      check_same_shape(real[s][l], fake[s][l], "feature_matching_loss");
      per_layer.push_back(mean(abs(sub(fake[s][l], real[s][l].detach()))));
    }
    per_scale.push_back(average(per_layer));
  }
  return average(per_scale);
}

template <class T>
BasicTensor<T> gc_generator_total(const GeneratorLosses<T>& losses, const LossWeights& weights) {
  if (!losses.distortion.defined()) throw UsageError("generator total needs a distortion term");
  check_finite_component(losses.gan, "gan");
  check_finite_component(losses.distortion, "distortion");
  check_finite_component(losses.fm, "fm");
  BasicTensor<T> total = scale(losses.distortion, static_cast<T>(weights.lambda_d));
  if (losses.gan.defined()) total = add(losses.gan, total);
  if (losses.fm.defined() && weights.w_fm != 0.0) total = add(total, scale(losses.fm, static_cast<T>(weights.w_fm)));
  return total;
}

#define GCPRESS_INSTANTIATE(T)                                                                                    \
  template BasicTensor<T> lsgan_d_loss<T>(const std::vector<BasicTensor<T>>&, const std::vector<BasicTensor<T>>&); \
  template BasicTensor<T> lsgan_g_loss<T>(const std::vector<BasicTensor<T>>&, GeneratorGanForm);                  \
  template BasicTensor<T> distortion_mse<T>(const BasicTensor<T>&, const BasicTensor<T>&);                        \
  template BasicTensor<T> masked_distortion<T>(const BasicTensor<T>&, const BasicTensor<T>&,                      \
                                               const BasicTensor<T>&);                                            \
  template BasicTensor<T> feature_matching_loss<T>(const std::vector<std::vector<BasicTensor<T>>>&,               \
                                                   const std::vector<std::vector<BasicTensor<T>>>&);              \
  template BasicTensor<T> gc_generator_total<T>(const GeneratorLosses<T>&, const LossWeights&);

GCPRESS_INSTANTIATE(float)
GCPRESS_INSTANTIATE(double)
#undef GCPRESS_INSTANTIATE

}  // namespace gcpress
