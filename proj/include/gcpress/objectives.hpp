#pragma once

#include <vector>

#include "gcpress/ops.hpp"

namespace gcpress {

struct LossWeights {
  double lambda_d = 10.0;  // distortion
  double w_fm = 10.0;      // feature matching
  double beta = 0.0;       // entropy term; the rate is fixed by C and L instead
  void validate() const;
};

/// Mean over scales of mean((d_real - 1)^2) + mean(d_fake^2).
template <class T>
BasicTensor<T> lsgan_d_loss(const std::vector<BasicTensor<T>>& d_real, const std::vector<BasicTensor<T>>& d_fake);

enum class GeneratorGanForm {
  kNonSaturating,  // mean((d_fake - 1)^2)
  kLiteral,        // mean(d_fake^2), the sign-literal generator term
};

template <class T>
BasicTensor<T> lsgan_g_loss(const std::vector<BasicTensor<T>>& d_fake,
                            GeneratorGanForm form = GeneratorGanForm::kNonSaturating);

template <class T>
BasicTensor<T> distortion_mse(const BasicTensor<T>& x, const BasicTensor<T>& x_hat);

/// Squared error over pixels where `mask` (1 x 1 x H x W, values 0/1) is 1,
/// divided by the number of such elements. All-zero masks give 0.
template <class T>
BasicTensor<T> masked_distortion(const BasicTensor<T>& x, const BasicTensor<T>& x_hat, const BasicTensor<T>& mask);

/// L1 mean per discriminator layer, averaged over layers and scales. The
/// real branch is detached.
template <class T>
BasicTensor<T> feature_matching_loss(const std::vector<std::vector<BasicTensor<T>>>& real,
                                     const std::vector<std::vector<BasicTensor<T>>>& fake);

template <class T>
struct GeneratorLosses {
  BasicTensor<T> gan;         // may be undefined (MSE-only training)
  BasicTensor<T> distortion;
  BasicTensor<T> fm;          // may be undefined
};

/// gan + lambda_d * distortion + w_fm * fm. Throws NumericalError naming the
/// first non-finite component.
template <class T>
BasicTensor<T> gc_generator_total(const GeneratorLosses<T>& losses, const LossWeights& weights);

}  // namespace gcpress
