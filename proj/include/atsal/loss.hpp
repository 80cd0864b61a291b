#pragma once

#include <atsal/tape.hpp>
#include <atsal/tensor.hpp>

#include <span>
#include <vector>

namespace atsal {

inline constexpr double default_eps = 1e-7;

// Weights of the attention-stream objective:
//   alpha1 * KL(Y1, Q1) + alpha2 * NSS_loss(Y1, F) + beta * KL(M, Q2)
struct LossWeights {
  double alpha1 = 0.8;
  double alpha2 = 0.2;
  double beta = 0.2;
};

// x / sum(x). Throws DomainError on negative entries or non-positive mass.
template <typename T>
std::vector<T> sum_normalized(std::span<const T> x);

// sum_i q_i * log(eps + q_i / (eps + p_i)), accumulated in double. Inputs are
// expected to be distributions already; negative entries raise DomainError.
template <typename T>
double kl_loss(std::span<const T> p, std::span<const T> q, double eps = default_eps);

// d kl_loss / d p.
template <typename T>
std::vector<double> kl_loss_gradient(std::span<const T> p, std::span<const T> q,
                                     double eps = default_eps);

// -(1/N) sum_i z_i * F_i with z the population z-score of y and N = sum F.
template <typename T>
double nss_loss(std::span<const T> y, std::span<const T> fixations);

template <typename T>
std::vector<double> nss_loss_gradient(std::span<const T> y, std::span<const T> fixations);

double kl_loss(const Tensor& p, const Tensor& q, double eps = default_eps);
double nss_loss(const Tensor& saliency, const Tensor& fixations);

// Area-average downsampling by exact integer factors, renormalized to sum 1.
// Produces the mask target Q2 from the dense target Q1.
Tensor mask_target(const Tensor& target, std::size_t rows, std::size_t cols);

struct SupervisionPack {
  Tensor saliency;    // Y1, predicted map
  Tensor mask;        // M, attention mask
  Tensor fixations;   // F, binary fixation grid at saliency resolution
  Tensor target;      // Q1, dense ground truth
  Tensor mask_target; // Q2, Q1 downsampled to the mask grid
};

struct LossTerms {
  double kl_saliency = 0.0;
  double nss = 0.0; // the negative-NSS loss term
  double kl_mask = 0.0;
  double total = 0.0;
};

// Evaluates the composite objective. Y1, M, Q1 and Q2 are sum-normalized
// before the KL terms.
LossTerms total_loss(const SupervisionPack& pack, const LossWeights& weights = {},
                     double eps = default_eps);

// Differentiable versions recorded on a tape.
template <typename T>
Var kl_loss(Tape<T>& tape, Var p, const BasicTensor<T>& q, double eps = default_eps);

template <typename T>
Var nss_loss(Tape<T>& tape, Var saliency, const BasicTensor<T>& fixations);

struct LossVars {
  Var kl_saliency;
  Var nss;
  Var kl_mask;
  Var total;
};

template <typename T>
LossVars total_loss(Tape<T>& tape, Var saliency, Var mask, const BasicTensor<T>& fixations,
                    const BasicTensor<T>& target, const BasicTensor<T>& mask_target,
                    const LossWeights& weights = {}, double eps = default_eps);

} // namespace atsal
