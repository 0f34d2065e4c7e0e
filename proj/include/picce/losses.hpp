#pragma once

// Target 0-1 system loss, the two base multiclass losses over K+J outputs,
// and the three multi-expert surrogate families built on top of them.
//
// All surrogates take the score vector theta (length K+J), the true label y
// and the expert predictions m (length J); K is theta.size() - m.size().

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "picce/core.hpp"

namespace picce {

enum class BaseLoss { CE, OvaLog };
enum class Family { Vanilla, PCE, PiCCE };

struct SurrogateSpec {
  Family family = Family::PiCCE;
  BaseLoss base = BaseLoss::CE;
  bool operator==(const SurrogateSpec&) const = default;
};

std::string_view to_string(BaseLoss base);
std::string_view to_string(Family family);
/// "picce-ce", "vanilla-ova", ...
std::string to_string(const SurrogateSpec& spec);
SurrogateSpec parse_surrogate_spec(std::string_view text);

/// Numerically stable softplus log(1 + e^t).
double softplus(double t);
double sigmoid(double t);
double log_sum_exp(std::span<const double> v);
Vec softmax(std::span<const double> v);

/// Throws std::invalid_argument on NaN or infinite entries.
void require_finite(std::span<const double> theta);

/// -log softmax(theta)_index.
double phi_ce(std::span<const double> theta, std::size_t index);

/// One-vs-all logistic loss. Labels (index < K) pay -log s(theta_index) plus
/// -log(1 - s(theta_i)) for every other coordinate; expert coordinates
/// (index >= K) pay -log s(theta_index) + log(1 - s(theta_index)), which can
/// be negative.
double phi_ova(std::span<const double> theta, std::size_t index, std::size_t num_classes);

double base_loss(BaseLoss base, std::span<const double> theta, std::size_t index,
                 std::size_t num_classes);

/// grad += weight * d phi(theta, index) / d theta.
void add_base_loss_gradient(BaseLoss base, std::span<const double> theta, std::size_t index,
                            std::size_t num_classes, double weight, std::span<double> grad);

/// grad += sum_i weights[i] * d phi(theta, i) / d theta, in one pass.
void add_weighted_base_loss_gradient(BaseLoss base, std::span<const double> theta,
                                     std::span<const double> weights, std::size_t num_classes,
                                     std::span<double> grad);

/// 1[prediction != y] for the label or deferred expert chosen by `decision`.
int target_loss_01(const Decision& decision, std::size_t y, std::span<const std::size_t> m);

/// argmax_j theta_{K+j}, lowest index on ties.
std::size_t confident_expert(std::span<const double> theta, std::size_t num_experts);

/// argmax over {j : m_j = y} of theta_{K+j}, lowest index on ties; empty when
/// no expert is correct.
std::optional<std::size_t> confident_correct_expert(std::span<const double> theta, std::size_t y,
                                                    std::span<const std::size_t> m);

double vanilla_surrogate(std::span<const double> theta, std::size_t y,
                         std::span<const std::size_t> m, BaseLoss base);
double pce_surrogate(std::span<const double> theta, std::size_t y,
                     std::span<const std::size_t> m, BaseLoss base);
double picce_surrogate(std::span<const double> theta, std::size_t y,
                       std::span<const std::size_t> m, BaseLoss base);

double surrogate(const SurrogateSpec& spec, std::span<const double> theta, std::size_t y,
                 std::span<const std::size_t> m);

/// 0/1 weights on the K+J coordinates whose phi terms the surrogate sums.
Vec surrogate_weights(const SurrogateSpec& spec, std::span<const double> theta, std::size_t y,
                      std::span<const std::size_t> m);

/// Gradient of `surrogate` with respect to theta. PCE/PiCCE use the selected
/// expert at theta, which is exact away from score ties.
Vec surrogate_gradient(const SurrogateSpec& spec, std::span<const double> theta, std::size_t y,
                       std::span<const std::size_t> m);

}  // namespace picce
