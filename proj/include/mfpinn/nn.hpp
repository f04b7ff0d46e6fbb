#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mfpinn/common.hpp"

namespace mfpinn {

enum class Activation { Tanh, Sin };

/// Shape metadata of a fully connected network mapping a spatial point
/// x in R^d to G*(d+1) output channels (current components and flux per
/// group). The final layer is affine; hidden layers use `activation`.
struct Architecture {
  int input_dim = 2;            // d in {2,3}
  int hidden_layers = 1;        // L >= 1
  std::vector<int> widths;      // one entry per hidden layer, all > 0
  int output_dim = 3;           // G*(d+1)
  Activation activation = Activation::Tanh;

  int groups() const { return output_dim / (input_dim + 1); }
  /// Neurons of layer l, l = 0 (input) .. L+1 (output).
  int layer_size(int l) const;
  void validate() const;
};

/// Weights and biases, layer l = 1..L+1. W[l-1] is n_l x n_{l-1}.
struct NetworkParams {
  std::vector<MatrixXd> weights;
  std::vector<VectorXd> biases;

  Index count() const;
  VectorXd to_flat() const;
  static NetworkParams from_flat(const Architecture& arch, const VectorXd& flat);
  static NetworkParams zeros_like(const Architecture& arch);
  void validate(const Architecture& arch) const;
};

/// Network outputs and their spatial derivatives on a batch. `values`
/// is output_dim x N (points as columns); `tangents[j]` holds
/// d(values)/dx_j with the same layout, j < dim.
struct BatchEvaluation {
  MatrixXd values;
  std::array<MatrixXd, kMaxDim> tangents;
  int dim = 0;

  Index points() const { return values.cols(); }
};

/// Partial derivatives of a scalar loss with respect to every entry of
/// a BatchEvaluation (same shapes).
struct BatchAdjoint {
  MatrixXd d_values;
  std::array<MatrixXd, kMaxDim> d_tangents;
  int dim = 0;

  static BatchAdjoint zeros(Index rows, Index cols, int dim);
};

/// A scalar objective built from network outputs and their input
/// derivatives. Implementations must also provide the exact partials
/// with respect to both, which feed the parameter-gradient reverse pass.
class LossFunction {
 public:
  virtual ~LossFunction() = default;
  virtual double value(const BatchEvaluation& eval) const = 0;
  /// Returns the loss and fills `adj` with d(loss)/d(eval).
  virtual double value_and_adjoint(const BatchEvaluation& eval, BatchAdjoint& adj) const = 0;
};

/// Glorot-uniform weights (bound sqrt(6/(n_in+n_out))), zero biases.
/// Bit-reproducible for a fixed seed.
NetworkParams init_params(const Architecture& arch, std::uint64_t seed);

/// Plain batched forward pass. X is d x N; result is output_dim x N.
MatrixXd forward(const Architecture& arch, const NetworkParams& params, const MatrixXd& X);

/// Forward pass plus exact input Jacobians (analytic tangent
/// propagation, not finite differences). `values` is bit-identical to
/// forward().
BatchEvaluation forward_with_input_jacobian(const Architecture& arch, const NetworkParams& params,
                                            const MatrixXd& X);

struct LossGradient {
  double loss;
  VectorXd grad;  // flat layout matching NetworkParams::to_flat
};

/// Loss and its gradient over all parameters. The gradient flows
/// through both the outputs and the input-Jacobian entries.
LossGradient loss_gradient(const Architecture& arch, const NetworkParams& params, const MatrixXd& X,
                           const LossFunction& loss);

/// Compares a candidate flat gradient against central finite
/// differences of the loss over a random subsample of at least 100
/// parameters (all, if fewer). Returns the maximum relative error
/// (absolute below magnitude 1e-8).
double fd_compare(const Architecture& arch, const NetworkParams& params, const MatrixXd& X,
                  const LossFunction& loss, double step, const VectorXd& candidate,
                  std::uint64_t subsample_seed = 0);

/// fd_compare applied to this module's own loss_gradient.
double finite_difference_check(const Architecture& arch, const NetworkParams& params,
                               const MatrixXd& X, const LossFunction& loss, double step,
                               std::uint64_t subsample_seed = 0);

}  // namespace mfpinn
