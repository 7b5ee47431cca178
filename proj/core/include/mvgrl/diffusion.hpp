#pragma once

#include "mvgrl/common.hpp"
#include "mvgrl/sparse.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mvgrl {

enum class ViewKind { kAdjacency, kPpr, kHeat, kDistance };

ViewKind view_kind_from_string(const std::string& s);
std::string to_string(ViewKind v);

struct DiffusionCoefficients {
  enum class Kind { kPpr, kHeat, kCustom } kind = Kind::kPpr;
  Real alpha = 0.2;  // teleport probability, in (0,1)
  Real t = 5.0;      // diffusion time, > 0
  std::optional<std::vector<Real>> theta;  // explicit weights for kCustom

  void validate() const;
};

/// One structural view of a graph and how to post-process it.
struct ViewSpec {
  ViewKind view = ViewKind::kAdjacency;
  DiffusionCoefficients coefficients;
  Real sparsify_epsilon = 0.0;          // drop entries below this (0 = off)
  std::optional<int> sparsify_topk;     // keep k largest per row

  void validate() const;
};

/// Truncated generalized diffusion sum_{k=0..K} theta_k T^k by iterated
/// multiplication; theta must have K+1 entries.
Matrix generalized_diffusion(const Matrix& transition, const std::vector<Real>& theta,
                             int truncation);

/// Closed-form personalized PageRank: alpha (I - (1-alpha) D^-1/2 A D^-1/2)^-1.
/// Degrees come from A itself; isolated nodes must be patched beforehand.
Matrix ppr_diffusion(const SparseMatrix& a, Real alpha, int dense_cap = 20000);

/// Closed-form heat kernel exp(t A D^-1 - t), computed by scaling and
/// squaring with a truncated Taylor series. Columns sum to 1.
Matrix heat_diffusion(const SparseMatrix& a, Real t, int dense_cap = 20000);

/// Shortest-path view: Floyd-Warshall hop counts, elementwise inverse with
/// 0 for the diagonal and unreachable pairs, then row-wise softmax.
Matrix distance_view(const SparseMatrix& a);

/// Threshold or top-k sparsification with surviving rows renormalized to
/// their pre-sparsification sums.
SparseMatrix sparsify(const Matrix& s, const ViewSpec& spec);

/// Adds a unit self-loop to every zero-degree node so D is invertible; all
/// other nodes are untouched.
SparseMatrix patch_isolated_nodes(const SparseMatrix& a);

/// PPR series coefficients theta_k = alpha (1-alpha)^k, k = 0..truncation.
std::vector<Real> ppr_theta(Real alpha, int truncation);
/// Heat series coefficients theta_k = e^-t t^k / k!.
std::vector<Real> heat_theta(Real t, int truncation);

}  // namespace mvgrl
