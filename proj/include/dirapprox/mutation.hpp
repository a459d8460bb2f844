#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dirapprox/simplex.hpp"

namespace dirapprox {

/// Row-stochastic K x K kernel: entry (i, j) is the probability that a child
/// of a type-i parent is of type j. Off-diagonal entries are stored as given;
/// the diagonal is recomputed so each row sums to one.
class MutationMatrix {
 public:
  /// Rows must be non-negative and sum to one within 1e-12.
  static MutationMatrix from_rows(const std::vector<std::vector<double>>& rows);
  /// Parent-independent kernel: p_ij = pi_j for i != j.
  static MutationMatrix pim(const std::vector<double>& pi);
  static MutationMatrix identity(std::size_t k);
  /// Text format: K, then K rows of K reals (whitespace or comma separated,
  /// '#' starts a comment).
  static MutationMatrix load(const std::string& path);

  std::size_t dim() const noexcept { return k_; }
  double operator()(std::size_t i, std::size_t j) const { return p_[i * k_ + j]; }
  std::span<const double> row(std::size_t i) const { return {p_.data() + i * k_, k_}; }
  /// True iff every column is constant off the diagonal (exact comparison).
  bool is_pim() const noexcept { return pim_; }
  /// Common off-diagonal column values; throws kInvalidArgument unless PIM.
  std::vector<double> pi() const;
  /// Total mutation probability out of type i, 1 - p_ii.
  double p_out(std::size_t i) const;

 private:
  MutationMatrix(std::size_t k, std::vector<double> p);

  std::size_t k_;
  std::vector<double> p_;
  bool pim_ = false;
};

/// Throws kReducible when the type graph (edge i -> j iff p_ij > 0) is not
/// strongly connected. A column with no off-diagonal mass is reported by name.
void check_irreducible(const MutationMatrix& p);

struct MutationSummary {
  double tau = 0.0;
  double mu = 0.0;
  std::vector<double> sigma_j;  // K-1 entries
  std::vector<double> tau_j;    // K-1 entries
  std::optional<double> sigma;  // sum of pi, PIM only
};

MutationSummary summarize(const MutationMatrix& p, const DirichletParams& a, int population);

/// a_j = 2N * median_{i != j} p_ij (midpoint median for even counts).
DirichletParams fit_dirichlet_params(const MutationMatrix& p, int population);

struct TransitionProbs {
  std::vector<double> q;       // all K types
  std::vector<double> w_part;  // W_j (1 - sigma_j), j < K
  std::vector<double> t;       // T_j, j < K
};

/// Success probabilities of the Wright-Fisher multinomial step from counts
/// (K-1 entries, the last type implicit).
TransitionProbs transition_probs(const MutationMatrix& p, std::span<const std::int64_t> counts,
                                 std::int64_t population);

/// Same from proportions W.
TransitionProbs transition_probs(const MutationMatrix& p, const SimplexPoint& w);

/// Remainder R(w) of E[W' - W | W = w] = (a - s w)/(2N) + R(w) for the
/// Wright-Fisher chain.
std::vector<double> remainder_R(const MutationMatrix& p, const DirichletParams& a, int population,
                                const SimplexPoint& w);

}  // namespace dirapprox
