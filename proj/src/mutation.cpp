#include "dirapprox/mutation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dirapprox/error.hpp"
#include "dirapprox/text.hpp"

namespace dirapprox {

MutationMatrix::MutationMatrix(std::size_t k, std::vector<double> p) : k_(k), p_(std::move(p)) {
  pim_ = true;
  for (std::size_t j = 0; j < k_ && pim_; ++j) {
    std::optional<double> common;
    for (std::size_t i = 0; i < k_; ++i) {
      if (i == j) continue;
      if (!common) {
        common = p_[i * k_ + j];
      } else if (p_[i * k_ + j] != *common) {
        pim_ = false;
        break;
      }
    }
  }
}

MutationMatrix MutationMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t k = rows.size();
  if (k < 2) fail(ErrorCode::kDimension, "mutation matrix needs K >= 2");
  std::vector<double> p(k * k);
  for (std::size_t i = 0; i < k; ++i) {
    if (rows[i].size() != k) {
      fail(ErrorCode::kDimension, "mutation matrix row " + std::to_string(i + 1) +
                                      " has " + std::to_string(rows[i].size()) +
                                      " entries, expected " + std::to_string(k));
    }
    double total = 0.0;
    double off = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double v = rows[i][j];
      if (!(v >= 0.0) || !std::isfinite(v)) {
        fail(ErrorCode::kDomain, "mutation entry (" + std::to_string(i + 1) + "," +
                                     std::to_string(j + 1) + ") must be a non-negative number");
      }
      total += v;
      if (j != i) off += v;
      p[i * k + j] = v;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      fail(ErrorCode::kDomain, "mutation row " + std::to_string(i + 1) + " sums to " +
                                   format_number(total) + ", expected 1");
    }
    p[i * k + i] = std::max(0.0, 1.0 - off);
  }
  return MutationMatrix(k, std::move(p));
}

MutationMatrix MutationMatrix::pim(const std::vector<double>& pi) {
  const std::size_t k = pi.size();
  if (k < 2) fail(ErrorCode::kDimension, "PIM needs K >= 2 mutation probabilities");
  std::vector<std::vector<double>> rows(k, std::vector<double>(k));
  for (std::size_t j = 0; j < k; ++j) {
    if (!(pi[j] >= 0.0) || !std::isfinite(pi[j])) {
      fail(ErrorCode::kDomain, "pi" + std::to_string(j + 1) + " must be non-negative");
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i) continue;
      rows[i][j] = pi[j];
      off += pi[j];
    }
    if (off > 1.0) {
      fail(ErrorCode::kDomain, "PIM probabilities out of type " + std::to_string(i + 1) +
                                   " sum above one");
    }
    rows[i][i] = 1.0 - off;
  }
  return from_rows(rows);
}

MutationMatrix MutationMatrix::identity(std::size_t k) {
  std::vector<std::vector<double>> rows(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) rows[i][i] = 1.0;
  return from_rows(rows);
}

MutationMatrix MutationMatrix::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open mutation matrix '" + path + "'");
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    line = line.substr(0, line.find('#'));
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
  }
  if (tokens.empty()) fail(ErrorCode::kParse, path + ": empty mutation matrix file");
  const auto k = parse_int(tokens[0], path + ": K");
  if (k < 2) fail(ErrorCode::kParse, path + ": K must be at least 2");
  if (tokens.size() != static_cast<std::size_t>(1 + k * k)) {
    fail(ErrorCode::kParse, path + ": expected " + std::to_string(k * k) + " entries, found " +
                                std::to_string(tokens.size() - 1));
  }
  std::vector<std::vector<double>> rows(k, std::vector<double>(k));
  for (std::int64_t i = 0; i < k; ++i) {
    for (std::int64_t j = 0; j < k; ++j) {
      rows[i][j] = parse_double(tokens[1 + i * k + j], path + ": entry (" +
                                                          std::to_string(i + 1) + "," +
                                                          std::to_string(j + 1) + ")");
    }
  }
  return from_rows(rows);
}

std::vector<double> MutationMatrix::pi() const {
  if (!pim_) fail(ErrorCode::kInvalidArgument, "mutation matrix is not parent-independent");
  std::vector<double> out(k_);
  for (std::size_t j = 0; j < k_; ++j) out[j] = (*this)(j == 0 ? 1 : 0, j);
  return out;
}

double MutationMatrix::p_out(std::size_t i) const {
  double off = 0.0;
  for (std::size_t j = 0; j < k_; ++j) {
    if (j != i) off += (*this)(i, j);
  }
  return off;
}

void check_irreducible(const MutationMatrix& p) {
  const std::size_t k = p.dim();
  for (std::size_t j = 0; j < k; ++j) {
    bool any = false;
    for (std::size_t i = 0; i < k; ++i) any = any || (i != j && p(i, j) > 0.0);
    if (!any) {
      fail(ErrorCode::kReducible, "mutation column " + std::to_string(j + 1) +
                                      " is zero off the diagonal: type " + std::to_string(j + 1) +
                                      " is unreachable");
    }
  }
  auto reach = [&](bool forward) {
    std::vector<char> seen(k, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < k; ++v) {
        const double w = forward ? p(u, v) : p(v, u);
        if (!seen[v] && w > 0.0) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
    return seen;
  };
  const auto fwd = reach(true);
  const auto bwd = reach(false);
  for (std::size_t j = 0; j < k; ++j) {
    if (!fwd[j]) {
      fail(ErrorCode::kReducible,
           "type " + std::to_string(j + 1) + " is unreachable from type 1 by mutation");
    }
    if (!bwd[j]) {
      fail(ErrorCode::kReducible,
           "type 1 is unreachable from type " + std::to_string(j + 1) + " by mutation");
    }
  }
}

MutationSummary summarize(const MutationMatrix& p, const DirichletParams& a, int population) {
  const std::size_t k = p.dim();
  if (a.dim() != k) fail(ErrorCode::kDimension, "Dirichlet and mutation dimensions differ");
  if (population < 1) fail(ErrorCode::kInvalidArgument, "population N must be positive");
  const double two_n = 2.0 * population;
  MutationSummary out;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      out.tau += std::abs(p(i, j) - a[j] / two_n);
      out.mu += p(i, j);
    }
  }
  const std::size_t last = k - 1;
  for (std::size_t j = 0; j < last; ++j) {
    double sigma = p(last, j);
    double tau = p(last, j);
    for (std::size_t m = 0; m < k; ++m) {
      if (m == j) continue;
      sigma += p(j, m);
      tau += std::abs(p(m, j) - p(last, j));
    }
    out.sigma_j.push_back(sigma);
    out.tau_j.push_back(tau);
  }
  if (p.is_pim()) {
    double total = 0.0;
    for (double v : p.pi()) total += v;
    out.sigma = total;
  }
  return out;
}

DirichletParams fit_dirichlet_params(const MutationMatrix& p, int population) {
  const std::size_t k = p.dim();
  std::vector<double> a(k);
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> column;
    for (std::size_t i = 0; i < k; ++i) {
      if (i != j) column.push_back(p(i, j));
    }
    std::sort(column.begin(), column.end());
    const std::size_t m = column.size();
    const double median = m % 2 ? column[m / 2] : 0.5 * (column[m / 2 - 1] + column[m / 2]);
    if (!(median > 0.0)) {
      fail(ErrorCode::kDomain, "mutation column " + std::to_string(j + 1) +
                                   " has zero off-diagonal median, so a" + std::to_string(j + 1) +
                                   " would be zero");
    }
    a[j] = 2.0 * population * median;
  }
  return DirichletParams(std::move(a));
}

TransitionProbs transition_probs(const MutationMatrix& p, std::span<const std::int64_t> counts,
                                 std::int64_t population) {
  const std::size_t k = p.dim();
  if (counts.size() + 1 != k) fail(ErrorCode::kDimension, "state needs K-1 counts");
  if (population < 1) fail(ErrorCode::kInvalidArgument, "population N must be positive");
  std::vector<double> w(k - 1);
  std::int64_t total = 0;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    if (counts[i] < 0) fail(ErrorCode::kDomain, "negative allele count");
    total += counts[i];
    w[i] = static_cast<double>(counts[i]) / static_cast<double>(population);
  }
  if (total > population) fail(ErrorCode::kDomain, "allele counts exceed N");
  return transition_probs(p, SimplexPoint(std::move(w)));
}

TransitionProbs transition_probs(const MutationMatrix& p, const SimplexPoint& w) {
  const std::size_t k = p.dim();
  if (w.dim() != k) fail(ErrorCode::kDimension, "state and mutation dimensions differ");
  const std::size_t last = k - 1;
  TransitionProbs out;
  out.q.assign(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t m = 0; m < k; ++m) out.q[j] += p(m, j) * w.full(m);
  }
  for (std::size_t j = 0; j < last; ++j) {
    double sigma = p(last, j);
    double t = p(last, j);
    for (std::size_t m = 0; m < k; ++m) {
      if (m == j) continue;
      sigma += p(j, m);
      if (m < last) t += (p(m, j) - p(last, j)) * w[m];
    }
    out.w_part.push_back(w[j] * (1.0 - sigma));
    out.t.push_back(t);
  }
  return out;
}

std::vector<double> remainder_R(const MutationMatrix& p, const DirichletParams& a, int population,
                                const SimplexPoint& w) {
  const std::size_t k = p.dim();
  if (a.dim() != k || w.dim() != k) {
    fail(ErrorCode::kDimension, "remainder dimensions differ");
  }
  const double two_n = 2.0 * population;
  const std::size_t last = k - 1;
  std::vector<double> r(last);
  for (std::size_t j = 0; j < last; ++j) {
    double v = (p(last, j) - a[j] / two_n) * (1.0 - w[j]);
    double out_rate = 0.0;
    for (std::size_t m = 0; m < k; ++m) {
      if (m != j) out_rate += a[m] / two_n - p(j, m);
    }
    v += out_rate * w[j];
    for (std::size_t m = 0; m < last; ++m) {
      if (m != j) v += (p(m, j) - p(last, j)) * w[m];
    }
    r[j] = v;
  }
  return r;
}

}  // namespace dirapprox
